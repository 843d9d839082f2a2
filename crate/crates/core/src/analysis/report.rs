use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::norms::Measure;

/// Experimental orders of convergence `log(e_{k-1}/e_k) / log(h_{k-1}/h_k)`
/// between consecutive levels.
pub fn eoc(h: &[f64], e: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(e.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Median of the finite values; NaN for an empty slice.
pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if s.is_empty() {
        return f64::NAN;
    }
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Everything measured on one refinement level except wall-clock time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub cells_per_axis: [usize; 2],
    pub dofs: usize,
    pub pressure_dofs: Option<usize>,
    pub basis: crate::webbasis::BasisSummary,
    pub quadrature_points: usize,
    pub errors: BTreeMap<Measure, f64>,
    /// Optional spectral and discretization diagnostics by name.
    pub diagnostics: BTreeMap<String, f64>,
    /// Solver diagnostics: iteration counts, residual histories and the like.
    pub solver: serde_json::Value,
}

/// Pass/fail verdict of one EOC floor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub measure: Measure,
    pub min_eoc: f64,
    /// Order predicted by the theory for the case, when one applies.
    pub target: Option<f64>,
    pub observed: f64,
    pub passed: bool,
}

/// Annotation of a study that stopped early; the completed levels are kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub level: usize,
    pub category: &'static str,
    pub message: String,
}

/// A floor on the median EOC of one measure, with the theoretical target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EocFloor {
    pub measure: Measure,
    pub min_eoc: f64,
    pub target: Option<f64>,
}

/// Wall-clock timings; excluded from determinism comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Timing {
    pub level_seconds: Vec<f64>,
    pub total_seconds: f64,
}

/// Result of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub name: String,
    /// The configuration with every default filled in.
    pub config: serde_json::Value,
    pub levels: Vec<LevelResult>,
    pub eoc: BTreeMap<Measure, Vec<f64>>,
    /// Median of the consecutive EOCs, the statistic the floors apply to.
    pub median_eoc: BTreeMap<Measure, f64>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    pub failure: Option<Failure>,
    pub timing: Timing,
}

impl ConvergenceReport {
    /// Fills in EOC tables and checks from the level results.
    pub fn new(
        name: String,
        config: serde_json::Value,
        levels: Vec<LevelResult>,
        floors: &[EocFloor],
        failure: Option<Failure>,
        timing: Timing,
    ) -> Self {
        let h: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let mut eocs = BTreeMap::new();
        let mut medians = BTreeMap::new();
        if let Some(first) = levels.first() {
            for &m in first.errors.keys() {
                let e: Vec<f64> = levels.iter().map(|l| l.errors.get(&m).copied().unwrap_or(f64::NAN)).collect();
                let r = eoc(&h, &e);
                medians.insert(m, median(&r));
                eocs.insert(m, r);
            }
        }
        let checks: Vec<CheckResult> = floors
            .iter()
            .map(|f| {
                let observed = medians.get(&f.measure).copied().unwrap_or(f64::NAN);
                CheckResult {
                    measure: f.measure,
                    min_eoc: f.min_eoc,
                    target: f.target,
                    observed,
                    passed: observed >= f.min_eoc,
                }
            })
            .collect();
        let passed = failure.is_none() && checks.iter().all(|c| c.passed);
        Self { name, config, levels, eoc: eocs, median_eoc: medians, checks, passed, failure, timing }
    }

    /// The report as JSON with the timing block removed, for comparing runs.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timing");
        }
        v
    }

    pub fn measures(&self) -> Vec<Measure> {
        self.levels.first().map(|l| l.errors.keys().copied().collect()).unwrap_or_default()
    }

    /// One row per level: level, h, dofs, then every error measure.
    pub fn to_csv(&self) -> String {
        let ms = self.measures();
        let mut out = String::from("level,h,dofs");
        for m in &ms {
            write!(out, ",{}", m.name()).unwrap();
        }
        out.push('\n');
        for l in &self.levels {
            write!(out, "{},{:.17e},{}", l.level, l.h, l.dofs).unwrap();
            for m in &ms {
                write!(out, ",{:.17e}", l.errors.get(m).copied().unwrap_or(f64::NAN)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Aligned plain-text table with EOCs and the check verdicts.
    pub fn to_text(&self) -> String {
        let ms = self.measures();
        let mut out = String::new();
        writeln!(out, "study: {}", self.name).unwrap();
        let mut header = format!("{:>5} {:>10} {:>8}", "level", "h", "dofs");
        for m in &ms {
            write!(header, " {:>12} {:>6}", m.name(), "eoc").unwrap();
        }
        writeln!(out, "{header}").unwrap();
        for (k, l) in self.levels.iter().enumerate() {
            write!(out, "{:>5} {:>10.4e} {:>8}", l.level, l.h, l.dofs).unwrap();
            for m in &ms {
                let e = l.errors.get(m).copied().unwrap_or(f64::NAN);
                let r = if k == 0 { "-".to_string() } else { format!("{:.2}", self.eoc[m][k - 1]) };
                write!(out, " {:>12.4e} {:>6}", e, r).unwrap();
            }
            out.push('\n');
        }
        for l in self.levels.iter().filter(|l| !l.diagnostics.is_empty()) {
            write!(out, "level {}:", l.level).unwrap();
            for (k, v) in &l.diagnostics {
                write!(out, " {k} = {v:.4e}").unwrap();
            }
            out.push('\n');
        }
        for c in &self.checks {
            writeln!(
                out,
                "check {:<20} median eoc {:>6.3} >= {:<5} (target {}) {}",
                c.measure.name(),
                c.observed,
                c.min_eoc,
                c.target.map_or("-".to_string(), |t| format!("{t}")),
                if c.passed { "PASS" } else { "FAIL" }
            )
            .unwrap();
        }
        if let Some(f) = &self.failure {
            writeln!(out, "FAILED at level {} ({}): {}", f.level, f.category, f.message).unwrap();
        }
        writeln!(out, "total time {:.2} s", self.timing.total_seconds).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_of_a_power_law() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e: Vec<f64> = h.iter().map(|h: &f64| 3.0 * h.powf(1.7)).collect();
        for r in eoc(&h, &e) {
            assert!((r - 1.7).abs() < 1e-12);
        }
    }

    #[test]
    fn median_ignores_nan() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, f64::NAN, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
