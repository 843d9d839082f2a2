//! Declarative run configuration and the convergence-study driver.

mod driver;

pub use driver::{describe, run_study, LevelDescription, StudyOptions};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{Case, Measure, ProblemClass};
use crate::assembly::Viscosity;
use crate::error::{Error, Result};
use crate::geometry::ImplicitDomain;
use crate::quadrature::{LeafRule, QuadratureParams};
use crate::solvers::SolveOptions;
use crate::splines::{Rect, TensorGrid};

/// Breakpoint layout of the coarsest grid; finer levels insert midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Knots {
    Uniform,
    /// Interval widths in geometric progression with the given ratio,
    /// smallest at the ends of each axis (`toward: ends`) or in the middle.
    Graded {
        #[serde(default = "default_ratio")]
        ratio: f64,
        #[serde(default)]
        toward: GradeToward,
    },
    /// Explicit strictly increasing breakpoints per axis.
    Explicit { x: Vec<f64>, y: Vec<f64> },
}

fn default_ratio() -> f64 {
    1.15
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradeToward {
    #[default]
    Ends,
    Center,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_bounds")]
    pub bounds: Rect,
    /// Intervals per axis on the coarsest level (ignored for explicit knots).
    #[serde(default = "default_cells")]
    pub cells: usize,
    pub degree: usize,
    #[serde(default = "default_knots")]
    pub knots: Knots,
}

fn default_bounds() -> Rect {
    Rect { lo: [-1.0, -1.0], hi: [1.0, 1.0] }
}

fn default_cells() -> usize {
    4
}

fn default_knots() -> Knots {
    Knots::Uniform
}

fn graded_breaks(lo: f64, hi: f64, cells: usize, ratio: f64, toward: GradeToward) -> Vec<f64> {
    // widths grow by `ratio` with the distance from the refined end(s)
    let half = cells as f64 / 2.0;
    let widths: Vec<f64> = (0..cells)
        .map(|i| {
            let dist_center = ((i as f64 + 0.5) - half).abs();
            let k = match toward {
                GradeToward::Ends => half - dist_center,
                GradeToward::Center => dist_center,
            };
            ratio.powf(k)
        })
        .collect();
    let total: f64 = widths.iter().sum();
    let mut out = vec![lo];
    let mut acc = 0.0;
    for w in &widths[..cells - 1] {
        acc += w;
        out.push(lo + (hi - lo) * acc / total);
    }
    out.push(hi);
    out
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.degree) {
            return Err(Error::Config(format!("degree {} not in 1..=5", self.degree)));
        }
        let b = &self.bounds;
        if !(b.lo[0] < b.hi[0] && b.lo[1] < b.hi[1]) {
            return Err(Error::Config("grid bounds must have lo < hi".into()));
        }
        match &self.knots {
            Knots::Uniform => {}
            Knots::Graded { ratio, .. } => {
                if !(*ratio >= 1.0 && *ratio <= 4.0) {
                    return Err(Error::Config(format!("grading ratio {ratio} not in [1, 4]")));
                }
            }
            Knots::Explicit { x, y } => {
                for v in [x, y] {
                    if v.len() < 2 || v.windows(2).any(|w| !(w[0] < w[1])) {
                        return Err(Error::Config("explicit breakpoints must be strictly increasing".into()));
                    }
                }
            }
        }
        if !matches!(self.knots, Knots::Explicit { .. }) && self.cells == 0 {
            return Err(Error::Config("grid needs at least one cell".into()));
        }
        Ok(())
    }

    /// Grid of the coarsest level.
    pub fn build(&self) -> Result<TensorGrid> {
        let b = &self.bounds;
        match &self.knots {
            Knots::Uniform => TensorGrid::uniform(*b, self.cells, self.degree),
            Knots::Graded { ratio, toward } => TensorGrid::from_breaks(
                &graded_breaks(b.lo[0], b.hi[0], self.cells, *ratio, *toward),
                &graded_breaks(b.lo[1], b.hi[1], self.cells, *ratio, *toward),
                self.degree,
            ),
            Knots::Explicit { x, y } => TensorGrid::from_breaks(x, y, self.degree),
        }
    }
}

/// Pressure discretization for the flow problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureConfig {
    /// Per-axis polynomial degree on each macro-element.
    #[serde(default)]
    pub degree: usize,
    /// Macro-elements of `macro_size x macro_size` cells.
    #[serde(default = "default_macro")]
    pub macro_size: usize,
}

fn default_macro() -> usize {
    2
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self { degree: 0, macro_size: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Vcpe {
        #[serde(default)]
        reaction: f64,
    },
    Plap {
        p: f64,
    },
    QuasiNewtonian {
        #[serde(default)]
        viscosity: Viscosity,
        #[serde(default)]
        pressure: PressureConfig,
    },
}

impl ProblemConfig {
    pub fn class(&self) -> ProblemClass {
        match self {
            ProblemConfig::Vcpe { .. } => ProblemClass::Vcpe,
            ProblemConfig::Plap { .. } => ProblemClass::PLaplace,
            ProblemConfig::QuasiNewtonian { .. } => ProblemClass::QuasiNewtonian,
        }
    }
}

/// Right-hand side: a manufactured case (exact solution known, errors
/// reported) or a constant source without reference solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    Manufactured(Case),
    Constant(f64),
    ConstantVector([f64; 2]),
}

/// Optional per-level diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Diagnostics {
    /// Condition numbers of the web-basis Gram matrix and of the weighted
    /// B-spline Gram matrix including outer splines.
    pub gram_condition: bool,
    /// Discrete inf-sup constant of the flow discretization.
    pub infsup: bool,
    /// Errors of the quasi-interpolant (and pressure projection).
    pub projection: bool,
}

impl Default for Diagnostics {
    fn default() -> Self {
        Self { gram_condition: false, infsup: false, projection: true }
    }
}

/// Minimal median EOC required of one error measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Floor {
    pub measure: Measure,
    pub min_eoc: f64,
    /// Order predicted by the theory, reported next to the observation.
    #[serde(default)]
    pub target: Option<f64>,
}

/// Quadrature settings; `order` defaults to `degree + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default)]
    pub order: Option<usize>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub leaf: LeafRule,
}

fn default_depth() -> usize {
    6
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { order: None, depth: default_depth(), leaf: LeafRule::Center }
    }
}

fn default_levels() -> usize {
    3
}

fn default_samples() -> usize {
    5
}

/// Complete description of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub problem: ProblemConfig,
    pub source: SourceConfig,
    /// Defaults to the domain of the manufactured case.
    #[serde(default)]
    pub domain: Option<ImplicitDomain>,
    pub grid: GridConfig,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Samples per axis for classifying cells.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub diagnostics: Diagnostics,
    #[serde(default)]
    pub checks: Vec<Floor>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn case(&self) -> Option<Case> {
        match self.source {
            SourceConfig::Manufactured(c) => Some(c),
            _ => None,
        }
    }

    pub fn domain(&self) -> ImplicitDomain {
        self.domain.clone().unwrap_or_else(|| self.case().map(|c| c.domain()).unwrap_or_else(ImplicitDomain::unit_disk))
    }

    pub fn quadrature_params(&self) -> QuadratureParams {
        QuadratureParams {
            order: self.quadrature.order.unwrap_or(self.grid.degree + 1),
            depth: self.quadrature.depth,
            leaf: self.quadrature.leaf,
        }
    }

    /// Copy with every default made explicit, as embedded in reports.
    pub fn effective(&self) -> Self {
        let mut c = self.clone();
        c.domain = Some(self.domain());
        c.quadrature.order = Some(self.quadrature_params().order);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("run name '{}' must be non-empty and free of path separators", self.name));
        }
        self.grid.validate()?;
        self.domain().validate()?;
        self.quadrature_params().validate()?;
        self.solver.validate()?;
        if self.levels == 0 || self.levels > 8 {
            return bad(format!("levels = {} not in 1..=8", self.levels));
        }
        if self.samples < 2 {
            return bad("classification needs at least 2 samples per axis".into());
        }
        let class = self.problem.class();
        match &self.problem {
            ProblemConfig::Vcpe { reaction } if !(*reaction >= 0.0 && reaction.is_finite()) => {
                return bad(format!("reaction {reaction} must be nonnegative"));
            }
            ProblemConfig::Plap { p } if !(*p > 1.0 && p.is_finite()) => {
                return bad(format!("p = {p} must lie in (1, inf)"));
            }
            ProblemConfig::QuasiNewtonian { viscosity, pressure } => {
                viscosity.validate()?;
                if pressure.macro_size == 0 || pressure.degree > 8 {
                    return bad("pressure macro size must be positive and degree at most 8".into());
                }
            }
            _ => {}
        }
        match self.source {
            SourceConfig::Manufactured(c) if !c.supports(class) => {
                return bad(format!("case '{}' has no {class:?} source", c.name()));
            }
            SourceConfig::Constant(_) if class == ProblemClass::QuasiNewtonian => {
                return bad("the flow problem needs a vector source".into());
            }
            SourceConfig::ConstantVector(_) if class != ProblemClass::QuasiNewtonian => {
                return bad("vector sources only apply to the flow problem".into());
            }
            _ => {}
        }
        for f in &self.checks {
            if !f.min_eoc.is_finite() {
                return bad("EOC floors must be finite".into());
            }
            if self.case().is_none() {
                return bad("EOC floors need a manufactured source".into());
            }
            if self.levels < 2 {
                return bad("EOC floors need at least two levels".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
