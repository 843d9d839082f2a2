use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::{ProblemConfig, RunConfig, SourceConfig};
use crate::analysis::{
    field_errors, pressure_error, Case, ConvergenceReport, EocFloor, Failure, Jet2, LevelResult, Measure, Timing,
};
use crate::assembly::{
    assemble_gram, assemble_mixed, assemble_plap_jacobian_and_residual, assemble_vcpe,
    assemble_weighted_bspline_gram, Gram, PressureSpace, SparseMatrix,
};
use crate::error::{Error, Result};
use crate::quadrature::Quadrature;
use crate::solvers::{condition_number, estimate_infsup, solve_plap, solve_quasi_newtonian, solve_vcpe};
use crate::splines::TensorGrid;
use crate::webbasis::{jackson_error, project, BasisSummary, WebBasis};

/// Side outputs of a study.
#[derive(Debug, Clone, Default)]
pub struct StudyOptions {
    /// Write the assembled operators of every level as triplet files here.
    pub dump_dir: Option<PathBuf>,
}

/// Basis statistics of one level, computed without solving.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelDescription {
    pub level: usize,
    pub h: f64,
    pub cells_per_axis: [usize; 2],
    pub basis: BasisSummary,
    pub quadrature_points: usize,
}

fn level_grids(cfg: &RunConfig) -> Result<Vec<TensorGrid>> {
    let mut grids = vec![cfg.grid.build()?];
    for _ in 1..cfg.levels {
        let next = grids.last().unwrap().refine()?;
        grids.push(next);
    }
    Ok(grids)
}

fn build_basis(cfg: &RunConfig, grid: TensorGrid) -> Result<WebBasis> {
    let basis = WebBasis::new(grid, cfg.domain(), cfg.samples)?;
    let alpha = basis.summary().min_alpha;
    if alpha < 0.1 {
        log::warn!("extension cell width ratio {alpha:.3} < 0.1: extension coefficients may be large");
    }
    Ok(basis)
}

/// Index set sizes and quadrature size of every level.
pub fn describe(cfg: &RunConfig) -> Result<Vec<LevelDescription>> {
    cfg.validate()?;
    level_grids(cfg)?
        .into_iter()
        .enumerate()
        .map(|(level, grid)| {
            let h = grid.meshsize();
            let cells_per_axis = [grid.cells_per_axis(0), grid.cells_per_axis(1)];
            let basis = build_basis(cfg, grid)?;
            let quad = Quadrature::for_basis(&basis, cfg.quadrature_params())?;
            Ok(LevelDescription { level, h, cells_per_axis, basis: basis.summary(), quadrature_points: quad.num_points() })
        })
        .collect()
}

/// Solves every level of the study and assembles the convergence report.
///
/// Configuration and i/o problems are returned as errors. A level that fails
/// for numerical reasons ends the study; the report then carries the levels
/// completed so far and a [`Failure`] annotation.
pub fn run_study(cfg: &RunConfig, opts: &StudyOptions) -> Result<ConvergenceReport> {
    cfg.validate()?;
    if let Some(dir) = &opts.dump_dir {
        std::fs::create_dir_all(dir)?;
    }
    let effective = cfg.effective();
    let config = serde_json::to_value(&effective).map_err(|e| Error::Config(e.to_string()))?;
    let start = Instant::now();
    let mut levels = Vec::new();
    let mut timing = Timing::default();
    let mut failure = None;
    let grids = level_grids(cfg)?;
    for (k, grid) in grids.into_iter().enumerate() {
        let t0 = Instant::now();
        match run_level(&effective, k, grid, opts.dump_dir.as_deref()) {
            Ok(l) => levels.push(l),
            Err(e @ (Error::Config(_) | Error::Io(_))) => return Err(e),
            Err(e) => {
                log::error!("level {k} failed: {e}");
                failure = Some(Failure { level: k, category: e.category(), message: e.to_string() });
                break;
            }
        }
        timing.level_seconds.push(t0.elapsed().as_secs_f64());
        log::info!("{}: level {k} done in {:.2} s", cfg.name, timing.level_seconds[k]);
    }
    timing.total_seconds = start.elapsed().as_secs_f64();
    let floors: Vec<EocFloor> = cfg
        .checks
        .iter()
        .map(|f| EocFloor { measure: f.measure, min_eoc: f.min_eoc, target: f.target })
        .collect();
    Ok(ConvergenceReport::new(cfg.name.clone(), config, levels, &floors, failure, timing))
}

fn dump_matrix(dir: Option<&Path>, name: &str, level: usize, tag: &str, m: &SparseMatrix) -> Result<()> {
    if let Some(dir) = dir {
        let f = File::create(dir.join(format!("{name}_level{level}_{tag}.txt")))?;
        let mut w = BufWriter::new(f);
        m.write_triplets(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn dump_vector(dir: Option<&Path>, name: &str, level: usize, tag: &str, v: &[f64]) -> Result<()> {
    if let Some(dir) = dir {
        let mut w = BufWriter::new(File::create(dir.join(format!("{name}_level{level}_{tag}.txt")))?);
        writeln!(w, "{}", v.len())?;
        for x in v {
            writeln!(w, "{x:.17e}")?;
        }
        w.flush()?;
    }
    Ok(())
}

fn scalar_exact(case: Case) -> impl Fn([f64; 2]) -> Vec<(f64, [f64; 2])> + Sync {
    move |x| vec![case.scalar_value(x)]
}

fn run_level(cfg: &RunConfig, level: usize, grid: TensorGrid, dump: Option<&Path>) -> Result<LevelResult> {
    let h = grid.meshsize();
    let cells_per_axis = [grid.cells_per_axis(0), grid.cells_per_axis(1)];
    let basis = build_basis(cfg, grid)?;
    let params = cfg.quadrature_params();
    let quad = Quadrature::for_basis(&basis, params)?;
    let err_quad = Quadrature::for_basis(&basis, params.raised())?;
    let case = cfg.case();
    let mut errors = BTreeMap::new();
    let mut diagnostics = BTreeMap::new();
    let mut pressure_dofs = None;
    let name = cfg.name.as_str();

    if cfg.diagnostics.gram_condition {
        diagnostics.insert("gram_condition_web".into(), condition_number(&assemble_gram(&basis, &quad, Gram::L2)?)?);
        let raw = assemble_weighted_bspline_gram(&basis, &quad)?;
        diagnostics.insert("gram_condition_raw".into(), condition_number(&raw)?);
    }

    let solver = match &cfg.problem {
        ProblemConfig::Vcpe { reaction } => {
            let reaction = *reaction;
            let a = move |x: [f64; 2]| case.map_or(1.0, |c| c.coefficient(Jet2::vars(x)).v);
            let source = cfg.source;
            let f = move |x: [f64; 2]| match source {
                SourceConfig::Manufactured(c) => c.vcpe_source(reaction, x),
                SourceConfig::Constant(v) => v,
                SourceConfig::ConstantVector(_) => unreachable!("rejected by validation"),
            };
            if dump.is_some() {
                let sys = assemble_vcpe(&basis, &quad, a, reaction, f)?;
                dump_matrix(dump, name, level, "matrix", &sys.matrix)?;
                dump_vector(dump, name, level, "rhs", &sys.rhs)?;
            }
            let sol = solve_vcpe(&basis, &quad, a, reaction, f, &cfg.solver)?;
            if let Some(c) = case {
                let e = field_errors(&basis, &err_quad, &[&sol.field.coeffs], scalar_exact(c), None)?;
                errors.insert(Measure::L2, e.l2);
                errors.insert(Measure::H1Semi, e.h1_semi);
                errors.insert(Measure::H1, e.h1);
                if cfg.diagnostics.projection {
                    let u = move |x: [f64; 2]| c.scalar_value(x).0;
                    let du = move |x: [f64; 2]| c.scalar_value(x).1;
                    errors.insert(Measure::ProjectionH1, jackson_error(&basis, &err_quad, u, du)?);
                }
            }
            json!({
                "cg_iterations": sol.cg.iterations,
                "relative_residual": sol.relative_residual,
            })
        }
        ProblemConfig::Plap { p } => {
            let p = *p;
            let source = cfg.source;
            let f = move |x: [f64; 2]| match source {
                SourceConfig::Manufactured(c) => c.plap_source(p, x),
                SourceConfig::Constant(v) => v,
                SourceConfig::ConstantVector(_) => unreachable!("rejected by validation"),
            };
            let sol = solve_plap(&basis, &quad, p, f, &cfg.solver)?;
            if dump.is_some() {
                let eps = sol.final_stage().eps;
                let (jac, res) = assemble_plap_jacobian_and_residual(&basis, &quad, &sol.field.coeffs, p, eps, f)?;
                dump_matrix(dump, name, level, "jacobian", &jac)?;
                dump_vector(dump, name, level, "residual", &res)?;
            }
            if let Some(c) = case {
                let e = field_errors(&basis, &err_quad, &[&sol.field.coeffs], scalar_exact(c), Some(p))?;
                errors.insert(Measure::L2, e.l2);
                errors.insert(Measure::H1, e.h1);
                errors.insert(Measure::W1p, e.w1p.unwrap());
                errors.insert(Measure::Quasi, e.quasi.unwrap());
                if cfg.diagnostics.projection {
                    let pc = project(&basis, move |x| c.scalar_value(x).0)?;
                    let e = field_errors(&basis, &err_quad, &[&pc], scalar_exact(c), Some(p))?;
                    errors.insert(Measure::ProjectionH1, e.h1);
                    errors.insert(Measure::ProjectionQuasi, e.quasi.unwrap());
                }
            }
            let stages: Vec<_> = sol
                .stages
                .iter()
                .map(|s| {
                    json!({
                        "p": s.p,
                        "eps": s.eps,
                        "newton_steps": s.steps.len(),
                        "final_residual": s.residuals.last().copied().unwrap_or(f64::NAN),
                        "linear_iterations": s.linear_iterations.iter().sum::<usize>(),
                    })
                })
                .collect();
            json!({
                "newton_iterations": sol.newton_iterations(),
                "load_norm": sol.load_norm,
                "stages": stages,
            })
        }
        ProblemConfig::QuasiNewtonian { viscosity, pressure } => {
            let space = PressureSpace::new(&basis, pressure.macro_size, pressure.degree)?;
            pressure_dofs = Some(space.len());
            let source = cfg.source;
            let visc = *viscosity;
            let phi = move |x: [f64; 2]| match source {
                SourceConfig::Manufactured(c) => c.stokes_source(&visc, x),
                SourceConfig::ConstantVector(v) => v,
                SourceConfig::Constant(_) => unreachable!("rejected by validation"),
            };
            let sol = solve_quasi_newtonian(&basis, &quad, &space, viscosity, phi, &cfg.solver)?;
            if dump.is_some() {
                let sys = assemble_mixed(&basis, &quad, &space, viscosity, &sol.velocity.coeffs, phi)?;
                dump_matrix(dump, name, level, "viscous", &sys.a)?;
                dump_matrix(dump, name, level, "divergence", &sys.b)?;
                dump_vector(dump, name, level, "rhs", &sys.rhs)?;
            }
            diagnostics.insert("incompressibility".into(), sol.incompressibility);
            if cfg.diagnostics.infsup {
                let est = estimate_infsup(&basis, &quad, &space)?;
                diagnostics.insert("infsup".into(), est.value);
                diagnostics.insert("infsup_upper".into(), est.upper);
            }
            if let Some(c) = case {
                let exact = move |x: [f64; 2]| c.velocity_value(x).to_vec();
                let e = field_errors(
                    &basis,
                    &err_quad,
                    &[sol.velocity.component(0), sol.velocity.component(1)],
                    exact,
                    None,
                )?;
                let ep = pressure_error(&space, basis.domain(), &err_quad, &sol.pressure, move |x| c.pressure_value(x))?;
                errors.insert(Measure::L2, e.l2);
                errors.insert(Measure::H1, e.h1);
                errors.insert(Measure::PressureL2, ep);
                errors.insert(Measure::Combined, e.h1 + ep);
                if cfg.diagnostics.projection {
                    let pp = space.l2_projection(&err_quad, move |x| c.pressure_value(x))?;
                    let epp = pressure_error(&space, basis.domain(), &err_quad, &pp, move |x| c.pressure_value(x))?;
                    errors.insert(Measure::PressureProjection, epp);
                    let ux = project(&basis, move |x| c.velocity_value(x)[0].0)?;
                    let uy = project(&basis, move |x| c.velocity_value(x)[1].0)?;
                    let e = field_errors(&basis, &err_quad, &[&ux, &uy], exact, None)?;
                    errors.insert(Measure::ProjectionH1, e.h1);
                }
            }
            json!({
                "picard_iterations": sol.iterations,
                "updates": sol.updates,
                "incompressibility": sol.incompressibility,
                "pressure_mean": sol.pressure_mean,
                "multiplier": sol.multiplier,
            })
        }
    };

    Ok(LevelResult {
        level,
        h,
        cells_per_axis,
        dofs: basis.len() * if matches!(cfg.problem, ProblemConfig::QuasiNewtonian { .. }) { 2 } else { 1 },
        pressure_dofs,
        basis: basis.summary(),
        quadrature_points: quad.num_points(),
        errors,
        diagnostics,
        solver,
    })
}
