use super::*;

fn minimal() -> &'static str {
    r#"{
        "name": "t",
        "problem": {"kind": "vcpe"},
        "source": {"manufactured": "poisson_disk"},
        "grid": {"degree": 2, "cells": 4},
        "levels": 2
    }"#
}

#[test]
fn defaults_are_materialized() {
    let cfg = RunConfig::from_json(minimal()).unwrap();
    assert_eq!(cfg.samples, 5);
    assert_eq!(cfg.quadrature.depth, 6);
    assert_eq!(cfg.quadrature_params().order, 3);
    let eff = cfg.effective();
    assert_eq!(eff.quadrature.order, Some(3));
    assert_eq!(eff.domain, Some(ImplicitDomain::unit_disk()));
    // the effective config is itself a valid config describing the same run
    let text = serde_json::to_string(&eff).unwrap();
    let back = RunConfig::from_json(&text).unwrap();
    assert_eq!(back, eff);
    assert_eq!(back.effective(), eff);
}

#[test]
fn unknown_keys_are_rejected() {
    let bad = minimal().replace("\"levels\": 2", "\"levels\": 2, \"levls\": 3");
    assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
    let bad = minimal().replace("\"cells\": 4", "\"cells\": 4, \"spacing\": 1");
    assert!(RunConfig::from_json(&bad).is_err());
}

#[test]
fn exponent_outside_admissible_range() {
    let text = minimal()
        .replace(r#"{"kind": "vcpe"}"#, r#"{"kind": "plap", "p": 0.5}"#)
        .replace("poisson_disk", "plap_smooth");
    let err = RunConfig::from_json(&text).unwrap_err();
    assert!(err.to_string().contains("(1, inf)"), "{err}");
}

#[test]
fn source_must_match_problem() {
    let text = minimal().replace("poisson_disk", "carreau_disk");
    assert!(RunConfig::from_json(&text).is_err());
    let text = minimal().replace(r#"{"manufactured": "poisson_disk"}"#, r#"{"constant_vector": [1, 0]}"#);
    assert!(RunConfig::from_json(&text).is_err());
    let text = minimal().replace(r#"{"manufactured": "poisson_disk"}"#, r#"{"constant": 1.0}"#);
    assert!(RunConfig::from_json(&text).is_ok());
}

#[test]
fn explicit_knots_must_increase() {
    let text = minimal().replace(
        r#""cells": 4"#,
        r#""knots": {"kind": "explicit", "x": [-1, 0, 0, 1], "y": [-1, 0, 1]}"#,
    );
    assert!(RunConfig::from_json(&text).is_err());
    let text = minimal().replace(
        r#""cells": 4"#,
        r#""knots": {"kind": "explicit", "x": [-1.2, -0.3, 0.4, 1.2], "y": [-1.2, 0, 1.2]}"#,
    );
    let cfg = RunConfig::from_json(&text).unwrap();
    let g = cfg.grid.build().unwrap();
    let r = g.complete_region();
    assert_eq!((r.lo, r.hi), ([-1.2, -1.2], [1.2, 1.2]));
}

#[test]
fn graded_breakpoints() {
    let b = graded_breaks(-1.0, 1.0, 8, 1.15, GradeToward::Ends);
    assert_eq!(b.len(), 9);
    assert_eq!((b[0], b[8]), (-1.0, 1.0));
    let w: Vec<f64> = b.windows(2).map(|w| w[1] - w[0]).collect();
    // symmetric, widths grow by the ratio toward the middle
    for k in 0..3 {
        assert!((w[k + 1] / w[k] - 1.15).abs() < 1e-12);
        assert!((w[k] - w[7 - k]).abs() < 1e-14);
    }
    let c = graded_breaks(0.0, 3.0, 5, 1.3, GradeToward::Center);
    let w: Vec<f64> = c.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(w[2] < w[1] && w[1] < w[0]);
    assert!((w.iter().sum::<f64>() - 3.0).abs() < 1e-14);
}

#[test]
fn study_reports_every_level_and_is_deterministic() {
    let cfg = RunConfig::from_json(minimal()).unwrap();
    let a = run_study(&cfg, &StudyOptions::default()).unwrap();
    let b = run_study(&cfg, &StudyOptions::default()).unwrap();
    assert_eq!(a.levels.len(), 2);
    assert!(a.failure.is_none());
    assert!(a.levels[1].h < a.levels[0].h);
    assert!(a.levels[1].errors[&Measure::H1] < a.levels[0].errors[&Measure::H1]);
    assert_eq!(a.deterministic_json(), b.deterministic_json());
    assert_eq!(a.config, serde_json::to_value(cfg.effective()).unwrap());
}

#[test]
fn numerical_failure_is_annotated() {
    let text = minimal().replace("\"levels\": 2", "\"levels\": 2, \"solver\": {\"max_linear_iter\": 2}");
    let cfg = RunConfig::from_json(&text).unwrap();
    let r = run_study(&cfg, &StudyOptions::default()).unwrap();
    let f = r.failure.as_ref().unwrap();
    assert_eq!((f.level, f.category), (0, "solver"));
    assert!(r.levels.is_empty() && !r.passed);
}

#[test]
fn description_counts_indices() {
    let cfg = RunConfig::from_json(minimal()).unwrap();
    let d = describe(&cfg).unwrap();
    assert_eq!(d.len(), 2);
    for l in &d {
        assert_eq!(l.basis.relevant, l.basis.inner + l.basis.outer);
        assert!(l.basis.inner > 0 && l.quadrature_points > 0);
    }
    assert!(d[1].basis.inner > d[0].basis.inner);
}

#[test]
fn matrices_are_dumped() {
    let dir = std::env::temp_dir().join(format!("webfem-dump-{}", std::process::id()));
    let cfg = RunConfig::from_json(&minimal().replace("\"levels\": 2", "\"levels\": 1")).unwrap();
    run_study(&cfg, &StudyOptions { dump_dir: Some(dir.clone()) }).unwrap();
    let text = std::fs::read_to_string(dir.join("t_level0_matrix.txt")).unwrap();
    let header: Vec<usize> = text.lines().next().unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
    assert_eq!(header[0], header[1]);
    assert_eq!(text.lines().count(), header[2] + 1);
    assert!(dir.join("t_level0_rhs.txt").exists());
    std::fs::remove_dir_all(dir).unwrap();
}
