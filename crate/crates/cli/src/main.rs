//! `webfem`: run web-spline convergence studies from JSON configurations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use webfem::config::{describe, run_study, RunConfig, StudyOptions};
use webfem::{ConvergenceReport, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "webfem", version, about = "Web-spline finite element convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one study.
    Run {
        config: PathBuf,
        /// Exit with status 4 when an EOC floor of the config is violated.
        #[arg(long)]
        check: bool,
        /// Print basis statistics of every level without solving.
        #[arg(long)]
        describe: bool,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Write assembled operators as triplet files.
        #[arg(long)]
        dump_matrices: bool,
        /// Output directory; overrides WEBFEM_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every config of a suite directory and enforce its floors.
    CheckSuite {
        #[arg(long, default_value = "configs/suite")]
        suite: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its exit status.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e.category() {
            "config" => EXIT_CONFIG,
            "io" => EXIT_IO,
            _ => EXIT_SOLVER,
        };
        Fail(code, format!("{} error: {e}", e.category()))
    }
}

fn io_fail(path: &Path, e: std::io::Error) -> Fail {
    Fail(EXIT_IO, format!("io error: {}: {e}", path.display()))
}

fn output_root(out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| std::env::var_os("WEBFEM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("webfem-out"))
}

fn set_threads(threads: Option<usize>) -> Result<(), Fail> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Fail(EXIT_CONFIG, "config error: --threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Fail(EXIT_IO, format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    std::fs::write(path, text).map_err(|e| io_fail(path, e))
}

/// Writes `report.json`, `report.txt` and `levels.csv` into `dir`.
fn write_report(dir: &Path, report: &ConvergenceReport) -> Result<(), Fail> {
    std::fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(&dir.join("report.json"), &json)?;
    write_file(&dir.join("report.txt"), &report.to_text())?;
    write_file(&dir.join("levels.csv"), &report.to_csv())
}

fn describe_text(cfg: &RunConfig) -> Result<String, Fail> {
    let levels = describe(cfg)?;
    let mut out = String::new();
    writeln!(out, "study: {}", cfg.name).unwrap();
    writeln!(
        out,
        "{:>5} {:>10} {:>9} {:>8} {:>8} {:>8} {:>9} {:>9} {:>10}",
        "level", "h", "cells", "|K|", "|I|", "|J|", "interior", "boundary", "qpoints"
    )
    .unwrap();
    for l in &levels {
        let b = &l.basis;
        writeln!(
            out,
            "{:>5} {:>10.4e} {:>9} {:>8} {:>8} {:>8} {:>9} {:>9} {:>10}",
            l.level,
            l.h,
            format!("{}x{}", l.cells_per_axis[0], l.cells_per_axis[1]),
            b.relevant,
            b.inner,
            b.outer,
            b.cells_interior,
            b.cells_boundary,
            l.quadrature_points
        )
        .unwrap();
    }
    Ok(out)
}

fn study(cfg: &RunConfig, root: &Path, dump: bool) -> Result<ConvergenceReport, Fail> {
    let dir = root.join(&cfg.name);
    let opts = StudyOptions { dump_dir: dump.then(|| dir.join("matrices")) };
    let report = run_study(cfg, &opts)?;
    write_report(&dir, &report)?;
    Ok(report)
}

fn run(config: &Path, check: bool, only_describe: bool, dump: bool, out: Option<PathBuf>) -> Result<(), Fail> {
    let cfg = RunConfig::load(config)?;
    if only_describe {
        print!("{}", describe_text(&cfg)?);
        return Ok(());
    }
    let report = study(&cfg, &output_root(out), dump)?;
    print!("{}", report.to_text());
    if let Some(f) = &report.failure {
        return Err(Fail(EXIT_SOLVER, format!("{} error: level {}: {}", f.category, f.level, f.message)));
    }
    if check && !report.passed {
        return Err(Fail(EXIT_CHECK, "check failed: an EOC floor was violated".into()));
    }
    Ok(())
}

fn suite_configs(dir: &Path) -> Result<Vec<PathBuf>, Fail> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| Fail(EXIT_CONFIG, format!("config error: suite directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Fail(EXIT_CONFIG, format!("config error: no *.json configs in {}", dir.display())));
    }
    Ok(paths)
}

fn check_suite(suite: &Path, out: Option<PathBuf>) -> Result<(), Fail> {
    let paths = suite_configs(suite)?;
    // validate everything before spending time on any study
    let configs = paths
        .iter()
        .map(|p| RunConfig::load(p).map_err(|e| Fail::from(e).with_context(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let root = output_root(out);
    let mut worst = 0u8;
    let mut table = format!("{:<32} {:>6} {:>8} {:>9}  {}\n", "config", "levels", "status", "seconds", "checks");
    let start = Instant::now();
    for cfg in &configs {
        let (status, levels, seconds, checks) = match study(cfg, &root, false) {
            Ok(r) => {
                let checks: Vec<String> =
                    r.checks.iter().map(|c| format!("{} {:.2}>={}", c.measure.name(), c.observed, c.min_eoc)).collect();
                let status = if r.failure.is_some() {
                    worst = worst.max(EXIT_SOLVER);
                    "ERROR"
                } else if !r.passed {
                    worst = worst.max(EXIT_CHECK);
                    "FAIL"
                } else {
                    "PASS"
                };
                (status, r.levels.len(), r.timing.total_seconds, checks.join(", "))
            }
            Err(Fail(code, msg)) => {
                worst = worst.max(code);
                eprintln!("{}: {msg}", cfg.name);
                ("ERROR", 0, 0.0, String::new())
            }
        };
        writeln!(table, "{:<32} {:>6} {:>8} {:>9.2}  {}", cfg.name, levels, status, seconds, checks).unwrap();
    }
    writeln!(table, "total {:.1} s", start.elapsed().as_secs_f64()).unwrap();
    print!("{table}");
    std::fs::create_dir_all(&root).map_err(|e| io_fail(&root, e))?;
    write_file(&root.join("suite.txt"), &table)?;
    match worst {
        0 => Ok(()),
        code => Err(Fail(code, "suite failed".into())),
    }
}

impl Fail {
    fn with_context(self, path: &Path) -> Self {
        Fail(self.0, format!("{}: {}", path.display(), self.1))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, check, describe, threads, dump_matrices, out } => {
            set_threads(threads).and_then(|_| run(&config, check, describe, dump_matrices, out))
        }
        Command::CheckSuite { suite, threads, out } => set_threads(threads).and_then(|_| check_suite(&suite, out)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
