//! Manufactured solutions, error norms, convergence rates and reports.

mod cases;
mod jet;
mod norms;
mod report;

pub use cases::{Case, ProblemClass};
pub use jet::Jet2;
pub use norms::{field_errors, pressure_error, FieldErrors, Measure};
pub use report::{eoc, median, CheckResult, ConvergenceReport, EocFloor, Failure, LevelResult, Timing};
