//! The end-to-end algorithm, error measurement, cost reports and rate sweeps.

mod cost;
mod measure;
mod run;
mod sweep;

pub use cost::{cost_report, CostReport};
pub use measure::{error_of_sum, measure_error};
pub use run::{approximate, detail_basis, BackendRun, LevelDiag, RunParams, RunReport, RunResult};
pub use sweep::{
    family_level, fit_slope, median, rate_sweep, BackendRate, RatePoint, RateReport, SlopeFit,
    SweepBackend, SweepConfig, SweepRow, CSV_HEADER,
};
