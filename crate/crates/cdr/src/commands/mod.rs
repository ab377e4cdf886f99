//! Subcommands. Each takes a plain argument struct (also used by clap) so
//! tests can drive them without a process boundary.

mod mask;
mod report;
mod run;
mod simulate;
mod t1map;

use std::time::Instant;

use cdr_core::training::Clock;

pub use mask::{mask, MaskArgs};
pub use report::{report, ReportArgs, ReportSummary};
pub use run::{
    cells, deterministic_from_env, run, CellSpec, ExperimentPlan, MethodArg, RunSummary, DETERMINISTIC_ENV, ITERATION_GRID,
    LAMBDA_FRACTIONS,
};
pub use simulate::{simulate, SimulateArgs};
pub use t1map::{t1map, T1mapArgs};

/// Upper end of the T1 display window (ms), the top of the dictionary range.
pub const T1_WINDOW_MAX: f64 = 4000.0;

pub(crate) struct WallClock(Instant);

impl WallClock {
    pub(crate) fn start() -> Self {
        Self(Instant::now())
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
