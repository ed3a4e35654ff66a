//! Brownian paths, the Liouville clock, the time-changed process
//! `Y_t = W_{F̄(t)}` and its exit-time estimators.

mod clock;
mod estimators;
mod exit;
mod path;

pub use clock::{adapt_dt, clock, clock_with, invert_clock, lbm_position, ClockIntegrand, ClockTrace};
pub use estimators::{
    exit_moment_ensemble, exit_moment_estimate, exit_tail_ensemble, exit_tail_estimate, inverse_moment, running_sup_tail, ExponentParams,
    StartRule, TailCurve, CENSORING_LIMIT,
};
pub use exit::{
    crossing_fraction, exit_time, monitored_radius, MONITORING_SHIFT, run_lbm, run_lbm_until, simulate_exits, ExitSample, LbmOutcome, LbmRun,
};
pub use path::{increment, simulate_bm, simulate_bm_in, PathSample};
