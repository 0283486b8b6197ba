//! Event-by-event simulation of a two-station EPR-B polarization experiment in
//! which detection delays depend on the local hidden polarization, so that the
//! choice of coincidence window decides whether the CHSH inequality is violated.
//!
//! The crate has a Monte Carlo side ([`sim`], [`coincidence`], [`analysis`]) and
//! a deterministic quadrature side ([`oracle`]) that computes the same
//! quantities exactly; [`io`] and [`cli`] wire both to files and a command line.

pub mod analysis;
pub mod cli;
pub mod coincidence;
pub mod error;
pub mod io;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sim;

pub use analysis::{
    chsh, simulate_tables, sweep_log, tabulate, window_sweep, ChshQuadruple, ChshValue,
    CorrelationTable, SweepOptions, SweepResult,
};
pub use coincidence::{
    coincidence_rate, find_coincidences, pair_filter, stream_match, CoincidencePair, MatchPolicy,
};
pub use error::{Error, Result};
pub use model::{HiddenPair, ModelParams, Outcome, Setting};
pub use sim::{
    generate_pair, run_experiment, run_experiment_with_workers, DetectionEvent, Emission,
    EventLog, ExperimentConfig, SettingSchedule, Station,
};
