//! Resource management for secure device-to-device semantic communication
//! networks.
//!
//! A network of semantic users (SUs) caches knowledge bases (KBs), pairs up
//! for D2D links and picks transmit powers, while an eavesdropping center
//! with its own KB holdings listens on every link. The crate maximizes the
//! network's semantic secrecy throughput (SST) under per-link queuing-delay
//! and SST constraints by Lagrangian dual decomposition:
//!
//! - [`scenario`]: world generation (topology, path loss, Zipf preferences).
//! - [`metrics`]: Shannon rates, knowledge satisfaction, semantic value and SST.
//! - [`queueing`]: knowledge-matched M/G/1 statistics, Pollaczek–Khinchine
//!   delay and a discrete-event simulator used as an oracle.
//! - [`pair_opt`]: the per-pair caching + power subproblem (tabu search with a
//!   separable 1-D power optimizer).
//! - [`matching`]: the pair-score matrix and the pairing subproblem.
//! - [`dual`]: the outer subgradient loop over the multipliers.
//! - [`baselines`]: the RPD and MPK comparison schemes.
//! - [`expcli`]: sweep specifications, trial averaging and CSV output.

// `!(x >= 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dual;
pub mod error;
pub mod expcli;
pub mod kbset;
pub mod matching;
pub mod metrics;
pub mod pair_opt;
pub mod queueing;
pub mod scenario;
pub mod solution;

pub use baselines::{preference_first_kbc, run_baseline, BaselineKind};
pub use dual::{lagrangian_value, run_solver, update_duals, DualState, KbcMode, SolverParams};
pub use error::{Error, Result};
pub use kbset::KbSet;
pub use matching::{build_omega, solve_dup, MatchingMode, OmegaMatrix, Pairing};
pub use metrics::{CacheVector, PairValueRates};
pub use pair_opt::{PairParams, PairSolution, PowerSearch};
pub use queueing::{pk_delay, queue_stats, simulate_mg1, QueueStats, ServiceModel};
pub use scenario::{generate_scenario, KbCatalog, Scenario, ScenarioConfig};
pub use solution::{FeasibilityReport, SolveResult};

/// Tolerance used when comparing knowledge satisfaction against its threshold.
pub const ETA_TOL: f64 = 1e-12;
