//! Seeded system-level simulator of uplink resource-block scheduling in a
//! two-tier network (one macro station plus small cells).
//!
//! Each station schedules its attached devices every 1 ms subframe with one
//! of three interchangeable policies: round-robin, tabular Q-learning, or
//! DMDQ, a deep Q-learner whose Q-values come from an LSTM over a window of
//! recent observations trained from an experience replay memory.
//!
//! Runs are deterministic in `(config, seed)`; topology, traffic and each
//! station's policy draw from separate random streams so that changing the
//! scheduler does not perturb the offered traffic.

pub mod channel;
pub mod config;
pub mod dqn;
pub mod error;
pub mod experiment;
pub mod rl;
pub mod scheduler;
pub mod sim;
pub mod stats;
pub mod topology;
pub mod traffic;

pub use config::{parse_config, RunConfig, SchedulerChoice};
pub use error::{Error, Result};
pub use scheduler::SchedulerKind;
pub use sim::{run_sim, MetricsReport};
