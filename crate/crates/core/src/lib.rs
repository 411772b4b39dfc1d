//! Discrete-event simulation of M/G/n queues under tail-optimal
//! multiserver scheduling policies.
//!
//! The crate is organised bottom-up:
//!
//! * [`distributions`]: job-size laws and the load/threshold formulas.
//! * [`sim`]: the event-driven engine and the policy contract.
//! * [`policies`]: FCFS-n, SRPT-n, SEK, SPLIT, SplitThresh, TAG-SPLIT.
//! * [`stats`]: streaming tail estimation and packing/promptness probes.
//! * [`audit`]: observers that check policy invariants during a run.
//! * [`oracles`]: closed-form baselines and a brute-force reference engine.
//! * [`experiment`]: configs, presets, replication, and CSV output.

pub mod audit;
pub mod distributions;
pub mod experiment;
pub mod oracles;
pub mod policies;
pub mod sim;
pub mod stats;
