// SPDX-License-Identifier: Apache-2.0

//! End-to-end simulation of the committee protocol: clients discretize and
//! share their gradients and noise, committees carry sharings forward by
//! packed resharing, and the server reconstructs one release per iteration.

pub mod adversary;
pub mod config;
pub mod layout;
pub mod ledger;
pub mod oracle;
pub mod protocol;
pub mod training;

pub use adversary::{AdversarySpec, Corruption, DropoutEvent, Injection, Item, RandomDropouts, Target};
pub use config::{FactorizationSource, Mode, SimConfig};
pub use layout::{ClientInputs, DropSets, Layout};
pub use ledger::attack_ledger;
pub use oracle::plaintext_oracle;
pub use protocol::{fnv1a, IterationOutput, IterationTranscript, Simulator};
pub use training::{random_adversary, run_training, GradientProvider, LinearRegression, MeanEstimation, TrainingRun};

#[cfg(test)]
mod tests;
