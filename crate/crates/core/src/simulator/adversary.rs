// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::SimConfig;

/// A vector carried by the committees: the aggregated gradient of one
/// iteration or one noise vector (row of `C`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Item {
    Gradient(usize),
    Noise(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropoutEvent {
    pub iteration: usize,
    /// Position in the committee.
    pub party: usize,
    /// 1: sends nothing this iteration. 2: sends its round-1 sharings, then
    /// goes silent.
    pub round: u8,
}

/// Draws `per_iteration` distinct dropouts in every iteration, each in a
/// random round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomDropouts {
    pub per_iteration: usize,
    pub seed: u64,
    /// Restrict to round-2 dropouts.
    #[serde(default)]
    pub round2_only: bool,
}

impl RandomDropouts {
    pub fn events(&self, n: usize, iterations: usize, exclude: &dyn Fn(usize) -> BTreeSet<usize>) -> Vec<DropoutEvent> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for t in 0..iterations {
            let banned = exclude(t);
            let mut pool: Vec<usize> = (0..n).filter(|p| !banned.contains(p)).collect();
            pool.shuffle(&mut rng);
            for &party in pool.iter().take(self.per_iteration) {
                let round = if self.round2_only || rng.gen::<bool>() { 2 } else { 1 };
                out.push(DropoutEvent {
                    iteration: t,
                    party,
                    round,
                });
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum Target {
    /// A share of a fresh sharing sent in round 1: `sharing` selects one of
    /// the `k` sharings of the batch.
    Fresh {
        item: Item,
        sharing: usize,
        recipient: usize,
    },
    /// The sender's share of output sharing `sharing`.
    Output { sharing: usize },
    /// A share of the sender's reshare of `item`.
    Reshare { item: Item, recipient: usize },
}

/// An additive error `value` placed on one outgoing field element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub iteration: usize,
    /// Sending party, by committee position.
    pub party: usize,
    pub batch: usize,
    #[serde(flatten)]
    pub target: Target,
    pub value: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corruption {
    pub iteration: usize,
    pub parties: Vec<usize>,
}

/// Non-adaptive adversary: the corrupted parties and every injected error
/// are fixed before the run starts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarySpec {
    #[serde(default)]
    pub corrupted: Vec<Corruption>,
    #[serde(default)]
    pub injections: Vec<Injection>,
}

impl AdversarySpec {
    pub fn corrupted_at(&self, iteration: usize) -> BTreeSet<usize> {
        self.corrupted
            .iter()
            .filter(|c| c.iteration == iteration)
            .flat_map(|c| c.parties.iter().copied())
            .collect()
    }

    pub fn injections_at(&self, iteration: usize) -> impl Iterator<Item = &Injection> {
        self.injections.iter().filter(move |i| i.iteration == iteration)
    }

    pub fn is_empty(&self) -> bool {
        self.injections.is_empty()
    }

    pub fn validate(&self, cfg: &SimConfig) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let k = cfg.packing();
        for t in 0..cfg.iterations {
            let c = self.corrupted_at(t);
            if c.len() > cfg.t_c {
                return bad(format!("{} corrupted parties at iteration {t} exceed t_c = {}", c.len(), cfg.t_c));
            }
            if let Some(p) = c.iter().find(|&&p| p >= cfg.n) {
                return bad(format!("corrupted party {p} is outside the committee"));
            }
            let dropped: BTreeSet<usize> = cfg
                .dropouts
                .iter()
                .filter(|e| e.iteration == t)
                .map(|e| e.party)
                .collect();
            if let Some(p) = c.intersection(&dropped).next() {
                return bad(format!("party {p} at iteration {t} is both corrupted and a dropout"));
            }
        }
        for inj in &self.injections {
            if inj.iteration >= cfg.iterations {
                return bad(format!("injection at iteration {} is past the horizon", inj.iteration));
            }
            if !self.corrupted_at(inj.iteration).contains(&inj.party) {
                return bad(format!(
                    "injection by party {} at iteration {} which is not corrupted",
                    inj.party, inj.iteration
                ));
            }
            let ok = match inj.target {
                Target::Fresh { sharing, recipient, .. } => sharing < k && recipient < cfg.n,
                Target::Output { sharing } => sharing < k,
                Target::Reshare { recipient, .. } => recipient < cfg.n,
            };
            if !ok {
                return bad(format!("injection index out of range: {inj:?}"));
            }
        }
        Ok(())
    }
}
