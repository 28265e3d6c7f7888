// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::field::Fe;

use super::adversary::{AdversarySpec, Corruption, Injection, Target};
use super::layout::Layout;
use super::protocol::{IterationTranscript, Simulator};

/// Supplies client gradients and sees every release.
pub trait GradientProvider {
    fn gradient(&mut self, iteration: usize, client: usize, dimension: usize) -> Vec<f64>;

    fn observe(&mut self, _iteration: usize, _release: &[f64]) {}
}

fn client_rng(seed: u64, client: usize, iteration: usize) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(client as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(iteration as u64).to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

/// Each client reports `center` plus uniform noise in `[-spread, spread]`.
#[derive(Clone, Debug)]
pub struct MeanEstimation {
    pub center: Vec<f64>,
    pub spread: f64,
    pub seed: u64,
}

impl GradientProvider for MeanEstimation {
    fn gradient(&mut self, iteration: usize, client: usize, dimension: usize) -> Vec<f64> {
        let mut rng = client_rng(self.seed, client, iteration);
        (0..dimension)
            .map(|j| self.center.get(j).copied().unwrap_or(0.0) + self.spread * rng.gen_range(-1.0..=1.0))
            .collect()
    }
}

/// Least squares on one noiseless example per client, trained by following
/// the released prefix sums: `theta_t = theta_0 - lr * release_t / scale`.
#[derive(Clone, Debug)]
pub struct LinearRegression {
    pub truth: Vec<f64>,
    pub theta0: Vec<f64>,
    pub theta: Vec<f64>,
    pub learning_rate: f64,
    /// Divides the release; usually the committee size.
    pub scale: f64,
    pub seed: u64,
}

impl LinearRegression {
    pub fn new(truth: Vec<f64>, learning_rate: f64, scale: f64, seed: u64) -> Self {
        let theta0 = vec![0.0; truth.len()];
        LinearRegression {
            theta: theta0.clone(),
            theta0,
            truth,
            learning_rate,
            scale,
            seed,
        }
    }

    fn example(&self, client: usize) -> (Vec<f64>, f64) {
        let mut rng = client_rng(self.seed, client, usize::MAX);
        let x: Vec<f64> = (0..self.truth.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let y = x.iter().zip(&self.truth).map(|(a, b)| a * b).sum();
        (x, y)
    }

    /// Squared distance to the true weights.
    pub fn error(&self) -> f64 {
        self.theta.iter().zip(&self.truth).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl GradientProvider for LinearRegression {
    fn gradient(&mut self, _iteration: usize, client: usize, dimension: usize) -> Vec<f64> {
        let (x, y) = self.example(client);
        let r: f64 = x.iter().zip(&self.theta).map(|(a, b)| a * b).sum::<f64>() - y;
        let mut g: Vec<f64> = x.iter().map(|v| r * v).collect();
        g.resize(dimension, 0.0);
        g
    }

    fn observe(&mut self, _iteration: usize, release: &[f64]) {
        for ((th, t0), r) in self.theta.iter_mut().zip(&self.theta0).zip(release) {
            *th = t0 - self.learning_rate * r / self.scale;
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainingRun {
    pub outputs: Vec<Vec<f64>>,
    pub field_outputs: Vec<Vec<Fe>>,
    pub transcripts: Vec<IterationTranscript>,
    /// `gradients[t][i]`: raw gradient of committee position `i`.
    pub gradients: Vec<Vec<Vec<f64>>>,
    /// Reshare payload bytes sent by each client over the run.
    pub reshare_bytes_by_client: BTreeMap<usize, u64>,
}

impl TrainingRun {
    pub fn max_client_reshare_bytes(&self) -> u64 {
        self.reshare_bytes_by_client.values().copied().max().unwrap_or(0)
    }
}

/// Runs every iteration, writing one JSON transcript line per iteration to
/// `sink` if given.
pub fn run_training(
    layout: Layout,
    provider: &mut dyn GradientProvider,
    mut sink: Option<&mut dyn Write>,
) -> Result<TrainingRun> {
    let mut sim = Simulator::new(layout);
    let mut run = TrainingRun::default();
    let d = sim.layout().cfg.dimension;
    while !sim.is_done() {
        let t = sim.iteration();
        let committee = sim.layout().committee(t);
        let grads: Vec<Vec<f64>> = committee.iter().map(|&c| provider.gradient(t, c, d)).collect();
        let out = sim.run_iteration(&grads)?;
        provider.observe(t, &out.output);
        for (&c, &b) in committee.iter().zip(&out.transcript.reshare_payload_by_position) {
            *run.reshare_bytes_by_client.entry(c).or_insert(0) += b;
        }
        if let Some(w) = sink.as_mut() {
            serde_json::to_writer(&mut *w, &out.transcript)?;
            writeln!(w)?;
        }
        run.gradients.push(grads);
        run.outputs.push(out.output);
        run.field_outputs.push(out.field_output);
        run.transcripts.push(out.transcript);
    }
    Ok(run)
}

/// A random adversary for `layout`: up to `t_c` corrupted non-dropout parties
/// per iteration and `count` injections of random nonzero values on random
/// valid targets.
pub fn random_adversary(layout: &Layout, seed: u64, count: usize) -> AdversarySpec {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (n, k, nb) = (layout.n, layout.k, layout.batches);
    let mut corrupted = Vec::new();
    for t in 0..layout.iterations() {
        let silent = layout.drops[t].all();
        let mut pool: Vec<usize> = (0..n).filter(|p| !silent.contains(p)).collect();
        pool.shuffle(&mut rng);
        pool.truncate(layout.cfg.t_c);
        pool.sort_unstable();
        corrupted.push(Corruption {
            iteration: t,
            parties: pool,
        });
    }
    let mut injections = Vec::with_capacity(count);
    while injections.len() < count {
        let t = rng.gen_range(0..layout.iterations());
        let parties = &corrupted[t].parties;
        if parties.is_empty() {
            continue;
        }
        let party = *parties.choose(&mut rng).expect("nonempty");
        let target = match rng.gen_range(0..3) {
            0 => Target::Fresh {
                item: *layout.born[t].choose(&mut rng).expect("gradient is always born"),
                sharing: rng.gen_range(0..k),
                recipient: rng.gen_range(0..n),
            },
            1 => Target::Output {
                sharing: rng.gen_range(0..k),
            },
            _ => match layout.reshared[t].choose(&mut rng) {
                Some(&item) if t + 1 < layout.iterations() => Target::Reshare {
                    item,
                    recipient: rng.gen_range(0..n),
                },
                _ => continue,
            },
        };
        let mut value = rng.gen_range(-1000i64..=1000);
        if value == 0 {
            value = 1;
        }
        injections.push(Injection {
            iteration: t,
            party,
            batch: rng.gen_range(0..nb),
            target,
            value,
        });
    }
    AdversarySpec {
        corrupted,
        injections,
    }
}
