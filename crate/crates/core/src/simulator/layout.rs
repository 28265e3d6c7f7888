// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::discretization::{discretize_gradient, DiscretizationParams, FlattenSpec};
use crate::error::{Error, Result};
use crate::factorization::{FactorizationPlan, SparseRow, Workload};
use crate::field::{Fe, FieldSpec};
use crate::noise::DiscreteGaussian;
use crate::sharing::PackedShamir;

use super::adversary::{AdversarySpec, Item, Target};
use super::config::{Mode, SimConfig};

pub(crate) const PURPOSE_ROUNDING: u64 = 1;
pub(crate) const PURPOSE_SHARE: u64 = 2;
pub(crate) const PURPOSE_RESHARE: u64 = 3;
pub(crate) const PURPOSE_NOISE: u64 = 4 << 32;

/// Dropouts of one committee.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DropSets {
    pub round1: BTreeSet<usize>,
    pub round2: BTreeSet<usize>,
}

impl DropSets {
    /// Everyone who was silent in round 2.
    pub fn all(&self) -> BTreeSet<usize> {
        self.round1.union(&self.round2).copied().collect()
    }
}

/// One client's integer inputs for an iteration, on the padded grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientInputs {
    pub gradient: Vec<i64>,
    /// `(noise vector index, draws)` for each noise vector first used now.
    pub noise: Vec<(usize, Vec<i64>)>,
}

impl ClientInputs {
    pub fn items(&self, iteration: usize) -> impl Iterator<Item = (Item, &[i64])> {
        std::iter::once((Item::Gradient(iteration), self.gradient.as_slice()))
            .chain(self.noise.iter().map(|(v, z)| (Item::Noise(*v), z.as_slice())))
    }
}

/// Everything about a run that is fixed before it starts: parameters,
/// integer coefficients, item lifetimes, dropouts and the adversary.
#[derive(Clone, Debug)]
pub struct Layout {
    pub cfg: SimConfig,
    pub field: FieldSpec,
    pub scheme: PackedShamir,
    pub plan: FactorizationPlan,
    pub disc: DiscretizationParams,
    pub flatten: FlattenSpec,
    pub noise: Option<DiscreteGaussian>,
    pub n: usize,
    pub k: usize,
    pub padded: usize,
    pub batches: usize,
    /// Fixed-point scale applied to all release coefficients.
    pub scale: i64,
    /// Coefficients of the value reconstructed at each iteration.
    pub release: Vec<Vec<(Item, i64)>>,
    /// Coefficients of `A X + B Z` at each iteration.
    pub target: Vec<Vec<(Item, i64)>>,
    /// Items created by each committee.
    pub born: Vec<Vec<Item>>,
    /// Items each committee passes to the next.
    pub reshared: Vec<Vec<Item>>,
    pub drops: Vec<DropSets>,
}

fn to_int(row: &SparseRow, scale: i64, what: &str, t: usize) -> Result<Vec<(usize, i64)>> {
    let mut out = Vec::new();
    for &(j, x) in row {
        let s = x * scale as f64;
        let r = s.round();
        if (s - r).abs() > 1e-9 * s.abs().max(1.0) && scale == 1 {
            return Err(Error::Config(format!(
                "{what}[{t},{j}] = {x} is not an integer; set fixed_point_bits"
            )));
        }
        if r.abs() >= i64::MAX as f64 / 4.0 {
            return Err(Error::Config(format!("{what}[{t},{j}] is too large")));
        }
        if r != 0.0 {
            out.push((j, r as i64));
        }
    }
    Ok(out)
}

fn diff(cur: &[(usize, i64)], prev: &[(usize, i64)]) -> Vec<(usize, i64)> {
    let mut m: BTreeMap<usize, i64> = cur.iter().copied().collect();
    for &(j, x) in prev {
        *m.entry(j).or_insert(0) -= x;
    }
    m.into_iter().filter(|(_, x)| *x != 0).collect()
}

impl Layout {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let plan = cfg.plan()?;
        Self::with_plan(cfg, plan)
    }

    pub fn with_plan(cfg: SimConfig, plan: FactorizationPlan) -> Result<Self> {
        cfg.validate()?;
        let field = cfg.field;
        let (n, k) = (cfg.n, cfg.packing());
        let t_star = cfg.iterations;
        if plan.t_star != t_star {
            return Err(Error::Config(format!(
                "plan covers {} iterations, config has {t_star}",
                plan.t_star
            )));
        }
        let scheme = PackedShamir::with_defaults(field, n, cfg.t_c, k)?;
        let disc = cfg.discretization();
        let flatten = disc.flatten_spec();
        let padded = flatten.padded;
        let batches = padded.div_ceil(k * k);
        let noise = if cfg.sigma > 0.0 {
            Some(DiscreteGaussian::new(cfg.noise_scale())?)
        } else {
            None
        };
        let scale = 1i64 << cfg.fixed_point_bits;

        let is_prefix = match &plan.workload {
            Workload::Prefix(_) => true,
            Workload::Dense(a) => {
                let p = crate::factorization::prefix_workload(t_star);
                a.max_abs_diff(&p)? == 0.0
            }
        };
        if cfg.mode == Mode::Optimized && !is_prefix {
            return Err(Error::Config(
                "optimized mode requires the prefix workload".into(),
            ));
        }

        let mut b_int = Vec::with_capacity(t_star);
        let mut target = Vec::with_capacity(t_star);
        for t in 0..t_star {
            let b = to_int(&plan.b_row(t), scale, "B", t)?;
            let a = to_int(&plan.workload.row(t), scale, "A", t)?;
            target.push(
                a.iter()
                    .map(|&(j, x)| (Item::Gradient(j), x))
                    .chain(b.iter().map(|&(v, x)| (Item::Noise(v), x)))
                    .collect::<Vec<_>>(),
            );
            b_int.push(b);
        }
        let release: Vec<Vec<(Item, i64)>> = match cfg.mode {
            Mode::Full => target.clone(),
            Mode::Optimized => (0..t_star)
                .map(|t| {
                    let prev = if t == 0 { Vec::new() } else { b_int[t - 1].clone() };
                    std::iter::once((Item::Gradient(t), scale))
                        .chain(diff(&b_int[t], &prev).into_iter().map(|(v, x)| (Item::Noise(v), x)))
                        .collect()
                })
                .collect(),
        };

        let mut birth: BTreeMap<Item, usize> = BTreeMap::new();
        let mut last: BTreeMap<Item, usize> = BTreeMap::new();
        for (t, row) in release.iter().enumerate() {
            birth.insert(Item::Gradient(t), t);
            for &(item, _) in row {
                if let Item::Noise(_) = item {
                    birth.entry(item).or_insert(t);
                }
                if let Item::Gradient(tau) = item {
                    if tau > t {
                        return Err(Error::Config("workload is not lower triangular".into()));
                    }
                }
                last.insert(item, t);
            }
        }
        let mut born = vec![Vec::new(); t_star];
        let mut reshared = vec![Vec::new(); t_star];
        for (&item, &b) in &birth {
            born[b].push(item);
            if let Some(&l) = last.get(&item) {
                for r in reshared.iter_mut().take(l).skip(b) {
                    r.push(item);
                }
            }
        }
        for row in &mut born {
            row.sort();
        }

        let mut drops = vec![DropSets::default(); t_star];
        for ev in &cfg.dropouts {
            let d = &mut drops[ev.iteration];
            if ev.round == 1 {
                d.round1.insert(ev.party);
            } else {
                d.round2.insert(ev.party);
            }
        }
        if let Some(r) = &cfg.random_dropouts {
            let adv = cfg.adversary.clone();
            let explicit = drops.clone();
            let exclude = move |t: usize| -> BTreeSet<usize> {
                adv.corrupted_at(t).union(&explicit[t].all()).copied().collect()
            };
            for ev in r.events(n, t_star, &exclude) {
                let d = &mut drops[ev.iteration];
                if d.all().len() >= cfg.t_d {
                    continue;
                }
                if ev.round == 1 {
                    d.round1.insert(ev.party);
                } else {
                    d.round2.insert(ev.party);
                }
            }
        }
        for (t, d) in drops.iter_mut().enumerate() {
            let both: Vec<usize> = d.round1.intersection(&d.round2).copied().collect();
            for p in both {
                d.round2.remove(&p);
            }
            if d.all().len() > cfg.t_d {
                return Err(Error::Config(format!("more than t_d dropouts at iteration {t}")));
            }
        }

        let layout = Layout {
            cfg,
            field,
            scheme,
            plan,
            disc,
            flatten,
            noise,
            n,
            k,
            padded,
            batches,
            scale,
            release,
            target,
            born,
            reshared,
            drops,
        };
        layout.check_adversary(&layout.cfg.adversary)?;
        Ok(layout)
    }

    /// Same run with a different adversary.
    pub fn with_adversary(&self, adversary: AdversarySpec) -> Result<Self> {
        let mut cfg = self.cfg.clone();
        cfg.adversary = adversary;
        cfg.validate()?;
        let mut out = self.clone();
        out.cfg = cfg;
        out.check_adversary(&out.cfg.adversary)?;
        Ok(out)
    }

    fn check_adversary(&self, adv: &AdversarySpec) -> Result<()> {
        for inj in &adv.injections {
            let t = inj.iteration;
            let ok = inj.batch < self.batches
                && match inj.target {
                    Target::Fresh { item, .. } => self.born[t].contains(&item),
                    Target::Output { .. } => true,
                    Target::Reshare { item, .. } => self.reshared[t].contains(&item),
                };
            if !ok {
                return Err(Error::Config(format!("injection targets nothing: {inj:?}")));
            }
            if self.drops[t].all().contains(&inj.party) {
                return Err(Error::Config(format!("injecting party {} drops out", inj.party)));
            }
        }
        Ok(())
    }

    pub fn iterations(&self) -> usize {
        self.cfg.iterations
    }

    /// Client id of committee position `pos` at iteration `t`.
    pub fn client_id(&self, t: usize, pos: usize) -> usize {
        (t * self.n + pos) % self.cfg.universe_size()
    }

    pub fn committee(&self, t: usize) -> Vec<usize> {
        (0..self.n).map(|i| self.client_id(t, i)).collect()
    }

    /// Independent stream per (iteration, client, purpose).
    pub fn rng(&self, t: usize, client: usize, purpose: u64) -> ChaCha20Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.cfg.seed.to_le_bytes());
        seed[8..16].copy_from_slice(&(t as u64).to_le_bytes());
        seed[16..24].copy_from_slice(&(client as u64).to_le_bytes());
        seed[24..].copy_from_slice(&purpose.to_le_bytes());
        ChaCha20Rng::from_seed(seed)
    }

    pub fn noise_items_born(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.born[t].iter().filter_map(|i| match i {
            Item::Noise(v) => Some(*v),
            Item::Gradient(_) => None,
        })
    }

    /// Discretized gradient and fresh noise of committee position `pos`.
    pub fn client_inputs(&self, t: usize, pos: usize, gradient: &[f64]) -> Result<ClientInputs> {
        let client = self.client_id(t, pos);
        let mut rng = self.rng(t, client, PURPOSE_ROUNDING);
        let x = discretize_gradient(gradient, &self.disc, &self.flatten, &mut rng)?;
        let noise = self
            .noise_items_born(t)
            .map(|v| {
                let z = match &self.noise {
                    Some(g) => {
                        let mut rng = self.rng(t, client, PURPOSE_NOISE | v as u64);
                        (0..self.padded).map(|_| g.sample(&mut rng)).collect()
                    }
                    None => vec![0; self.padded],
                };
                (v, z)
            })
            .collect();
        Ok(ClientInputs { gradient: x, noise })
    }

    /// Position inside a batch of slot `m` of sharing `l`. Sharings created
    /// at even iterations hold rows of the batch matrix, odd ones columns;
    /// every resharing hop transposes, so all sharings held at iteration `t`
    /// share the layout of parity `t`.
    pub fn offset(&self, t: usize, l: usize, m: usize) -> usize {
        if t % 2 == 0 {
            l * self.k + m
        } else {
            m * self.k + l
        }
    }

    /// Coordinate of slot `m` of sharing `l` in batch `b`, if not padding.
    pub fn coord(&self, t: usize, b: usize, l: usize, m: usize) -> Option<usize> {
        let c = b * self.k * self.k + self.offset(t, l, m);
        (c < self.padded).then_some(c)
    }

    /// Secrets of sharing `l` of batch `b` for a vector created at `t`.
    pub fn pack(&self, values: &[Fe], t: usize, b: usize, l: usize) -> Vec<Fe> {
        (0..self.k)
            .map(|m| self.coord(t, b, l, m).map_or(Fe::ZERO, |c| values[c]))
            .collect()
    }

    /// Index of (party, batch, sharing) in a flat share table.
    pub fn idx(&self, party: usize, b: usize, l: usize) -> usize {
        (party * self.batches + b) * self.k + l
    }

    pub fn table_len(&self) -> usize {
        self.n * self.batches * self.k
    }

    /// Signed decode, fixed-point rescale, unflatten and grid rescale.
    pub fn postprocess(&self, y: &[Fe]) -> Result<Vec<f64>> {
        let s = self.scale as f64;
        let signed: Vec<f64> = y
            .iter()
            .map(|&e| self.field.decode_signed(e) as f64 / s)
            .collect();
        let x = self.flatten.unflatten(&signed)?;
        Ok(x.into_iter().map(|v| v * self.disc.granularity).collect())
    }
}
