// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discretization::DiscretizationParams;
use crate::error::{Error, Result};
use crate::factorization::{load_factorization, FactorizationPlan, DEFAULT_RESIDUAL_TOLERANCE};
use crate::field::FieldSpec;

use super::adversary::{AdversarySpec, DropoutEvent, RandomDropouts};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Reconstruct `X_T + (B[T] - B[T-1]) Z` and accumulate at the server;
    /// only noise is carried across committees.
    #[default]
    Optimized,
    /// Reconstruct `sum_tau A[T,tau] X_tau + B[T,tau] Z_tau`; gradients and
    /// noise are both carried across committees.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FactorizationSource {
    Honaker,
    File {
        path: PathBuf,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
}

fn default_tolerance() -> f64 {
    DEFAULT_RESIDUAL_TOLERANCE
}

fn default_one() -> usize {
    1
}

/// Simulator configuration, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Committee size.
    pub n: usize,
    pub t_c: usize,
    pub t_d: usize,
    pub mu: f64,
    /// Packing parameter; defaults to `floor(2 mu n)`.
    #[serde(default)]
    pub k: Option<usize>,
    pub iterations: usize,
    pub dimension: usize,
    #[serde(default)]
    pub field: FieldSpec,
    pub clip_norm: f64,
    pub granularity: f64,
    pub rounding_bias: f64,
    #[serde(default)]
    pub flatten_seed: u64,
    /// Noise standard deviation on the real scale; zero disables noise.
    pub sigma: f64,
    pub factorization: FactorizationSource,
    #[serde(default = "default_one")]
    pub min_sep: usize,
    #[serde(default)]
    pub mode: Mode,
    /// Decoder coefficients are scaled by `2^bits` and rounded.
    #[serde(default)]
    pub fixed_point_bits: u32,
    pub seed: u64,
    /// Size of the client population committees are drawn from; defaults to
    /// `n * iterations`.
    #[serde(default)]
    pub universe: Option<usize>,
    #[serde(default)]
    pub dropouts: Vec<DropoutEvent>,
    #[serde(default)]
    pub random_dropouts: Option<RandomDropouts>,
    #[serde(default)]
    pub adversary: AdversarySpec,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        // Factorization paths are relative to the config file.
        if let FactorizationSource::File { path: p, .. } = &mut cfg.factorization {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn packing(&self) -> usize {
        self.k
            .unwrap_or_else(|| (2.0 * self.mu * self.n as f64 + 1e-9).floor() as usize)
    }

    pub fn universe_size(&self) -> usize {
        self.universe.unwrap_or(self.n * self.iterations).max(self.n)
    }

    pub fn discretization(&self) -> DiscretizationParams {
        DiscretizationParams {
            clip_norm: self.clip_norm,
            granularity: self.granularity,
            rounding_bias: self.rounding_bias,
            dimension: self.dimension,
            flatten_seed: self.flatten_seed,
        }
    }

    /// Noise scale on the integer grid, `sigma / gamma`.
    pub fn noise_scale(&self) -> f64 {
        self.sigma / self.granularity
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.mu > 0.0 && self.mu < 0.5) {
            return cfg(format!("mu = {} must lie in (0, 1/2)", self.mu));
        }
        let bound = (0.5 - self.mu) * self.n as f64;
        if (self.t_c + self.t_d) as f64 >= bound {
            return Err(Error::ThresholdBudget {
                sum: self.t_c + self.t_d,
                bound,
            });
        }
        let k = self.packing();
        if k == 0 {
            return cfg("packing parameter k must be positive".into());
        }
        if self.t_c + k + self.t_d > self.n {
            return cfg(format!(
                "t_c + k + t_d = {} exceeds n = {}",
                self.t_c + k + self.t_d,
                self.n
            ));
        }
        if self.n + k >= self.field.modulus() as usize {
            return cfg("field too small for n + k evaluation points".into());
        }
        if self.n > u16::MAX as usize {
            return cfg("committee size must fit in 16 bits".into());
        }
        if self.iterations == 0 {
            return cfg("iterations must be positive".into());
        }
        self.discretization().validate()?;
        if self.sigma < 0.0 || (self.sigma > 0.0 && self.noise_scale() < 0.5) {
            return Err(Error::NoiseScaleTooSmall(self.noise_scale()));
        }
        if self.fixed_point_bits > 30 {
            return cfg("fixed_point_bits must be at most 30".into());
        }
        for ev in &self.dropouts {
            if ev.iteration >= self.iterations || ev.party >= self.n || !(1..=2).contains(&ev.round) {
                return cfg(format!("invalid dropout event {ev:?}"));
            }
        }
        for t in 0..self.iterations {
            let count = self.dropouts.iter().filter(|e| e.iteration == t).count();
            if count > self.t_d {
                return cfg(format!("{count} dropouts at iteration {t} exceed t_d = {}", self.t_d));
            }
        }
        if let Some(r) = &self.random_dropouts {
            if r.per_iteration > self.t_d {
                return cfg("random dropouts per iteration exceed t_d".into());
            }
        }
        self.adversary.validate(self)?;
        Ok(())
    }

    pub fn plan(&self) -> Result<FactorizationPlan> {
        match &self.factorization {
            FactorizationSource::Honaker => FactorizationPlan::honaker(self.iterations, self.min_sep),
            FactorizationSource::File { path, tolerance } => {
                let plan = load_factorization(path, None, *tolerance)?;
                if plan.t_star != self.iterations {
                    return Err(Error::Config(format!(
                        "factorization covers {} iterations, config has {}",
                        plan.t_star, self.iterations
                    )));
                }
                Ok(plan)
            }
        }
    }
}
