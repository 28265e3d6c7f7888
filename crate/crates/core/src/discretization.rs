// SPDX-License-Identifier: Apache-2.0

//! Client-side gradient conditioning and the server's inverse map.
//!
//! Clients clip to norm `c`, scale by `1/gamma`, flatten with a randomized
//! Walsh-Hadamard rotation, and round to integers with conditional randomized
//! rounding. The server decodes the signed field representation, unflattens
//! and rescales by `gamma`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Fe, FieldSpec};

pub const DEFAULT_MAX_ROUNDING_ATTEMPTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationParams {
    /// Clipping threshold `c`.
    pub clip_norm: f64,
    /// Grid width `gamma`.
    pub granularity: f64,
    /// Rounding bias `beta` in `[0, 1)`.
    pub rounding_bias: f64,
    /// Model dimension before padding.
    pub dimension: usize,
    pub flatten_seed: u64,
}

impl DiscretizationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.clip_norm > 0.0 && self.clip_norm.is_finite()) {
            return bad("clip_norm must be positive");
        }
        if !(self.granularity > 0.0 && self.granularity.is_finite()) {
            return bad("granularity must be positive");
        }
        if !(0.0..1.0).contains(&self.rounding_bias) {
            return bad("rounding_bias must lie in [0, 1)");
        }
        if self.dimension == 0 {
            return bad("dimension must be positive");
        }
        Ok(())
    }

    /// Acceptance radius for conditional rounding of a `dim`-vector:
    /// `min{ c/g + sqrt(dim), sqrt(c^2/g^2 + dim/4 + sqrt(2 ln(1/beta)) (c/g + sqrt(dim)/2)) }`.
    pub fn norm_bound(&self, dim: usize) -> f64 {
        norm_bound(
            self.clip_norm / self.granularity,
            dim,
            self.rounding_bias,
        )
    }

    pub fn flatten_spec(&self) -> FlattenSpec {
        FlattenSpec::new(self.dimension, self.flatten_seed)
    }
}

/// Rounding acceptance radius for a vector of scaled norm at most `r`.
pub fn norm_bound(r: f64, dim: usize, beta: f64) -> f64 {
    let sd = (dim as f64).sqrt();
    let loose = r + sd;
    if beta <= 0.0 {
        return loose;
    }
    let tight = (r * r + dim as f64 / 4.0 + (2.0 * (1.0 / beta).ln()).sqrt() * (r + sd / 2.0)).sqrt();
    loose.min(tight)
}

/// `(1/gamma) * min(1, c/||g||) * g`.
pub fn clip_scale(g: &[f64], params: &DiscretizationParams) -> Result<Vec<f64>> {
    if g.len() != params.dimension {
        return Err(Error::DimensionMismatch {
            expected: params.dimension,
            got: g.len(),
        });
    }
    let norm = l2(g);
    let factor = if norm > params.clip_norm {
        params.clip_norm / norm
    } else {
        1.0
    };
    let s = factor / params.granularity;
    Ok(g.iter().map(|x| x * s).collect())
}

/// Randomized-sign Walsh-Hadamard rotation on the zero-padded vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FlattenSpec {
    pub dimension: usize,
    pub padded: usize,
    pub signs: Vec<f64>,
    /// Sub-Gaussian constant of the rotation.
    pub rho: f64,
}

impl FlattenSpec {
    pub fn new(dimension: usize, seed: u64) -> Self {
        let padded = dimension.max(1).next_power_of_two();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signs = (0..padded)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        FlattenSpec {
            dimension,
            padded,
            signs,
            rho: 1.0,
        }
    }

    /// `H D x / sqrt(d')` with `x` zero-padded to `d'`.
    pub fn flatten(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.padded];
        for ((out, &v), &s) in y.iter_mut().zip(x).zip(&self.signs) {
            *out = v * s;
        }
        fwht(&mut y);
        let scale = 1.0 / (self.padded as f64).sqrt();
        y.iter_mut().for_each(|v| *v *= scale);
        Ok(y)
    }

    /// Transpose of [`flatten`](Self::flatten), truncated to the original
    /// dimension.
    pub fn unflatten(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.padded {
            return Err(Error::DimensionMismatch {
                expected: self.padded,
                got: y.len(),
            });
        }
        let mut x = y.to_vec();
        fwht(&mut x);
        let scale = 1.0 / (self.padded as f64).sqrt();
        for (v, &s) in x.iter_mut().zip(&self.signs) {
            *v *= s * scale;
        }
        x.truncate(self.dimension);
        Ok(x)
    }
}

/// In-place unnormalized fast Walsh-Hadamard transform.
pub fn fwht(v: &mut [f64]) {
    let n = v.len();
    assert!(n.is_power_of_two(), "length must be a power of two");
    let mut h = 1;
    while h < n {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Unconditional randomized rounding: each coordinate goes to `floor(x)` or
/// `floor(x) + 1` with the upper branch taken with probability `x - floor(x)`.
pub fn randomized_round<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Vec<i64> {
    x.iter()
        .map(|&v| {
            let lo = v.floor();
            let frac = v - lo;
            let up = frac > 0.0 && rng.gen::<f64>() < frac;
            lo as i64 + up as i64
        })
        .collect()
}

/// Conditional randomized rounding: repeats [`randomized_round`] until the
/// result lies within `bound` in l2 norm.
pub fn cond_round<R: Rng + ?Sized>(
    x: &[f64],
    bound: f64,
    max_attempts: usize,
    rng: &mut R,
) -> Result<Vec<i64>> {
    for _ in 0..max_attempts {
        let r = randomized_round(x, rng);
        let sq: f64 = r.iter().map(|&v| (v as f64) * (v as f64)).sum();
        if sq.sqrt() <= bound {
            return Ok(r);
        }
    }
    Err(Error::RoundingAcceptance {
        attempts: max_attempts,
    })
}

/// Full client pipeline: clip and scale, flatten, conditionally round.
pub fn discretize_gradient<R: Rng + ?Sized>(
    g: &[f64],
    params: &DiscretizationParams,
    flatten: &FlattenSpec,
    rng: &mut R,
) -> Result<Vec<i64>> {
    let scaled = clip_scale(g, params)?;
    let flat = flatten.flatten(&scaled)?;
    cond_round(
        &flat,
        params.norm_bound(flatten.padded),
        DEFAULT_MAX_ROUNDING_ATTEMPTS,
        rng,
    )
}

/// Server post-processing: signed decode, unflatten, rescale by `gamma`.
pub fn server_postprocess(
    field: &FieldSpec,
    y: &[Fe],
    params: &DiscretizationParams,
    flatten: &FlattenSpec,
) -> Result<Vec<f64>> {
    let signed: Vec<f64> = y.iter().map(|&e| field.decode_signed(e) as f64).collect();
    let x = flatten.unflatten(&signed)?;
    Ok(x.into_iter().map(|v| v * params.granularity).collect())
}

pub(crate) fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
