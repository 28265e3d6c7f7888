// SPDX-License-Identifier: Apache-2.0

//! Exact discrete Gaussian sampling by rejection from a discrete Laplace
//! proposal.
//!
//! With `t = floor(s) + 1`, a draw `Y` from the discrete Laplace law with
//! scale `t` is accepted with probability `exp(-(|Y| - s^2/t)^2 / (2 s^2))`.
//! Accepted values have mass proportional to `exp(-y^2 / (2 s^2))`. The only
//! approximation is double-precision `exp`/`ln`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source of the two primitive random quantities the sampler consumes.
pub trait NoiseSource {
    /// Uniform on `(0, 1]`.
    fn uniform(&mut self) -> f64;
    /// Fair coin.
    fn coin(&mut self) -> bool;
}

impl<R: Rng + ?Sized> NoiseSource for R {
    fn uniform(&mut self) -> f64 {
        1.0 - self.gen::<f64>()
    }

    fn coin(&mut self) -> bool {
        self.gen()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// `s = sigma / gamma`.
    pub scale: f64,
    pub dimension: usize,
}

impl NoiseSpec {
    pub fn new(scale: f64, dimension: usize) -> Result<Self> {
        if !(scale >= 0.5 && scale.is_finite()) {
            return Err(Error::NoiseScaleTooSmall(scale));
        }
        Ok(NoiseSpec { scale, dimension })
    }

    pub fn sampler(&self) -> DiscreteGaussian {
        DiscreteGaussian::new(self.scale).expect("validated on construction")
    }

    pub fn sample_vec<S: NoiseSource + ?Sized>(&self, src: &mut S) -> Vec<i64> {
        let g = self.sampler();
        (0..self.dimension).map(|_| g.sample(src)).collect()
    }
}

/// Sampler for `N_Z(0, s^2)`.
#[derive(Clone, Copy, Debug)]
pub struct DiscreteGaussian {
    s: f64,
    t: f64,
    ln_r: f64,
    p_zero: f64,
}

impl DiscreteGaussian {
    pub fn new(s: f64) -> Result<Self> {
        if !(s >= 0.5 && s.is_finite()) {
            return Err(Error::NoiseScaleTooSmall(s));
        }
        let t = s.floor() + 1.0;
        let ln_r = -1.0 / t;
        let r = ln_r.exp();
        Ok(DiscreteGaussian {
            s,
            t,
            ln_r,
            p_zero: (1.0 - r) / (1.0 + r),
        })
    }

    pub fn scale(&self) -> f64 {
        self.s
    }

    /// One draw from the discrete Laplace law `P[y] ∝ exp(-|y|/t)`.
    pub fn sample_laplace<S: NoiseSource + ?Sized>(&self, src: &mut S) -> i64 {
        let magnitude = if src.uniform() <= self.p_zero {
            0
        } else {
            1 + (src.uniform().ln() / self.ln_r).floor() as i64
        };
        if src.coin() {
            -magnitude
        } else {
            magnitude
        }
    }

    pub fn sample<S: NoiseSource + ?Sized>(&self, src: &mut S) -> i64 {
        let s2 = self.s * self.s;
        loop {
            let y = self.sample_laplace(src);
            let dev = y.unsigned_abs() as f64 - s2 / self.t;
            if src.uniform() <= (-dev * dev / (2.0 * s2)).exp() {
                return y;
            }
        }
    }
}

/// Mass function of `N_Z(0, s^2)` from the series truncated at `|y| <= terms`.
pub fn pmf_series(s: f64, x: i64, terms: i64) -> f64 {
    let w = |y: i64| (-(y * y) as f64 / (2.0 * s * s)).exp();
    let z: f64 = (-terms..=terms).map(w).sum();
    w(x) / z
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct FlipSigns<S>(S);

    impl<S: NoiseSource> NoiseSource for FlipSigns<S> {
        fn uniform(&mut self) -> f64 {
            self.0.uniform()
        }
        fn coin(&mut self) -> bool {
            !self.0.coin()
        }
    }

    #[test]
    fn rejects_small_scale() {
        assert!(matches!(
            DiscreteGaussian::new(0.49),
            Err(Error::NoiseScaleTooSmall(_))
        ));
        assert!(NoiseSpec::new(f64::NAN, 3).is_err());
        assert!(DiscreteGaussian::new(0.5).is_ok());
    }

    #[test]
    fn sign_flipped_stream_negates() {
        let g = DiscreteGaussian::new(3.7).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = FlipSigns(ChaCha8Rng::seed_from_u64(5));
        for _ in 0..10_000 {
            assert_eq!(g.sample(&mut a), -g.sample(&mut b));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = NoiseSpec::new(2.0, 100).unwrap();
        let a = spec.sample_vec(&mut ChaCha8Rng::seed_from_u64(1));
        let b = spec.sample_vec(&mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
    }

    #[test]
    fn unit_scale_moments() {
        let g = DiscreteGaussian::new(1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let (mut zeros, mut sum, mut sq) = (0usize, 0f64, 0f64);
        for _ in 0..n {
            let x = g.sample(&mut rng);
            zeros += (x == 0) as usize;
            sum += x as f64;
            sq += (x * x) as f64;
        }
        let p0 = pmf_series(1.0, 0, 8);
        assert!((p0 - 0.39894).abs() < 1e-5);
        assert!((zeros as f64 / n as f64 - p0).abs() < 0.002);
        let mean = sum / n as f64;
        assert!(mean.abs() < 3.0 / (n as f64).sqrt());
        let var_series: f64 = (-8..=8i64).map(|x| (x * x) as f64 * pmf_series(1.0, x, 8)).sum();
        assert!((var_series - 0.9992).abs() < 1e-3);
        let var = sq / n as f64 - mean * mean;
        assert!((var / var_series - 1.0).abs() < 0.02);
    }

    #[test]
    fn laplace_proposal_mass() {
        let g = DiscreteGaussian::new(2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 400_000;
        let mut hist = [0usize; 5];
        for _ in 0..n {
            let y = g.sample_laplace(&mut rng);
            if y.unsigned_abs() < 5 {
                hist[y.unsigned_abs() as usize] += 1;
            }
        }
        let r = (-1.0f64 / 3.0).exp();
        let z = (1.0 + r) / (1.0 - r);
        for (m, &c) in hist.iter().enumerate() {
            let p = if m == 0 { 1.0 } else { 2.0 } * r.powi(m as i32) / z;
            assert!((c as f64 / n as f64 - p).abs() < 0.003, "m={m}");
        }
    }
}
