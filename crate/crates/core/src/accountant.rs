// SPDX-License-Identifier: Apache-2.0

//! Privacy accounting for the distributed discrete Gaussian matrix mechanism
//! and parameter planning.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `10 * sum_{k=1}^{n-1} exp(-2 pi^2 (sigma/gamma)^2 k/(k+1))`.
pub fn tau(sigma: f64, gamma: f64, n: usize) -> f64 {
    let s2 = (sigma / gamma).powi(2);
    10.0 * (1..n)
        .map(|k| {
            let k = k as f64;
            (-2.0 * PI * PI * s2 * k / (k + 1.0)).exp()
        })
        .sum::<f64>()
}

/// Effective clipping norm after flattening and conditional rounding.
pub fn c_hat(c: f64, gamma: f64, d: usize, beta: f64) -> f64 {
    let d = d as f64;
    let loose = (c + gamma * d.sqrt()).powi(2);
    if beta <= 0.0 {
        return loose.sqrt();
    }
    let tight = c * c
        + gamma * gamma * d / 4.0
        + (2.0 * (1.0 / beta).ln()).sqrt() * gamma * (c + gamma * d.sqrt() / 2.0);
    tight.min(loose).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccountantInputs {
    /// Sensitivity of the strategy matrix.
    pub sensitivity: f64,
    pub clip_norm: f64,
    pub granularity: f64,
    pub rounding_bias: f64,
    pub sigma: f64,
    /// Committee size.
    pub n: usize,
    pub dimension: usize,
    pub delta: f64,
    /// Fraction of dishonest clients, `mu'`.
    #[serde(default)]
    pub dishonest_fraction: f64,
}

impl AccountantInputs {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.n < 2 {
            return bad("committee size must be at least 2");
        }
        if !(self.sigma > 0.0 && self.granularity > 0.0 && self.clip_norm > 0.0) {
            return bad("sigma, granularity and clip_norm must be positive");
        }
        if self.sigma / self.granularity < 0.5 {
            return Err(Error::NoiseScaleTooSmall(self.sigma / self.granularity));
        }
        if !(self.sensitivity >= 0.0) {
            return bad("sensitivity must be non-negative");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(0.0..0.5).contains(&self.dishonest_fraction) {
            return bad("dishonest fraction must lie in [0, 1/2)");
        }
        Ok(())
    }

    pub fn c_hat(&self) -> f64 {
        c_hat(
            self.clip_norm,
            self.granularity,
            self.dimension,
            self.rounding_bias,
        )
    }

    pub fn tau(&self) -> f64 {
        tau(self.sigma, self.granularity, self.n)
    }
}

/// `epsilon` such that the mechanism is `epsilon^2/2`-concentrated DP.
pub fn epsilon_cdp(inp: &AccountantInputs) -> f64 {
    let ch = inp.c_hat();
    let t = inp.tau();
    let n = inp.n as f64;
    let d = inp.dimension as f64;
    let main = inp.sensitivity * ch / (n.sqrt() * inp.sigma);
    let eps = (main * main + 2.0 * t * d)
        .sqrt()
        .min(main + t * d.sqrt());
    if inp.dishonest_fraction > 0.0 {
        eps / (1.0 - inp.dishonest_fraction)
    } else {
        eps
    }
}

/// `epsilon * (sqrt(2 ln(1/delta)) + epsilon/2)`.
pub fn adp_closed_form(eps: f64, delta: f64) -> f64 {
    eps * ((2.0 * (1.0 / delta).ln()).sqrt() + eps / 2.0)
}

/// The objective minimized by [`cdp_to_adp`] at Renyi order `alpha > 1`.
pub fn adp_objective(eps: f64, delta: f64, alpha: f64) -> f64 {
    0.5 * eps * eps * alpha + (1.0 / (alpha * delta)).ln() / (alpha - 1.0) + (1.0 - 1.0 / alpha).ln()
}

/// Converts `epsilon^2/2`-concentrated DP to `(epsilon', delta)`-DP by
/// minimizing [`adp_objective`] over `alpha`.
pub fn cdp_to_adp(eps: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter("epsilon must be finite and non-negative".into()));
    }
    // Search over x = ln(alpha - 1).
    let f = |x: f64| adp_objective(eps, delta, 1.0 + x.exp());
    const LO: f64 = -25.0;
    const HI: f64 = 60.0;
    const STEP: f64 = 0.05;
    let steps = ((HI - LO) / STEP) as usize;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..=steps {
        let v = f(LO + i as f64 * STEP);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut a = LO + best_i.saturating_sub(1) as f64 * STEP;
    let mut b = (LO + (best_i + 1) as f64 * STEP).min(HI);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    best = best.min(fc).min(fd);
    if eps > 0.0 {
        let alpha = 1.0 + (2.0 * (1.0 / delta).ln()).sqrt() / eps;
        best = best.min(adp_objective(eps, delta, alpha));
    }
    Ok(best.max(0.0))
}

/// Default `delta` for `total_clients` participating clients.
pub fn default_delta(total_clients: usize) -> f64 {
    1.0 / total_clients as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub n: usize,
    pub dimension: usize,
    pub iterations: usize,
    pub clip_norm: f64,
    pub epsilon_target: f64,
    /// `max_T ||A[T,:]||_2`.
    pub workload_row_norm: f64,
    /// `max_T ||B[T,:]||_2`.
    pub decoder_row_norm: f64,
    pub sensitivity: f64,
    pub modulus: u64,
    #[serde(default)]
    pub dishonest_fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedParameters {
    pub gamma: f64,
    pub beta: f64,
    pub sigma: f64,
    pub epsilon_cdp: f64,
}

/// Smallest bit width whose modulus passes [`modulus_sufficient`].
pub fn required_modulus_bits(p: &PlanInputs) -> u32 {
    (2..=128)
        .find(|&b| modulus_sufficient(p, 2f64.powi(b as i32)))
        .unwrap_or(u32::MAX)
}

/// Modulus condition with all hidden constants set to one:
/// `q^2 >= ln(1 + q^2/n) * n * (|A|^2 T + 1 + |A|^2 + |B|^2 (d D^2/(e^2 n) + ln^2(n d / e^2)))`.
pub fn modulus_sufficient(p: &PlanInputs, q: f64) -> bool {
    let n = p.n as f64;
    let d = p.dimension as f64;
    let e2 = p.epsilon_target * p.epsilon_target;
    let a2 = p.workload_row_norm.powi(2);
    let b2 = p.decoder_row_norm.powi(2);
    let l = (n * d / e2).ln().max(0.0);
    let inner = a2 * p.iterations as f64
        + 1.0
        + a2
        + b2 * (d * p.sensitivity.powi(2) / (e2 * n) + l * l);
    q * q >= (q * q / n).ln_1p() * n * inner
}

/// Chooses `(gamma, beta, sigma)` reaching `epsilon_target`.
pub fn plan_parameters(p: &PlanInputs) -> Result<PlannedParameters> {
    if p.n < 2 || p.dimension == 0 || p.iterations == 0 {
        return Err(Error::InvalidParameter(
            "n >= 2, dimension >= 1 and iterations >= 1 are required".into(),
        ));
    }
    if !(p.epsilon_target > 0.0 && p.clip_norm > 0.0 && p.sensitivity > 0.0) {
        return Err(Error::InvalidParameter(
            "epsilon_target, clip_norm and sensitivity must be positive".into(),
        ));
    }
    let q = p.modulus as f64;
    if !modulus_sufficient(p, q) {
        return Err(Error::InfeasibleModulus {
            required_bits: required_modulus_bits(p),
            available_bits: 64 - (p.modulus - 1).leading_zeros(),
        });
    }
    let n = p.n as f64;
    let d = p.dimension as f64;
    let c = p.clip_norm;
    let delta_s = p.sensitivity;
    let eps = p.epsilon_target * (1.0 - p.dishonest_fraction);

    let beta = (1.0 / n).min(0.5);
    let log_factor = (q * q / n).ln_1p();
    let gamma = ((p.workload_row_norm.powi(2) * c * c * n * p.iterations as f64 / d
        + p.decoder_row_norm.powi(2) * c * c * delta_s * delta_s / (eps * eps))
        * log_factor
        / (q * q))
        .sqrt();

    let l = (80.0 * n * d / (eps * eps)).ln();
    let sigma = [
        2.0 * c * delta_s / (eps * n.sqrt()),
        gamma * delta_s * (8.0 * d).sqrt() / (eps * n.sqrt()),
        gamma / (PI * PI) * l,
        gamma * (l.max(0.0) / (PI * PI)).sqrt(),
        gamma / 2.0,
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let achieved = epsilon_cdp(&AccountantInputs {
        sensitivity: delta_s,
        clip_norm: c,
        granularity: gamma,
        rounding_bias: beta,
        sigma,
        n: p.n,
        dimension: p.dimension,
        delta: 0.5,
        dishonest_fraction: p.dishonest_fraction,
    });
    Ok(PlannedParameters {
        gamma,
        beta,
        sigma,
        epsilon_cdp: achieved,
    })
}

/// One row of the accountant report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccountantReport {
    pub sigma: f64,
    pub gamma: f64,
    pub beta: f64,
    pub tau: f64,
    pub c_hat: f64,
    pub epsilon_cdp: f64,
    pub epsilon_adp: f64,
    pub delta: f64,
}

pub fn report(inp: &AccountantInputs) -> Result<AccountantReport> {
    inp.validate()?;
    let e = epsilon_cdp(inp);
    Ok(AccountantReport {
        sigma: inp.sigma,
        gamma: inp.granularity,
        beta: inp.rounding_bias,
        tau: inp.tau(),
        c_hat: inp.c_hat(),
        epsilon_cdp: e,
        epsilon_adp: cdp_to_adp(e, inp.delta)?,
        delta: inp.delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> AccountantInputs {
        AccountantInputs {
            sensitivity: 3.0,
            clip_norm: 1.0,
            granularity: 1e-3,
            rounding_bias: 1.0 / 64.0,
            sigma: 0.5,
            n: 64,
            dimension: 1 << 12,
            delta: 1e-6,
            dishonest_fraction: 0.0,
        }
    }

    #[test]
    fn tau_examples() {
        assert!((tau(1.0, 1.0, 2) - 10.0 * (-PI * PI).exp()).abs() < 1e-15);
        assert!((tau(1.0, 1.0, 2) - 5.1723e-4).abs() < 1e-7);
        assert!(tau(10.0, 1.0, 100) < 1e-100);
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let t = tau(0.5 + i as f64 * 0.05, 1.0, 16);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn c_hat_examples() {
        let v = c_hat(1.0, 1.0, 4, (-1.0f64).exp());
        assert!((v * v - (2.0 + 2f64.sqrt() * 2.0)).abs() < 1e-12);
        assert!((v - 2.197368).abs() < 1e-6);
        assert!((c_hat(1.5, 1e-12, 100, 0.01) - 1.5).abs() < 1e-9);
        for &(c, g, d, b) in &[(1.0, 0.1, 10, 0.5), (0.1, 2.0, 1000, 1e-9), (3.0, 0.5, 1, 0.9)] {
            let v = c_hat(c, g, d, b);
            assert!(v >= c);
            assert!(v <= c + g * (d as f64).sqrt() + 1e-12);
        }
    }

    #[test]
    fn epsilon_monotone() {
        let b = base();
        let e0 = epsilon_cdp(&b);
        assert!(epsilon_cdp(&AccountantInputs { sigma: 1.0, ..b }) < e0);
        assert!(epsilon_cdp(&AccountantInputs { n: 128, ..b }) < e0);
        assert!(epsilon_cdp(&AccountantInputs { sensitivity: 4.0, ..b }) > e0);
        assert!(epsilon_cdp(&AccountantInputs { clip_norm: 2.0, ..b }) > e0);
        assert!(epsilon_cdp(&AccountantInputs { dimension: 1 << 14, ..b }) > e0);
        assert!(epsilon_cdp(&AccountantInputs { sigma: 1e9, ..b }) < 1e-8);
        let deg = epsilon_cdp(&AccountantInputs { dishonest_fraction: 0.2, ..b });
        assert!((deg - e0 / 0.8).abs() < 1e-12);
    }

    #[test]
    fn adp_bounds() {
        for &eps in &[0.0, 1e-3, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0] {
            for &delta in &[1e-10, 1e-6, 1e-3, 0.1] {
                let v = cdp_to_adp(eps, delta).unwrap();
                assert!(v >= 0.0);
                assert!(v <= adp_closed_form(eps, delta) + 1e-12, "{eps} {delta}");
            }
        }
        assert!(cdp_to_adp(0.0, 1e-6).unwrap() <= 1e-6);
        assert!(cdp_to_adp(1.0, 0.0).is_err());
    }

    #[test]
    fn planner_self_consistent() {
        for &n in &[8usize, 64] {
            for &d in &[1000usize, 100_000] {
                for &eps in &[0.5, 2.0, 10.0] {
                    let p = PlanInputs {
                        n,
                        dimension: d,
                        iterations: 64,
                        clip_norm: 1.0,
                        epsilon_target: eps,
                        workload_row_norm: 8.0,
                        decoder_row_norm: 2.5,
                        sensitivity: 4.0,
                        modulus: crate::field::DEFAULT_MODULUS,
                        dishonest_fraction: 0.0,
                    };
                    let plan = plan_parameters(&p).unwrap();
                    assert_eq!(plan.beta, 1.0 / n as f64);
                    assert!(plan.sigma >= 2.0 * 4.0 / (eps * (n as f64).sqrt()));
                    assert!(plan.sigma / plan.gamma >= 0.5);
                    assert!(plan.epsilon_cdp <= eps, "{n} {d} {eps}: {}", plan.epsilon_cdp);
                }
            }
        }
    }

    #[test]
    fn planner_rejects_small_modulus() {
        let p = PlanInputs {
            n: 64,
            dimension: 1_000_000,
            iterations: 2048,
            clip_norm: 1.0,
            epsilon_target: 1.0,
            workload_row_norm: 45.0,
            decoder_row_norm: 3.0,
            sensitivity: 10.0,
            modulus: 65_521,
            dishonest_fraction: 0.0,
        };
        match plan_parameters(&p) {
            Err(Error::InfeasibleModulus {
                required_bits,
                available_bits,
            }) => {
                assert_eq!(available_bits, 16);
                assert!(required_bits > 16);
                assert!(modulus_sufficient(&p, 2f64.powi(required_bits as i32)));
                assert!(!modulus_sufficient(&p, 2f64.powi(required_bits as i32 - 1)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
