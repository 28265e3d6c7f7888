// SPDX-License-Identifier: Apache-2.0

//! Analytic per-client communication for carrying noise (and gradients)
//! across committees, with LRP and with naive resharing.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Binary tree: `ceil(log2 T)` live noise vectors.
    Honaker,
    /// Dense optimal factorization: `T - 1` live vectors at the penultimate
    /// iteration.
    Optimal,
}

impl FromStr for Mechanism {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "honaker" | "tree" => Ok(Mechanism::Honaker),
            "optimal" | "optimal-dense" | "dense" => Ok(Mechanism::Optimal),
            _ => Err(Error::InvalidParameter(format!("unknown mechanism {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Stack Overflow next-word prediction.
    So,
    Femnist,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "so" | "stackoverflow" => Ok(Preset::So),
            "femnist" => Ok(Preset::Femnist),
            _ => Err(Error::InvalidParameter(format!("unknown preset {s:?}"))),
        }
    }
}

impl Preset {
    pub fn dimension(self) -> usize {
        match self {
            Preset::So => 4_050_748,
            Preset::Femnist => 1_018_174,
        }
    }

    pub fn iterations(self, mechanism: Mechanism) -> usize {
        match (self, mechanism) {
            (Preset::So, Mechanism::Honaker) => 2048,
            (Preset::So, Mechanism::Optimal) => 2052,
            (Preset::Femnist, Mechanism::Honaker) => 1024,
            (Preset::Femnist, Mechanism::Optimal) => 1445,
        }
    }

    /// Published SecAgg per-client communication, for comparison only.
    pub fn secagg_reference_bytes(self) -> f64 {
        match self {
            Preset::So => 16.2e6,
            Preset::Femnist => 4.07e6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::So => "so",
            Preset::Femnist => "femnist",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostScenario {
    pub dimension: usize,
    pub iterations: usize,
    pub n: usize,
    pub mu: f64,
    pub field_bits: u32,
    pub mechanism: Mechanism,
}

impl CostScenario {
    /// Preset with `n = 64`, `mu = 1/6` and a 32-bit field.
    pub fn preset(preset: Preset, mechanism: Mechanism) -> Self {
        CostScenario {
            dimension: preset.dimension(),
            iterations: preset.iterations(mechanism),
            n: 64,
            mu: 1.0 / 6.0,
            field_bits: 32,
            mechanism,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 0.5) || self.n == 0 || self.iterations < 2 || self.field_bits == 0 {
            return Err(Error::InvalidParameter(format!("bad cost scenario {self:?}")));
        }
        Ok(())
    }

    /// Vectors a client reshares in the worst iteration.
    pub fn reshared_vectors(&self) -> usize {
        match self.mechanism {
            Mechanism::Honaker => (self.iterations as f64).log2().ceil() as usize,
            Mechanism::Optimal => self.iterations - 1,
        }
    }

    fn bytes_per_element(&self) -> f64 {
        self.field_bits as f64 / 8.0
    }

    /// Real-valued packing `2 mu n`.
    pub fn packing(&self) -> f64 {
        2.0 * self.mu * self.n as f64
    }

    /// Elements sent, over all parties, per reshared secret with LRP.
    pub fn lrp_total_per_secret(&self) -> f64 {
        1.0 / (4.0 * self.mu * self.mu)
    }

    /// Elements sent, over all parties, per reshared secret naively.
    pub fn naive_total_per_secret(&self) -> f64 {
        (self.n * self.n) as f64
    }

    pub fn lrp_bytes_per_client(&self) -> f64 {
        let per_secret = self.lrp_total_per_secret() / self.n as f64;
        self.dimension as f64 * self.reshared_vectors() as f64 * per_secret * self.bytes_per_element()
    }

    pub fn naive_bytes_per_client(&self) -> f64 {
        self.dimension as f64 * self.reshared_vectors() as f64 * self.n as f64 * self.bytes_per_element()
    }

    /// Fresh sharings of the gradient and one noise vector plus output shares,
    /// per client per iteration.
    pub fn fresh_and_output_bytes_per_client(&self) -> f64 {
        let k = self.packing();
        let d = self.dimension as f64;
        let fresh = 2.0 * d * self.n as f64 / k;
        let output = d / k;
        (fresh + output) * self.bytes_per_element()
    }

    pub fn lrp_all_inclusive_bytes_per_client(&self) -> f64 {
        self.lrp_bytes_per_client() + self.fresh_and_output_bytes_per_client()
    }
}

/// Decimal units, three significant digits.
pub fn format_bytes(b: f64) -> String {
    const UNITS: [&str; 5] = ["B", "KB", "MB", "GB", "TB"];
    let mut v = b;
    let mut u = 0;
    while v >= 1000.0 && u + 1 < UNITS.len() {
        v /= 1000.0;
        u += 1;
    }
    let digits = if v >= 100.0 {
        0
    } else if v >= 10.0 {
        1
    } else {
        2
    };
    format!("{v:.digits$} {}", UNITS[u])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub preset: Preset,
    pub scenario: CostScenario,
    pub reshared_vectors: usize,
    pub lrp_bytes: f64,
    pub lrp_all_inclusive_bytes: f64,
    pub naive_bytes: f64,
    pub secagg_reference_bytes: f64,
    pub lrp_total_per_secret: f64,
    pub naive_total_per_secret: f64,
}

impl CostReport {
    pub fn new(preset: Preset, mechanism: Mechanism) -> Self {
        let s = CostScenario::preset(preset, mechanism);
        CostReport {
            preset,
            scenario: s,
            reshared_vectors: s.reshared_vectors(),
            lrp_bytes: s.lrp_bytes_per_client(),
            lrp_all_inclusive_bytes: s.lrp_all_inclusive_bytes_per_client(),
            naive_bytes: s.naive_bytes_per_client(),
            secagg_reference_bytes: preset.secagg_reference_bytes(),
            lrp_total_per_secret: s.lrp_total_per_secret(),
            naive_total_per_secret: s.naive_total_per_secret(),
        }
    }

    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "preset {} mechanism {:?}: d={} T*={} n={} mu={:.4} field_bits={} reshared vectors={}",
            self.preset.name(),
            s.mechanism,
            s.dimension,
            s.iterations,
            s.n,
            s.mu,
            s.field_bits,
            self.reshared_vectors
        );
        let rows = [
            ("LRP comm. (reshare)", self.lrp_bytes),
            ("LRP comm. (all traffic)", self.lrp_all_inclusive_bytes),
            ("Naive comm.", self.naive_bytes),
            ("SecAgg comm. (reference)", self.secagg_reference_bytes),
        ];
        for (label, b) in rows {
            let _ = writeln!(out, "  {label:<26} {:>10}", format_bytes(b));
        }
        let _ = writeln!(
            out,
            "  elements per secret: LRP {:.2}, naive {:.0}",
            self.lrp_total_per_secret, self.naive_total_per_secret
        );
        out
    }

    pub fn csv_header() -> &'static str {
        "preset,mechanism,dimension,iterations,n,mu,field_bits,reshared_vectors,lrp_bytes,lrp_all_inclusive_bytes,naive_bytes,secagg_reference_bytes"
    }

    pub fn to_csv_row(&self) -> String {
        let s = &self.scenario;
        format!(
            "{},{},{},{},{},{},{},{},{:.0},{:.0},{:.0},{:.0}",
            self.preset.name(),
            match s.mechanism {
                Mechanism::Honaker => "honaker",
                Mechanism::Optimal => "optimal",
            },
            s.dimension,
            s.iterations,
            s.n,
            s.mu,
            s.field_bits,
            self.reshared_vectors,
            self.lrp_bytes,
            self.lrp_all_inclusive_bytes,
            self.naive_bytes,
            self.secagg_reference_bytes
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b
    }

    #[test]
    fn so_tables() {
        let h = CostScenario::preset(Preset::So, Mechanism::Honaker);
        let o = CostScenario::preset(Preset::So, Mechanism::Optimal);
        assert_eq!(h.reshared_vectors(), 11);
        assert_eq!(o.reshared_vectors(), 2051);
        // d * 11 * (9/64) * 4 bytes.
        assert!(close(h.lrp_bytes_per_client(), 4_050_748.0 * 11.0 * 9.0 / 16.0, 1e-12));
        assert!(close(h.lrp_bytes_per_client(), 25.1e6, 0.01));
        assert!(close(o.lrp_bytes_per_client(), 4.68e9, 0.01));
        assert!(close(h.naive_bytes_per_client(), 11.4e9, 0.01));
        assert!(close(o.naive_bytes_per_client(), 2.13e12, 0.01));
    }

    #[test]
    fn femnist_tables() {
        let h = CostScenario::preset(Preset::Femnist, Mechanism::Honaker);
        let o = CostScenario::preset(Preset::Femnist, Mechanism::Optimal);
        assert!(close(h.lrp_bytes_per_client(), 5.73e6, 0.01));
        assert!(close(o.lrp_bytes_per_client(), 828e6, 0.01));
        assert!(close(h.naive_bytes_per_client(), 2.61e9, 0.01));
        assert!(close(o.naive_bytes_per_client(), 379e9, 0.05));
    }

    #[test]
    fn ratio_law() {
        for n in [16, 64, 100] {
            for mu in [0.1, 1.0 / 6.0, 0.3] {
                let s = CostScenario {
                    dimension: 1000,
                    iterations: 64,
                    n,
                    mu,
                    field_bits: 32,
                    mechanism: Mechanism::Honaker,
                };
                let r = s.naive_bytes_per_client() / s.lrp_bytes_per_client();
                let want = 4.0 * mu * mu * (n * n) as f64;
                assert!(close(r, want, 1e-12));
            }
        }
    }

    #[test]
    fn formatting() {
        assert_eq!(format_bytes(25_062_752.0), "25.1 MB");
        assert_eq!(format_bytes(2.127e12), "2.13 TB");
        assert_eq!(format_bytes(376.4e9), "376 GB");
        assert_eq!(format_bytes(512.0), "512 B");
        assert!("tree".parse::<Mechanism>().is_ok());
        assert!("x".parse::<Preset>().is_err());
    }
}
