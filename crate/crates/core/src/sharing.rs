// SPDX-License-Identifier: Apache-2.0

//! Packed Shamir secret sharing.
//!
//! A vector of `k` secrets is embedded in a single polynomial `f` of degree
//! `t_c + k - 1`: secret `j` sits at `f(secret_points[j])` and party `i`
//! receives `f(share_points[i])`. Any `t_c` shares are uniformly distributed
//! independent of the secrets; any `t_c + k` shares determine them.
//!
//! Party indices in this module are zero-based positions into
//! `share_points` (party `i` evaluates at point `i + 1` by default).

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Fe, FieldSpec};

/// Lagrange coefficients that evaluate the interpolant through `points` at
/// `target`: for every polynomial `f` of degree `< points.len()`,
/// `f(target) = sum_i coeffs[i] * f(points[i])`.
pub fn lagrange_at(field: &FieldSpec, points: &[Fe], target: Fe) -> Result<Vec<Fe>> {
    let mut out = Vec::with_capacity(points.len());
    for (i, &xi) in points.iter().enumerate() {
        let mut num = Fe::ONE;
        let mut den = Fe::ONE;
        for (m, &xm) in points.iter().enumerate() {
            if m == i {
                continue;
            }
            num = field.mul(num, field.sub(target, xm));
            den = field.mul(den, field.sub(xi, xm));
        }
        if den.is_zero() {
            return Err(Error::InvalidSharingParams(
                "interpolation points are not distinct".into(),
            ));
        }
        out.push(field.div(num, den)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharingParams {
    /// Number of parties.
    pub n: usize,
    /// Privacy threshold: any `t_c` shares reveal nothing.
    pub t_c: usize,
    /// Packing parameter: secrets per sharing.
    pub k: usize,
    pub share_points: Vec<Fe>,
    pub secret_points: Vec<Fe>,
}

impl SharingParams {
    /// Default evaluation points: parties at `1..=n`, secrets at `-1..=-k`.
    pub fn new(field: &FieldSpec, n: usize, t_c: usize, k: usize) -> Result<Self> {
        let share_points = (1..=n as u64).map(|i| field.elem(i)).collect();
        let secret_points = (1..=k as i64).map(|j| field.elem_i64(-j)).collect();
        Self::with_points(field, n, t_c, k, share_points, secret_points)
    }

    pub fn with_points(
        field: &FieldSpec,
        n: usize,
        t_c: usize,
        k: usize,
        share_points: Vec<Fe>,
        secret_points: Vec<Fe>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSharingParams(msg));
        if k == 0 {
            return bad("packing parameter k must be positive".into());
        }
        if t_c + k > n {
            return bad(format!(
                "degree t_c + k - 1 = {} must be below n = {n}",
                t_c + k - 1
            ));
        }
        if (n + k) as u64 >= field.modulus() {
            return bad(format!(
                "n + k = {} must be below the modulus {}",
                n + k,
                field.modulus()
            ));
        }
        if share_points.len() != n || secret_points.len() != k {
            return bad("point lists do not match n and k".into());
        }
        let mut all: Vec<Fe> = share_points.iter().chain(&secret_points).copied().collect();
        all.sort();
        all.dedup();
        if all.len() != n + k {
            return bad("evaluation points must be distinct".into());
        }
        Ok(SharingParams {
            n,
            t_c,
            k,
            share_points,
            secret_points,
        })
    }

    /// Degree of the sharing polynomial.
    pub fn degree(&self) -> usize {
        self.t_c + self.k - 1
    }

    /// Minimum number of shares needed to reconstruct.
    pub fn threshold(&self) -> usize {
        self.t_c + self.k
    }
}

/// The `n` shares of one packed sharing; `shares[i]` belongs to party `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PackedSharing {
    pub shares: Vec<Fe>,
}

/// Reconstruction coefficients for a fixed party subset: `rows[j][pos]` is
/// the coefficient of the share of `parties[pos]` for secret `j`.
#[derive(Debug)]
pub struct ReconCoeffs {
    pub parties: Vec<usize>,
    pub rows: Vec<Vec<Fe>>,
}

impl ReconCoeffs {
    pub fn position(&self, party: usize) -> Option<usize> {
        self.parties.binary_search(&party).ok()
    }
}

/// A packed Shamir scheme with precomputed sharing coefficients and a cache of
/// reconstruction coefficients keyed by party subset.
#[derive(Debug)]
pub struct PackedShamir {
    field: FieldSpec,
    params: SharingParams,
    // Coefficients expressing share `t_c + r` in terms of the anchor values
    // (the k secrets followed by the t_c random shares).
    expand: Vec<Vec<Fe>>,
    recon: Mutex<HashMap<Vec<usize>, Arc<ReconCoeffs>>>,
}

impl Clone for PackedShamir {
    fn clone(&self) -> Self {
        PackedShamir {
            field: self.field,
            params: self.params.clone(),
            expand: self.expand.clone(),
            recon: Mutex::new(HashMap::new()),
        }
    }
}

impl PackedShamir {
    pub fn new(field: FieldSpec, params: SharingParams) -> Result<Self> {
        let anchors: Vec<Fe> = params
            .secret_points
            .iter()
            .chain(&params.share_points[..params.t_c])
            .copied()
            .collect();
        let expand = params.share_points[params.t_c..]
            .iter()
            .map(|&x| lagrange_at(&field, &anchors, x))
            .collect::<Result<Vec<_>>>()?;
        Ok(PackedShamir {
            field,
            params,
            expand,
            recon: Mutex::new(HashMap::new()),
        })
    }

    /// Scheme with the default evaluation points.
    pub fn with_defaults(field: FieldSpec, n: usize, t_c: usize, k: usize) -> Result<Self> {
        let params = SharingParams::new(&field, n, t_c, k)?;
        Self::new(field, params)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn params(&self) -> &SharingParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn share<R: Rng + ?Sized>(&self, secrets: &[Fe], rng: &mut R) -> Result<PackedSharing> {
        let randomness: Vec<Fe> = (0..self.params.t_c)
            .map(|_| self.field.random(rng))
            .collect();
        self.share_with(secrets, &randomness)
    }

    /// Deterministic sharing: `randomness` supplies the `t_c` free values,
    /// which become the shares of parties `0..t_c`.
    pub fn share_with(&self, secrets: &[Fe], randomness: &[Fe]) -> Result<PackedSharing> {
        let mut shares = vec![Fe::ZERO; self.params.n];
        self.share_into(secrets, randomness, &mut shares)?;
        Ok(PackedSharing { shares })
    }

    /// Writes the `n` shares into `out`.
    pub fn share_into(&self, secrets: &[Fe], randomness: &[Fe], out: &mut [Fe]) -> Result<()> {
        let (k, t_c) = (self.params.k, self.params.t_c);
        if secrets.len() != k {
            return Err(Error::WrongSecretCount {
                expected: k,
                got: secrets.len(),
            });
        }
        if randomness.len() != t_c {
            return Err(Error::InvalidParameter(format!(
                "sharing needs {t_c} random values, got {}",
                randomness.len()
            )));
        }
        if out.len() != self.params.n {
            return Err(Error::DimensionMismatch {
                expected: self.params.n,
                got: out.len(),
            });
        }
        let anchors: Vec<Fe> = secrets.iter().chain(randomness).copied().collect();
        out[..t_c].copy_from_slice(randomness);
        for (slot, row) in out[t_c..].iter_mut().zip(&self.expand) {
            *slot = self.field.dot(row, &anchors);
        }
        Ok(())
    }

    /// Reconstruction coefficients for the party subset `gamma` (any order,
    /// duplicates ignored). Cached per subset.
    pub fn recons_coeffs(&self, gamma: &[usize]) -> Result<Arc<ReconCoeffs>> {
        let mut parties = gamma.to_vec();
        parties.sort_unstable();
        parties.dedup();
        if let Some(hit) = self.recon.lock().unwrap().get(&parties) {
            return Ok(hit.clone());
        }
        if parties.len() < self.params.threshold() {
            return Err(Error::InsufficientShares {
                needed: self.params.threshold(),
                got: parties.len(),
            });
        }
        if let Some(&bad) = parties.iter().find(|&&i| i >= self.params.n) {
            return Err(Error::UnknownShareIndex(bad));
        }
        let points: Vec<Fe> = parties.iter().map(|&i| self.params.share_points[i]).collect();
        let rows = self
            .params
            .secret_points
            .iter()
            .map(|&s| lagrange_at(&self.field, &points, s))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = Arc::new(ReconCoeffs {
            parties: parties.clone(),
            rows,
        });
        self.recon.lock().unwrap().insert(parties, coeffs.clone());
        Ok(coeffs)
    }

    /// The coefficient `lambda_i^j` of party `i` for secret `j` over `gamma`.
    pub fn recons_coeff(&self, gamma: &[usize], i: usize, j: usize) -> Result<Fe> {
        if j >= self.params.k {
            return Err(Error::InvalidParameter(format!("secret index {j} out of range")));
        }
        let coeffs = self.recons_coeffs(gamma)?;
        let pos = coeffs.position(i).ok_or(Error::UnknownShareIndex(i))?;
        Ok(coeffs.rows[j][pos])
    }

    /// Reconstructs secret `j` from the shares held by the keys of `shares`.
    pub fn reconstruct(&self, shares: &BTreeMap<usize, Fe>, j: usize) -> Result<Fe> {
        if j >= self.params.k {
            return Err(Error::InvalidParameter(format!("secret index {j} out of range")));
        }
        let gamma: Vec<usize> = shares.keys().copied().collect();
        let coeffs = self.recons_coeffs(&gamma)?;
        let values: Vec<Fe> = shares.values().copied().collect();
        Ok(self.field.dot(&coeffs.rows[j], &values))
    }

    /// Reconstructs all `k` secrets.
    pub fn reconstruct_all(&self, shares: &BTreeMap<usize, Fe>) -> Result<Vec<Fe>> {
        let gamma: Vec<usize> = shares.keys().copied().collect();
        let coeffs = self.recons_coeffs(&gamma)?;
        let values: Vec<Fe> = shares.values().copied().collect();
        Ok(coeffs
            .rows
            .iter()
            .map(|row| self.field.dot(row, &values))
            .collect())
    }

    /// Share-wise sum of two sharings.
    pub fn add(&self, a: &PackedSharing, b: &PackedSharing) -> PackedSharing {
        PackedSharing {
            shares: a
                .shares
                .iter()
                .zip(&b.shares)
                .map(|(&x, &y)| self.field.add(x, y))
                .collect(),
        }
    }

    /// Share-wise scalar multiple.
    pub fn scale(&self, c: Fe, a: &PackedSharing) -> PackedSharing {
        PackedSharing {
            shares: a.shares.iter().map(|&x| self.field.mul(c, x)).collect(),
        }
    }
}

impl PackedSharing {
    /// Restricts the sharing to the parties in `gamma`.
    pub fn subset(&self, gamma: &[usize]) -> BTreeMap<usize, Fe> {
        gamma.iter().map(|&i| (i, self.shares[i])).collect()
    }

    pub fn all(&self) -> BTreeMap<usize, Fe> {
        self.shares.iter().copied().enumerate().collect()
    }
}
