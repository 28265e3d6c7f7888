// SPDX-License-Identifier: Apache-2.0

//! Linear resharing of packed sharings from one committee to the next.
//!
//! A committee holds `k` packed sharings of the vectors `z_1..z_k` (a `k x k`
//! secret matrix). Party `i` reshares its `k` shares `(z_1^i, .., z_k^i)` as a
//! single fresh packed sharing, sending one element to each party of the next
//! committee. Party `j` of the next committee then combines what it received
//! with the reconstruction coefficients of the surviving senders and obtains
//! its share of `k` new sharings, where sharing `m` holds the column
//! `(z_{1,m}, .., z_{k,m})`. One hop therefore transposes the secret matrix.
//!
//! Per hop every sender emits `n` field elements for `k^2` secrets.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::sharing::{PackedShamir, PackedSharing};

/// Party `source`'s shares of the `k` sharings in one batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReshareBatch {
    pub source: usize,
    pub batch: u32,
    pub shares: Vec<Fe>,
}

/// A party's shares of the `k` recovered sharings; entry `m` is its share of
/// the sharing of column `m` of the source secret matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredShares {
    pub shares: Vec<Fe>,
}

/// Shares `batch.shares` afresh for the next committee. Output share `j` is
/// addressed to party `j` of that committee.
pub fn reshare<R: Rng + ?Sized>(
    scheme: &PackedShamir,
    batch: &ReshareBatch,
    rng: &mut R,
) -> Result<PackedSharing> {
    scheme.share(&batch.shares, rng)
}

/// The reconstruction set for a recovery: all source parties outside
/// `drop_set` that appear in `received`. Fails when it is smaller than
/// `t_c + k`.
pub fn surviving_sources(
    scheme: &PackedShamir,
    drop_set: &BTreeSet<usize>,
    received: impl IntoIterator<Item = usize>,
) -> Result<Vec<usize>> {
    let alive: Vec<usize> = received
        .into_iter()
        .filter(|i| !drop_set.contains(i))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let needed = scheme.params().threshold();
    if alive.len() < needed {
        return Err(Error::TooManyDropouts {
            survivors: alive.len(),
            needed,
        });
    }
    Ok(alive)
}

/// Recovers one party's shares from the elements it received, keyed by source
/// party. Sources in `drop_set` are ignored, as are sources that sent nothing.
pub fn recover(
    scheme: &PackedShamir,
    drop_set: &BTreeSet<usize>,
    received: &BTreeMap<usize, Fe>,
) -> Result<RecoveredShares> {
    let gamma = surviving_sources(scheme, drop_set, received.keys().copied())?;
    let coeffs = scheme.recons_coeffs(&gamma)?;
    let values: Vec<Fe> = gamma.iter().map(|i| received[i]).collect();
    let field = scheme.field();
    Ok(RecoveredShares {
        shares: coeffs.rows.iter().map(|row| field.dot(row, &values)).collect(),
    })
}

/// Byte length of an encoded [`ReshareMessage`].
pub const RESHARE_WIRE_LEN: usize = 2 + 4 + 4;

/// One reshared element on the wire: `(source: u16, batch: u32, share: u32)`,
/// little-endian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReshareMessage {
    pub source: u16,
    pub batch: u32,
    pub share: Fe,
}

impl ReshareMessage {
    pub fn encode(&self) -> [u8; RESHARE_WIRE_LEN] {
        let mut out = [0u8; RESHARE_WIRE_LEN];
        out[..2].copy_from_slice(&self.source.to_le_bytes());
        out[2..6].copy_from_slice(&self.batch.to_le_bytes());
        out[6..].copy_from_slice(&(self.share.value() as u32).to_le_bytes());
        out
    }

    /// Decodes a message; the share is reduced into `field`.
    pub fn decode(field: &crate::field::FieldSpec, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != RESHARE_WIRE_LEN {
            return Err(Error::DimensionMismatch {
                expected: RESHARE_WIRE_LEN,
                got: bytes.len(),
            });
        }
        let source = u16::from_le_bytes([bytes[0], bytes[1]]);
        let batch = u32::from_le_bytes(bytes[2..6].try_into().unwrap());
        let raw = u32::from_le_bytes(bytes[6..].try_into().unwrap()) as u64;
        if raw >= field.modulus() {
            return Err(Error::InvalidParameter(format!(
                "residue {raw} not below modulus"
            )));
        }
        Ok(ReshareMessage {
            source,
            batch,
            share: field.elem(raw),
        })
    }
}

/// Result of the quadratic-cost baseline resharing.
#[derive(Clone, Debug)]
pub struct NaiveReshareOutput {
    /// `second_level[l]` is the sharing of the share of `survivors[l]`.
    pub second_level: Vec<PackedSharing>,
    /// The next committee's sharing of the original secret.
    pub resharing: PackedSharing,
    /// Field elements sent by all resharers together.
    pub elements_sent: usize,
}

/// Baseline resharing of a `(t_c + 1)`-out-of-`n` sharing: every surviving
/// party shares its share to the whole next committee, which combines the
/// received sharings with the reconstruction coefficients of the survivors.
pub fn naive_reshare<R: Rng + ?Sized>(
    scheme: &PackedShamir,
    sharing: &PackedSharing,
    survivors: &[usize],
    rng: &mut R,
) -> Result<NaiveReshareOutput> {
    if scheme.k() != 1 {
        return Err(Error::InvalidSharingParams(
            "naive resharing expects a non-packed scheme (k = 1)".into(),
        ));
    }
    let coeffs = scheme.recons_coeffs(survivors)?;
    let field = scheme.field();
    let second_level = coeffs
        .parties
        .iter()
        .map(|&i| scheme.share(&[sharing.shares[i]], rng))
        .collect::<Result<Vec<_>>>()?;
    let n = scheme.n();
    let resharing = PackedSharing {
        shares: (0..n)
            .map(|j| {
                let col: Vec<Fe> = second_level.iter().map(|s| s.shares[j]).collect();
                field.dot(&coeffs.rows[0], &col)
            })
            .collect(),
    };
    Ok(NaiveReshareOutput {
        elements_sent: second_level.len() * n,
        second_level,
        resharing,
    })
}
