// SPDX-License-Identifier: Apache-2.0

//! Prime-field arithmetic with a runtime modulus.
//!
//! Elements are plain residues ([`Fe`]); all arithmetic goes through a
//! [`FieldSpec`] which carries the modulus. Moduli are limited to 32 bits so
//! that every product fits in a `u64` before reduction.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest prime below 2^32.
pub const DEFAULT_MODULUS: u64 = 4_294_967_291;

/// A residue in `[0, q)` for the modulus of the [`FieldSpec`] that produced it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(u32);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    /// Raw residue value.
    pub fn value(self) -> u64 {
        self.0 as u64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The prime field `Z_q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFieldSpec", into = "RawFieldSpec")]
pub struct FieldSpec {
    modulus: u64,
}

#[derive(Serialize, Deserialize)]
struct RawFieldSpec {
    modulus: u64,
}

impl TryFrom<RawFieldSpec> for FieldSpec {
    type Error = Error;

    fn try_from(raw: RawFieldSpec) -> Result<Self> {
        FieldSpec::new(raw.modulus)
    }
}

impl From<FieldSpec> for RawFieldSpec {
    fn from(spec: FieldSpec) -> Self {
        RawFieldSpec {
            modulus: spec.modulus,
        }
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec {
            modulus: DEFAULT_MODULUS,
        }
    }
}

impl FieldSpec {
    /// Field with the given prime modulus, `3 <= q < 2^32`.
    pub fn new(modulus: u64) -> Result<Self> {
        if !(3..=u32::MAX as u64).contains(&modulus) {
            return Err(Error::InvalidModulus {
                modulus,
                reason: "modulus must lie in [3, 2^32)",
            });
        }
        if !is_prime(modulus) {
            return Err(Error::InvalidModulus {
                modulus,
                reason: "modulus is not prime",
            });
        }
        Ok(FieldSpec { modulus })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Number of bits needed to represent a residue, `ceil(log2 q)`.
    pub fn bit_width(&self) -> u32 {
        64 - (self.modulus - 1).leading_zeros()
    }

    /// Bytes per serialized residue.
    pub fn byte_width(&self) -> usize {
        self.bit_width().div_ceil(8) as usize
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem(&self, v: u64) -> Fe {
        Fe((v % self.modulus) as u32)
    }

    /// Reduces a signed integer into the field.
    pub fn elem_i64(&self, v: i64) -> Fe {
        Fe(v.rem_euclid(self.modulus as i64) as u32)
    }

    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let s = a.value() + b.value();
        if s >= self.modulus {
            Fe((s - self.modulus) as u32)
        } else {
            Fe(s as u32)
        }
    }

    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        if a.0 >= b.0 {
            Fe(a.0 - b.0)
        } else {
            Fe((self.modulus - b.value() + a.value()) as u32)
        }
    }

    pub fn neg(&self, a: Fe) -> Fe {
        if a.0 == 0 {
            a
        } else {
            Fe((self.modulus - a.value()) as u32)
        }
    }

    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        Fe((a.value() * b.value() % self.modulus) as u32)
    }

    /// `acc + a * b`.
    pub fn mul_add(&self, acc: Fe, a: Fe, b: Fe) -> Fe {
        Fe(((acc.value() + a.value() * b.value()) % self.modulus) as u32)
    }

    pub fn pow(&self, base: Fe, mut exp: u64) -> Fe {
        let mut result = Fe::ONE;
        let mut base = base;
        while exp > 0 {
            if exp & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        result
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.modulus as i64, a.value() as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1);
        Ok(self.elem_i64(t0))
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// Largest magnitude representable by the signed encoding, `floor(q/2)`.
    pub fn half(&self) -> u64 {
        self.modulus / 2
    }

    /// Maps `x` with `|x| <= q/2` to its residue.
    pub fn encode_signed(&self, x: i64) -> Result<Fe> {
        if x.unsigned_abs() > self.half() {
            return Err(Error::SignedOutOfRange {
                value: x,
                bound: self.half(),
            });
        }
        Ok(self.elem_i64(x))
    }

    /// Maps a residue `v` to `v` if `v <= q/2`, otherwise to `v - q`.
    pub fn decode_signed(&self, e: Fe) -> i64 {
        if e.value() <= self.half() {
            e.value() as i64
        } else {
            e.value() as i64 - self.modulus as i64
        }
    }

    /// Uniformly random element.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(0..self.modulus) as u32)
    }

    pub fn sum<I: IntoIterator<Item = Fe>>(&self, it: I) -> Fe {
        it.into_iter().fold(Fe::ZERO, |acc, x| self.add(acc, x))
    }

    /// Inner product `sum_i a_i * b_i`.
    pub fn dot(&self, a: &[Fe], b: &[Fe]) -> Fe {
        debug_assert_eq!(a.len(), b.len());
        // Accumulate in u128 and reduce once; q^2 * len stays far below 2^128.
        let acc: u128 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x.value() * y.value()) as u128)
            .sum();
        Fe((acc % self.modulus as u128) as u32)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut i = 17u64;
    while i * i <= n {
        if n % i == 0 || n % (i + 2) == 0 {
            return false;
        }
        i += 6;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f13() -> FieldSpec {
        FieldSpec::new(13).unwrap()
    }

    #[test]
    fn small_field_examples() {
        let f = f13();
        assert_eq!(f.add(Fe(7), Fe(9)), Fe(3));
        assert_eq!(f.mul(Fe(5), Fe(0)), Fe(0));
        assert_eq!(f.inv(Fe(4)).unwrap(), Fe(10));
        assert!(matches!(f.inv(Fe(0)), Err(Error::ZeroInverse)));
    }

    #[test]
    fn signed_map() {
        let f = FieldSpec::new(11).unwrap();
        assert_eq!(f.decode_signed(Fe(10)), -1);
        assert_eq!(f.decode_signed(Fe(5)), 5);
        assert_eq!(f.encode_signed(-5).unwrap(), Fe(6));
        assert!(f.encode_signed(6).is_err());
        assert!(f.encode_signed(-6).is_err());
        for x in -5..=5 {
            assert_eq!(f.decode_signed(f.encode_signed(x).unwrap()), x);
        }
        for v in 0..11 {
            let e = Fe(v);
            assert_eq!(f.encode_signed(f.decode_signed(e)).unwrap(), e);
        }
    }

    #[test]
    fn field_axioms_exhaustive_q13() {
        let f = f13();
        let all: Vec<Fe> = (0..13).map(Fe).collect();
        for &a in &all {
            for &b in &all {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.sub(f.add(a, b), b), a);
                for &c in &all {
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
            }
        }
    }

    #[test]
    fn default_modulus() {
        let f = FieldSpec::default();
        assert_eq!(f.modulus(), 4_294_967_291);
        assert_eq!(f.bit_width(), 32);
        assert_eq!(f.byte_width(), 4);
        assert!(is_prime(DEFAULT_MODULUS));
        // Nothing between the default and 2^32 is prime.
        assert!((DEFAULT_MODULUS + 1..1u64 << 32).all(|n| !is_prime(n)));
        let a = f.elem(DEFAULT_MODULUS - 1);
        assert_eq!(f.mul(a, a), Fe::ONE);
        assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(FieldSpec::new(12).is_err());
        assert!(FieldSpec::new(1 << 32).is_err());
        assert!(FieldSpec::new(2).is_err());
    }

    #[test]
    fn serde_shape() {
        let f = f13();
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"modulus":13}"#);
        let g: FieldSpec = serde_json::from_str(r#"{"modulus":4294967291}"#).unwrap();
        assert_eq!(g, FieldSpec::default());
        assert!(serde_json::from_str::<FieldSpec>(r#"{"modulus":15}"#).is_err());
    }

    #[test]
    fn dot_matches_fold() {
        let f = FieldSpec::default();
        let a: Vec<Fe> = (0..50).map(|i| f.elem((u64::MAX / 7).wrapping_mul(i + 1))).collect();
        let b: Vec<Fe> = (0..50).map(|i| f.elem((u64::MAX / 11).wrapping_mul(i + 3))).collect();
        let folded = a
            .iter()
            .zip(&b)
            .fold(Fe::ZERO, |acc, (x, y)| f.mul_add(acc, *x, *y));
        assert_eq!(f.dot(&a, &b), folded);
    }
}
