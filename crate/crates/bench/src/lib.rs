// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use dmm_core::field::{Fe, FieldSpec};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_elems(field: &FieldSpec, len: usize, seed: u64) -> Vec<Fe> {
    let mut r = rng(seed);
    (0..len).map(|_| field.random(&mut r)).collect()
}
