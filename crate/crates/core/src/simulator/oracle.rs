// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::Fe;

use super::adversary::Item;
use super::layout::Layout;

/// Computes `A_int X + B_int Z` in the clear for every iteration, using the
/// same client inputs the protocol would. `gradients[t][i]` is the gradient
/// of committee position `i` at iteration `t`. Round-1 dropouts contribute
/// nothing, matching the protocol.
pub fn plaintext_oracle(layout: &Layout, gradients: &[Vec<Vec<f64>>]) -> Result<Vec<Vec<Fe>>> {
    let t_star = layout.iterations();
    if gradients.len() != t_star {
        return Err(Error::DimensionMismatch {
            expected: t_star,
            got: gradients.len(),
        });
    }
    let f = layout.field;
    let mut sums: BTreeMap<Item, Vec<Fe>> = BTreeMap::new();
    let mut out = Vec::with_capacity(t_star);
    for (t, grads) in gradients.iter().enumerate() {
        for i in 0..layout.n {
            if layout.drops[t].round1.contains(&i) {
                continue;
            }
            let inputs = layout.client_inputs(t, i, &grads[i])?;
            for (item, vals) in inputs.items(t) {
                let s = sums.entry(item).or_insert_with(|| vec![Fe::ZERO; layout.padded]);
                for (a, &v) in s.iter_mut().zip(vals) {
                    *a = f.add(*a, f.elem_i64(v));
                }
            }
        }
        let mut y = vec![Fe::ZERO; layout.padded];
        for &(item, c) in &layout.target[t] {
            let c = f.elem_i64(c);
            if let Some(s) = sums.get(&item) {
                for (a, &v) in y.iter_mut().zip(s) {
                    *a = f.mul_add(*a, c, v);
                }
            } else if matches!(item, Item::Noise(_)) {
                return Err(Error::Config(format!("oracle has no value for {item:?}")));
            }
        }
        out.push(y);
    }
    Ok(out)
}
