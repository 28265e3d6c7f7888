// SPDX-License-Identifier: Apache-2.0

//! Predicts the exact additive error an adversary's injections cause in the
//! released values. Everything in the protocol is linear, so the error
//! travels on its own: each table below holds only the error part of the
//! corresponding share table, and randomness cancels out.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::field::{Fe, FieldSpec};
use crate::sharing::lagrange_at;

use super::adversary::{Item, Target};
use super::config::Mode;
use super::layout::Layout;

/// Lagrange weights over `points` for each target.
fn weights(field: &FieldSpec, points: &[Fe], targets: &[Fe]) -> Result<Vec<Vec<Fe>>> {
    targets.iter().map(|&x| lagrange_at(field, points, x)).collect()
}

/// Error added to the release at each iteration by the layout's adversary.
/// Cumulative in optimized mode, like the release itself.
pub fn attack_ledger(layout: &Layout) -> Result<Vec<Vec<Fe>>> {
    let f = layout.field;
    let p = layout.scheme.params();
    let (n, k, nb, t_c) = (layout.n, layout.k, layout.batches, p.t_c);

    // Resharing an error vector adds the shares of a polynomial that is zero
    // at the first t_c share points and carries the error at the secret
    // points.
    let anchors: Vec<Fe> = p
        .secret_points
        .iter()
        .chain(&p.share_points[..t_c])
        .copied()
        .collect();
    let spread = weights(&f, &anchors, &p.share_points)?;

    let mut in_flight: BTreeMap<Item, Vec<Fe>> = BTreeMap::new();
    let mut senders_prev: Vec<usize> = Vec::new();
    let mut total = vec![Fe::ZERO; layout.padded];
    let mut out = Vec::with_capacity(layout.iterations());
    let add = |v: &mut Fe, e: Fe| *v = f.add(*v, e);

    for t in 0..layout.iterations() {
        let drops = &layout.drops[t];
        let silent = drops.all();
        let live: Vec<usize> = (0..n).filter(|i| !silent.contains(i)).collect();
        let injections: Vec<_> = layout.cfg.adversary.injections_at(t).copied().collect();

        // Recovery of the previous committee's reshares.
        let mut held: BTreeMap<Item, Vec<Fe>> = BTreeMap::new();
        if !in_flight.is_empty() {
            let pts: Vec<Fe> = senders_prev.iter().map(|&s| p.share_points[s]).collect();
            let lam = weights(&f, &pts, &p.secret_points)?;
            for (item, msgs) in std::mem::take(&mut in_flight) {
                let mut rec = vec![Fe::ZERO; layout.table_len()];
                for j in 0..n {
                    for b in 0..nb {
                        for m in 0..k {
                            let mut acc = Fe::ZERO;
                            for (pos, &s) in senders_prev.iter().enumerate() {
                                acc = f.mul_add(acc, lam[m][pos], msgs[(s * nb + b) * n + j]);
                            }
                            rec[layout.idx(j, b, m)] = acc;
                        }
                    }
                }
                held.insert(item, rec);
            }
        }
        for inj in &injections {
            if let Target::Fresh { item, sharing, recipient } = inj.target {
                if !drops.round1.contains(&inj.party) {
                    let tab = held.entry(item).or_insert_with(|| vec![Fe::ZERO; layout.table_len()]);
                    add(&mut tab[layout.idx(recipient, inj.batch, sharing)], f.elem_i64(inj.value));
                }
            }
        }
        let err = held;

        // Output share errors.
        let mut ey = vec![Fe::ZERO; layout.table_len()];
        for &(item, c) in &layout.release[t] {
            if let Some(tab) = err.get(&item) {
                let c = f.elem_i64(c);
                for &j in &live {
                    for b in 0..nb {
                        for l in 0..k {
                            let ix = layout.idx(j, b, l);
                            ey[ix] = f.mul_add(ey[ix], c, tab[ix]);
                        }
                    }
                }
            }
        }
        for inj in &injections {
            if let Target::Output { sharing } = inj.target {
                add(&mut ey[layout.idx(inj.party, inj.batch, sharing)], f.elem_i64(inj.value));
            }
        }

        // Reshare of erroneous items, plus reshare injections.
        if t + 1 < layout.iterations() {
            for &item in &layout.reshared[t] {
                let mut msgs = vec![Fe::ZERO; n * nb * n];
                let mut touched = false;
                if let Some(tab) = err.get(&item) {
                    for &s in &live {
                        for b in 0..nb {
                            let e: Vec<Fe> = (0..k).map(|l| tab[layout.idx(s, b, l)]).collect();
                            if e.iter().all(|x| x.is_zero()) {
                                continue;
                            }
                            touched = true;
                            let anchor_vals: Vec<Fe> =
                                e.iter().copied().chain(std::iter::repeat(Fe::ZERO).take(t_c)).collect();
                            for r in 0..n {
                                msgs[(s * nb + b) * n + r] = f.dot(&spread[r], &anchor_vals);
                            }
                        }
                    }
                }
                for inj in &injections {
                    if let Target::Reshare { item: it, recipient } = inj.target {
                        if it == item {
                            touched = true;
                            add(&mut msgs[(inj.party * nb + inj.batch) * n + recipient], f.elem_i64(inj.value));
                        }
                    }
                }
                if touched {
                    in_flight.insert(item, msgs);
                }
            }
        }
        senders_prev = live.clone();

        // What the server's reconstruction makes of the output errors.
        let pts: Vec<Fe> = live.iter().map(|&j| p.share_points[j]).collect();
        let lam = weights(&f, &pts, &p.secret_points)?;
        let mut chi = vec![Fe::ZERO; layout.padded];
        for b in 0..nb {
            for l in 0..k {
                for m in 0..k {
                    if let Some(c) = layout.coord(t, b, l, m) {
                        let mut acc = Fe::ZERO;
                        for (pos, &j) in live.iter().enumerate() {
                            acc = f.mul_add(acc, lam[m][pos], ey[layout.idx(j, b, l)]);
                        }
                        chi[c] = acc;
                    }
                }
            }
        }
        match layout.cfg.mode {
            Mode::Full => out.push(chi),
            Mode::Optimized => {
                for (a, c) in total.iter_mut().zip(&chi) {
                    *a = f.add(*a, *c);
                }
                out.push(total.clone());
            }
        }
    }
    Ok(out)
}
