// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Fe;
use crate::resharing::{surviving_sources, RESHARE_WIRE_LEN};

use super::adversary::{Item, Target};
use super::config::Mode;
use super::layout::{Layout, PURPOSE_RESHARE, PURPOSE_SHARE};

/// What one iteration put on the wire, and what the server released.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationTranscript {
    pub iteration: usize,
    /// Client ids of the committee, by position.
    pub committee: Vec<usize>,
    pub dropped_round1: Vec<usize>,
    pub dropped_round2: Vec<usize>,
    pub corrupted: Vec<usize>,
    pub injections: usize,
    /// Communication rounds used by the committee.
    pub rounds: u8,
    /// Field elements sent in round 1 (fresh shares).
    pub round1_elements: u64,
    /// Field elements sent in round 2 (output shares and reshares).
    pub round2_elements: u64,
    pub fresh_share_bytes: u64,
    pub output_share_bytes: u64,
    /// Reshare field elements only, summed over senders.
    pub reshare_payload_bytes: u64,
    /// Encoded reshare messages including headers.
    pub reshare_wire_bytes: u64,
    pub reshare_messages: u64,
    /// Reshare payload sent by each position (zero if it dropped).
    pub reshare_payload_by_position: Vec<u64>,
    /// Items carried to the next committee.
    pub carried_items: usize,
    /// FNV-1a digest of the released field vector.
    pub output_digest: String,
}

#[derive(Clone, Debug)]
pub struct IterationOutput {
    /// Released value on the padded grid, in the field.
    pub field_output: Vec<Fe>,
    /// Released value after post-processing.
    pub output: Vec<f64>,
    pub transcript: IterationTranscript,
}

/// Reshares in flight: for each item, `[source][batch][recipient]`.
#[derive(Clone, Debug, Default)]
struct InFlight {
    senders: BTreeSet<usize>,
    items: BTreeMap<Item, Vec<Fe>>,
}

pub fn fnv1a(values: &[Fe]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for byte in (v.value() as u32).to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Runs the committees one iteration at a time.
#[derive(Clone, Debug)]
pub struct Simulator {
    layout: Arc<Layout>,
    t: usize,
    in_flight: InFlight,
    prev_drop: BTreeSet<usize>,
    accum: Vec<Fe>,
}

impl Simulator {
    pub fn new(layout: Layout) -> Self {
        Self::from_arc(Arc::new(layout))
    }

    pub fn from_arc(layout: Arc<Layout>) -> Self {
        let padded = layout.padded;
        Simulator {
            layout,
            t: 0,
            in_flight: InFlight::default(),
            prev_drop: BTreeSet::new(),
            accum: vec![Fe::ZERO; padded],
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn iteration(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.layout.iterations()
    }

    /// Runs the next iteration. `gradients[i]` is the raw gradient of
    /// committee position `i`; entries of round-1 dropouts are ignored.
    pub fn run_iteration(&mut self, gradients: &[Vec<f64>]) -> Result<IterationOutput> {
        let lay = self.layout.clone();
        let t = self.t;
        if t >= lay.iterations() {
            return Err(Error::Config("all iterations have run".into()));
        }
        let (n, k, nb) = (lay.n, lay.k, lay.batches);
        if gradients.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: gradients.len(),
            });
        }
        let field = lay.field;
        let bw = field.byte_width() as u64;
        let drops = &lay.drops[t];
        let silent = drops.all();
        let injections: Vec<_> = lay.cfg.adversary.injections_at(t).copied().collect();

        // Round 1: fresh sharings of the gradient and new noise.
        let mut held: BTreeMap<Item, Vec<Fe>> = lay.born[t]
            .iter()
            .map(|&item| (item, vec![Fe::ZERO; lay.table_len()]))
            .collect();
        let mut round1_elements = 0u64;
        let mut shares = vec![Fe::ZERO; n];
        let t_c = lay.cfg.t_c;
        for i in (0..n).filter(|i| !drops.round1.contains(i)) {
            let inputs = lay.client_inputs(t, i, &gradients[i])?;
            let mut rng = lay.rng(t, lay.client_id(t, i), PURPOSE_SHARE);
            for (item, values) in inputs.items(t) {
                let values: Vec<Fe> = values.iter().map(|&v| field.elem_i64(v)).collect();
                let agg = held.get_mut(&item).expect("born item");
                for b in 0..nb {
                    for l in 0..k {
                        let secrets = lay.pack(&values, t, b, l);
                        let r: Vec<Fe> = (0..t_c).map(|_| field.random(&mut rng)).collect();
                        lay.scheme.share_into(&secrets, &r, &mut shares)?;
                        for (j, &s) in shares.iter().enumerate() {
                            let e = &mut agg[lay.idx(j, b, l)];
                            *e = field.add(*e, s);
                        }
                        round1_elements += n as u64;
                    }
                }
            }
        }
        for inj in &injections {
            if let Target::Fresh { item, sharing, recipient } = inj.target {
                if drops.round1.contains(&inj.party) {
                    continue;
                }
                let e = &mut held.get_mut(&item).expect("validated")[lay.idx(recipient, inj.batch, sharing)];
                *e = field.add(*e, field.elem_i64(inj.value));
            }
        }

        // Round 2, local part: recover what the previous committee reshared.
        let live: Vec<usize> = (0..n).filter(|i| !silent.contains(i)).collect();
        if t > 0 {
            let flight = std::mem::take(&mut self.in_flight);
            if !flight.items.is_empty() {
                let gamma = surviving_sources(&lay.scheme, &self.prev_drop, flight.senders.iter().copied())?;
                let coeffs = lay.scheme.recons_coeffs(&gamma)?;
                let mut vals = vec![Fe::ZERO; gamma.len()];
                for (item, msgs) in flight.items {
                    let mut rec = vec![Fe::ZERO; lay.table_len()];
                    for &j in &live {
                        for b in 0..nb {
                            for (v, &s) in vals.iter_mut().zip(&gamma) {
                                *v = msgs[(s * nb + b) * n + j];
                            }
                            for m in 0..k {
                                rec[lay.idx(j, b, m)] = field.dot(&coeffs.rows[m], &vals);
                            }
                        }
                    }
                    held.insert(item, rec);
                }
            }
        }

        // Output shares.
        let coeffs: Vec<(Item, Fe)> = lay.release[t]
            .iter()
            .map(|&(item, c)| (item, field.elem_i64(c)))
            .collect();
        let mut y = vec![Fe::ZERO; lay.table_len()];
        for &j in &live {
            for b in 0..nb {
                for l in 0..k {
                    let ix = lay.idx(j, b, l);
                    let mut acc = Fe::ZERO;
                    for (item, c) in &coeffs {
                        let h = held.get(item).ok_or_else(|| {
                            Error::Config(format!("item {item:?} is not held at iteration {t}"))
                        })?;
                        acc = field.mul_add(acc, *c, h[ix]);
                    }
                    y[ix] = acc;
                }
            }
        }
        for inj in &injections {
            if let Target::Output { sharing } = inj.target {
                let e = &mut y[lay.idx(inj.party, inj.batch, sharing)];
                *e = field.add(*e, field.elem_i64(inj.value));
            }
        }
        let round2_outputs = (live.len() * nb * k) as u64;

        // Reshare carried items to the next committee.
        let mut flight = InFlight {
            senders: live.iter().copied().collect(),
            items: BTreeMap::new(),
        };
        let mut by_pos = vec![0u64; n];
        let mut reshare_elements = 0u64;
        if t + 1 < lay.iterations() {
            for &item in &lay.reshared[t] {
                let h = &held[&item];
                let mut msgs = vec![Fe::ZERO; n * nb * n];
                for &j in &live {
                    let mut rng = lay.rng(t, lay.client_id(t, j), PURPOSE_RESHARE);
                    for b in 0..nb {
                        let secrets = &h[lay.idx(j, b, 0)..lay.idx(j, b, 0) + k];
                        let r: Vec<Fe> = (0..t_c).map(|_| field.random(&mut rng)).collect();
                        let base = (j * nb + b) * n;
                        lay.scheme.share_into(secrets, &r, &mut msgs[base..base + n])?;
                        by_pos[j] += n as u64 * bw;
                        reshare_elements += n as u64;
                    }
                }
                for inj in &injections {
                    if let Target::Reshare { item: it, recipient } = inj.target {
                        if it == item {
                            let e = &mut msgs[(inj.party * nb + inj.batch) * n + recipient];
                            *e = field.add(*e, field.elem_i64(inj.value));
                        }
                    }
                }
                flight.items.insert(item, msgs);
            }
        }
        let carried = flight.items.len();
        self.in_flight = flight;
        self.prev_drop = silent.clone();

        // Server: reconstruct from the parties that sent output shares.
        let gamma = surviving_sources(&lay.scheme, &silent, 0..n)?;
        let rc = lay.scheme.recons_coeffs(&gamma)?;
        let mut release = vec![Fe::ZERO; lay.padded];
        let mut vals = vec![Fe::ZERO; gamma.len()];
        for b in 0..nb {
            for l in 0..k {
                for (v, &j) in vals.iter_mut().zip(&gamma) {
                    *v = y[lay.idx(j, b, l)];
                }
                for m in 0..k {
                    if let Some(c) = lay.coord(t, b, l, m) {
                        release[c] = field.dot(&rc.rows[m], &vals);
                    }
                }
            }
        }
        let field_output = match lay.cfg.mode {
            Mode::Full => release,
            Mode::Optimized => {
                for (a, r) in self.accum.iter_mut().zip(&release) {
                    *a = field.add(*a, *r);
                }
                self.accum.clone()
            }
        };
        let output = lay.postprocess(&field_output)?;

        let reshare_messages = reshare_elements;
        let transcript = IterationTranscript {
            iteration: t,
            committee: lay.committee(t),
            dropped_round1: drops.round1.iter().copied().collect(),
            dropped_round2: drops.round2.iter().copied().collect(),
            corrupted: lay.cfg.adversary.corrupted_at(t).into_iter().collect(),
            injections: injections.len(),
            rounds: 2,
            round1_elements,
            round2_elements: round2_outputs + reshare_elements,
            fresh_share_bytes: round1_elements * bw,
            output_share_bytes: round2_outputs * bw,
            reshare_payload_bytes: reshare_elements * bw,
            reshare_wire_bytes: reshare_messages * RESHARE_WIRE_LEN as u64,
            reshare_messages,
            reshare_payload_by_position: by_pos,
            carried_items: carried,
            output_digest: fnv1a(&field_output),
        };
        self.t += 1;
        Ok(IterationOutput {
            field_output,
            output,
            transcript,
        })
    }
}
