// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use dmm_core::accountant::{adp_closed_form, cdp_to_adp};
use dmm_core::discretization::{randomized_round, FlattenSpec};
use dmm_core::factorization::{honaker_tree, prefix_workload, sensitivity, Matrix};
use dmm_core::field::{Fe, FieldSpec};
use dmm_core::resharing::{recover, reshare, ReshareBatch, ReshareMessage};
use dmm_core::sharing::PackedShamir;
use dmm_core::simulator::{
    plaintext_oracle, run_training, AdversarySpec, FactorizationSource, Layout, MeanEstimation, Mode,
    RandomDropouts, SimConfig,
};

/// `(n, t_c, k)` with `t_c + k <= n`.
fn scheme_params() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=12).prop_flat_map(|n| (Just(n), 0..n)).prop_flat_map(|(n, t_c)| (Just(n), Just(t_c), 1..=n - t_c))
}

fn elems(f: FieldSpec, raw: &[u64]) -> Vec<Fe> {
    raw.iter().map(|&v| f.elem(v % f.modulus())).collect()
}

/// Random subset of `0..n` of size at least `min`.
fn subset(n: usize, min: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(&mut rng);
    let size = rng.gen_range(min..=n);
    let mut s = all[..size].to_vec();
    s.sort_unstable();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signed_encoding_roundtrips(x in -(1i64 << 31)..(1i64 << 31)) {
        let f = FieldSpec::default();
        let e = f.encode_signed(x).unwrap();
        prop_assert_eq!(f.decode_signed(e), x);
    }

    #[test]
    fn field_inverses(a in 1u64..4_294_967_291, b in 0u64..4_294_967_291) {
        let f = FieldSpec::default();
        let (a, b) = (f.elem(a), f.elem(b));
        prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        prop_assert_eq!(f.add(b, f.neg(b)), Fe::ZERO);
    }

    #[test]
    fn sharing_roundtrip_any_quorum((n, t_c, k) in scheme_params(), raw in prop::collection::vec(any::<u64>(), 12), seed in any::<u64>()) {
        let f = FieldSpec::default();
        let scheme = PackedShamir::with_defaults(f, n, t_c, k).unwrap();
        let secrets = elems(f, &raw[..k]);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sh = scheme.share(&secrets, &mut rng).unwrap();
        let gamma = subset(n, t_c + k, seed);
        prop_assert_eq!(scheme.reconstruct_all(&sh.subset(&gamma)).unwrap(), secrets);
    }

    #[test]
    fn sharing_is_linear((n, t_c, k) in scheme_params(), raw in prop::collection::vec(any::<u64>(), 25), seed in any::<u64>()) {
        let f = FieldSpec::default();
        let scheme = PackedShamir::with_defaults(f, n, t_c, k).unwrap();
        let a = elems(f, &raw[..k]);
        let b = elems(f, &raw[12..12 + k]);
        let c = f.elem(raw[24] % f.modulus());
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sa = scheme.share(&a, &mut rng).unwrap();
        let sb = scheme.share(&b, &mut rng).unwrap();
        let sum = scheme.add(&scheme.scale(c, &sa), &sb);
        let want: Vec<Fe> = a.iter().zip(&b).map(|(x, y)| f.add(f.mul(c, *x), *y)).collect();
        prop_assert_eq!(scheme.reconstruct_all(&sum.all()).unwrap(), want);
    }

    #[test]
    fn too_few_shares_rejected((n, t_c, k) in scheme_params(), seed in any::<u64>()) {
        prop_assume!(t_c + k >= 2);
        let f = FieldSpec::default();
        let scheme = PackedShamir::with_defaults(f, n, t_c, k).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sh = scheme.share(&vec![Fe::ONE; k], &mut rng).unwrap();
        let gamma: Vec<usize> = subset(n, 0, seed).into_iter().take(t_c + k - 1).collect();
        prop_assert!(scheme.reconstruct_all(&sh.subset(&gamma)).is_err());
    }

    #[test]
    fn resharing_transposes((n, t_c, k) in scheme_params(), seed in any::<u64>()) {
        let f = FieldSpec::default();
        let scheme = PackedShamir::with_defaults(f, n, t_c, k).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let m: Vec<Vec<Fe>> = (0..k).map(|_| (0..k).map(|_| f.random(&mut rng)).collect()).collect();
        let rows: Vec<_> = m.iter().map(|r| scheme.share(r, &mut rng).unwrap()).collect();
        let alive = subset(n, t_c + k, seed ^ 1);
        let drop: BTreeSet<usize> = (0..n).filter(|i| !alive.contains(i)).collect();
        let sent: Vec<_> = (0..n)
            .map(|i| {
                let shares = rows.iter().map(|s| s.shares[i]).collect();
                reshare(&scheme, &ReshareBatch { source: i, batch: 0, shares }, &mut rng).unwrap()
            })
            .collect();
        let rec: Vec<Vec<Fe>> = (0..n)
            .map(|j| {
                let got: BTreeMap<usize, Fe> = (0..n).map(|i| (i, sent[i].shares[j])).collect();
                recover(&scheme, &drop, &got).unwrap().shares
            })
            .collect();
        for col in 0..k {
            let shares: BTreeMap<usize, Fe> = (0..n).map(|j| (j, rec[j][col])).collect();
            let want: Vec<Fe> = m.iter().map(|r| r[col]).collect();
            prop_assert_eq!(scheme.reconstruct_all(&shares).unwrap(), want);
        }
    }

    #[test]
    fn wire_message_roundtrips(source in any::<u16>(), batch in any::<u32>(), v in 0u64..4_294_967_291) {
        let f = FieldSpec::default();
        let m = ReshareMessage { source, batch, share: f.elem(v) };
        prop_assert_eq!(ReshareMessage::decode(&f, &m.encode()).unwrap(), m);
    }

    #[test]
    fn flatten_is_adjoint(dim in 1usize..300, seed in any::<u64>(), raw in prop::collection::vec(-1.0f64..1.0, 1024)) {
        let spec = FlattenSpec::new(dim, seed);
        let x = &raw[..dim];
        let y = &raw[dim..dim + spec.padded];
        let fx = spec.flatten(x).unwrap();
        let uy = spec.unflatten(y).unwrap();
        let lhs: f64 = fx.iter().zip(y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&uy).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-9);
        let back = spec.unflatten(&fx).unwrap();
        for (a, b) in back.iter().zip(x) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rounding_stays_between_neighbours(x in prop::collection::vec(-1e6f64..1e6, 1..50), seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        for (v, r) in x.iter().zip(randomized_round(&x, &mut rng)) {
            prop_assert!(r as f64 == v.floor() || r as f64 == v.ceil());
        }
    }

    #[test]
    fn conversion_below_closed_form(eps in 0.0f64..50.0, log_delta in -20.0f64..-1.0) {
        let delta = 10f64.powf(log_delta);
        let a = cdp_to_adp(eps, delta).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!(a <= adp_closed_form(eps, delta) * (1.0 + 1e-12) + 1e-12);
        prop_assert!(cdp_to_adp(eps * 1.1, delta).unwrap() >= a - 1e-9);
    }

    #[test]
    fn sensitivity_monotone_in_separation(rows in 1usize..6, cols in 1usize..9, raw in prop::collection::vec(0.0f64..3.0, 48)) {
        let data: Vec<Vec<f64>> = (0..rows).map(|r| raw[r * 8..r * 8 + cols].to_vec()).collect();
        let c = Matrix::from_rows(&data).unwrap();
        let max_col = (0..cols)
            .map(|j| (0..rows).map(|r| c[(r, j)] * c[(r, j)]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let mut prev = f64::INFINITY;
        for b in 1..=cols {
            let s = sensitivity(&c, b);
            prop_assert!(s <= prev + 1e-12);
            prop_assert!(s >= max_col - 1e-12);
            prev = s;
        }
        prop_assert!((sensitivity(&c, cols) - max_col).abs() < 1e-12);
    }
}

#[test]
fn honaker_factorizes_prefix() {
    for log in 0..8 {
        let t = 1 << log;
        let (b, c, sched) = honaker_tree(t).unwrap();
        let prod = b.matmul(&c).unwrap();
        assert_eq!(prod.max_abs_diff(&prefix_workload(t)).unwrap(), 0.0);
        assert!(sched.max_live() <= log.max(1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulator_matches_oracle(
        log_t in 0u32..4,
        dim in 1usize..40,
        full in any::<bool>(),
        per_iteration in 0usize..=2,
        seed in any::<u64>(),
    ) {
        let cfg = SimConfig {
            n: 16,
            t_c: 3,
            t_d: 2,
            mu: 1.0 / 6.0,
            k: None,
            iterations: 1 << log_t,
            dimension: dim,
            field: FieldSpec::default(),
            clip_norm: 1.0,
            granularity: 0.02,
            rounding_bias: 0.05,
            flatten_seed: seed,
            sigma: 0.1,
            factorization: FactorizationSource::Honaker,
            min_sep: 1,
            mode: if full { Mode::Full } else { Mode::Optimized },
            fixed_point_bits: 0,
            seed,
            universe: Some(40),
            dropouts: vec![],
            random_dropouts: Some(RandomDropouts { per_iteration, seed, round2_only: false }),
            adversary: AdversarySpec::default(),
        };
        let layout = Layout::new(cfg).unwrap();
        let mut p = MeanEstimation { center: vec![0.1; dim], spread: 0.3, seed };
        let run = run_training(layout.clone(), &mut p, None).unwrap();
        prop_assert_eq!(run.field_outputs, plaintext_oracle(&layout, &run.gradients).unwrap());
    }
}
