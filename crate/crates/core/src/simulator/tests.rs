use super::*;
use crate::field::FieldSpec;

pub(crate) fn base_config() -> SimConfig {
    SimConfig {
        n: 16,
        t_c: 3,
        t_d: 2,
        mu: 1.0 / 6.0,
        k: None,
        iterations: 8,
        dimension: 50,
        field: FieldSpec::default(),
        clip_norm: 1.0,
        granularity: 0.01,
        rounding_bias: 0.01,
        flatten_seed: 3,
        sigma: 0.05,
        factorization: FactorizationSource::Honaker,
        min_sep: 1,
        mode: Mode::Optimized,
        fixed_point_bits: 0,
        seed: 11,
        universe: None,
        dropouts: vec![],
        random_dropouts: None,
        adversary: AdversarySpec::default(),
    }
}

fn run(layout: &Layout, seed: u64) -> TrainingRun {
    let mut p = MeanEstimation {
        center: vec![0.05; 50],
        spread: 0.1,
        seed,
    };
    run_training(layout.clone(), &mut p, None).unwrap()
}

#[test]
fn layout_shapes() {
    let l = Layout::new(base_config()).unwrap();
    assert_eq!(l.k, 5);
    assert_eq!(l.padded, 64);
    assert_eq!(l.batches, 3);
    // Honaker tree over 8 leaves: one new node per iteration.
    for t in 0..8 {
        assert_eq!(l.born[t].len(), 2, "{:?}", l.born[t]);
    }
    assert!(l.reshared.iter().all(|r| r.len() <= 3));
}

#[test]
fn honest_run_matches_oracle() {
    for mode in [Mode::Optimized, Mode::Full] {
        let mut cfg = base_config();
        cfg.mode = mode;
        let l = Layout::new(cfg).unwrap();
        let r = run(&l, 5);
        let o = plaintext_oracle(&l, &r.gradients).unwrap();
        assert_eq!(r.field_outputs, o, "{mode:?}");
    }
}

#[test]
fn dropouts_match_oracle() {
    let mut cfg = base_config();
    cfg.dropouts = vec![
        DropoutEvent { iteration: 1, party: 4, round: 1 },
        DropoutEvent { iteration: 1, party: 9, round: 2 },
        DropoutEvent { iteration: 4, party: 0, round: 2 },
        DropoutEvent { iteration: 4, party: 15, round: 2 },
    ];
    cfg.random_dropouts = Some(RandomDropouts { per_iteration: 2, seed: 4, round2_only: false });
    let l = Layout::new(cfg).unwrap();
    assert!(l.drops.iter().all(|d| d.all().len() == 2));
    let r = run(&l, 5);
    assert_eq!(r.field_outputs, plaintext_oracle(&l, &r.gradients).unwrap());
}

#[test]
fn round2_dropouts_do_not_change_output() {
    let mut cfg = base_config();
    let honest = run(&Layout::new(cfg.clone()).unwrap(), 2);
    cfg.random_dropouts = Some(RandomDropouts { per_iteration: 2, seed: 9, round2_only: true });
    let dropped = run(&Layout::new(cfg).unwrap(), 2);
    assert_eq!(honest.field_outputs, dropped.field_outputs);
}

#[test]
fn transcript_counts() {
    let l = Layout::new(base_config()).unwrap();
    let r = run(&l, 1);
    for tr in &r.transcripts {
        assert_eq!(tr.rounds, 2);
        // Gradient and one noise vector: 2 items x 3 batches x 5 sharings x 16.
        assert_eq!(tr.round1_elements, 2 * 3 * 5 * 16 * 16);
        let per = tr.carried_items as u64 * 3 * 16 * 4;
        assert!(tr.reshare_payload_by_position.iter().all(|&b| b == per));
        assert_eq!(tr.reshare_wire_bytes, tr.reshare_messages * 10);
    }
    assert_eq!(r.transcripts.last().unwrap().carried_items, 0);
}

#[test]
fn deterministic() {
    let l = Layout::new(base_config()).unwrap();
    let a = run(&l, 1);
    let b = run(&l, 1);
    assert_eq!(a.transcripts, b.transcripts);
    let mut cfg = base_config();
    cfg.seed = 12;
    let c = run(&Layout::new(cfg).unwrap(), 1);
    assert_ne!(a.field_outputs, c.field_outputs);
}

#[test]
fn ledger_predicts_attack() {
    for mode in [Mode::Optimized, Mode::Full] {
        let mut cfg = base_config();
        cfg.mode = mode;
        cfg.dropouts = vec![
            DropoutEvent { iteration: 2, party: 1, round: 1 },
            DropoutEvent { iteration: 3, party: 7, round: 2 },
        ];
        let honest = Layout::new(cfg).unwrap();
        let adv = honest.with_adversary(random_adversary(&honest, 3, 40)).unwrap();
        let chi = attack_ledger(&adv).unwrap();
        for seed in [1, 2] {
            let h = run(&honest, seed);
            let a = run(&adv, seed);
            let f = honest.field;
            for t in 0..8 {
                let diff: Vec<_> = a.field_outputs[t]
                    .iter()
                    .zip(&h.field_outputs[t])
                    .map(|(x, y)| f.sub(*x, *y))
                    .collect();
                assert_eq!(diff, chi[t], "{mode:?} t={t}");
            }
        }
        assert!(chi.iter().any(|c| c.iter().any(|x| !x.is_zero())));
    }
}

#[test]
fn fixed_point_release() {
    let mut cfg = base_config();
    cfg.fixed_point_bits = 8;
    let l = Layout::new(cfg).unwrap();
    let r = run(&l, 1);
    assert_eq!(r.field_outputs, plaintext_oracle(&l, &r.gradients).unwrap());
    let plain = run(&Layout::new(base_config()).unwrap(), 1);
    for (a, b) in r.outputs.iter().zip(&plain.outputs) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn rejects_bad_configs() {
    let mut cfg = base_config();
    cfg.t_c = 4;
    assert!(matches!(Layout::new(cfg).unwrap_err(), crate::error::Error::ThresholdBudget { .. }));
    let mut cfg = base_config();
    cfg.dropouts = (0..3).map(|p| DropoutEvent { iteration: 0, party: p, round: 2 }).collect();
    assert!(Layout::new(cfg).is_err());
    let mut cfg = base_config();
    cfg.adversary.injections.push(Injection {
        iteration: 0,
        party: 0,
        batch: 0,
        target: Target::Output { sharing: 0 },
        value: 1,
    });
    assert!(Layout::new(cfg).is_err());
}
