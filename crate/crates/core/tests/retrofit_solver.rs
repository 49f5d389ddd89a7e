mod oracles;

use affembed::lexicon::Scale;
use affembed::retrofit::{cstrength, istrength, objective};
use affembed::{
    retrofit, AffectLexicon, BetaRule, EmbeddingSet, Ontology, RetrofitConfig, Retrofitter,
    Strength,
};
use oracles::cases::*;
use oracles::*;
use proptest::prelude::*;

#[test]
fn sweep_limit_matches_linear_solve() {
    for seed in 0..30 {
        let inst = random_instance(seed);
        for cfg in all_configs() {
            let got = retrofit(&inst.set, &inst.onto, Some(&inst.lex), cfg).unwrap();
            let q_hat: Vec<Vec<f64>> = inst.set.matrix().iter_rows().map(<[f64]>::to_vec).collect();
            let want = retrofit_fixed_point(&q_hat, &reference_weights(&inst, &cfg), cfg.alpha);
            for (g, w) in got.matrix().iter_rows().zip(&want) {
                for (a, b) in g.iter().zip(w) {
                    assert!((a - b).abs() < 1e-6, "seed {seed} {cfg:?}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn objective_never_increases() {
    for seed in 100..130 {
        let inst = random_instance(seed);
        for cfg in all_configs() {
            let mut r = Retrofitter::new(&inst.set, &inst.onto, Some(&inst.lex), cfg).unwrap();
            let mut prev = r.objective();
            for _ in 0..30 {
                r.sweep();
                let now = r.objective();
                assert!(now <= prev + 1e-9, "seed {seed} {cfg:?}: {now} > {prev}");
                prev = now;
            }
        }
    }
}

#[test]
fn converged_rows_satisfy_update() {
    let inst = random_instance(7);
    let cfg = RetrofitConfig {
        iterations: 10_000,
        convergence_tol: Some(1e-10),
        ..Default::default()
    };
    let out = Retrofitter::new(&inst.set, &inst.onto, None, cfg)
        .unwrap()
        .run()
        .unwrap();
    assert!(out.converged);
    let weights = reference_weights(&inst, &cfg);
    let q = out.embeddings.matrix();
    for (i, nbrs) in weights.iter().enumerate() {
        if nbrs.is_empty() {
            assert_eq!(q.row(i), inst.set.row(i));
            continue;
        }
        let total: f64 = cfg.alpha + nbrs.iter().map(|n| n.1).sum::<f64>();
        for k in 0..q.cols() {
            let num: f64 = nbrs.iter().map(|&(j, b)| b * q.get(j, k)).sum::<f64>()
                + cfg.alpha * inst.set.row(i)[k];
            assert!((q.get(i, k) - num / total).abs() < 1e-9);
        }
    }
}

#[test]
fn huge_alpha_anchors_vectors() {
    let inst = random_instance(3);
    let cfg = RetrofitConfig {
        alpha: 1e6,
        beta: BetaRule::Constant(1.0),
        ..Default::default()
    };
    let out = retrofit(&inst.set, &inst.onto, None, cfg).unwrap();
    for (a, b) in out.matrix().iter_rows().zip(inst.set.matrix().iter_rows()) {
        let diff: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        let base: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff <= 1e-4 * base.max(1e-12));
    }
}

#[test]
fn shared_affect_vector_is_neutral_multiplier() {
    let inst = random_instance(11);
    let same = AffectLexicon::vad(
        inst.set
            .words()
            .iter()
            .map(|w| (w.clone(), vec![3.2, 6.1, 4.4])),
    )
    .unwrap();
    let plain = retrofit(&inst.set, &inst.onto, None, RetrofitConfig::default()).unwrap();
    let cfg = RetrofitConfig {
        strength: Strength::Combined,
        ..Default::default()
    };
    let weighted = retrofit(&inst.set, &inst.onto, Some(&same), cfg).unwrap();
    for (a, b) in plain
        .matrix()
        .as_slice()
        .iter()
        .zip(weighted.matrix().as_slice())
    {
        assert!((a - b).abs() <= 1e-12);
    }
}

#[test]
fn objective_matches_hand_value() {
    let set = EmbeddingSet::from_pairs([("x", [0.0]), ("y", [2.0])]).unwrap();
    let onto = Ontology::from_edges([("x", "y")]);
    let cfg = RetrofitConfig {
        beta: BetaRule::Constant(1.0),
        ..Default::default()
    };
    assert_eq!(objective(&set, &set, &onto, None, &cfg).unwrap(), 4.0);
    let other = EmbeddingSet::from_pairs([("x", [0.0]), ("z", [2.0])]).unwrap();
    assert!(objective(&set, &other, &onto, None, &cfg).is_err());
}

proptest! {
    #[test]
    fn strengths_symmetric_and_bounded(
        a in prop::collection::vec(1.0f64..=9.0, 3),
        b in prop::collection::vec(1.0f64..=9.0, 3),
    ) {
        let s = Scale::VAD;
        let (c1, c2) = (cstrength(&a, &b, s), cstrength(&b, &a, s));
        let (i1, i2) = (istrength(&a, &b, s), istrength(&b, &a, s));
        prop_assert_eq!(c1, c2);
        prop_assert_eq!(i1, i2);
        prop_assert!((-1e-15..=1.0).contains(&c1));
        prop_assert!((0.0..=3.0).contains(&i1));
    }
}
