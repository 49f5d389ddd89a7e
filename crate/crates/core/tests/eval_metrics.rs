#![allow(clippy::type_complexity)]

mod oracles;

use affembed::eval::{granular_noise_at_k, polarity_noise_at_k, NeighborIndex};
use affembed::{knn, noise_at_k, noise_curve, spearman, AffectLexicon, EmbeddingSet};
use oracles::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn set_from(rows: &[Vec<f64>]) -> EmbeddingSet {
    EmbeddingSet::from_pairs(
        rows.iter()
            .enumerate()
            .map(|(i, r)| (format!("w{i}"), r.clone())),
    )
    .unwrap()
}

#[test]
fn knn_matches_full_sort_on_ten_words() {
    let mut rng = rng(21);
    let rows = random_rows(&mut rng, 10, 4);
    let set = set_from(&rows);
    let all: Vec<usize> = (0..10).collect();
    for q in 0..10 {
        let got: Vec<usize> = knn(&set, &format!("w{q}"), 5, None)
            .unwrap()
            .iter()
            .map(|n| n.index)
            .collect();
        assert_eq!(got, knn_reference(&rows, q, 5, &all));
        assert!(!got.contains(&q));
    }
}

/// Vectors on a 6-word fixture with duplicates to force cosine ties.
fn six_word_fixture() -> (
    EmbeddingSet,
    AffectLexicon,
    Vec<Vec<f64>>,
    Vec<Option<Vec<f64>>>,
) {
    let rows = vec![
        vec![1.0, 0.0, 0.2],
        vec![0.9, 0.1, 0.2],
        vec![1.0, 0.0, 0.2],
        vec![-0.3, 1.0, 0.0],
        vec![0.0, 0.8, 0.5],
        vec![0.2, 0.2, 1.0],
    ];
    let affect = vec![
        Some(vec![7.5, 3.0, 5.0]),
        Some(vec![2.5, 6.0, 5.0]),
        Some(vec![5.0, 4.0, 6.5]),
        None,
        Some(vec![8.0, 5.0, 2.0]),
        Some(vec![3.5, 7.0, 4.0]),
    ];
    let set = set_from(&rows);
    let lex = AffectLexicon::vad(
        affect
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.clone().map(|a| (format!("w{i}"), a))),
    )
    .unwrap();
    (set, lex, rows, affect)
}

#[test]
fn noise_curve_matches_exhaustive_recount() {
    let (set, lex, rows, affect) = six_word_fixture();
    let curve = noise_curve(&set, &lex, &[], &[1, 2, 3]).unwrap();
    for report in &curve {
        assert_eq!(report.skipped, 0);
        for d in &report.dims {
            let (pn, gn, evaluated) = noise_reference(&rows, &affect, report.k, d.dim, 5.0);
            assert_eq!(report.evaluated, evaluated);
            assert_eq!(d.polarity_noise, pn, "k={} dim={}", report.k, d.dim);
            assert!((d.granular_noise - gn).abs() < 1e-12);
        }
        let single = noise_at_k(&set, &lex, report.k).unwrap();
        assert_eq!(&single, report);
        assert_eq!(
            polarity_noise_at_k(&set, &lex, report.k, 2).unwrap(),
            report.dims[2].polarity_noise
        );
        assert_eq!(
            granular_noise_at_k(&set, &lex, report.k, 2).unwrap(),
            report.dims[2].granular_noise
        );
    }
}

#[test]
fn single_polarity_has_no_polarity_noise() {
    let mut rng = rng(4);
    let rows = random_rows(&mut rng, 12, 3);
    let set = set_from(&rows);
    let lex = AffectLexicon::vad(
        (0..12).map(|i| (format!("w{i}"), vec![rng.gen_range(5.5..9.0), 5.0, 2.0])),
    )
    .unwrap();
    let r = noise_at_k(&set, &lex, 4).unwrap();
    assert!(r.dims.iter().all(|d| d.polarity_noise == 0.0));
    // all words share A and D, so their granular noise vanishes
    assert_eq!(r.dims[1].granular_noise, 0.0);
    assert_eq!(r.dims[2].granular_noise, 0.0);
}

#[test]
fn all_opposite_neighbors_give_full_polarity_noise() {
    let set = set_from(&[vec![1.0, 0.0], vec![1.0, 0.1], vec![1.0, -0.1]]);
    let lex = AffectLexicon::vad([
        ("w0".to_string(), vec![8.0, 5.0, 5.0]),
        ("w1".to_string(), vec![2.0, 5.0, 5.0]),
        ("w2".to_string(), vec![3.0, 5.0, 5.0]),
    ])
    .unwrap();
    let curve = noise_curve(&set, &lex, &[0], &[2]).unwrap();
    // w0 sees two negatives (1.0), w1 and w2 each see one of two (0.5)
    assert_eq!(curve[0].dims[0].polarity_noise, 2.0 / 3.0);
}

#[test]
fn affect_aligned_space_has_less_noise_than_shuffled() {
    let mut rng = rng(77);
    let n = 60;
    let affect: Vec<Vec<f64>> = (0..n).map(|_| random_vad(&mut rng)).collect();
    // geometry follows valence closely
    let aligned: Vec<Vec<f64>> = affect
        .iter()
        .map(|a| {
            vec![
                a[0] - 5.0 + rng.gen_range(-0.2..0.2),
                1.0,
                rng.gen_range(-0.2..0.2),
            ]
        })
        .collect();
    let mut shuffled = aligned.clone();
    shuffled.shuffle(&mut rng);
    let lex = AffectLexicon::vad(
        affect
            .iter()
            .enumerate()
            .map(|(i, a)| (format!("w{i}"), a.clone())),
    )
    .unwrap();
    let gn_aligned = granular_noise_at_k(&set_from(&aligned), &lex, 5, 0).unwrap();
    let gn_shuffled = granular_noise_at_k(&set_from(&shuffled), &lex, 5, 0).unwrap();
    assert!(gn_aligned < gn_shuffled, "{gn_aligned} vs {gn_shuffled}");
}

fn arb_rows(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_n, 1usize..5).prop_flat_map(|(n, d)| {
        prop::collection::vec(prop::collection::vec(-3i32..=3, d), n).prop_map(|rows| {
            rows.into_iter()
                .map(|r| r.into_iter().map(f64::from).collect())
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn knn_equals_brute_force(rows in arb_rows(50), k in 1usize..8, q_seed in any::<usize>()) {
        let set = set_from(&rows);
        let index = NeighborIndex::new(&set);
        let candidates = index.candidates(None);
        prop_assume!(!candidates.is_empty());
        let q = candidates[q_seed % candidates.len()];
        let got: Vec<usize> = knn(&set, &format!("w{q}"), k, None).unwrap().iter().map(|n| n.index).collect();
        prop_assert_eq!(got, knn_reference(&rows, q, k, &candidates));
    }

    #[test]
    fn spearman_matches_reference(
        xs in prop::collection::vec(0i32..6, 2..40),
        ys_seed in prop::collection::vec(0i32..6, 40),
    ) {
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let ys: Vec<f64> = ys_seed[..xs.len()].iter().map(|&v| f64::from(v)).collect();
        let distinct = |v: &[f64]| v.iter().any(|x| *x != v[0]);
        prop_assume!(distinct(&xs) && distinct(&ys));
        let rho = spearman(&xs, &ys).unwrap();
        prop_assert!((rho - spearman_reference(&xs, &ys)).abs() < 1e-12);
        prop_assert_eq!(rho, spearman(&ys, &xs).unwrap());
        prop_assert!((-1.0..=1.0).contains(&rho));
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x + 2.0).collect();
        prop_assert!((spearman(&cubed, &ys).unwrap() - rho).abs() < 1e-12);
    }

    #[test]
    fn noise_bounds(rows in arb_rows(20), seed in any::<u64>(), k in 1usize..6) {
        let mut rng = oracles::rng(seed);
        let lex = AffectLexicon::vad((0..rows.len()).filter(|_| rng.gen_bool(0.7)).map(|i| (format!("w{i}"), vec![5.0; 3])).collect::<Vec<_>>()).unwrap();
        let lex = if lex.is_empty() { lex } else {
            let words: Vec<String> = lex.words().to_vec();
            AffectLexicon::vad(words.into_iter().map(|w| (w, random_vad(&mut rng)))).unwrap()
        };
        let r = noise_at_k(&set_from(&rows), &lex, k).unwrap();
        for d in &r.dims {
            if r.evaluated > 0 {
                prop_assert!((0.0..=1.0).contains(&d.polarity_noise));
                prop_assert!((0.0..=8.0).contains(&d.granular_noise));
            }
        }
    }
}
