//! Randomized retrofitting instances shared by the solver tests.

use affembed::{AffectLexicon, BetaRule, EmbeddingSet, Ontology, RetrofitConfig, Strength};
use rand::Rng;

use super::*;

pub struct Instance {
    pub set: EmbeddingSet,
    pub onto: Ontology,
    pub lex: AffectLexicon,
}

pub fn random_instance(seed: u64) -> Instance {
    let mut rng = rng(seed);
    let n = rng.gen_range(2..=6);
    let d = rng.gen_range(1..=4);
    let rows = random_rows(&mut rng, n, d);
    let set = EmbeddingSet::from_pairs(
        rows.iter()
            .enumerate()
            .map(|(i, r)| (format!("w{i}"), r.clone())),
    )
    .unwrap();
    let mut onto = Ontology::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                onto.add_edge(&format!("w{i}"), &format!("w{j}"));
            }
        }
    }
    // an out-of-vocabulary neighbor that must be ignored
    onto.add_edge("w0", "ghost");
    let mut entries = Vec::new();
    for i in 0..n {
        if rng.gen_bool(0.8) {
            entries.push((format!("w{i}"), random_vad(&mut rng)));
        }
    }
    let lex = AffectLexicon::vad(entries).unwrap();
    Instance { set, onto, lex }
}

/// Edge weights written out from the definitions.
pub fn reference_weights(inst: &Instance, cfg: &RetrofitConfig) -> Vec<Vec<(usize, f64)>> {
    let words = inst.set.words();
    let affect = |w: &str| inst.lex.get(w).map(<[f64]>::to_vec).unwrap_or(vec![5.0; 3]);
    (0..words.len())
        .map(|i| {
            let nbrs: Vec<usize> = (0..words.len())
                .filter(|&j| inst.onto.has_edge(&words[i], &words[j]))
                .collect();
            let base = match cfg.beta {
                BetaRule::InverseDegree => 1.0 / nbrs.len() as f64,
                BetaRule::Constant(c) => c,
            };
            nbrs.into_iter()
                .map(|j| {
                    let (a, b) = (affect(&words[i]), affect(&words[j]));
                    let s = match cfg.strength {
                        Strength::None => 1.0,
                        Strength::Combined => {
                            1.0 - a
                                .iter()
                                .zip(&b)
                                .map(|(x, y)| (x - y).powi(2))
                                .sum::<f64>()
                                .sqrt()
                                / (3.0 * 64.0f64).sqrt()
                        }
                        Strength::Individual => a
                            .iter()
                            .zip(&b)
                            .map(|(x, y)| 1.0 - (x - y).abs() / 8.0)
                            .sum(),
                    };
                    (j, base * s)
                })
                .collect()
        })
        .collect()
}

pub fn all_configs() -> Vec<RetrofitConfig> {
    let mut out = Vec::new();
    for beta in [
        BetaRule::InverseDegree,
        BetaRule::Constant(1.0),
        BetaRule::Constant(0.4),
    ] {
        for strength in [Strength::None, Strength::Combined, Strength::Individual] {
            out.push(RetrofitConfig {
                beta,
                strength,
                iterations: 200,
                ..Default::default()
            });
        }
    }
    out
}
