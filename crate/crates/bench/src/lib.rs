//! Synthetic fixtures shared by the benchmarks.

use affembed::{AffectLexicon, EmbeddingSet, Matrix, Ontology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` words of width `dim` with standard-uniform-ish components.
pub fn random_embeddings(n: usize, dim: usize, seed: u64) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let words = (0..n).map(|i| format!("w{i}")).collect();
    EmbeddingSet::new(words, Matrix::from_vec(n, dim, data).unwrap()).unwrap()
}

/// VAD scores for the first `n` words of [`random_embeddings`].
pub fn random_lexicon(n: usize, seed: u64) -> AffectLexicon {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AffectLexicon::vad((0..n).map(|i| {
        (
            format!("w{i}"),
            (0..3).map(|_| rng.gen_range(1.0..=9.0)).collect(),
        )
    }))
    .unwrap()
}

/// Random graph with about `degree` neighbors per word.
pub fn random_ontology(n: usize, degree: usize, seed: u64) -> Ontology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut onto = Ontology::new();
    for i in 0..n {
        for _ in 0..degree / 2 {
            let j = rng.gen_range(0..n);
            onto.add_edge(&format!("w{i}"), &format!("w{j}"));
        }
    }
    onto
}
