//! Term-frequency caption embedding and cosine similarity.

use serde::{Deserialize, Serialize};

use super::vocab::{caption_tokens, Vocabulary, STOP_TOKENS};

/// L2-normalized term-frequency vector over the vocabulary plus one shared
/// out-of-vocabulary component. All-zero is reserved for empty text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| *x == 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct Embedder {
    vocab: Vocabulary,
}

impl Embedder {
    pub fn new(vocab: &Vocabulary) -> Self {
        Self {
            vocab: vocab.clone(),
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let oov = self.vocab.len();
        let mut v = vec![0.0; self.dim()];
        for tok in caption_tokens(text) {
            if STOP_TOKENS.contains(&tok.as_str()) {
                continue;
            }
            let slot = self.vocab.dense_index(&tok).unwrap_or(oov);
            v[slot] += 1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        EmbeddingVector(v)
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        cosine_similarity(&self.embed(a), &self.embed(b))
    }
}

/// Cosine similarity in [-1, 1]; 0 when either vector is zero.
///
/// Panics if the dimensions differ.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    assert_eq!(a.dim(), b.dim(), "embedding dimensions differ");
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Cosine distance, `1 - similarity`.
pub fn cosine_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    1.0 - cosine_similarity(a, b)
}
