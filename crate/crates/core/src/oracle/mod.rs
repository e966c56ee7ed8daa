//! Stand-ins for the learned perception stack: a stochastic captioner whose
//! error rate depends on the viewing geometry, and a term-frequency text
//! embedding used for every similarity computation.

mod caption;
mod embed;
mod vocab;

pub use caption::{caption_object, corrupt_attributes, Caption, NoiseModel, ViewGeometry};
pub use embed::{cosine_distance, cosine_similarity, Embedder, EmbeddingVector};
pub use vocab::{caption_tokens, AttributeSet, TokenKind, Vocabulary, VocabularyError, STOP_TOKENS};
