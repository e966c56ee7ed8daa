//! Attribute vocabulary shared by the world, the captioner and the aggregator.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VocabularyError {
    #[error("vocabulary has no categories")]
    NoCategories,
    #[error("vocabulary has no modifiers")]
    NoModifiers,
    #[error("token {0:?} appears more than once")]
    DuplicateToken(String),
    #[error("token {0:?} is not a single lowercase word")]
    InvalidToken(String),
    #[error("confusable group references unknown category {0:?}")]
    UnknownConfusable(String),
}

/// Role of a vocabulary token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Category,
    Modifier,
    /// View-dependent clutter term; never part of an object's intrinsic description.
    Context,
}

/// Tokens that carry no content in captions.
pub const STOP_TOKENS: [&str; 5] = ["a", "the", "with", "in", "on"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "VocabularyLists", into = "VocabularyLists")]
pub struct Vocabulary {
    categories: Vec<String>,
    modifiers: Vec<String>,
    context: Vec<String>,
    confusable: Vec<Vec<String>>,
    index: HashMap<String, (TokenKind, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyLists {
    categories: Vec<String>,
    modifiers: Vec<String>,
    #[serde(default)]
    context: Vec<String>,
    #[serde(default)]
    confusable: Vec<Vec<String>>,
}

impl TryFrom<VocabularyLists> for Vocabulary {
    type Error = VocabularyError;

    fn try_from(l: VocabularyLists) -> Result<Self, Self::Error> {
        Vocabulary::new(l.categories, l.modifiers, l.context, l.confusable)
    }
}

impl From<Vocabulary> for VocabularyLists {
    fn from(v: Vocabulary) -> Self {
        VocabularyLists {
            categories: v.categories,
            modifiers: v.modifiers,
            context: v.context,
            confusable: v.confusable,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.categories == other.categories
            && self.modifiers == other.modifiers
            && self.context == other.context
            && self.confusable == other.confusable
    }
}

fn valid_token(t: &str) -> bool {
    !t.is_empty()
        && t.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
        && !STOP_TOKENS.contains(&t)
}

impl Vocabulary {
    pub fn new(
        categories: Vec<String>,
        modifiers: Vec<String>,
        context: Vec<String>,
        confusable: Vec<Vec<String>>,
    ) -> Result<Self, VocabularyError> {
        if categories.is_empty() {
            return Err(VocabularyError::NoCategories);
        }
        if modifiers.is_empty() {
            return Err(VocabularyError::NoModifiers);
        }
        let mut index = HashMap::new();
        for (kind, list) in [
            (TokenKind::Category, &categories),
            (TokenKind::Modifier, &modifiers),
            (TokenKind::Context, &context),
        ] {
            for (i, tok) in list.iter().enumerate() {
                if !valid_token(tok) {
                    return Err(VocabularyError::InvalidToken(tok.clone()));
                }
                if index.insert(tok.clone(), (kind, i)).is_some() {
                    return Err(VocabularyError::DuplicateToken(tok.clone()));
                }
            }
        }
        for group in &confusable {
            for tok in group {
                if !matches!(index.get(tok), Some((TokenKind::Category, _))) {
                    return Err(VocabularyError::UnknownConfusable(tok.clone()));
                }
            }
        }
        Ok(Self {
            categories,
            modifiers,
            context,
            confusable,
            index,
        })
    }

    /// Indoor household vocabulary used when a world spec does not supply one.
    pub fn indoor() -> Self {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self::new(
            s(&[
                "couch", "armchair", "bed", "table", "desk", "chair", "stool", "lamp", "shelf",
                "cabinet", "plant", "television", "monitor", "sink", "toilet", "refrigerator",
            ]),
            s(&[
                "black", "white", "gray", "brown", "red", "blue", "green", "yellow", "wooden",
                "leather", "metal", "fabric", "glass", "plastic", "small", "large", "round",
                "striped",
            ]),
            s(&["pillow", "wall", "window", "corner", "doorway", "rug", "shadow", "background"]),
            vec![
                s(&["couch", "armchair", "bed"]),
                s(&["table", "desk"]),
                s(&["chair", "stool"]),
                s(&["shelf", "cabinet"]),
                s(&["television", "monitor"]),
            ],
        )
        .expect("built-in vocabulary is valid")
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn modifiers(&self) -> &[String] {
        &self.modifiers
    }

    pub fn context(&self) -> &[String] {
        &self.context
    }

    pub fn confusable_groups(&self) -> &[Vec<String>] {
        &self.confusable
    }

    pub fn kind_of(&self, token: &str) -> Option<TokenKind> {
        self.index.get(token).map(|(k, _)| *k)
    }

    /// Position of a token inside its own list (canonical vocabulary order).
    pub fn position(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|(_, i)| *i)
    }

    /// Categories a captioner may confuse `category` with (excluding itself).
    pub fn confusable_with(&self, category: &str) -> Vec<&str> {
        self.confusable
            .iter()
            .filter(|g| g.iter().any(|c| c == category))
            .flat_map(|g| g.iter())
            .filter(|c| *c != category)
            .map(String::as_str)
            .collect()
    }

    /// Total number of distinct content tokens.
    pub fn len(&self) -> usize {
        self.categories.len() + self.modifiers.len() + self.context.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dense index over categories, then modifiers, then context tokens.
    pub fn dense_index(&self, token: &str) -> Option<usize> {
        self.index.get(token).map(|(k, i)| match k {
            TokenKind::Category => *i,
            TokenKind::Modifier => self.categories.len() + i,
            TokenKind::Context => self.categories.len() + self.modifiers.len() + i,
        })
    }
}

/// Splits caption text into lowercase content-bearing tokens.
///
/// Punctuation around words is stripped; stop tokens are kept so callers can
/// decide what to drop.
pub fn caption_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric() && c != '-')
                .to_ascii_lowercase()
        })
        .filter(|w| !w.is_empty())
}

/// Latent description of an object, or a noisy realization of it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSet {
    pub category: String,
    pub modifiers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub context: Vec<String>,
}

impl AttributeSet {
    pub fn new(category: impl Into<String>, modifiers: Vec<String>) -> Self {
        Self {
            category: category.into(),
            modifiers,
            context: Vec::new(),
        }
    }

    /// Templated caption text: `a <modifiers> <category>[ with <context>]*`.
    pub fn render(&self) -> String {
        let mut out = String::from("a");
        for m in &self.modifiers {
            out.push(' ');
            out.push_str(m);
        }
        out.push(' ');
        out.push_str(&self.category);
        for c in &self.context {
            out.push_str(" with ");
            out.push_str(c);
        }
        out
    }

    /// Reads a templated caption back into attributes by exact token matching.
    /// Out-of-vocabulary and stop tokens are ignored; the first category token wins.
    pub fn parse(text: &str, vocab: &Vocabulary) -> Option<Self> {
        let mut category = None;
        let mut modifiers = Vec::new();
        let mut context = Vec::new();
        for tok in caption_tokens(text) {
            match vocab.kind_of(&tok) {
                Some(TokenKind::Category) if category.is_none() => category = Some(tok),
                Some(TokenKind::Modifier) if !modifiers.contains(&tok) => modifiers.push(tok),
                Some(TokenKind::Context) if !context.contains(&tok) => context.push(tok),
                _ => {}
            }
        }
        category.map(|category| Self {
            category,
            modifiers,
            context,
        })
    }

    /// Content tokens scored by attribute precision/recall: category plus modifiers.
    pub fn content_tokens(&self) -> Vec<&str> {
        std::iter::once(self.category.as_str())
            .chain(self.modifiers.iter().map(String::as_str))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indoor_vocab_roundtrips_through_serde() {
        let v = Vocabulary::indoor();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(v, back);
        assert_eq!(back.kind_of("couch"), Some(TokenKind::Category));
        assert_eq!(back.kind_of("pillow"), Some(TokenKind::Context));
    }

    #[test]
    fn rejects_duplicates_and_stop_tokens() {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            Vocabulary::new(s(&["couch"]), s(&["couch"]), vec![], vec![]).unwrap_err(),
            VocabularyError::DuplicateToken("couch".into())
        );
        assert_eq!(
            Vocabulary::new(s(&["couch"]), s(&["the"]), vec![], vec![]).unwrap_err(),
            VocabularyError::InvalidToken("the".into())
        );
        assert_eq!(
            Vocabulary::new(s(&["couch"]), s(&["red"]), vec![], vec![s(&["sofa"])]).unwrap_err(),
            VocabularyError::UnknownConfusable("sofa".into())
        );
    }

    #[test]
    fn render_and_parse() {
        let v = Vocabulary::indoor();
        let mut a = AttributeSet::new("couch", vec!["black".into(), "leather".into()]);
        a.context.push("pillow".into());
        assert_eq!(a.render(), "a black leather couch with pillow");
        assert_eq!(AttributeSet::parse(&a.render(), &v), Some(a));
        assert_eq!(AttributeSet::parse("a nice thing", &v), None);
    }

    #[test]
    fn confusables() {
        let v = Vocabulary::indoor();
        assert_eq!(v.confusable_with("couch"), vec!["armchair", "bed"]);
        assert!(v.confusable_with("lamp").is_empty());
    }
}
