use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

pub const UNK: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;

const SPECIALS: [&str; 3] = ["<unk>", "<s>", "</s>"];

/// Token ↔ id mapping with `<unk>`, `<s>`, `</s>` at ids 0, 1, 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        Self::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Specials followed by the distinct tokens of `sentences` in sorted order.
    pub fn build<'a, I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut seen: BTreeMap<String, ()> = BTreeMap::new();
        for s in sentences {
            for t in s {
                seen.insert(t.as_ref().to_string(), ());
            }
        }
        let tokens = SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(seen.into_keys().filter(|t| !SPECIALS.contains(&t.as_str())))
            .collect();
        Self::from_tokens(tokens)
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Ids for `tokens`, unknown tokens mapped to [`UNK`]; also returns how many were unknown.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<usize>, usize) {
        let mut unknown = 0;
        let ids = tokens
            .iter()
            .map(|t| {
                self.id(t.as_ref()).unwrap_or_else(|| {
                    unknown += 1;
                    UNK
                })
            })
            .collect();
        (ids, unknown)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(SPECIALS[UNK], String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
