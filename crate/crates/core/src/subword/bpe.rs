use crate::error::{bail, Result};
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// End-of-word symbol appended to every word before learning or applying merges.
pub const END_OF_WORD: &str = "</w>";
/// Suffix marking a subword that is continued by the next one.
pub const CONTINUATION: &str = "@@";

/// How to order pairs of equal frequency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreak {
    /// The lexicographically smallest `(left, right)` pair wins.
    #[default]
    Lexicographic,
}

/// Learned merges in priority order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    ranks: BTreeMap<String, BTreeMap<String, usize>>,
}

impl MergeTable {
    pub fn from_pairs(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut ranks: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for (i, (a, b)) in pairs.iter().enumerate() {
            if ranks
                .entry(a.clone())
                .or_default()
                .insert(b.clone(), i)
                .is_some()
            {
                bail!(Input, "duplicate merge {a} {b}");
            }
        }
        Ok(MergeTable {
            merges: pairs,
            ranks,
        })
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    fn rank(&self, a: &str, b: &str) -> Option<usize> {
        self.ranks.get(a)?.get(b).copied()
    }

    /// Serialize as one merge per line, two space-separated symbols.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.merges {
            out.push_str(a);
            out.push(' ');
            out.push_str(b);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                    pairs.push((a.to_string(), b.to_string()))
                }
                _ => {
                    return Err(crate::Error::Parse {
                        line: i + 1,
                        column: 1,
                        message: alloc::format!(
                            "expected two space-separated symbols, got {line:?}"
                        ),
                    })
                }
            }
        }
        Self::from_pairs(pairs)
    }

    /// Split one word into subword symbols. The final symbol carries the
    /// end-of-word marker (possibly as a bare `</w>`).
    fn symbols(&self, word: &str) -> Vec<String> {
        let mut syms: Vec<String> = word.chars().map(|c| c.to_string()).collect();
        syms.push(END_OF_WORD.to_string());
        loop {
            let best = syms
                .windows(2)
                .enumerate()
                .filter_map(|(i, w)| self.rank(&w[0], &w[1]).map(|r| (r, i)))
                .min();
            let Some((rank, _)) = best else { break };
            let (a, b) = &self.merges[rank];
            let mut merged = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && &syms[i] == a && &syms[i + 1] == b {
                    let mut s = syms[i].clone();
                    s.push_str(&syms[i + 1]);
                    merged.push(s);
                    i += 2;
                } else {
                    merged.push(syms[i].clone());
                    i += 1;
                }
            }
            syms = merged;
        }
        syms
    }

    /// Segment a sentence of word tokens. Characters never seen while learning
    /// simply stay single-character subwords.
    pub fn apply(&self, words: &[String]) -> Segmentation {
        let mut subwords = Vec::new();
        let mut alignment = Vec::new();
        for (w, word) in words.iter().enumerate() {
            let mut syms = self.symbols(word);
            let last = syms.pop().expect("end-of-word symbol");
            let tail = last.strip_suffix(END_OF_WORD).unwrap_or(&last);
            if !tail.is_empty() {
                syms.push(tail.to_string());
            }
            if syms.is_empty() {
                // Only possible for an empty word.
                syms.push(String::new());
            }
            let n = syms.len();
            for (k, mut s) in syms.into_iter().enumerate() {
                if k + 1 < n {
                    s.push_str(CONTINUATION);
                }
                subwords.push(s);
                alignment.push(w);
            }
        }
        Segmentation {
            words: words.to_vec(),
            subwords,
            alignment,
        }
    }
}

/// Learn up to `num_merges` merges greedily by pair frequency over `corpus`
/// (sentences of word tokens; pass source and target sentences together for
/// a joint model).
pub fn learn_bpe<T, S>(corpus: &[T], num_merges: usize, tie_break: TieBreak) -> Result<MergeTable>
where
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let TieBreak::Lexicographic = tie_break;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for sentence in corpus {
        for w in sentence.as_ref() {
            *counts.entry(w.as_ref()).or_default() += 1;
        }
    }
    if counts.is_empty() {
        bail!(Input, "cannot learn BPE from an empty corpus");
    }
    let mut vocab: Vec<(Vec<String>, usize)> = counts
        .into_iter()
        .map(|(w, c)| {
            let mut syms: Vec<String> = w.chars().map(|ch| ch.to_string()).collect();
            syms.push(END_OF_WORD.to_string());
            (syms, c)
        })
        .collect();

    let mut merges = Vec::with_capacity(num_merges);
    for _ in 0..num_merges {
        let mut pairs: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for (syms, c) in &vocab {
            for w in syms.windows(2) {
                *pairs.entry((w[0].as_str(), w[1].as_str())).or_default() += c;
            }
        }
        // BTreeMap iterates in lexicographic pair order, so the first maximum wins ties.
        let mut best: Option<((&str, &str), usize)> = None;
        for (p, c) in pairs {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((p, c));
            }
        }
        let Some(((a, b), _)) = best else { break };
        let (a, b) = (a.to_string(), b.to_string());
        for (syms, _) in vocab.iter_mut() {
            let mut i = 0;
            while i + 1 < syms.len() {
                if syms[i] == a && syms[i + 1] == b {
                    let right = syms.remove(i + 1);
                    syms[i].push_str(&right);
                }
                i += 1;
            }
        }
        merges.push((a, b));
    }
    MergeTable::from_pairs(merges)
}

/// Word tokens, their subwords, and the subword→word alignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub words: Vec<String>,
    pub subwords: Vec<String>,
    pub alignment: Vec<usize>,
}

impl Segmentation {
    /// One subword per word.
    pub fn trivial(words: &[String]) -> Self {
        Segmentation {
            words: words.to_vec(),
            subwords: words.to_vec(),
            alignment: (0..words.len()).collect(),
        }
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    /// Subword positions belonging to word `w`.
    pub fn subwords_of(&self, w: usize) -> core::ops::Range<usize> {
        let start = self.alignment.partition_point(|&a| a < w);
        let end = self.alignment.partition_point(|&a| a <= w);
        start..end
    }

    /// Subword positions covering the word range `words`.
    pub fn subword_span(&self, words: core::ops::Range<usize>) -> core::ops::Range<usize> {
        let start = self.alignment.partition_point(|&a| a < words.start);
        let end = self.alignment.partition_point(|&a| a < words.end);
        start..end
    }

    /// Rebuild the word tokens from the subwords by stripping continuation markers.
    pub fn desegment(&self) -> Vec<String> {
        join_subwords(&self.subwords)
    }

    /// Alignment is total, non-decreasing, and covers every word.
    pub fn is_consistent(&self) -> bool {
        self.alignment.len() == self.subwords.len()
            && self
                .alignment
                .windows(2)
                .all(|w| w[0] <= w[1] && w[1] <= w[0] + 1)
            && self.alignment.first().is_none_or(|&a| a == 0)
            && self
                .alignment
                .last()
                .map_or(self.words.is_empty(), |&a| a + 1 == self.words.len())
    }
}

/// Join subword tokens back into words. A dangling continuation piece at
/// the end (possible in free decoding output) becomes a word of its own.
pub fn join_subwords<S: AsRef<str>>(subwords: &[S]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut current = String::new();
    for s in subwords {
        let s = s.as_ref();
        match s.strip_suffix(CONTINUATION) {
            Some(stem) => current.push_str(stem),
            None => {
                current.push_str(s);
                out.push(core::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}
