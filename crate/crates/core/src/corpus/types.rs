use crate::error::{bail, Result};
use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn single(i: usize) -> Self {
        Span {
            start: i,
            end: i + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.start..self.end
    }

    pub fn contains(&self, i: usize) -> bool {
        self.start <= i && i < self.end
    }
}

/// Source token `source` translates to target tokens `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentLink {
    pub source: usize,
    pub target: Span,
}

/// One occurrence of an ambiguous word inside a sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambiguity {
    pub span: Span,
    /// Index of the correct candidate in the matching [`AmbiguityRecord`].
    pub sense: usize,
    /// Source position of the word that determines the sense, when known.
    pub cue: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelSentence {
    pub id: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// One part-of-speech tag per source token.
    pub pos: Vec<String>,
    pub alignment: Vec<AlignmentLink>,
    pub ambiguities: Vec<Ambiguity>,
}

/// Nouns are recognised by the `NOUN` tag or any `NN*` tag.
pub fn is_noun_tag(tag: &str) -> bool {
    tag == "NOUN" || tag.starts_with("NN")
}

impl ParallelSentence {
    /// Target range aligned to the source span (hull of the aligned ranges).
    pub fn target_span(&self, span: Span) -> Option<Span> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for link in self.alignment.iter().filter(|l| span.contains(l.source)) {
            if !link.target.is_empty() {
                lo = lo.min(link.target.start);
                hi = hi.max(link.target.end);
            }
        }
        (lo < hi).then(|| Span::new(lo, hi))
    }

    pub fn noun_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.pos
            .iter()
            .enumerate()
            .filter(|(_, t)| is_noun_tag(t))
            .map(|(i, _)| i)
    }

    /// Check the structural invariants, returning a description of the first violation.
    pub fn validate(&self) -> core::result::Result<(), String> {
        let n = self.source.len();
        if n == 0 || self.target.is_empty() {
            return Err("empty source or target sentence".into());
        }
        if self.pos.len() != n {
            return Err(alloc::format!(
                "{} POS tags for {n} source tokens",
                self.pos.len()
            ));
        }
        for link in &self.alignment {
            if link.source >= n || link.target.end > self.target.len() || link.target.is_empty() {
                return Err(alloc::format!(
                    "alignment {}-{}:{} outside sentence",
                    link.source,
                    link.target.start,
                    link.target.end
                ));
            }
        }
        for a in &self.ambiguities {
            if a.span.is_empty() || a.span.end > n {
                return Err(alloc::format!(
                    "span {}:{} outside source of length {n}",
                    a.span.start,
                    a.span.end
                ));
            }
            if let Some(c) = a.cue {
                if c >= n {
                    return Err(alloc::format!("cue index {c} outside source of length {n}"));
                }
            }
            if self.target_span(a.span).is_none() {
                return Err(alloc::format!(
                    "span {}:{} has no aligned target tokens",
                    a.span.start,
                    a.span.end
                ));
            }
        }
        Ok(())
    }
}

/// A candidate translation (one or more target tokens).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub tokens: Vec<String>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguityRecord {
    /// Source form of the ambiguous word(s), space-joined.
    pub lemma: String,
    pub candidates: Vec<Candidate>,
    pub sentence_id: String,
    /// Position of the sentence in [`AnnotatedCorpus::sentences`].
    pub sentence_index: usize,
    pub span: Span,
}

impl AmbiguityRecord {
    pub fn validate(&self) -> Result<()> {
        if self.candidates.len() < 2 {
            bail!(
                Input,
                "{}: {} candidate(s), need at least 2",
                self.sentence_id,
                self.candidates.len()
            );
        }
        let correct = self.candidates.iter().filter(|c| c.correct).count();
        if correct != 1 {
            bail!(
                Input,
                "{}: {correct} candidates marked correct, need exactly 1",
                self.sentence_id
            );
        }
        Ok(())
    }

    pub fn correct_index(&self) -> usize {
        self.candidates.iter().position(|c| c.correct).unwrap_or(0)
    }
}

/// Sentences plus one record per ambiguous occurrence, in sentence order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedCorpus {
    pub sentences: Vec<ParallelSentence>,
    pub records: Vec<AmbiguityRecord>,
}

impl AnnotatedCorpus {
    pub fn ambiguous_sentence_count(&self) -> usize {
        self.sentences
            .iter()
            .filter(|s| !s.ambiguities.is_empty())
            .count()
    }
}
