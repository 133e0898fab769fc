//! Turning a word-level annotated corpus into model inputs: a joint BPE
//! model, per-side vocabularies, segmentations and id sequences.

use crate::corpus::{AnnotatedCorpus, ParallelSentence, Span};
use crate::error::{bail, Result};
use crate::subword::{learn_bpe, MergeTable, Segmentation, TieBreak, Vocabulary};
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSentence {
    pub source: Segmentation,
    pub target: Segmentation,
    pub source_ids: Vec<usize>,
    pub target_ids: Vec<usize>,
}

impl EncodedSentence {
    /// Subword positions on the target side covered by a word-level span.
    pub fn target_subwords(&self, words: Span) -> core::ops::Range<usize> {
        self.target.subword_span(words.range())
    }

    pub fn source_subwords(&self, words: Span) -> core::ops::Range<usize> {
        self.source.subword_span(words.range())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCorpus {
    pub merges: MergeTable,
    pub source_vocab: Vocabulary,
    pub target_vocab: Vocabulary,
    /// Parallel to the corpus sentences.
    pub sentences: Vec<EncodedSentence>,
    /// Subword tokens that fell back to `<unk>` while encoding.
    pub unknown_tokens: usize,
}

impl PreparedCorpus {
    /// Learn a joint BPE model with `num_merges` merges over both sides of
    /// `corpus` and build vocabularies from the segmented text.
    pub fn learn(corpus: &AnnotatedCorpus, num_merges: usize) -> Result<Self> {
        if corpus.sentences.is_empty() {
            bail!(Input, "corpus has no sentences");
        }
        let mut joint: Vec<&[String]> = Vec::with_capacity(2 * corpus.sentences.len());
        for s in &corpus.sentences {
            joint.push(&s.source);
            joint.push(&s.target);
        }
        let merges = learn_bpe(&joint, num_merges, TieBreak::Lexicographic)?;
        let segs: Vec<(Segmentation, Segmentation)> = corpus
            .sentences
            .iter()
            .map(|s| (merges.apply(&s.source), merges.apply(&s.target)))
            .collect();
        let source_vocab = Vocabulary::build(segs.iter().map(|(s, _)| s.subwords.as_slice()));
        let target_vocab = Vocabulary::build(segs.iter().map(|(_, t)| t.subwords.as_slice()));
        Ok(Self::assemble(merges, source_vocab, target_vocab, segs))
    }

    /// Encode `sentences` with an existing BPE model and vocabularies.
    pub fn with_vocabularies(
        merges: MergeTable,
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        sentences: &[ParallelSentence],
    ) -> Self {
        let segs = sentences
            .iter()
            .map(|s| (merges.apply(&s.source), merges.apply(&s.target)))
            .collect();
        Self::assemble(merges, source_vocab, target_vocab, segs)
    }

    fn assemble(
        merges: MergeTable,
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        segs: Vec<(Segmentation, Segmentation)>,
    ) -> Self {
        let mut unknown_tokens = 0;
        let sentences = segs
            .into_iter()
            .map(|(source, target)| {
                let (source_ids, u1) = source_vocab.encode(&source.subwords);
                let (target_ids, u2) = target_vocab.encode(&target.subwords);
                unknown_tokens += u1 + u2;
                EncodedSentence {
                    source,
                    target,
                    source_ids,
                    target_ids,
                }
            })
            .collect();
        PreparedCorpus {
            merges,
            source_vocab,
            target_vocab,
            sentences,
            unknown_tokens,
        }
    }

    /// Training pairs (source ids, target ids).
    pub fn pairs(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        self.sentences
            .iter()
            .map(|s| (s.source_ids.clone(), s.target_ids.clone()))
            .collect()
    }

    /// Target-side subword ids of a word sequence (e.g. a candidate
    /// translation) and how many subwords were unknown.
    pub fn encode_target_words(&self, words: &[String]) -> (Vec<usize>, usize) {
        let seg = self.merges.apply(words);
        self.target_vocab.encode(&seg.subwords)
    }
}
