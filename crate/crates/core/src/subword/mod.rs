//! Byte-pair encoding, segmentations with subword→word alignment, token
//! vocabularies, and merging of subword attention back to word level.

mod bpe;
mod merge;
mod vocab;

pub use bpe::{
    join_subwords, learn_bpe, MergeTable, Segmentation, TieBreak, CONTINUATION, END_OF_WORD,
};
pub use merge::merge_attention;
pub use vocab::{Vocabulary, BOS, EOS, UNK};
