//! Sense-annotated parallel data: the synthetic generator, the annotated TSV
//! format, probe instances and sentence-grouped splits.

mod instances;
mod synth;
mod tsv;
mod types;

pub use instances::{
    empirical_mfs_accuracy, make_probe_instances, mfs_ceiling, sentences_of, split_dataset,
    DatasetSplit, Locator, ProbeInstance, RnnMode, Side,
};
pub use synth::{cue_sense_table, generate_synthetic, SynthConfig};
pub use tsv::{format_annotated, parse_annotated};
pub use types::{
    is_noun_tag, AlignmentLink, Ambiguity, AmbiguityRecord, AnnotatedCorpus, Candidate,
    ParallelSentence, Span,
};
