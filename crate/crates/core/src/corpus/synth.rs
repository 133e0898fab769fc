//! Synthetic parallel corpus with planted ambiguous nouns.
//!
//! Two toy languages share a template grammar. Every source word has exactly
//! one translation except the ambiguous nouns, which have one translation
//! per sense. In an ambiguous sentence the sense is fixed by a single cue
//! word drawn from a set reserved for that (lemma, sense); no other cue word
//! appears in the sentence, so context determines the sense and nothing else
//! does. The target language places adjectives after the noun they precede
//! in the source, so alignments are not the identity.

use super::types::{
    AlignmentLink, Ambiguity, AmbiguityRecord, AnnotatedCorpus, Candidate, ParallelSentence, Span,
};
use crate::error::{bail, Result};
use crate::rng::{self, SeededRng};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_ambiguous_lemmas: usize,
    pub senses_per_lemma: usize,
    /// Probability of sense 0; the remaining senses share the rest evenly.
    pub sense_prior: f64,
    pub sentences: usize,
    /// Share of sentences that carry an ambiguous noun.
    pub ambiguous_fraction: f64,
    pub cues_per_sense: usize,
    pub ordinary_nouns: usize,
    pub verbs: usize,
    pub adjectives: usize,
    pub determiners: usize,
    pub prepositions: usize,
    /// Slot sequences over DET ADJ NOUN VERB PREP AMB CUE; exactly one AMB and one CUE each.
    pub ambiguous_templates: Vec<String>,
    /// Slot sequences without AMB or CUE.
    pub filler_templates: Vec<String>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_ambiguous_lemmas: 20,
            senses_per_lemma: 2,
            sense_prior: 0.7,
            sentences: 20_000,
            ambiguous_fraction: 0.1,
            cues_per_sense: 3,
            ordinary_nouns: 40,
            verbs: 16,
            adjectives: 16,
            determiners: 4,
            prepositions: 4,
            ambiguous_templates: [
                "DET CUE DET AMB VERB DET NOUN",
                "CUE DET ADJ AMB VERB",
                "DET ADJ NOUN CUE DET AMB",
                "DET AMB VERB DET ADJ NOUN PREP CUE",
                "DET NOUN VERB DET AMB PREP DET CUE",
                "DET CUE VERB PREP DET AMB",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            filler_templates: [
                "DET ADJ NOUN VERB DET NOUN",
                "DET NOUN VERB PREP DET ADJ NOUN",
                "DET NOUN VERB",
                "NOUN VERB DET NOUN PREP NOUN",
                "DET ADJ NOUN VERB PREP DET NOUN",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Det,
    Adj,
    Noun,
    Verb,
    Prep,
    Amb,
    Cue,
}

impl Slot {
    fn parse(s: &str) -> Option<Slot> {
        Some(match s {
            "DET" => Slot::Det,
            "ADJ" => Slot::Adj,
            "NOUN" => Slot::Noun,
            "VERB" => Slot::Verb,
            "PREP" => Slot::Prep,
            "AMB" => Slot::Amb,
            "CUE" => Slot::Cue,
            _ => return None,
        })
    }

    fn is_nominal(self) -> bool {
        matches!(self, Slot::Noun | Slot::Amb)
    }
}

fn parse_template(t: &str) -> Result<Vec<Slot>> {
    let slots: Option<Vec<Slot>> = t.split_whitespace().map(Slot::parse).collect();
    match slots {
        Some(s) if !s.is_empty() => Ok(s),
        _ => bail!(Config, "template {t:?} has an unknown or missing slot"),
    }
}

/// A source word with its fixed translation and tag.
#[derive(Debug, Clone)]
struct Entry {
    source: String,
    target: String,
    tag: &'static str,
}

struct Lexicon {
    determiners: Vec<Entry>,
    adjectives: Vec<Entry>,
    nouns: Vec<Entry>,
    verbs: Vec<Entry>,
    prepositions: Vec<Entry>,
    /// Per lemma: source form and one target form per sense.
    ambiguous: Vec<(String, Vec<String>)>,
    /// `cues[lemma][sense]` = cue entries.
    cues: Vec<Vec<Vec<Entry>>>,
}

const SOURCE_ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
];
const SOURCE_NUCLEI: &[&str] = &["a", "e", "i", "o", "u"];
const TARGET_ONSETS: &[&str] = &[
    "b", "c", "d", "h", "j", "l", "m", "n", "p", "r", "s", "t", "w", "y",
];
const TARGET_NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];

struct WordMaker<'a> {
    onsets: &'a [&'a str],
    nuclei: &'a [&'a str],
    used: BTreeSet<String>,
}

impl<'a> WordMaker<'a> {
    fn new(onsets: &'a [&'a str], nuclei: &'a [&'a str]) -> Self {
        WordMaker {
            onsets,
            nuclei,
            used: BTreeSet::new(),
        }
    }

    /// Distinct words that can be made with `syllables` syllables.
    fn capacity(&self, syllables: usize) -> usize {
        (self.onsets.len() * self.nuclei.len()).saturating_pow(syllables as u32)
    }

    fn make(&mut self, rng: &mut SeededRng, min_syl: usize, max_syl: usize) -> String {
        loop {
            let n = rng.gen_range(min_syl..=max_syl);
            let mut w = String::new();
            for _ in 0..n {
                w.push_str(self.onsets[rng.gen_range(0..self.onsets.len())]);
                w.push_str(self.nuclei[rng.gen_range(0..self.nuclei.len())]);
            }
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

impl Lexicon {
    fn build(cfg: &SynthConfig, rng: &mut SeededRng) -> Result<Self> {
        let mut src = WordMaker::new(SOURCE_ONSETS, SOURCE_NUCLEI);
        let mut tgt = WordMaker::new(TARGET_ONSETS, TARGET_NUCLEI);
        let function_words = cfg.determiners + cfg.prepositions;
        let content_words = cfg.ordinary_nouns
            + cfg.verbs
            + cfg.adjectives
            + cfg.num_ambiguous_lemmas * (1 + cfg.senses_per_lemma * cfg.cues_per_sense);
        // Function words are single syllables; ask for at most half of each space
        // so rejection sampling terminates quickly.
        if function_words * 2 > src.capacity(1) || function_words * 2 > tgt.capacity(1) {
            bail!(
                Config,
                "{function_words} determiners+prepositions exceed the single-syllable vocabulary"
            );
        }
        let target_content = content_words + cfg.num_ambiguous_lemmas * cfg.senses_per_lemma;
        if content_words * 2 > src.capacity(2) + src.capacity(3)
            || target_content * 2 > tgt.capacity(2) + tgt.capacity(3)
        {
            bail!(
                Config,
                "{content_words} content words do not fit the generated vocabulary"
            );
        }

        let mut entries = |n: usize,
                           lo: usize,
                           hi: usize,
                           tag: &'static str,
                           rng: &mut SeededRng|
         -> Vec<Entry> {
            (0..n)
                .map(|_| Entry {
                    source: src.make(rng, lo, hi),
                    target: tgt.make(rng, lo, hi),
                    tag,
                })
                .collect()
        };
        let determiners = entries(cfg.determiners, 1, 1, "DET", rng);
        let prepositions = entries(cfg.prepositions, 1, 1, "PREP", rng);
        let nouns = entries(cfg.ordinary_nouns, 2, 3, "NOUN", rng);
        let verbs = entries(cfg.verbs, 2, 3, "VERB", rng);
        let adjectives = entries(cfg.adjectives, 2, 3, "ADJ", rng);
        let mut cues = Vec::with_capacity(cfg.num_ambiguous_lemmas);
        let mut k = 0usize;
        for _ in 0..cfg.num_ambiguous_lemmas {
            let mut per_sense = Vec::with_capacity(cfg.senses_per_lemma);
            for _ in 0..cfg.senses_per_lemma {
                let mut group = Vec::with_capacity(cfg.cues_per_sense);
                for _ in 0..cfg.cues_per_sense {
                    let tag = if k % 2 == 0 { "NOUN" } else { "VERB" };
                    group.extend(entries(1, 2, 3, tag, rng));
                    k += 1;
                }
                per_sense.push(group);
            }
            cues.push(per_sense);
        }
        let ambiguous = (0..cfg.num_ambiguous_lemmas)
            .map(|_| {
                let lemma = src.make(rng, 2, 3);
                let senses = (0..cfg.senses_per_lemma)
                    .map(|_| tgt.make(rng, 2, 3))
                    .collect();
                (lemma, senses)
            })
            .collect();
        Ok(Lexicon {
            determiners,
            adjectives,
            nouns,
            verbs,
            prepositions,
            ambiguous,
            cues,
        })
    }
}

fn validate_config(cfg: &SynthConfig) -> Result<(Vec<Vec<Slot>>, Vec<Vec<Slot>>)> {
    if cfg.senses_per_lemma < 2 {
        bail!(
            Config,
            "senses_per_lemma must be at least 2, got {}",
            cfg.senses_per_lemma
        );
    }
    if !(cfg.sense_prior > 0.0 && cfg.sense_prior < 1.0) {
        bail!(
            Config,
            "sense_prior must lie in (0, 1), got {}",
            cfg.sense_prior
        );
    }
    if !(0.0..=1.0).contains(&cfg.ambiguous_fraction) {
        bail!(
            Config,
            "ambiguous_fraction must lie in [0, 1], got {}",
            cfg.ambiguous_fraction
        );
    }
    if cfg.sentences == 0 {
        bail!(Config, "sentences must be positive");
    }
    let amb: Vec<Vec<Slot>> = cfg
        .ambiguous_templates
        .iter()
        .map(|t| parse_template(t))
        .collect::<Result<_>>()?;
    let fill: Vec<Vec<Slot>> = cfg
        .filler_templates
        .iter()
        .map(|t| parse_template(t))
        .collect::<Result<_>>()?;
    let wants_ambiguous = cfg.ambiguous_fraction > 0.0;
    if wants_ambiguous
        && (amb.is_empty() || cfg.num_ambiguous_lemmas == 0 || cfg.cues_per_sense == 0)
    {
        bail!(
            Config,
            "ambiguous sentences requested but no ambiguous templates, lemmas or cues configured"
        );
    }
    if cfg.ambiguous_fraction < 1.0 && fill.is_empty() {
        bail!(
            Config,
            "filler sentences requested but no filler templates configured"
        );
    }
    for t in &amb {
        let count = |s: Slot| t.iter().filter(|&&x| x == s).count();
        if count(Slot::Amb) != 1 || count(Slot::Cue) != 1 {
            bail!(
                Config,
                "ambiguous templates need exactly one AMB and one CUE slot"
            );
        }
    }
    for t in &fill {
        if t.iter().any(|s| matches!(s, Slot::Amb | Slot::Cue)) {
            bail!(Config, "filler templates may not contain AMB or CUE");
        }
    }
    let needs = |slot: Slot, n: usize| amb.iter().chain(&fill).any(|t| t.contains(&slot)) && n == 0;
    if needs(Slot::Det, cfg.determiners)
        || needs(Slot::Adj, cfg.adjectives)
        || needs(Slot::Noun, cfg.ordinary_nouns)
        || needs(Slot::Verb, cfg.verbs)
        || needs(Slot::Prep, cfg.prepositions)
    {
        bail!(Config, "a template uses a word class with zero entries");
    }
    Ok((amb, fill))
}

fn sample_sense(rng: &mut SeededRng, prior: f64, senses: usize) -> usize {
    let u: f64 = rng.gen();
    if u < prior {
        0
    } else {
        1 + ((u - prior) / (1.0 - prior) * (senses - 1) as f64).min((senses - 2) as f64) as usize
    }
}

/// Generate the corpus. Identical `(config, seed)` give identical output.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<AnnotatedCorpus> {
    let (amb_templates, fill_templates) = validate_config(cfg)?;
    let mut rng = rng::seeded(seed);
    let lex = Lexicon::build(cfg, &mut rng)?;

    let n_amb = crate::math::round(cfg.sentences as f64 * cfg.ambiguous_fraction) as usize;
    let mut kinds: Vec<bool> = (0..cfg.sentences).map(|i| i < n_amb).collect();
    rng::shuffle(&mut rng, &mut kinds);

    let pick = |rng: &mut SeededRng, v: &[Entry]| v[rng.gen_range(0..v.len())].clone();
    let mut corpus = AnnotatedCorpus::default();
    for (index, &ambiguous) in kinds.iter().enumerate() {
        let template = if ambiguous {
            &amb_templates[rng.gen_range(0..amb_templates.len())]
        } else {
            &fill_templates[rng.gen_range(0..fill_templates.len())]
        };
        let lemma = if ambiguous {
            rng.gen_range(0..cfg.num_ambiguous_lemmas)
        } else {
            0
        };
        let sense = if ambiguous {
            sample_sense(&mut rng, cfg.sense_prior, cfg.senses_per_lemma)
        } else {
            0
        };

        let mut words: Vec<Entry> = Vec::with_capacity(template.len());
        let mut amb_pos = 0;
        let mut cue_pos = 0;
        for (i, slot) in template.iter().enumerate() {
            let e = match slot {
                Slot::Det => pick(&mut rng, &lex.determiners),
                Slot::Adj => pick(&mut rng, &lex.adjectives),
                Slot::Noun => pick(&mut rng, &lex.nouns),
                Slot::Verb => pick(&mut rng, &lex.verbs),
                Slot::Prep => pick(&mut rng, &lex.prepositions),
                Slot::Amb => {
                    amb_pos = i;
                    let (src, senses) = &lex.ambiguous[lemma];
                    Entry {
                        source: src.clone(),
                        target: senses[sense].clone(),
                        tag: "NOUN",
                    }
                }
                Slot::Cue => {
                    cue_pos = i;
                    pick(&mut rng, &lex.cues[lemma][sense])
                }
            };
            words.push(e);
        }

        // Target order: an adjective directly before a nominal slot moves after it.
        let n = template.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut i = 0;
        while i + 1 < n {
            if template[i] == Slot::Adj && template[i + 1].is_nominal() {
                order.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
        let target: Vec<String> = order.iter().map(|&s| words[s].target.clone()).collect();
        let mut alignment: Vec<AlignmentLink> = order
            .iter()
            .enumerate()
            .map(|(t, &s)| AlignmentLink {
                source: s,
                target: Span::single(t),
            })
            .collect();
        alignment.sort_by_key(|l| l.source);

        let id = format!("s{index:06}");
        let mut sentence = ParallelSentence {
            id: id.clone(),
            source: words.iter().map(|e| e.source.clone()).collect(),
            target,
            pos: words.iter().map(|e| e.tag.to_string()).collect(),
            alignment,
            ambiguities: Vec::new(),
        };
        if ambiguous {
            let span = Span::single(amb_pos);
            sentence.ambiguities.push(Ambiguity {
                span,
                sense,
                cue: Some(cue_pos),
            });
            let (src, senses) = &lex.ambiguous[lemma];
            corpus.records.push(AmbiguityRecord {
                lemma: src.clone(),
                candidates: senses
                    .iter()
                    .enumerate()
                    .map(|(k, t)| Candidate {
                        tokens: vec![t.clone()],
                        correct: k == sense,
                    })
                    .collect(),
                sentence_id: id,
                sentence_index: index,
                span,
            });
        }
        debug_assert!(sentence.validate().is_ok());
        corpus.sentences.push(sentence);
    }
    Ok(corpus)
}

/// Sense id implied by the cue word of an ambiguous sentence, recovered from
/// the generator's lexicon. Test helper: regenerates the lexicon from the seed.
#[doc(hidden)]
pub fn cue_sense_table(cfg: &SynthConfig, seed: u64) -> Result<Vec<(String, usize)>> {
    validate_config(cfg)?;
    let mut rng = rng::seeded(seed);
    let lex = Lexicon::build(cfg, &mut rng)?;
    let mut out = Vec::new();
    for per_sense in &lex.cues {
        for (sense, group) in per_sense.iter().enumerate() {
            for e in group {
                out.push((e.source.clone(), sense));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            sentences: 400,
            ambiguous_fraction: 0.5,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let a = generate_synthetic(&small(), 3).unwrap();
        let b = generate_synthetic(&small(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_seeds_give_distinct_corpora() {
        let corpora: Vec<_> = (0..10)
            .map(|s| generate_synthetic(&small(), s).unwrap())
            .collect();
        for i in 0..corpora.len() {
            for j in i + 1..corpora.len() {
                assert_ne!(corpora[i], corpora[j], "seeds {i} and {j}");
            }
        }
    }

    #[test]
    fn majority_sense_frequency_tracks_prior() {
        let cfg = SynthConfig {
            sentences: 10_000,
            ambiguous_fraction: 1.0,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg, 11).unwrap();
        let majority = c.records.iter().filter(|r| r.correct_index() == 0).count();
        let freq = majority as f64 / c.records.len() as f64;
        assert_eq!(c.records.len(), 10_000);
        assert!((0.68..=0.72).contains(&freq), "{freq}");
    }

    #[test]
    fn cue_word_sense_matches_annotation() {
        let cfg = small();
        let c = generate_synthetic(&cfg, 5).unwrap();
        let table: alloc::collections::BTreeMap<String, usize> =
            cue_sense_table(&cfg, 5).unwrap().into_iter().collect();
        let mut seen = 0;
        for s in &c.sentences {
            for a in &s.ambiguities {
                let cue = &s.source[a.cue.unwrap()];
                assert_eq!(table[cue], a.sense);
                // no other cue word in the sentence
                let cues_here = s.source.iter().filter(|w| table.contains_key(*w)).count();
                assert_eq!(cues_here, 1);
                seen += 1;
            }
        }
        assert_eq!(seen, 200);
    }

    #[test]
    fn each_sense_has_its_own_translation_and_alignment() {
        let c = generate_synthetic(&small(), 9).unwrap();
        for r in &c.records {
            let s = &c.sentences[r.sentence_index];
            assert!(s.validate().is_ok());
            let t = s.target_span(r.span).unwrap();
            assert_eq!(
                s.target[t.range()],
                r.candidates[r.correct_index()].tokens[..]
            );
            assert_ne!(r.candidates[0].tokens, r.candidates[1].tokens);
        }
        assert!(c.sentences.iter().any(|s| s.ambiguities.is_empty()));
    }

    #[test]
    fn inconsistent_configs_are_rejected() {
        let bad = [
            SynthConfig {
                senses_per_lemma: 1,
                ..small()
            },
            SynthConfig {
                sense_prior: 1.0,
                ..small()
            },
            SynthConfig {
                ambiguous_templates: vec![],
                ..small()
            },
            SynthConfig {
                determiners: 40,
                ..small()
            },
            SynthConfig {
                num_ambiguous_lemmas: 100_000,
                ..small()
            },
            SynthConfig {
                filler_templates: vec!["DET AMB".into()],
                ..small()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(generate_synthetic(&cfg, 1), Err(crate::Error::Config(_))),
                "{cfg:?}"
            );
        }
    }
}
