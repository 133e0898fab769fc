//! The annotated TSV format, one ambiguous occurrence per row:
//!
//! ```text
//! id <TAB> source <TAB> target <TAB> start:end <TAB> cue <TAB> s-t0:t1 ... <TAB> POS ... <TAB> word=1|word=0
//! ```
//!
//! Spans are half-open word ranges; `cue` is a source index or `-1`; the
//! alignment column lists space-separated links; candidates are `|`-separated
//! `tokens=flag` pairs where tokens may contain spaces. A sentence without an
//! ambiguous word is written with `-` in the span and candidate columns. Rows
//! for the same sentence must be adjacent and agree on all sentence columns.
//! Blank lines and lines starting with `#` are ignored.

use super::types::{
    AlignmentLink, Ambiguity, AmbiguityRecord, AnnotatedCorpus, Candidate, ParallelSentence, Span,
};
use crate::error::{Error, Result};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

const COLUMNS: usize = 8;

struct RowError {
    field: usize,
    message: String,
}

fn err(field: usize, message: impl Into<String>) -> RowError {
    RowError {
        field,
        message: message.into(),
    }
}

fn parse_span(s: &str, field: usize) -> core::result::Result<Span, RowError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| err(field, format!("expected start:end, got {s:?}")))?;
    let start = a
        .parse()
        .map_err(|_| err(field, format!("bad span start {a:?}")))?;
    let end = b
        .parse()
        .map_err(|_| err(field, format!("bad span end {b:?}")))?;
    if end <= start {
        return Err(err(field, format!("empty span {s}")));
    }
    Ok(Span::new(start, end))
}

fn tokens(s: &str) -> Vec<String> {
    s.split(' ')
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

struct Row {
    sentence: ParallelSentence,
    occurrence: Option<(Ambiguity, Vec<Candidate>)>,
}

fn parse_row(fields: &[&str]) -> core::result::Result<Row, RowError> {
    if fields.len() != COLUMNS {
        return Err(err(
            fields.len().min(COLUMNS - 1),
            format!("expected {COLUMNS} columns, found {}", fields.len()),
        ));
    }
    let id = fields[0].to_string();
    if id.is_empty() {
        return Err(err(0, "empty sentence id"));
    }
    let source = tokens(fields[1]);
    let target = tokens(fields[2]);
    let mut alignment = Vec::new();
    for link in fields[5].split(' ').filter(|t| !t.is_empty()) {
        let (s, t) = link
            .split_once('-')
            .ok_or_else(|| err(5, format!("expected src-tgtStart:tgtEnd, got {link:?}")))?;
        let source = s
            .parse()
            .map_err(|_| err(5, format!("bad source index {s:?}")))?;
        alignment.push(AlignmentLink {
            source,
            target: parse_span(t, 5)?,
        });
    }
    let pos = tokens(fields[6]);
    let mut sentence = ParallelSentence {
        id,
        source,
        target,
        pos,
        alignment,
        ambiguities: Vec::new(),
    };

    let occurrence = if fields[3] == "-" {
        if fields[7] != "-" {
            return Err(err(7, "candidates given for a row without a span"));
        }
        None
    } else {
        let span = parse_span(fields[3], 3)?;
        let cue: i64 = fields[4]
            .parse()
            .map_err(|_| err(4, format!("bad cue index {:?}", fields[4])))?;
        let cue = match cue {
            -1 => None,
            c if c >= 0 => Some(c as usize),
            c => return Err(err(4, format!("cue index {c} must be >= -1"))),
        };
        let mut candidates = Vec::new();
        for c in fields[7].split('|') {
            let (words, flag) = c
                .rsplit_once('=')
                .ok_or_else(|| err(7, format!("candidate {c:?} lacks =0/=1")))?;
            let correct = match flag {
                "1" => true,
                "0" => false,
                f => return Err(err(7, format!("candidate flag {f:?} is not 0 or 1"))),
            };
            let toks = tokens(words);
            if toks.is_empty() {
                return Err(err(7, "empty candidate"));
            }
            candidates.push(Candidate {
                tokens: toks,
                correct,
            });
        }
        if candidates.len() < 2 {
            return Err(err(7, "at least two candidates are required"));
        }
        let correct: Vec<usize> = candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.correct)
            .map(|(i, _)| i)
            .collect();
        if correct.len() != 1 {
            return Err(err(
                7,
                format!(
                    "{} candidates marked correct, exactly one required",
                    correct.len()
                ),
            ));
        }
        Some((
            Ambiguity {
                span,
                sense: correct[0],
                cue,
            },
            candidates,
        ))
    };
    if let Some((a, _)) = &occurrence {
        sentence.ambiguities.push(a.clone());
    }
    sentence.validate().map_err(|m| {
        let field = if m.contains("POS") {
            6
        } else if m.contains("alignment") || m.contains("aligned") {
            5
        } else if m.contains("cue") {
            4
        } else if m.contains("span") {
            3
        } else {
            1
        };
        err(field, m)
    })?;
    Ok(Row {
        sentence,
        occurrence,
    })
}

fn column_of(line: &str, field: usize) -> usize {
    line.split('\t')
        .take(field)
        .map(|f| f.chars().count() + 1)
        .sum::<usize>()
        + 1
}

/// Parse annotated TSV text, validating every sentence and occurrence.
pub fn parse_annotated(text: &str) -> Result<AnnotatedCorpus> {
    let mut corpus = AnnotatedCorpus::default();
    let mut seen_ids = alloc::collections::BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let row = parse_row(&fields).map_err(|e| Error::Parse {
            line: line_no,
            column: column_of(line, e.field),
            message: format!("row {}: {}", fields[0], e.message),
        })?;
        let parse_error = |message: String| Error::Parse {
            line: line_no,
            column: 1,
            message,
        };
        let continues = corpus
            .sentences
            .last()
            .is_some_and(|s| s.id == row.sentence.id);
        if continues {
            let prev = corpus.sentences.last_mut().expect("checked");
            let same = prev.source == row.sentence.source
                && prev.target == row.sentence.target
                && prev.pos == row.sentence.pos
                && prev.alignment == row.sentence.alignment;
            if !same || row.occurrence.is_none() || prev.ambiguities.is_empty() {
                return Err(parse_error(format!(
                    "row {}: conflicts with the previous row of the same sentence",
                    prev.id
                )));
            }
            prev.ambiguities.extend(row.sentence.ambiguities);
        } else {
            if !seen_ids.insert(row.sentence.id.clone()) {
                return Err(parse_error(format!(
                    "row {}: sentence id repeated non-adjacently",
                    row.sentence.id
                )));
            }
            corpus.sentences.push(row.sentence);
        }
        if let Some((a, candidates)) = row.occurrence {
            let index = corpus.sentences.len() - 1;
            let s = &corpus.sentences[index];
            corpus.records.push(AmbiguityRecord {
                lemma: s.source[a.span.range()].join(" "),
                candidates,
                sentence_id: s.id.clone(),
                sentence_index: index,
                span: a.span,
            });
        }
    }
    Ok(corpus)
}

/// Render a corpus in the annotated TSV format. `parse_annotated` inverts this.
pub fn format_annotated(corpus: &AnnotatedCorpus) -> String {
    let mut out = String::new();
    let mut records = corpus.records.iter().peekable();
    for (index, s) in corpus.sentences.iter().enumerate() {
        let alignment: Vec<String> = s
            .alignment
            .iter()
            .map(|l| format!("{}-{}:{}", l.source, l.target.start, l.target.end))
            .collect();
        let head = format!("{}\t{}\t{}", s.id, s.source.join(" "), s.target.join(" "));
        let tail = format!("{}\t{}", alignment.join(" "), s.pos.join(" "));
        let mut wrote = false;
        while let Some(r) = records.next_if(|r| r.sentence_index == index) {
            let a = s.ambiguities.iter().find(|a| a.span == r.span);
            let cue = a.and_then(|a| a.cue).map_or(-1, |c| c as i64);
            let candidates: Vec<String> = r
                .candidates
                .iter()
                .map(|c| format!("{}={}", c.tokens.join(" "), u8::from(c.correct)))
                .collect();
            out.push_str(&format!(
                "{head}\t{}:{}\t{cue}\t{tail}\t{}\n",
                r.span.start,
                r.span.end,
                candidates.join("|")
            ));
            wrote = true;
        }
        if !wrote {
            out.push_str(&format!("{head}\t-\t-1\t{tail}\t-\n"));
        }
    }
    out
}
