//! Canonical lexicon model and its line-delimited JSON reader/writer.
//!
//! One record per line:
//!
//! ```text
//! {"headword":"Abléck","pos":"NOUN","senses":[{"synonyms":["Moment"],"translations":{"de":["Augenblick"]},"examples":["..."]}]}
//! ```
//!
//! A sense may carry an explicit `id`; otherwise it is assigned
//! `<headword>#<ordinal>` (1-based) at parse time.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: malformed record at `{path}`: {message}")]
    Malformed { line: usize, path: String, message: String },
    #[error("line {line}: invalid entry at `{path}`: {message}")]
    Invalid { line: usize, path: String, message: String },
    #[error("line {line}: duplicate sense id `{sense_id}` in entry `{headword}`")]
    DuplicateSense {
        line: usize,
        headword: String,
        sense_id: String,
    },
    #[error("invalid POS mapping: {0}")]
    PosMap(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Normalized part-of-speech tag set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Other => "OTHER",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NOUN" => Ok(Pos::Noun),
            "VERB" => Ok(Pos::Verb),
            "ADJ" => Ok(Pos::Adj),
            "ADV" => Ok(Pos::Adv),
            "OTHER" => Ok(Pos::Other),
            other => Err(format!("unknown normalized POS `{other}`")),
        }
    }
}

/// Maps source POS tags onto [`Pos`]. Lookup is case-insensitive; tags
/// absent from the table map to [`Pos::Other`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosMap {
    table: HashMap<String, Pos>,
}

impl Default for PosMap {
    fn default() -> Self {
        let pairs = [
            ("NOUN", Pos::Noun),
            ("N", Pos::Noun),
            ("SUBST", Pos::Noun),
            ("SUBSTANTIV", Pos::Noun),
            ("PROPN", Pos::Noun),
            ("VERB", Pos::Verb),
            ("V", Pos::Verb),
            ("ADJ", Pos::Adj),
            ("ADJECTIVE", Pos::Adj),
            ("ADV", Pos::Adv),
            ("ADVERB", Pos::Adv),
            ("OTHER", Pos::Other),
        ];
        Self {
            table: pairs.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect(),
        }
    }
}

impl PosMap {
    /// Builds a table from a JSON object of `source tag -> NOUN|VERB|ADJ|ADV|OTHER`.
    /// The normalized tags themselves always map to themselves.
    pub fn from_json(text: &str) -> Result<Self, LexiconError> {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| LexiconError::PosMap(e.to_string()))?;
        let mut table: HashMap<String, Pos> = [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv, Pos::Other]
            .into_iter()
            .map(|p| (p.as_str().to_lowercase(), p))
            .collect();
        for (src, dst) in raw {
            let pos = dst
                .parse::<Pos>()
                .map_err(|e| LexiconError::PosMap(format!("`{src}`: {e}")))?;
            table.insert(src.trim().to_lowercase(), pos);
        }
        Ok(Self { table })
    }

    pub fn normalize(&self, tag: &str) -> Pos {
        self.table
            .get(&tag.trim().to_lowercase())
            .copied()
            .unwrap_or(Pos::Other)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sense {
    #[serde(rename = "id")]
    pub sense_id: String,
    pub synonyms: Vec<String>,
    pub translations: BTreeMap<String, Vec<String>>,
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionaryEntry {
    pub headword: String,
    pub pos: Pos,
    pub senses: Vec<Sense>,
}

impl DictionaryEntry {
    pub fn sense(&self, sense_id: &str) -> Option<&Sense> {
        self.senses.iter().find(|s| s.sense_id == sense_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    /// Keep headwords that contain whitespace.
    pub keep_multiword_headwords: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            keep_multiword_headwords: true,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    headword: String,
    pos: String,
    #[serde(default)]
    senses: Vec<RawSense>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSense {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    synonyms: Vec<String>,
    #[serde(default)]
    translations: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    examples: Vec<String>,
}

fn non_empty(value: &str, line: usize, path: String) -> Result<String, LexiconError> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        return Err(LexiconError::Invalid {
            line,
            path,
            message: "empty string".into(),
        });
    }
    Ok(trimmed.to_owned())
}

fn parse_record(line_no: usize, text: &str, pos_map: &PosMap) -> Result<DictionaryEntry, LexiconError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawEntry = serde_path_to_error::deserialize(de).map_err(|e| LexiconError::Malformed {
        line: line_no,
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let headword = non_empty(&raw.headword, line_no, "headword".into())?;
    let pos = pos_map.normalize(&raw.pos);
    let mut seen = HashSet::new();
    let mut senses = Vec::with_capacity(raw.senses.len());
    for (i, rs) in raw.senses.into_iter().enumerate() {
        let sense_id = match rs.id {
            Some(id) => non_empty(&id, line_no, format!("senses[{i}].id"))?,
            None => format!("{headword}#{}", i + 1),
        };
        if !seen.insert(sense_id.clone()) {
            return Err(LexiconError::DuplicateSense {
                line: line_no,
                headword,
                sense_id,
            });
        }
        let synonyms = rs
            .synonyms
            .iter()
            .enumerate()
            .map(|(j, s)| non_empty(s, line_no, format!("senses[{i}].synonyms[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut translations = BTreeMap::new();
        for (lang, words) in rs.translations {
            let words = words
                .iter()
                .enumerate()
                .map(|(j, w)| non_empty(w, line_no, format!("senses[{i}].translations.{lang}[{j}]")))
                .collect::<Result<Vec<_>, _>>()?;
            translations.insert(lang, words);
        }
        let examples = rs
            .examples
            .iter()
            .enumerate()
            .map(|(j, s)| non_empty(s, line_no, format!("senses[{i}].examples[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        senses.push(Sense {
            sense_id,
            synonyms,
            translations,
            examples,
        });
    }
    Ok(DictionaryEntry { headword, pos, senses })
}

/// Parses a line-delimited lexicon. Blank lines are ignored; any malformed
/// record fails the whole parse with its 1-based line number.
pub fn parse_dictionary<R: BufRead>(
    input: R,
    pos_map: &PosMap,
    opts: IngestOptions,
) -> Result<Vec<DictionaryEntry>, LexiconError> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let entries = lines
        .par_iter()
        .map(|(n, text)| parse_record(*n, text, pos_map))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(entries
        .into_iter()
        .filter(|e| opts.keep_multiword_headwords || !e.headword.contains(char::is_whitespace))
        .collect())
}

pub fn parse_dictionary_str(
    input: &str,
    pos_map: &PosMap,
    opts: IngestOptions,
) -> Result<Vec<DictionaryEntry>, LexiconError> {
    parse_dictionary(input.as_bytes(), pos_map, opts)
}

/// Writes entries in the canonical format, one per line, with explicit sense ids.
pub fn write_dictionary<W: Write>(mut out: W, entries: &[DictionaryEntry]) -> std::io::Result<()> {
    for entry in entries {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn filter_nouns(entries: &[DictionaryEntry]) -> Vec<DictionaryEntry> {
    entries.iter().filter(|e| e.pos == Pos::Noun).cloned().collect()
}

/// Deduplicated noun headwords in code-point order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounVocabulary {
    words: Vec<String>,
}

impl NounVocabulary {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        Self {
            words: set.into_iter().collect(),
        }
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.binary_search_by(|w| w.as_str().cmp(word)).is_ok()
    }
}

pub fn build_noun_vocabulary(entries: &[DictionaryEntry]) -> NounVocabulary {
    NounVocabulary::from_words(
        entries
            .iter()
            .filter(|e| e.pos == Pos::Noun)
            .map(|e| e.headword.clone()),
    )
}
