//! Term to concept resolution.
//!
//! A term matches a synonym when every token of the term occurs somewhere in the
//! synonym as a substring, in any order. Candidates come from a character trigram
//! index and are verified by exact containment; each match is scored by the Jaccard
//! similarity of the two token sets.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::ConceptId;
use crate::error::{Error, Result};
use crate::text::{normalize_label, token_set, tokenize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptType {
    Disease,
    Drug,
    Gene,
    Species,
    Other,
}

impl FromStr for ConceptType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disease" => Ok(ConceptType::Disease),
            "drug" | "chemical" => Ok(ConceptType::Drug),
            "gene" => Ok(ConceptType::Gene),
            "species" => Ok(ConceptType::Species),
            "other" => Ok(ConceptType::Other),
            other => Err(format!("unknown concept type {other:?}")),
        }
    }
}

impl fmt::Display for ConceptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConceptType::Disease => "disease",
            ConceptType::Drug => "drug",
            ConceptType::Gene => "gene",
            ConceptType::Species => "species",
            ConceptType::Other => "other",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConceptEntry {
    pub concept_id: ConceptId,
    pub concept_type: ConceptType,
    pub preferred_label: String,
    /// Normalized (lowercase, single-spaced); the first one is the preferred label.
    pub synonyms: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConceptTranslation {
    pub concept_id: ConceptId,
    pub translation_score: f64,
    pub matched_synonym: String,
}

/// Jaccard similarity of the lowercase token sets of `a` and `b`; 0 when both are empty.
pub fn jaccard_similarity(a: &str, b: &str) -> f64 {
    let a = token_set(a);
    let b = token_set(b);
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

type Trigram = [char; 3];

fn trigrams(s: &str) -> Vec<Trigram> {
    let chars: Vec<char> = s.chars().collect();
    chars.windows(3).map(|w| [w[0], w[1], w[2]]).collect()
}

#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    entries: Vec<ConceptEntry>,
    by_id: HashMap<ConceptId, usize>,
    /// Flattened `(synonym, entry index)` pairs.
    synonyms: Vec<(String, usize)>,
    /// Trigram -> ascending synonym indices.
    trigram_index: HashMap<Trigram, Vec<u32>>,
}

impl Vocabulary {
    pub fn from_entries(entries: Vec<ConceptEntry>) -> Result<Self> {
        let mut vocab = Vocabulary::default();
        for entry in entries {
            vocab.insert(entry).map_err(Error::Config)?;
        }
        Ok(vocab)
    }

    fn insert(&mut self, mut entry: ConceptEntry) -> Result<(), String> {
        if self.by_id.contains_key(&entry.concept_id) {
            return Err(format!("duplicate concept_id {}", entry.concept_id));
        }
        let mut synonyms: Vec<String> = Vec::with_capacity(entry.synonyms.len());
        for s in entry.synonyms.iter().map(|s| normalize_label(s)) {
            if !s.is_empty() && !synonyms.contains(&s) {
                synonyms.push(s);
            }
        }
        if synonyms.is_empty() {
            return Err(format!("concept {} has no synonyms", entry.concept_id));
        }
        entry.preferred_label = synonyms[0].clone();
        entry.synonyms = synonyms;

        let idx = self.entries.len();
        for s in &entry.synonyms {
            let sid = self.synonyms.len() as u32;
            let mut grams = trigrams(s);
            grams.sort_unstable();
            grams.dedup();
            for g in grams {
                self.trigram_index.entry(g).or_default().push(sid);
            }
            self.synonyms.push((s.clone(), idx));
        }
        self.by_id.insert(entry.concept_id.clone(), idx);
        self.entries.push(entry);
        Ok(())
    }

    /// Loads `concept_id <TAB> concept_type <TAB> synonym1|synonym2|...` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn from_reader(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut vocab = Vocabulary::default();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(id), Some(ty), Some(syns), None) =
                (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(Error::record(
                    path,
                    lineno,
                    "expected 3 tab-separated columns",
                ));
            };
            let concept_type = ty
                .parse()
                .map_err(|m: String| Error::record(path, lineno, m))?;
            let synonyms: Vec<String> = syns.split('|').map(str::to_owned).collect();
            let entry = ConceptEntry {
                concept_id: ConceptId(id.trim().to_owned()),
                concept_type,
                preferred_label: String::new(),
                synonyms,
            };
            vocab
                .insert(entry)
                .map_err(|m| Error::record(path, lineno, m))?;
        }
        Ok(vocab)
    }

    /// Serializes back to the tab-separated input format.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                e.concept_id,
                e.concept_type,
                e.synonyms.join("|")
            ));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: &ConceptId) -> Option<&ConceptEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[ConceptEntry] {
        &self.entries
    }

    fn candidate_synonyms(&self, tokens: &[String]) -> Vec<u32> {
        let mut grams: Vec<Trigram> = tokens.iter().flat_map(|t| trigrams(t)).collect();
        if grams.is_empty() {
            // every token is shorter than a trigram
            return (0..self.synonyms.len() as u32).collect();
        }
        grams.sort_unstable();
        grams.dedup();
        let mut lists: Vec<&Vec<u32>> = Vec::with_capacity(grams.len());
        for g in &grams {
            match self.trigram_index.get(g) {
                Some(list) => lists.push(list),
                None => return Vec::new(),
            }
        }
        lists.sort_by_key(|l| l.len());
        let mut acc = lists[0].clone();
        for list in &lists[1..] {
            acc.retain(|id| list.binary_search(id).is_ok());
            if acc.is_empty() {
                break;
            }
        }
        acc
    }

    /// Every concept with a synonym containing all of the term's tokens, scored by its
    /// best-matching synonym and ordered by score (descending) then concept id.
    pub fn find_concepts(
        &self,
        term: &str,
        type_filter: Option<ConceptType>,
    ) -> Vec<ConceptTranslation> {
        let tokens = tokenize(term);
        if tokens.is_empty() {
            return Vec::new();
        }
        let mut best: BTreeMap<usize, (f64, &str)> = BTreeMap::new();
        for sid in self.candidate_synonyms(&tokens) {
            let (synonym, entry) = &self.synonyms[sid as usize];
            if !tokens.iter().all(|t| synonym.contains(t.as_str())) {
                continue;
            }
            if type_filter.is_some_and(|ty| self.entries[*entry].concept_type != ty) {
                continue;
            }
            let score = jaccard_similarity(term, synonym);
            best.entry(*entry)
                .and_modify(|b| {
                    if score > b.0 || (score == b.0 && synonym.as_str() < b.1) {
                        *b = (score, synonym);
                    }
                })
                .or_insert((score, synonym));
        }
        let mut out: Vec<ConceptTranslation> = best
            .into_iter()
            .map(|(entry, (score, synonym))| ConceptTranslation {
                concept_id: self.entries[entry].concept_id.clone(),
                translation_score: score,
                matched_synonym: synonym.to_owned(),
            })
            .collect();
        out.sort_by(|a, b| {
            b.translation_score
                .total_cmp(&a.translation_score)
                .then_with(|| a.concept_id.cmp(&b.concept_id))
        });
        out
    }
}

/// A run of whitespace-separated query tokens resolved to a concept.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectedSpan {
    /// Token range `[start, end)` in the whitespace-split input.
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub translation: ConceptTranslation,
}

/// Greedy left-to-right concept detection in free text.
///
/// Tries the longest window starting at the current token and shrinks it from the
/// right; when not even the single leftmost token resolves, that token is skipped.
/// A window resolves when some concept matches it with a positive translation score.
pub fn greedy_concept_detection(text: &str, vocabulary: &Vocabulary) -> Vec<DetectedSpan> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut spans = Vec::new();
    let mut start = 0;
    'outer: while start < words.len() {
        for end in (start + 1..=words.len()).rev() {
            let window = words[start..end].join(" ");
            let best = vocabulary
                .find_concepts(&window, None)
                .into_iter()
                .next()
                .filter(|t| t.translation_score > 0.0);
            if let Some(translation) = best {
                spans.push(DetectedSpan {
                    start,
                    end,
                    text: window,
                    translation,
                });
                start = end;
                continue 'outer;
            }
        }
        start += 1;
    }
    spans
}
