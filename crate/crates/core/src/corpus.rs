//! Pre-annotated documents, their statement graphs and corpus-wide concept statistics.
//!
//! Documents arrive with concept mentions and extracted statements already attached;
//! nothing here looks at raw text. One JSON object per line:
//!
//! ```text
//! {"doc_id":"D-B","text_length":50,"tokens":["metformin"],
//!  "mentions":[{"concept_id":"M","start":0,"end":9}],
//!  "statements":[{"subject":"M","predicate":"associated","object":"DM","confidence":0.3,"sentence":0}]}
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub String);

impl ConceptId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ConceptId {
    fn from(s: &str) -> Self {
        ConceptId(s.to_owned())
    }
}

impl From<String> for ConceptId {
    fn from(s: String) -> Self {
        ConceptId(s)
    }
}

/// A directed, labeled statement edge `(subject, predicate, object)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub subject: ConceptId,
    pub predicate: String,
    pub object: ConceptId,
}

impl Edge {
    pub fn new(
        subject: impl Into<ConceptId>,
        predicate: &str,
        object: impl Into<ConceptId>,
    ) -> Self {
        Edge {
            subject: subject.into(),
            predicate: predicate.to_owned(),
            object: object.into(),
        }
    }

    pub fn touches(&self, c: &ConceptId) -> bool {
        &self.subject == c || &self.object == c
    }

    /// True if both edges connect the same unordered pair of concepts.
    pub fn same_endpoints(&self, other: &Edge) -> bool {
        (self.subject == other.subject && self.object == other.object)
            || (self.subject == other.object && self.object == other.subject)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.predicate, self.object)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptMention {
    pub concept_id: ConceptId,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementExtraction {
    pub subject: ConceptId,
    pub predicate: String,
    pub object: ConceptId,
    pub confidence: f64,
    #[serde(rename = "sentence")]
    pub sentence_index: u32,
}

impl StatementExtraction {
    pub fn edge(&self) -> Edge {
        Edge {
            subject: self.subject.clone(),
            predicate: self.predicate.clone(),
            object: self.object.clone(),
        }
    }
}

/// Wire form of one corpus line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub text_length: usize,
    #[serde(default)]
    pub tokens: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<ConceptMention>,
    #[serde(default)]
    pub statements: Vec<StatementExtraction>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct MentionSummary {
    count: usize,
    first_start: usize,
    last_start: usize,
}

/// A validated document together with its per-concept mention summary.
#[derive(Clone, Debug)]
pub struct Document {
    record: DocumentRecord,
    profile: BTreeMap<ConceptId, MentionSummary>,
    max_count: usize,
}

impl Document {
    /// Validates a record. The error string names the offending field.
    pub fn new(record: DocumentRecord) -> Result<Self, String> {
        if record.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        if record.text_length == 0 {
            return Err(format!(
                "document {}: text_length must be positive",
                record.doc_id
            ));
        }
        let mut profile: BTreeMap<ConceptId, MentionSummary> = BTreeMap::new();
        for m in &record.mentions {
            if m.start >= m.end || m.end > record.text_length {
                return Err(format!(
                    "document {}: mention of {} at ({}, {}) outside text of length {}",
                    record.doc_id, m.concept_id, m.start, m.end, record.text_length
                ));
            }
            profile
                .entry(m.concept_id.clone())
                .and_modify(|s| {
                    s.count += 1;
                    s.first_start = s.first_start.min(m.start);
                    s.last_start = s.last_start.max(m.start);
                })
                .or_insert(MentionSummary {
                    count: 1,
                    first_start: m.start,
                    last_start: m.start,
                });
        }
        for (i, s) in record.statements.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.confidence) {
                return Err(format!(
                    "document {}: statement {} has confidence {} outside [0, 1]",
                    record.doc_id, i, s.confidence
                ));
            }
            if s.subject == s.object {
                return Err(format!(
                    "document {}: statement {} is a self-loop on {}",
                    record.doc_id, i, s.subject
                ));
            }
            if s.predicate.is_empty() {
                return Err(format!(
                    "document {}: statement {} has an empty predicate",
                    record.doc_id, i
                ));
            }
            for c in [&s.subject, &s.object] {
                if !profile.contains_key(c) {
                    return Err(format!(
                        "document {}: statement {} references unmentioned concept {}",
                        record.doc_id, i, c
                    ));
                }
            }
        }
        let max_count = profile.values().map(|s| s.count).max().unwrap_or(0);
        Ok(Document {
            record,
            profile,
            max_count,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.record.doc_id
    }

    pub fn text_length(&self) -> usize {
        self.record.text_length
    }

    pub fn tokens(&self) -> &[String] {
        &self.record.tokens
    }

    pub fn mentions(&self) -> &[ConceptMention] {
        &self.record.mentions
    }

    pub fn extractions(&self) -> &[StatementExtraction] {
        &self.record.statements
    }

    pub fn record(&self) -> &DocumentRecord {
        &self.record
    }

    pub fn mentions_concept(&self, c: &ConceptId) -> bool {
        self.profile.contains_key(c)
    }

    /// Distinct concepts mentioned, in id order.
    pub fn concepts(&self) -> impl Iterator<Item = &ConceptId> {
        self.profile.keys()
    }

    /// Number of mentions of `c`.
    pub fn occurrences(&self, c: &ConceptId) -> usize {
        self.profile.get(c).map_or(0, |s| s.count)
    }

    fn summary(&self, c: &ConceptId) -> Result<&MentionSummary> {
        self.profile.get(c).ok_or_else(|| Error::AbsentConcept {
            concept: c.to_string(),
            doc_id: self.record.doc_id.clone(),
        })
    }

    /// Occurrences of `c` divided by the occurrences of the most frequent concept.
    pub fn concept_tf(&self, c: &ConceptId) -> Result<f64> {
        let s = self.summary(c)?;
        Ok(s.count as f64 / self.max_count as f64)
    }

    /// Span between the first and last mention start of `c`, relative to the text length.
    pub fn concept_coverage(&self, c: &ConceptId) -> Result<f64> {
        let s = self.summary(c)?;
        Ok((s.last_start - s.first_start) as f64 / self.record.text_length as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub max_confidence: f64,
    pub support_count: usize,
}

/// The statement graph of one document. Parallel extractions collapse into one edge.
#[derive(Clone, Debug, PartialEq)]
pub struct DocumentGraph {
    pub doc_id: String,
    pub edges: BTreeMap<Edge, EdgeRecord>,
}

impl DocumentGraph {
    pub fn edge_conf(&self, e: &Edge) -> Option<f64> {
        self.edges.get(e).map(|r| r.max_confidence)
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains_key(e)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

pub fn build_document_graph(d: &Document) -> DocumentGraph {
    let mut edges: BTreeMap<Edge, EdgeRecord> = BTreeMap::new();
    for s in d.extractions() {
        edges
            .entry(s.edge())
            .and_modify(|r| {
                r.max_confidence = r.max_confidence.max(s.confidence);
                r.support_count += 1;
            })
            .or_insert(EdgeRecord {
                max_confidence: s.confidence,
                support_count: 1,
            });
    }
    DocumentGraph {
        doc_id: d.doc_id().to_owned(),
        edges,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub concept_df: BTreeMap<ConceptId, usize>,
}

impl CorpusStats {
    pub fn build<'a>(docs: impl IntoIterator<Item = &'a Document>) -> Self {
        let mut stats = CorpusStats::default();
        for d in docs {
            stats.doc_count += 1;
            for c in d.concepts() {
                *stats.concept_df.entry(c.clone()).or_insert(0) += 1;
            }
        }
        stats
    }

    pub fn df(&self, c: &ConceptId) -> usize {
        self.concept_df.get(c).copied().unwrap_or(0)
    }

    /// `ln(|D| / df(c))`; concepts never seen in the corpus get 0.
    pub fn idf(&self, c: &ConceptId) -> f64 {
        match self.df(c) {
            0 => 0.0,
            df => (self.doc_count as f64 / df as f64).ln(),
        }
    }
}

/// All ingested documents with their graphs and statistics. Immutable once built.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    graphs: Vec<DocumentGraph>,
    stats: CorpusStats,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(documents.len());
        for (i, d) in documents.iter().enumerate() {
            if by_id.insert(d.doc_id().to_owned(), i).is_some() {
                return Err(Error::Inconsistent(format!(
                    "duplicate doc_id {}",
                    d.doc_id()
                )));
            }
        }
        let graphs = documents.iter().map(build_document_graph).collect();
        let stats = CorpusStats::build(&documents);
        Ok(Corpus {
            documents,
            graphs,
            stats,
            by_id,
        })
    }

    /// Reads a line-delimited corpus file. Blank lines are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn from_reader(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut documents = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let record: DocumentRecord = serde_json::from_str(&line)
                .map_err(|e| Error::record(path, lineno, format!("malformed record: {e}")))?;
            if let Some(prev) = seen.insert(record.doc_id.clone(), lineno) {
                return Err(Error::record(
                    path,
                    lineno,
                    format!(
                        "duplicate doc_id {} (first seen on line {prev})",
                        record.doc_id
                    ),
                ));
            }
            documents.push(Document::new(record).map_err(|m| Error::record(path, lineno, m))?);
        }
        Self::from_documents(documents)
    }

    /// Writes the corpus back out in the line-delimited input format.
    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for d in &self.documents {
            serde_json::to_writer(&mut out, d.record())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rejects statements whose predicate is not in the interaction vocabulary.
    pub fn check_predicates(&self, path: &Path, known: impl Fn(&str) -> bool) -> Result<()> {
        for (i, d) in self.documents.iter().enumerate() {
            if let Some(s) = d.extractions().iter().find(|s| !known(&s.predicate)) {
                return Err(Error::record(
                    path,
                    i + 1,
                    format!(
                        "document {}: unknown predicate {:?}",
                        d.doc_id(),
                        s.predicate
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, idx: usize) -> &Document {
        &self.documents[idx]
    }

    pub fn graph(&self, idx: usize) -> &DocumentGraph {
        &self.graphs[idx]
    }

    pub fn graphs(&self) -> &[DocumentGraph] {
        &self.graphs
    }

    pub fn index_of(&self, doc_id: &str) -> Option<usize> {
        self.by_id.get(doc_id).copied()
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    fn mention(c: &str, start: usize, end: usize) -> ConceptMention {
        ConceptMention {
            concept_id: c.into(),
            start,
            end,
        }
    }

    fn statement(s: &str, p: &str, o: &str, confidence: f64, sentence: u32) -> StatementExtraction {
        StatementExtraction {
            subject: s.into(),
            predicate: p.into(),
            object: o.into(),
            confidence,
            sentence_index: sentence,
        }
    }

    pub fn doc_a() -> DocumentRecord {
        DocumentRecord {
            doc_id: "D-A".into(),
            text_length: 100,
            tokens: "metformin treats diabetes mellitus hypoglycemia metformin diabetes mellitus"
                .split(' ')
                .map(String::from)
                .collect(),
            mentions: vec![
                mention("M", 0, 9),
                mention("DM", 20, 37),
                mention("H", 40, 45),
                mention("M", 60, 69),
                mention("DM", 80, 97),
            ],
            statements: vec![
                statement("M", "treats", "DM", 0.8, 0),
                statement("M", "treats", "DM", 0.6, 2),
                statement("M", "associated", "H", 0.4, 1),
                statement("H", "associated", "DM", 0.5, 1),
            ],
        }
    }

    pub fn doc_b() -> DocumentRecord {
        DocumentRecord {
            doc_id: "D-B".into(),
            text_length: 50,
            tokens: "metformin and diabetes mellitus"
                .split(' ')
                .map(String::from)
                .collect(),
            mentions: vec![mention("M", 0, 9), mention("DM", 20, 37)],
            statements: vec![statement("M", "associated", "DM", 0.3, 0)],
        }
    }

    /// The two-document canonical fixture.
    pub fn fix1() -> Corpus {
        Corpus::from_documents(vec![
            Document::new(doc_a()).unwrap(),
            Document::new(doc_b()).unwrap(),
        ])
        .unwrap()
    }
}
