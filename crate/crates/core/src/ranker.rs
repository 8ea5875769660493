//! GraphRank: unsupervised scoring of matched fragments.
//!
//! Every fragment gets four raw similarities (extraction confidence, tf-idf of its
//! weakest edge, coverage of its weakest concept, relational similarity of its
//! neighbourhood). Each similarity is divided by its maximum over all fragments of the
//! candidate set, combined with a weight vector, and multiplied by the fragment's
//! translation score. A document scores as its best fragment.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::corpus::{ConceptId, Corpus, CorpusStats, Document, DocumentGraph, Edge};
use crate::error::{Error, Result};
use crate::matcher::Fragment;
use crate::query::{ConceptSet, DisjunctiveQuery};

/// Interaction label -> specificity in {1.0, 0.5, 0.25}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredicateTaxonomy {
    specificity: BTreeMap<String, f64>,
}

impl PredicateTaxonomy {
    /// Level 1 is the most specific (1.0), level 3 the most general (0.25).
    pub fn level_specificity(level: u8) -> Option<f64> {
        match level {
            1 => Some(1.0),
            2 => Some(0.5),
            3 => Some(0.25),
            _ => None,
        }
    }

    pub fn from_levels<'a>(levels: impl IntoIterator<Item = (&'a str, u8)>) -> Result<Self> {
        let mut taxonomy = PredicateTaxonomy::default();
        for (label, level) in levels {
            let spec = Self::level_specificity(level).ok_or_else(|| {
                Error::Config(format!(
                    "predicate {label:?}: level must be 1, 2 or 3, got {level}"
                ))
            })?;
            taxonomy.specificity.insert(label.to_lowercase(), spec);
        }
        Ok(taxonomy)
    }

    pub fn specificity(&self, predicate: &str) -> Result<f64> {
        self.specificity
            .get(predicate)
            .copied()
            .ok_or_else(|| Error::MissingSpecificity(predicate.to_owned()))
    }

    pub fn contains(&self, predicate: &str) -> bool {
        self.specificity.contains_key(predicate)
    }

    pub fn labels(&self) -> impl Iterator<Item = (&str, f64)> {
        self.specificity.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Weights for confidence, min tf-idf, coverage and relational similarity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights([f64; 4]);

impl Weights {
    pub fn new(w: [f64; 4]) -> Result<Self> {
        if w.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Config(format!("weights {w:?} must lie in [0, 1]")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::Config(format!(
                "weights {w:?} sum to {sum}, expected 1"
            )));
        }
        Ok(Weights(w))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights([0.25; 4])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SimilarityVector {
    pub confidence: f64,
    pub min_tfidf: f64,
    pub coverage: f64,
    pub relational: f64,
    pub translation: f64,
}

impl SimilarityVector {
    fn components(&self) -> [f64; 4] {
        [
            self.confidence,
            self.min_tfidf,
            self.coverage,
            self.relational,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchClass {
    Full,
    Partial,
}

impl fmt::Display for MatchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchClass::Full => "full",
            MatchClass::Partial => "partial",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredDocument {
    pub doc_id: String,
    pub score: f64,
    pub match_class: MatchClass,
    pub best_fragment: Option<Fragment>,
}

/// Weakest edge confidence of the fragment; edges missing from the graph count as 0.
pub fn fragment_confidence(f: &Fragment, g: &DocumentGraph) -> f64 {
    f.edges
        .iter()
        .map(|e| g.edge_conf(e).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
}

/// `(tf(s)·idf(s) + tf(o)·idf(o)) · specificity(p)`.
pub fn edge_tfidf(
    e: &Edge,
    d: &Document,
    stats: &CorpusStats,
    taxonomy: &PredicateTaxonomy,
) -> Result<f64> {
    let s = d.concept_tf(&e.subject)? * stats.idf(&e.subject);
    let o = d.concept_tf(&e.object)? * stats.idf(&e.object);
    Ok((s + o) * taxonomy.specificity(&e.predicate)?)
}

pub fn fragment_min_tfidf(
    f: &Fragment,
    d: &Document,
    stats: &CorpusStats,
    taxonomy: &PredicateTaxonomy,
) -> Result<f64> {
    let mut min = f64::INFINITY;
    for e in &f.edges {
        min = min.min(edge_tfidf(e, d, stats, taxonomy)?);
    }
    Ok(if min.is_finite() { min } else { 0.0 })
}

pub fn fragment_coverage(f: &Fragment, d: &Document) -> Result<f64> {
    let mut min = f64::INFINITY;
    for c in f.bound_concepts() {
        min = min.min(d.concept_coverage(c)?);
    }
    Ok(if min.is_finite() { min } else { 0.0 })
}

/// Edges incident to either endpoint of `e`, except those connecting the two endpoints
/// themselves (including `e`).
pub fn neighbor_edges<'g>(e: &Edge, g: &'g DocumentGraph) -> Vec<&'g Edge> {
    g.edges
        .keys()
        .filter(|n| (n.touches(&e.subject) || n.touches(&e.object)) && !n.same_endpoints(e))
        .collect()
}

/// Mean of the raw tf-idf, coverage and confidence of a single edge. Edge coverage is the
/// smaller coverage of its two concepts.
pub fn edge_score(
    e: &Edge,
    d: &Document,
    g: &DocumentGraph,
    stats: &CorpusStats,
    taxonomy: &PredicateTaxonomy,
) -> Result<f64> {
    let tfidf = edge_tfidf(e, d, stats, taxonomy)?;
    let coverage = d
        .concept_coverage(&e.subject)?
        .min(d.concept_coverage(&e.object)?);
    let conf = g.edge_conf(e).unwrap_or(0.0);
    Ok((tfidf + coverage + conf) / 3.0)
}

/// Sum over the fragment's edges of the edge scores of their neighbours.
pub fn relational_similarity(
    f: &Fragment,
    d: &Document,
    g: &DocumentGraph,
    stats: &CorpusStats,
    taxonomy: &PredicateTaxonomy,
) -> Result<f64> {
    let mut total = 0.0;
    for e in &f.edges {
        for n in neighbor_edges(e, g) {
            total += edge_score(n, d, g, stats, taxonomy)?;
        }
    }
    Ok(total)
}

/// Lowest score among the fragment's bound concepts within their query nodes.
pub fn fragment_translation(f: &Fragment, nodes: &[ConceptSet]) -> f64 {
    f.nodes
        .iter()
        .map(|(&node, c)| nodes.get(node).and_then(|n| n.score(c)).unwrap_or(0.0))
        .fold(1.0, f64::min)
}

pub fn similarity_vector(
    f: &Fragment,
    nodes: &[ConceptSet],
    d: &Document,
    g: &DocumentGraph,
    stats: &CorpusStats,
    taxonomy: &PredicateTaxonomy,
) -> Result<SimilarityVector> {
    Ok(SimilarityVector {
        confidence: fragment_confidence(f, g),
        min_tfidf: fragment_min_tfidf(f, d, stats, taxonomy)?,
        coverage: fragment_coverage(f, d)?,
        relational: relational_similarity(f, d, g, stats, taxonomy)?,
        translation: fragment_translation(f, nodes),
    })
}

/// Max-normalizes each similarity over `vectors` and combines them into fragment scores.
/// A similarity whose maximum is 0 contributes 0 everywhere.
pub fn normalize_and_combine(vectors: &[SimilarityVector], weights: &Weights) -> Vec<f64> {
    let mut max = [0.0f64; 4];
    for v in vectors {
        for (m, x) in max.iter_mut().zip(v.components()) {
            *m = m.max(x);
        }
    }
    let w = weights.as_array();
    vectors
        .iter()
        .map(|v| {
            let combined: f64 = v
                .components()
                .iter()
                .zip(max)
                .zip(w)
                .map(|((x, m), w)| if m > 0.0 { w * x / m } else { 0.0 })
                .sum();
            v.translation * combined
        })
        .collect()
}

fn by_score_then_id(a: &ScoredDocument, b: &ScoredDocument) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

fn best_per_document(
    docs: Vec<(String, Vec<Fragment>)>,
    scores: &[f64],
    match_class: MatchClass,
) -> Vec<ScoredDocument> {
    let mut out = Vec::with_capacity(docs.len());
    let mut offset = 0;
    for (doc_id, fragments) in docs {
        let n = fragments.len();
        let mut best: Option<(usize, f64)> = None;
        for (i, &s) in scores[offset..offset + n].iter().enumerate() {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        offset += n;
        if let Some((i, score)) = best {
            out.push(ScoredDocument {
                doc_id,
                score,
                match_class,
                best_fragment: fragments.into_iter().nth(i),
            });
        }
    }
    out.sort_by(by_score_then_id);
    out
}

/// Ranks one match class (all full or all partial documents) by GraphRank.
/// The class is the normalization scope.
pub fn graph_rank(
    query: &DisjunctiveQuery,
    class: &BTreeMap<String, Vec<Fragment>>,
    match_class: MatchClass,
    corpus: &Corpus,
    taxonomy: &PredicateTaxonomy,
    weights: &Weights,
) -> Result<Vec<ScoredDocument>> {
    let docs: Vec<(String, Vec<Fragment>)> = class
        .iter()
        .filter(|(_, f)| !f.is_empty())
        .map(|(d, f)| (d.clone(), f.clone()))
        .collect();
    let resolve = |doc_id: &str| {
        corpus.index_of(doc_id).ok_or_else(|| {
            Error::Inconsistent(format!("matched document {doc_id} is not in the corpus"))
        })
    };

    if query.is_containment() {
        // single concept: translation · normalized(tf · idf · coverage)
        let stats = corpus.stats();
        let raw: Vec<(f64, f64)> = docs
            .iter()
            .flat_map(|(doc_id, fragments)| fragments.iter().map(move |f| (doc_id, f)))
            .map(|(doc_id, f)| {
                let d = corpus.document(resolve(doc_id)?);
                let mut value = f64::INFINITY;
                for c in f.bound_concepts() {
                    value = value.min(d.concept_tf(c)? * stats.idf(c) * d.concept_coverage(c)?);
                }
                Ok((
                    fragment_translation(f, &query.nodes),
                    if value.is_finite() { value } else { 0.0 },
                ))
            })
            .collect::<Result<_>>()?;
        let max = raw.iter().map(|r| r.1).fold(0.0, f64::max);
        let scores: Vec<f64> = raw
            .iter()
            .map(|&(t, v)| if max > 0.0 { t * v / max } else { 0.0 })
            .collect();
        return Ok(best_per_document(docs, &scores, match_class));
    }

    let per_doc: Vec<Vec<SimilarityVector>> = docs
        .par_iter()
        .map(|(doc_id, fragments)| {
            let idx = resolve(doc_id)?;
            let (d, g) = (corpus.document(idx), corpus.graph(idx));
            fragments
                .iter()
                .map(|f| similarity_vector(f, &query.nodes, d, g, corpus.stats(), taxonomy))
                .collect()
        })
        .collect::<Result<_>>()?;
    let vectors: Vec<SimilarityVector> = per_doc.into_iter().flatten().collect();
    let scores = normalize_and_combine(&vectors, weights);
    Ok(best_per_document(docs, &scores, match_class))
}

/// Full matches first, then partial matches, truncated to `cutoff`.
pub fn assemble_final_ranking(
    full: Vec<ScoredDocument>,
    partial: Vec<ScoredDocument>,
    cutoff: usize,
) -> Result<Vec<ScoredDocument>> {
    let full_ids: HashSet<&str> = full.iter().map(|d| d.doc_id.as_str()).collect();
    if let Some(d) = partial
        .iter()
        .find(|d| full_ids.contains(d.doc_id.as_str()))
    {
        return Err(Error::Inconsistent(format!(
            "document {} is both a full and a partial match",
            d.doc_id
        )));
    }
    let mut out = full;
    out.extend(partial);
    out.truncate(cutoff);
    Ok(out)
}

/// Concepts touched by a fragment, for explanations.
pub fn fragment_concepts(f: &Fragment) -> BTreeSet<ConceptId> {
    f.nodes.values().cloned().collect()
}
