//! BM25 over the corpus token lists, used to rerank graph matches and as a standalone
//! retrieval baseline.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::text::tokenize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TextIndex {
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<u32>,
    pub avg_length: f64,
    /// token -> (doc position, term frequency), ascending by doc position.
    pub postings: BTreeMap<String, Vec<(u32, u32)>>,
    #[serde(skip)]
    by_id: HashMap<String, u32>,
}

impl TextIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let mut index = TextIndex::default();
        let mut total = 0u64;
        for (i, doc) in corpus.documents().iter().enumerate() {
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in doc.tokens() {
                *tf.entry(t.as_str()).or_insert(0) += 1;
            }
            for (t, n) in tf {
                index
                    .postings
                    .entry(t.to_owned())
                    .or_default()
                    .push((i as u32, n));
            }
            index.doc_ids.push(doc.doc_id().to_owned());
            index.doc_lengths.push(doc.tokens().len() as u32);
            total += doc.tokens().len() as u64;
        }
        if !index.doc_ids.is_empty() {
            index.avg_length = total as f64 / index.doc_ids.len() as f64;
        }
        index.rebuild_lookup();
        index
    }

    /// Restores the doc id lookup after deserialization.
    pub fn rebuild_lookup(&mut self) {
        self.by_id = self
            .doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i as u32))
            .collect();
    }

    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn df(&self, token: &str) -> usize {
        self.postings.get(token).map_or(0, Vec::len)
    }

    fn tf(&self, token: &str, doc: u32) -> u32 {
        self.postings
            .get(token)
            .and_then(|p| {
                p.binary_search_by_key(&doc, |&(d, _)| d)
                    .ok()
                    .map(|i| p[i].1)
            })
            .unwrap_or(0)
    }

    /// Robertson/Sparck-Jones idf with +1 inside the logarithm.
    pub fn idf(&self, token: &str) -> f64 {
        let n = self.doc_count() as f64;
        let df = self.df(token) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    fn term_weight(&self, token: &str, tf: u32, doc: u32, params: &Bm25Params) -> f64 {
        if tf == 0 {
            return 0.0;
        }
        let tf = tf as f64;
        let len = self.doc_lengths[doc as usize] as f64;
        let norm = if self.avg_length > 0.0 {
            len / self.avg_length
        } else {
            0.0
        };
        self.idf(token) * tf * (params.k1 + 1.0)
            / (tf + params.k1 * (1.0 - params.b + params.b * norm))
    }

    fn position(&self, doc_id: &str) -> Option<u32> {
        self.by_id.get(doc_id).copied()
    }

    /// Sum over query tokens (repeats included) of the BM25 term weight.
    pub fn bm25_score(&self, query_tokens: &[String], doc_id: &str, params: &Bm25Params) -> f64 {
        match self.position(doc_id) {
            Some(doc) => self.score_position(query_tokens, doc, params),
            None => 0.0,
        }
    }

    fn score_position(&self, query_tokens: &[String], doc: u32, params: &Bm25Params) -> f64 {
        query_tokens
            .iter()
            .map(|t| self.term_weight(t, self.tf(t, doc), doc, params))
            .sum()
    }

    /// Candidates ordered by BM25 score (descending), ties by doc id.
    pub fn bm25_rerank(
        &self,
        query: &str,
        candidates: &[String],
        params: &Bm25Params,
    ) -> Vec<(String, f64)> {
        let tokens = tokenize(query);
        let mut scored: Vec<(String, f64)> = candidates
            .iter()
            .map(|d| (d.clone(), self.bm25_score(&tokens, d, params)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored
    }

    /// Top `k` documents with a positive score, optionally restricted to `scope`.
    pub fn bm25_retrieve(
        &self,
        query: &str,
        k: usize,
        params: &Bm25Params,
        scope: Option<&HashSet<String>>,
    ) -> Vec<(String, f64)> {
        let tokens = tokenize(query);
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for t in &tokens {
            for &(doc, tf) in self.postings.get(t).into_iter().flatten() {
                *acc.entry(doc).or_insert(0.0) += self.term_weight(t, tf, doc, params);
            }
        }
        let mut hits: Vec<(String, f64)> = acc
            .into_iter()
            .filter(|&(_, s)| s > 0.0)
            .map(|(d, s)| (self.doc_ids[d as usize].clone(), s))
            .filter(|(d, _)| scope.is_none_or(|s| s.contains(d)))
            .collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        hits.truncate(k);
        hits
    }
}
