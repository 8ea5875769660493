//! Straight-line GraphRank evaluator over raw document records.

use std::collections::{BTreeMap, HashMap};

use graphrank::corpus::DocumentRecord;
use graphrank::query::ConceptSet;
use graphrank::{ConceptId, Edge};

use super::oracle::{distinct_edges, Binding};

pub struct Reference<'a> {
    pub docs: &'a [DocumentRecord],
    pub specificity: HashMap<String, f64>,
    pub weights: [f64; 4],
}

/// Raw similarity values of one fragment: confidence, min tf-idf, coverage, relational,
/// translation.
pub type Raw = [f64; 5];

impl<'a> Reference<'a> {
    pub fn new(docs: &'a [DocumentRecord], levels: &[(&str, u8)], weights: [f64; 4]) -> Self {
        let specificity = levels
            .iter()
            .map(|&(p, l)| (p.to_string(), [1.0, 0.5, 0.25][l as usize - 1]))
            .collect();
        Reference {
            docs,
            specificity,
            weights,
        }
    }

    fn doc(&self, id: &str) -> &DocumentRecord {
        self.docs.iter().find(|d| d.doc_id == id).unwrap()
    }

    fn conf(&self, d: &DocumentRecord, e: &Edge) -> f64 {
        d.statements
            .iter()
            .filter(|s| {
                s.subject == e.subject && s.predicate == e.predicate && s.object == e.object
            })
            .map(|s| s.confidence)
            .fold(0.0, f64::max)
    }

    fn count(&self, d: &DocumentRecord, c: &ConceptId) -> usize {
        d.mentions.iter().filter(|m| &m.concept_id == c).count()
    }

    fn tf(&self, d: &DocumentRecord, c: &ConceptId) -> f64 {
        let max = d
            .mentions
            .iter()
            .map(|m| self.count(d, &m.concept_id))
            .max()
            .unwrap();
        self.count(d, c) as f64 / max as f64
    }

    fn idf(&self, c: &ConceptId) -> f64 {
        let df = self.docs.iter().filter(|d| self.count(d, c) > 0).count();
        if df == 0 {
            0.0
        } else {
            (self.docs.len() as f64 / df as f64).ln()
        }
    }

    fn coverage(&self, d: &DocumentRecord, c: &ConceptId) -> f64 {
        let starts: Vec<usize> = d
            .mentions
            .iter()
            .filter(|m| &m.concept_id == c)
            .map(|m| m.start)
            .collect();
        let first = *starts.iter().min().unwrap();
        let last = *starts.iter().max().unwrap();
        (last - first) as f64 / d.text_length as f64
    }

    fn tfidf(&self, d: &DocumentRecord, e: &Edge) -> f64 {
        (self.tf(d, &e.subject) * self.idf(&e.subject)
            + self.tf(d, &e.object) * self.idf(&e.object))
            * self.specificity[&e.predicate]
    }

    fn edge_score(&self, d: &DocumentRecord, e: &Edge) -> f64 {
        let cov = self
            .coverage(d, &e.subject)
            .min(self.coverage(d, &e.object));
        (self.tfidf(d, e) + cov + self.conf(d, e)) / 3.0
    }

    fn relational(&self, d: &DocumentRecord, e: &Edge) -> f64 {
        let ends = [&e.subject, &e.object];
        let mut total = 0.0;
        for n in distinct_edges(d) {
            let touches = ends.contains(&&n.subject) || ends.contains(&&n.object);
            let same_pair = (n.subject == e.subject && n.object == e.object)
                || (n.subject == e.object && n.object == e.subject);
            if touches && !same_pair {
                total += self.edge_score(d, &n);
            }
        }
        total
    }

    pub fn raw(&self, doc_id: &str, fragment: &Binding, nodes: &[ConceptSet]) -> Raw {
        let d = self.doc(doc_id);
        let (edges, binding) = fragment;
        let confidence = edges
            .iter()
            .map(|e| self.conf(d, e))
            .fold(f64::INFINITY, f64::min);
        let min_tfidf = edges
            .iter()
            .map(|e| self.tfidf(d, e))
            .fold(f64::INFINITY, f64::min);
        let coverage = binding
            .values()
            .map(|c| self.coverage(d, c))
            .fold(f64::INFINITY, f64::min);
        let relational: f64 = edges.iter().map(|e| self.relational(d, e)).sum();
        let translation = binding
            .iter()
            .map(|(&n, c)| nodes[n].score(c).unwrap())
            .fold(1.0, f64::min);
        [confidence, min_tfidf, coverage, relational, translation]
    }

    /// Document scores of one match class: each similarity divided by its maximum over the
    /// class, weighted, scaled by translation; a document keeps its best fragment.
    pub fn rank(
        &self,
        class: &BTreeMap<String, Vec<Binding>>,
        nodes: &[ConceptSet],
    ) -> BTreeMap<String, f64> {
        let raws: Vec<(String, Raw)> = class
            .iter()
            .flat_map(|(d, fs)| fs.iter().map(move |f| (d.clone(), f)))
            .map(|(d, f)| {
                let r = self.raw(&d, f, nodes);
                (d, r)
            })
            .collect();
        let mut max = [0.0f64; 4];
        for (_, r) in &raws {
            for i in 0..4 {
                max[i] = max[i].max(r[i]);
            }
        }
        let mut out: BTreeMap<String, f64> = BTreeMap::new();
        for (d, r) in raws {
            let mut sum = 0.0;
            for i in 0..4 {
                if max[i] > 0.0 {
                    sum += self.weights[i] * r[i] / max[i];
                }
            }
            let score = r[4] * sum;
            let best = out.entry(d).or_insert(f64::NEG_INFINITY);
            *best = best.max(score);
        }
        out
    }
}
