//! Exhaustive reference implementations, written directly from the definitions.

use std::collections::{BTreeMap, BTreeSet};

use graphrank::corpus::DocumentRecord;
use graphrank::query::{ConceptSet, DisjunctiveQuery, FactPattern};
use graphrank::{ConceptId, Edge};

/// Bound edges (pattern order) and node binding.
pub type Binding = (Vec<Edge>, BTreeMap<usize, ConceptId>);

pub fn distinct_edges(doc: &DocumentRecord) -> Vec<Edge> {
    let set: BTreeSet<Edge> = doc.statements.iter().map(|s| s.edge()).collect();
    set.into_iter().collect()
}

/// Every assignment of patterns to distinct edges (with orientation) that respects the
/// concept sets, predicates, shared nodes and distinct concepts per node.
pub fn fragments(
    nodes: &[ConceptSet],
    patterns: &[FactPattern],
    doc: &DocumentRecord,
) -> BTreeSet<Binding> {
    let edges = distinct_edges(doc);
    // (edge index, subject concept, object concept) per pattern
    let options: Vec<Vec<(usize, ConceptId, ConceptId)>> = patterns
        .iter()
        .map(|p| {
            let mut v = Vec::new();
            for (i, e) in edges.iter().enumerate() {
                if !p.predicate.accepts(&e.predicate) {
                    continue;
                }
                let fits = |s: &ConceptId, o: &ConceptId| {
                    nodes[p.subject].contains(s) && nodes[p.object].contains(o)
                };
                if fits(&e.subject, &e.object) {
                    v.push((i, e.subject.clone(), e.object.clone()));
                }
                if p.predicate.is_wildcard() && fits(&e.object, &e.subject) {
                    v.push((i, e.object.clone(), e.subject.clone()));
                }
            }
            v
        })
        .collect();
    let mut out = BTreeSet::new();
    if options.iter().any(Vec::is_empty) {
        return out;
    }
    let mut choice = vec![0usize; patterns.len()];
    'outer: loop {
        let picked: Vec<&(usize, ConceptId, ConceptId)> =
            choice.iter().zip(&options).map(|(&c, o)| &o[c]).collect();
        if let Some(b) = check(nodes, patterns, &picked, &edges) {
            out.insert(b);
        }
        for k in 0..choice.len() {
            choice[k] += 1;
            if choice[k] < options[k].len() {
                continue 'outer;
            }
            choice[k] = 0;
        }
        break;
    }
    out
}

fn check(
    nodes: &[ConceptSet],
    patterns: &[FactPattern],
    picked: &[&(usize, ConceptId, ConceptId)],
    edges: &[Edge],
) -> Option<Binding> {
    let used: BTreeSet<usize> = picked.iter().map(|p| p.0).collect();
    if used.len() != picked.len() {
        return None;
    }
    let mut binding: BTreeMap<usize, ConceptId> = BTreeMap::new();
    for (p, (_, s, o)) in patterns.iter().zip(picked) {
        for (node, c) in [(p.subject, s), (p.object, o)] {
            if !nodes[node].contains(c) {
                return None;
            }
            if let Some(prev) = binding.insert(node, c.clone()) {
                if &prev != c {
                    return None;
                }
            }
        }
    }
    let concepts: BTreeSet<&ConceptId> = binding.values().collect();
    if concepts.len() != binding.len() {
        return None;
    }
    Some((picked.iter().map(|p| edges[p.0].clone()).collect(), binding))
}

fn pooled(b: &Binding) -> Binding {
    let mut edges = b.0.clone();
    edges.sort();
    (edges, b.1.clone())
}

/// Expected retrieval outcome: full and partial documents with pooled fragment keys.
#[derive(Debug, Default, PartialEq)]
pub struct Expected {
    pub full: BTreeMap<String, BTreeSet<Binding>>,
    pub partial: BTreeMap<String, BTreeSet<Binding>>,
}

pub fn retrieve(query: &DisjunctiveQuery, docs: &[DocumentRecord]) -> Expected {
    let mut out = Expected::default();
    let distinct: BTreeSet<FactPattern> = query
        .alternatives
        .iter()
        .flatten()
        .map(|p| p.canonical())
        .collect();
    for doc in docs {
        let mut full = BTreeSet::new();
        for alt in &query.alternatives {
            full.extend(fragments(&query.nodes, alt, doc).iter().map(pooled));
        }
        if !full.is_empty() {
            out.full.insert(doc.doc_id.clone(), full);
            continue;
        }
        let mut partial = BTreeSet::new();
        for p in &distinct {
            partial.extend(
                fragments(&query.nodes, std::slice::from_ref(p), doc)
                    .iter()
                    .map(pooled),
            );
        }
        if !partial.is_empty() {
            out.partial.insert(doc.doc_id.clone(), partial);
        }
    }
    out
}

/// Spanning trees of the complete graph on `k` nodes by checking every (k-1)-edge subset.
pub fn spanning_trees(k: usize) -> BTreeSet<BTreeSet<(usize, usize)>> {
    let all: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << all.len()) {
        if mask.count_ones() as usize != k - 1 {
            continue;
        }
        let chosen: BTreeSet<(usize, usize)> = all
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, e)| *e)
            .collect();
        let mut seen = vec![false; k];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(n) = stack.pop() {
            for &(a, b) in &chosen {
                for (x, y) in [(a, b), (b, a)] {
                    if x == n && !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        if seen.iter().all(|&s| s) {
            out.insert(chosen);
        }
    }
    out
}

/// BM25 score of every document for `query` tokens, straight from the formula.
pub fn bm25_all(docs: &[Vec<String>], query: &[String], k1: f64, b: f64) -> Vec<f64> {
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    docs.iter()
        .map(|d| {
            query
                .iter()
                .map(|t| {
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                    let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                    idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avg))
                })
                .sum()
        })
        .collect()
}
