//! Statement indexing and fragment enumeration.
//!
//! A fragment binds every pattern of a conjunction to a distinct document edge such that
//! the bound endpoints belong to the pattern's concept sets, a node shared by several
//! patterns binds to one concept throughout, and distinct nodes bind to distinct concepts.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use crate::corpus::{ConceptId, Corpus, DocumentGraph, Edge};
use crate::query::{DisjunctiveQuery, FactPattern, QueryGraph};

/// Fragments enumerated per document before truncation.
pub const FRAGMENT_CAP: usize = 1024;

fn pair_key(a: &ConceptId, b: &ConceptId) -> (ConceptId, ConceptId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Posting lists over all document graphs. Document ids are corpus positions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatementIndex {
    pub triples: BTreeMap<Edge, Vec<u32>>,
    pub pairs: HashMap<(ConceptId, ConceptId), Vec<(u32, Edge)>>,
    pub concepts: HashMap<ConceptId, Vec<u32>>,
}

impl StatementIndex {
    pub fn build(corpus: &Corpus) -> Self {
        let mut index = StatementIndex::default();
        for (i, (doc, graph)) in corpus.documents().iter().zip(corpus.graphs()).enumerate() {
            let i = i as u32;
            for edge in graph.edges.keys() {
                index.triples.entry(edge.clone()).or_default().push(i);
                index
                    .pairs
                    .entry(pair_key(&edge.subject, &edge.object))
                    .or_default()
                    .push((i, edge.clone()));
            }
            for c in doc.concepts() {
                index.concepts.entry(c.clone()).or_default().push(i);
            }
        }
        index
    }

    /// Documents containing the pair `{a, b}`, with the connecting edges.
    pub fn pair(&self, a: &ConceptId, b: &ConceptId) -> &[(u32, Edge)] {
        self.pairs.get(&pair_key(a, b)).map_or(&[], Vec::as_slice)
    }

    pub fn triple(&self, e: &Edge) -> &[u32] {
        self.triples.get(e).map_or(&[], Vec::as_slice)
    }

    pub fn docs_mentioning(&self, c: &ConceptId) -> &[u32] {
        self.concepts.get(c).map_or(&[], Vec::as_slice)
    }

    /// Documents with at least one edge satisfying `pattern`.
    pub fn pattern_docs(&self, q: QueryGraph<'_>, pattern: &FactPattern) -> BTreeSet<u32> {
        let subjects = &q.nodes[pattern.subject];
        let objects = &q.nodes[pattern.object];
        let mut docs = BTreeSet::new();
        for s in subjects.ids() {
            for o in objects.ids() {
                if s == o {
                    continue;
                }
                for (doc, edge) in self.pair(s, o) {
                    let forward = &edge.subject == s;
                    if (forward || pattern.predicate.is_wildcard())
                        && pattern.predicate.accepts(&edge.predicate)
                    {
                        docs.insert(*doc);
                    }
                }
            }
        }
        docs
    }

    /// Checks that the index describes exactly the corpus graphs.
    pub fn consistent_with(&self, corpus: &Corpus) -> bool {
        *self == StatementIndex::build(corpus)
    }
}

/// One binding of a conjunction into a document graph.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fragment {
    pub doc_id: String,
    /// Bound edge per pattern, in pattern order.
    pub edges: Vec<Edge>,
    /// Query node index -> bound concept.
    pub nodes: BTreeMap<usize, ConceptId>,
}

impl Fragment {
    /// Identity used when pooling fragments over alternatives: bound edge set plus node binding.
    fn pool_key(&self) -> (Vec<Edge>, BTreeMap<usize, ConceptId>) {
        let mut edges = self.edges.clone();
        edges.sort();
        (edges, self.nodes.clone())
    }

    pub fn bound_concepts(&self) -> BTreeSet<&ConceptId> {
        self.nodes.values().collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Matches {
    pub fragments: Vec<Fragment>,
    pub truncated: bool,
}

struct Search<'a> {
    query: QueryGraph<'a>,
    graph: &'a DocumentGraph,
    cap: usize,
    binding: Vec<Option<ConceptId>>,
    edges: Vec<&'a Edge>,
    out: Matches,
}

impl<'a> Search<'a> {
    fn bind(&mut self, node: usize, c: &ConceptId) -> Option<bool> {
        // Some(true) = newly bound, Some(false) = already bound to c, None = conflict
        match &self.binding[node] {
            Some(b) if b == c => Some(false),
            Some(_) => None,
            None => {
                if !self.query.nodes[node].contains(c)
                    || self.binding.iter().flatten().any(|b| b == c)
                {
                    return None;
                }
                self.binding[node] = Some(c.clone());
                Some(true)
            }
        }
    }

    fn try_edge(&mut self, depth: usize, edge: &'a Edge, s: &ConceptId, o: &ConceptId) {
        let pattern = &self.query.patterns[depth];
        let Some(new_s) = self.bind(pattern.subject, s) else {
            return;
        };
        if let Some(new_o) = self.bind(pattern.object, o) {
            self.edges.push(edge);
            self.descend(depth + 1);
            self.edges.pop();
            if new_o {
                self.binding[pattern.object] = None;
            }
        }
        if new_s {
            self.binding[pattern.subject] = None;
        }
    }

    fn descend(&mut self, depth: usize) {
        if self.out.truncated {
            return;
        }
        if depth == self.query.patterns.len() {
            if self.out.fragments.len() == self.cap {
                self.out.truncated = true;
                return;
            }
            self.out.fragments.push(Fragment {
                doc_id: self.graph.doc_id.clone(),
                edges: self.edges.iter().map(|e| (*e).clone()).collect(),
                nodes: self
                    .binding
                    .iter()
                    .enumerate()
                    .filter_map(|(i, b)| b.clone().map(|c| (i, c)))
                    .collect(),
            });
            return;
        }
        let pattern = &self.query.patterns[depth];
        let graph = self.graph;
        for edge in graph.edges.keys() {
            if !pattern.predicate.accepts(&edge.predicate) || self.edges.contains(&edge) {
                continue;
            }
            self.try_edge(depth, edge, &edge.subject, &edge.object);
            if pattern.predicate.is_wildcard() {
                self.try_edge(depth, edge, &edge.object, &edge.subject);
            }
        }
    }
}

/// Enumerates all distinct fragments of `query` in `graph`, in pattern order then edge
/// order (forward orientation before reverse), stopping after `cap` fragments.
pub fn matches_capped(query: QueryGraph<'_>, graph: &DocumentGraph, cap: usize) -> Matches {
    let mut search = Search {
        query,
        graph,
        cap,
        binding: vec![None; query.nodes.len()],
        edges: Vec::with_capacity(query.patterns.len()),
        out: Matches::default(),
    };
    search.descend(0);
    search.out
}

pub fn matches(query: QueryGraph<'_>, graph: &DocumentGraph) -> Matches {
    matches_capped(query, graph, FRAGMENT_CAP)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    pub full: BTreeMap<String, Vec<Fragment>>,
    pub partial: BTreeMap<String, Vec<Fragment>>,
    /// Documents whose fragment enumeration hit the cap.
    pub truncated: BTreeSet<String>,
}

impl MatchResult {
    pub fn full_docs(&self) -> BTreeSet<&str> {
        self.full.keys().map(String::as_str).collect()
    }

    pub fn partial_docs(&self) -> BTreeSet<&str> {
        self.partial.keys().map(String::as_str).collect()
    }
}

fn pool(
    target: &mut Vec<Fragment>,
    seen: &mut HashSet<(Vec<Edge>, BTreeMap<usize, ConceptId>)>,
    found: Vec<Fragment>,
) {
    for f in found {
        if seen.insert(f.pool_key()) {
            target.push(f);
        }
    }
}

type Verified = Vec<(u32, Matches)>;

fn verify(query: QueryGraph<'_>, corpus: &Corpus, docs: &BTreeSet<u32>) -> Verified {
    let docs: Vec<u32> = docs.iter().copied().collect();
    docs.par_iter()
        .map(|&d| (d, matches(query, corpus.graph(d as usize))))
        .filter(|(_, m)| !m.fragments.is_empty())
        .collect()
}

/// Full matches of any alternative plus partial matches of individual patterns.
///
/// Full fragments are pooled over alternatives and de-duplicated. Partial documents
/// match at least one pattern but no complete alternative. `scope` restricts the
/// candidate documents by id.
pub fn retrieve(
    query: &DisjunctiveQuery,
    index: &StatementIndex,
    corpus: &Corpus,
    scope: Option<&HashSet<String>>,
) -> MatchResult {
    let in_scope =
        |d: &u32| scope.is_none_or(|s| s.contains(corpus.document(*d as usize).doc_id()));
    let mut result = MatchResult::default();

    if query.is_containment() {
        let mut docs: BTreeMap<u32, Vec<Fragment>> = BTreeMap::new();
        for c in query.nodes[0].ids() {
            for &d in index.docs_mentioning(c).iter().filter(|d| in_scope(d)) {
                docs.entry(d).or_default().push(Fragment {
                    doc_id: corpus.document(d as usize).doc_id().to_owned(),
                    edges: Vec::new(),
                    nodes: BTreeMap::from([(0, c.clone())]),
                });
            }
        }
        for (d, fragments) in docs {
            result
                .full
                .insert(corpus.document(d as usize).doc_id().to_owned(), fragments);
        }
        return result;
    }

    let mut pattern_docs: BTreeMap<FactPattern, BTreeSet<u32>> = BTreeMap::new();
    let any = query.alternative(0);
    for p in query.distinct_patterns() {
        let docs = index
            .pattern_docs(any, &p)
            .into_iter()
            .filter(|d| in_scope(d))
            .collect();
        pattern_docs.insert(p, docs);
    }

    let mut full: BTreeMap<u32, (Vec<Fragment>, HashSet<_>)> = BTreeMap::new();
    let mut truncated = BTreeSet::new();
    for alt in 0..query.alternatives.len() {
        let graph = query.alternative(alt);
        let mut candidates: Option<BTreeSet<u32>> = None;
        for p in graph.patterns {
            let docs = &pattern_docs[&p.canonical()];
            candidates = Some(match candidates {
                None => docs.clone(),
                Some(c) => c.intersection(docs).copied().collect(),
            });
        }
        for (d, m) in verify(graph, corpus, &candidates.unwrap_or_default()) {
            if m.truncated {
                truncated.insert(d);
            }
            let (list, seen) = full.entry(d).or_default();
            pool(list, seen, m.fragments);
        }
    }

    let mut partial: BTreeMap<u32, (Vec<Fragment>, HashSet<_>)> = BTreeMap::new();
    for (p, docs) in &pattern_docs {
        let remaining: BTreeSet<u32> = docs
            .iter()
            .filter(|d| !full.contains_key(d))
            .copied()
            .collect();
        let single = std::slice::from_ref(p);
        let graph = QueryGraph {
            nodes: &query.nodes,
            patterns: single,
        };
        for (d, m) in verify(graph, corpus, &remaining) {
            if m.truncated {
                truncated.insert(d);
            }
            let (list, seen) = partial.entry(d).or_default();
            pool(list, seen, m.fragments);
        }
    }

    let name = |d: u32| corpus.document(d as usize).doc_id().to_owned();
    result.full = full.into_iter().map(|(d, (l, _))| (name(d), l)).collect();
    result.partial = partial
        .into_iter()
        .map(|(d, (l, _))| (name(d), l))
        .collect();
    result.truncated = truncated.into_iter().map(name).collect();
    result
}
