//! Seeded random corpora and queries.

use graphrank::corpus::{ConceptMention, Document, DocumentRecord, StatementExtraction};
use graphrank::query::{ConceptSet, DisjunctiveQuery, FactPattern, PredicateSlot};
use graphrank::{ConceptId, Corpus};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub const PREDICATES: [&str; 3] = ["treats", "inhibits", "associated"];
pub const LEVELS: [(&str, u8); 3] = [("treats", 1), ("inhibits", 2), ("associated", 3)];
const FILLER: [&str; 8] = [
    "patients", "study", "effect", "cells", "risk", "trial", "dose", "response",
];
const SCORES: [f64; 5] = [1.0, 0.8, 0.5, 0.25, 0.1];

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn concept(i: usize) -> ConceptId {
    ConceptId(format!("C{i}"))
}

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_docs: usize,
    pub concepts: usize,
    pub max_edges: usize,
}

pub const SMALL: Shape = Shape {
    max_docs: 50,
    concepts: 10,
    max_edges: 15,
};

/// One document: random statements plus one to three mentions per involved concept.
pub fn record(rng: &mut TestRng, doc_id: String, shape: Shape) -> DocumentRecord {
    let text_length = rng.gen_range(40..400usize);
    let n_statements = rng.gen_range(0..=shape.max_edges);
    let mut statements = Vec::with_capacity(n_statements);
    for _ in 0..n_statements {
        let s = rng.gen_range(0..shape.concepts);
        let mut o = rng.gen_range(0..shape.concepts - 1);
        if o >= s {
            o += 1;
        }
        statements.push(StatementExtraction {
            subject: concept(s),
            predicate: PREDICATES.choose(rng).unwrap().to_string(),
            object: concept(o),
            confidence: rng.gen_range(1..=100) as f64 / 100.0,
            sentence_index: rng.gen_range(0..5),
        });
    }
    let mut involved: Vec<ConceptId> = statements
        .iter()
        .flat_map(|s| [s.subject.clone(), s.object.clone()])
        .collect();
    if rng.gen_bool(0.5) {
        involved.push(concept(rng.gen_range(0..shape.concepts)));
    }
    involved.sort();
    involved.dedup();
    let mut mentions = Vec::new();
    let mut tokens = Vec::new();
    for c in &involved {
        for _ in 0..rng.gen_range(1..=3) {
            let start = rng.gen_range(0..text_length - 4);
            mentions.push(ConceptMention {
                concept_id: c.clone(),
                start,
                end: start + 4,
            });
            tokens.push(c.0.to_lowercase());
        }
    }
    for _ in 0..rng.gen_range(1..20) {
        tokens.push(FILLER.choose(rng).unwrap().to_string());
    }
    tokens.shuffle(rng);
    mentions.sort_by_key(|m| m.start);
    DocumentRecord {
        doc_id,
        text_length,
        tokens,
        mentions,
        statements,
    }
}

pub fn records(rng: &mut TestRng, shape: Shape) -> Vec<DocumentRecord> {
    let n = rng.gen_range(1..=shape.max_docs);
    (0..n)
        .map(|i| record(rng, format!("doc{i:05}"), shape))
        .collect()
}

pub fn corpus_of(records: &[DocumentRecord]) -> Corpus {
    Corpus::from_documents(
        records
            .iter()
            .map(|r| Document::new(r.clone()).unwrap())
            .collect(),
    )
    .unwrap()
}

pub fn concept_set(rng: &mut TestRng, concepts: usize, max_size: usize) -> ConceptSet {
    let mut ids: Vec<usize> = (0..concepts).collect();
    ids.shuffle(rng);
    let size = rng.gen_range(1..=max_size);
    ConceptSet::original(
        ids[..size]
            .iter()
            .map(|&i| (concept(i), *SCORES.choose(rng).unwrap())),
    )
    .unwrap()
}

fn predicate_slot(rng: &mut TestRng) -> PredicateSlot {
    if rng.gen_bool(0.5) {
        return PredicateSlot::Wildcard;
    }
    let mut labels: Vec<&str> = PREDICATES.to_vec();
    labels.shuffle(rng);
    let n = rng.gen_range(1..=2);
    PredicateSlot::Labels(labels[..n].iter().map(|s| s.to_string()).collect())
}

pub fn patterns(rng: &mut TestRng, nodes: usize, max_patterns: usize) -> Vec<FactPattern> {
    (0..rng.gen_range(1..=max_patterns))
        .map(|_| {
            let s = rng.gen_range(0..nodes);
            let mut o = rng.gen_range(0..nodes - 1);
            if o >= s {
                o += 1;
            }
            FactPattern::new(s, predicate_slot(rng), o)
        })
        .collect()
}

/// Up to three alternatives of up to three patterns over two to four shared nodes.
pub fn query(rng: &mut TestRng, concepts: usize) -> DisjunctiveQuery {
    let n_nodes = rng.gen_range(2..=4);
    let nodes = (0..n_nodes)
        .map(|_| concept_set(rng, concepts, 3))
        .collect();
    let alternatives = (0..rng.gen_range(1..=3))
        .map(|_| patterns(rng, n_nodes, 3))
        .collect();
    let terms = (0..n_nodes).map(|i| format!("c{i}")).collect();
    DisjunctiveQuery::new(nodes, alternatives, terms).unwrap()
}
