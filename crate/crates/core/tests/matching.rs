mod support;

use std::collections::{BTreeSet, HashSet};

use graphrank::matcher::{matches, matches_capped, retrieve, StatementIndex};
use graphrank::query::{translate_term_query, TermTriple};
use graphrank::vocabulary::Vocabulary;
use graphrank::Corpus;
use proptest::prelude::*;
use rand::Rng;
use support::gen::{self, SMALL};
use support::oracle::{self, Binding};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn fragments_equal_enumeration(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let records = gen::records(&mut rng, SMALL);
        let corpus = gen::corpus_of(&records);
        let query = gen::query(&mut rng, SMALL.concepts);
        for alt in 0..query.alternatives.len() {
            for (i, record) in records.iter().enumerate() {
                let found = matches(query.alternative(alt), corpus.graph(i));
                let got: BTreeSet<Binding> = found.fragments.iter().map(|f| (f.edges.clone(), f.nodes.clone())).collect();
                prop_assert_eq!(got.len(), found.fragments.len());
                prop_assert_eq!(got, oracle::fragments(&query.nodes, &query.alternatives[alt], record));
            }
        }
    }

    #[test]
    fn fragment_edges_are_distinct_and_present(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let records = gen::records(&mut rng, SMALL);
        let corpus = gen::corpus_of(&records);
        let query = gen::query(&mut rng, SMALL.concepts);
        for i in 0..corpus.len() {
            for f in matches(query.alternative(0), corpus.graph(i)).fragments {
                let distinct: HashSet<_> = f.edges.iter().collect();
                prop_assert_eq!(distinct.len(), f.edges.len());
                prop_assert!(f.edges.iter().all(|e| corpus.graph(i).contains(e)));
                let bound: HashSet<_> = f.nodes.values().collect();
                prop_assert_eq!(bound.len(), f.nodes.len());
            }
        }
    }

    #[test]
    fn retrieval_pools_like_the_oracle(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let records = gen::records(&mut rng, SMALL);
        let corpus = gen::corpus_of(&records);
        let query = gen::query(&mut rng, SMALL.concepts);
        let result = retrieve(&query, &StatementIndex::build(&corpus), &corpus, None);
        let expected = oracle::retrieve(&query, &records);
        let full: BTreeSet<&String> = result.full.keys().collect();
        let partial: BTreeSet<&String> = result.partial.keys().collect();
        prop_assert_eq!(full, expected.full.keys().collect::<BTreeSet<_>>());
        prop_assert_eq!(partial, expected.partial.keys().collect::<BTreeSet<_>>());
        prop_assert!(result.full.keys().all(|d| !result.partial.contains_key(d)));
    }

    #[test]
    fn scope_filters_without_changing_matches(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let records = gen::records(&mut rng, SMALL);
        let corpus = gen::corpus_of(&records);
        let index = StatementIndex::build(&corpus);
        let query = gen::query(&mut rng, SMALL.concepts);
        let scope: HashSet<String> = records.iter().filter(|_| rng.gen_bool(0.5)).map(|r| r.doc_id.clone()).collect();
        let all = retrieve(&query, &index, &corpus, None);
        let scoped = retrieve(&query, &index, &corpus, Some(&scope));
        let filter = |m: &std::collections::BTreeMap<String, Vec<graphrank::matcher::Fragment>>| {
            m.iter().filter(|(d, _)| scope.contains(*d)).map(|(d, f)| (d.clone(), f.len())).collect::<Vec<_>>()
        };
        let count = |m: &std::collections::BTreeMap<String, Vec<graphrank::matcher::Fragment>>| {
            m.iter().map(|(d, f)| (d.clone(), f.len())).collect::<Vec<_>>()
        };
        prop_assert_eq!(count(&scoped.full), filter(&all.full));
        prop_assert_eq!(count(&scoped.partial), filter(&all.partial));
    }
}

fn fixture() -> (Corpus, Vocabulary) {
    let corpus = Corpus::load(support::fixture("fix1/corpus.jsonl")).unwrap();
    let vocabulary = Vocabulary::load(support::fixture("fix1/vocabulary.tsv")).unwrap();
    (corpus, vocabulary)
}

#[test]
fn treats_triple_matches_one_document() {
    let (corpus, vocabulary) = fixture();
    let q = translate_term_query(
        &[TermTriple::new(
            "metformin",
            Some("treats"),
            "diabetes mellitus",
        )],
        &vocabulary,
        None,
    )
    .unwrap();
    let result = retrieve(&q, &StatementIndex::build(&corpus), &corpus, None);
    assert_eq!(result.full_docs(), BTreeSet::from(["D-A"]));
    assert!(result.partial.is_empty());
    assert!(result.truncated.is_empty());
}

#[test]
fn wildcard_matches_either_direction() {
    let (corpus, vocabulary) = fixture();
    let forward = translate_term_query(
        &[TermTriple::new("metformin", None, "diabetes mellitus")],
        &vocabulary,
        None,
    )
    .unwrap();
    let backward = translate_term_query(
        &[TermTriple::new("diabetes mellitus", None, "metformin")],
        &vocabulary,
        None,
    )
    .unwrap();
    let index = StatementIndex::build(&corpus);
    let a = retrieve(&forward, &index, &corpus, None);
    let b = retrieve(&backward, &index, &corpus, None);
    assert!(!a.full.is_empty());
    assert_eq!(a.full_docs(), b.full_docs());
}

#[test]
fn capped_enumeration_reports_truncation() {
    let mut rng = gen::rng(7);
    let shape = gen::Shape {
        max_docs: 1,
        concepts: 3,
        max_edges: 15,
    };
    for _ in 0..50 {
        let records = gen::records(&mut rng, shape);
        let corpus = gen::corpus_of(&records);
        let query = gen::query(&mut rng, shape.concepts);
        let all = matches(query.alternative(0), corpus.graph(0));
        if all.fragments.len() < 2 {
            continue;
        }
        let capped = matches_capped(query.alternative(0), corpus.graph(0), 1);
        assert!(capped.truncated);
        assert_eq!(capped.fragments.len(), 1);
        return;
    }
    panic!("no query with two fragments generated");
}
