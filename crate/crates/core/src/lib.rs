//! Graph-based retrieval over pre-annotated biomedical documents.
//!
//! Documents carry concept mentions and subject–predicate–object statements. Queries are
//! small graphs of concept sets; documents are retrieved by matching the query graph
//! against each document graph and ranked by GraphRank or BM25.

pub mod baselines;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod index;
pub mod matcher;
pub mod ontology;
pub mod pipeline;
pub mod query;
pub mod ranker;
pub mod text;
pub mod topics;
pub mod vocabulary;

pub use corpus::{ConceptId, Corpus, Document, DocumentGraph, Edge};
pub use error::{Error, Result};
pub use index::Index;
pub use pipeline::{Hit, MatchMode, Mode, RankerKind, Request};
pub use query::{ConceptSet, DisjunctiveQuery, FactPattern, PredicateSlot};
pub use vocabulary::{ConceptType, Vocabulary};
