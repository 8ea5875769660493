//! Query model and the compilation paths from user input to graph queries.
//!
//! A query graph has a list of nodes (concept sets) and patterns that connect node
//! indices. A [`DisjunctiveQuery`] holds several alternative pattern lists over the same
//! nodes, which is how keyword topics without any relation information are expressed:
//! one alternative per spanning tree over the components.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::corpus::ConceptId;
use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::vocabulary::{greedy_concept_detection, ConceptType, Vocabulary};

/// Patterns per conjunction.
pub const MAX_PATTERNS: usize = 8;
/// Components per keyword topic.
pub const MAX_COMPONENTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConceptOrigin {
    Original,
    Subclass,
    Superclass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpandedConcept {
    pub concept_id: ConceptId,
    pub score: f64,
    pub origin: ConceptOrigin,
}

/// Alternative concepts for one query node, kept sorted by concept id.
#[derive(Clone, Debug, PartialEq)]
pub struct ConceptSet {
    alternatives: Vec<ExpandedConcept>,
}

impl ConceptSet {
    /// Builds a set of directly translated concepts. Duplicate ids keep their best score.
    pub fn original(concepts: impl IntoIterator<Item = (ConceptId, f64)>) -> Result<Self> {
        let mut set = ConceptSet {
            alternatives: Vec::new(),
        };
        for (concept_id, score) in concepts {
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::InvalidQuery(format!(
                    "score {score} for {concept_id} outside [0, 1]"
                )));
            }
            match set.position(&concept_id) {
                Ok(i) => {
                    let a = &mut set.alternatives[i];
                    a.score = a.score.max(score);
                }
                Err(i) => set.alternatives.insert(
                    i,
                    ExpandedConcept {
                        concept_id,
                        score,
                        origin: ConceptOrigin::Original,
                    },
                ),
            }
        }
        if set.alternatives.is_empty() {
            return Err(Error::InvalidQuery("empty concept set".into()));
        }
        Ok(set)
    }

    fn position(&self, c: &ConceptId) -> std::result::Result<usize, usize> {
        self.alternatives.binary_search_by(|a| a.concept_id.cmp(c))
    }

    /// Adds a concept, or keeps the existing entry untouched if the id is present.
    pub fn insert(&mut self, concept: ExpandedConcept) -> bool {
        match self.position(&concept.concept_id) {
            Ok(_) => false,
            Err(i) => {
                self.alternatives.insert(i, concept);
                true
            }
        }
    }

    pub fn alternatives(&self) -> &[ExpandedConcept] {
        &self.alternatives
    }

    pub fn ids(&self) -> impl Iterator<Item = &ConceptId> {
        self.alternatives.iter().map(|a| &a.concept_id)
    }

    pub fn get(&self, c: &ConceptId) -> Option<&ExpandedConcept> {
        self.position(c).ok().map(|i| &self.alternatives[i])
    }

    pub fn contains(&self, c: &ConceptId) -> bool {
        self.position(c).is_ok()
    }

    pub fn score(&self, c: &ConceptId) -> Option<f64> {
        self.get(c).map(|a| a.score)
    }

    pub fn best_score(&self) -> f64 {
        self.alternatives
            .iter()
            .map(|a| a.score)
            .fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.alternatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alternatives.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PredicateSlot {
    Wildcard,
    Labels(BTreeSet<String>),
}

impl PredicateSlot {
    pub fn label(label: &str) -> Self {
        PredicateSlot::Labels(BTreeSet::from([label.to_owned()]))
    }

    pub fn accepts(&self, predicate: &str) -> bool {
        match self {
            PredicateSlot::Wildcard => true,
            PredicateSlot::Labels(labels) => labels.contains(predicate),
        }
    }

    pub fn is_wildcard(&self) -> bool {
        matches!(self, PredicateSlot::Wildcard)
    }
}

impl fmt::Display for PredicateSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateSlot::Wildcard => f.write_str("?"),
            PredicateSlot::Labels(l) => {
                f.write_str(&l.iter().cloned().collect::<Vec<_>>().join("|"))
            }
        }
    }
}

/// One query edge between two node indices. Wildcard patterns match either direction.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FactPattern {
    pub subject: usize,
    pub predicate: PredicateSlot,
    pub object: usize,
}

impl FactPattern {
    pub fn new(subject: usize, predicate: PredicateSlot, object: usize) -> Self {
        FactPattern {
            subject,
            predicate,
            object,
        }
    }

    /// Identity of the pattern up to direction when the predicate is a wildcard.
    pub fn canonical(&self) -> FactPattern {
        if self.predicate.is_wildcard() && self.object < self.subject {
            FactPattern::new(self.object, self.predicate.clone(), self.subject)
        } else {
            self.clone()
        }
    }
}

/// Borrowed view of a conjunction over shared nodes.
#[derive(Clone, Copy, Debug)]
pub struct QueryGraph<'a> {
    pub nodes: &'a [ConceptSet],
    pub patterns: &'a [FactPattern],
}

fn validate_patterns(nodes: &[ConceptSet], patterns: &[FactPattern]) -> Result<()> {
    if patterns.is_empty() {
        return Err(Error::InvalidQuery(
            "a conjunction needs at least one pattern".into(),
        ));
    }
    if patterns.len() > MAX_PATTERNS {
        return Err(Error::InvalidQuery(format!(
            "{} patterns exceed the limit of {MAX_PATTERNS}",
            patterns.len()
        )));
    }
    for p in patterns {
        if p.subject >= nodes.len() || p.object >= nodes.len() {
            return Err(Error::InvalidQuery(
                "pattern references an unknown node".into(),
            ));
        }
        if p.subject == p.object {
            return Err(Error::InvalidQuery(
                "pattern connects a node to itself".into(),
            ));
        }
        if let PredicateSlot::Labels(l) = &p.predicate {
            if l.is_empty() {
                return Err(Error::InvalidQuery("empty predicate set".into()));
            }
        }
    }
    Ok(())
}

/// A conjunction of fact patterns.
#[derive(Clone, Debug, PartialEq)]
pub struct NarrativeQuery {
    pub nodes: Vec<ConceptSet>,
    pub patterns: Vec<FactPattern>,
}

impl NarrativeQuery {
    pub fn new(nodes: Vec<ConceptSet>, patterns: Vec<FactPattern>) -> Result<Self> {
        validate_patterns(&nodes, &patterns)?;
        Ok(NarrativeQuery { nodes, patterns })
    }

    pub fn graph(&self) -> QueryGraph<'_> {
        QueryGraph {
            nodes: &self.nodes,
            patterns: &self.patterns,
        }
    }
}

/// A disjunction of conjunctions over one shared list of nodes.
///
/// With no alternatives the query is a single-node containment query: a document
/// matches when it mentions any concept of the node.
#[derive(Clone, Debug, PartialEq)]
pub struct DisjunctiveQuery {
    pub nodes: Vec<ConceptSet>,
    pub alternatives: Vec<Vec<FactPattern>>,
    /// The user's original terms, one per node; used as text for the BM25 baselines.
    pub terms: Vec<String>,
}

impl DisjunctiveQuery {
    pub fn new(
        nodes: Vec<ConceptSet>,
        alternatives: Vec<Vec<FactPattern>>,
        terms: Vec<String>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidQuery("query without nodes".into()));
        }
        if alternatives.is_empty() && nodes.len() != 1 {
            return Err(Error::InvalidQuery(
                "only single-node queries may omit patterns".into(),
            ));
        }
        for alt in &alternatives {
            validate_patterns(&nodes, alt)?;
        }
        Ok(DisjunctiveQuery {
            nodes,
            alternatives,
            terms,
        })
    }

    pub fn from_narrative(q: NarrativeQuery, terms: Vec<String>) -> Self {
        DisjunctiveQuery {
            nodes: q.nodes,
            alternatives: vec![q.patterns],
            terms,
        }
    }

    pub fn is_containment(&self) -> bool {
        self.alternatives.is_empty()
    }

    pub fn alternative(&self, i: usize) -> QueryGraph<'_> {
        QueryGraph {
            nodes: &self.nodes,
            patterns: &self.alternatives[i],
        }
    }

    /// Every distinct pattern across the alternatives (wildcards compared undirected).
    pub fn distinct_patterns(&self) -> Vec<FactPattern> {
        let set: BTreeSet<FactPattern> = self
            .alternatives
            .iter()
            .flatten()
            .map(FactPattern::canonical)
            .collect();
        set.into_iter().collect()
    }

    /// How well the query as a whole was translated: its worst node's best concept.
    pub fn query_translation_score(&self) -> f64 {
        min_of_max(
            self.nodes
                .iter()
                .map(|n| n.alternatives().iter().map(|a| a.score)),
        )
    }

    /// Text handed to the BM25 baselines.
    pub fn text(&self) -> String {
        self.terms.join(" ")
    }
}

/// Minimum over components of the component's maximum score; an empty component
/// (or no components at all) yields 0.
pub fn min_of_max<I, J>(components: I) -> f64
where
    I: IntoIterator<Item = J>,
    J: IntoIterator<Item = f64>,
{
    let mut result: Option<f64> = None;
    for component in components {
        let best = component
            .into_iter()
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
        let best = best.unwrap_or(0.0);
        result = Some(result.map_or(best, |r| r.min(best)));
    }
    result.unwrap_or(0.0)
}

/// Adds every subclass of the set's current concepts, inheriting the source score.
pub fn expand_subclasses(set: &ConceptSet, ontology: &Ontology) -> ConceptSet {
    let mut inherited: BTreeMap<ConceptId, f64> = BTreeMap::new();
    for source in set.alternatives() {
        for sub in ontology.subclasses(&source.concept_id) {
            inherited
                .entry(sub)
                .and_modify(|s| *s = s.max(source.score))
                .or_insert(source.score);
        }
    }
    let mut out = set.clone();
    for (concept_id, score) in inherited {
        match out.position(&concept_id) {
            Ok(i) => {
                let a = &mut out.alternatives[i];
                a.score = a.score.max(score);
            }
            Err(i) => out.alternatives.insert(
                i,
                ExpandedConcept {
                    concept_id,
                    score,
                    origin: ConceptOrigin::Subclass,
                },
            ),
        }
    }
    out
}

fn translate_component(
    term: &str,
    concept_type: Option<ConceptType>,
    vocabulary: &Vocabulary,
    ontology: Option<&Ontology>,
) -> Result<ConceptSet> {
    let hits = vocabulary.find_concepts(term, concept_type);
    if hits.is_empty() {
        return Err(Error::UntranslatableTerm(term.to_owned()));
    }
    let set = ConceptSet::original(
        hits.into_iter()
            .map(|t| (t.concept_id, t.translation_score)),
    )?;
    Ok(match ontology {
        Some(o) => expand_subclasses(&set, o),
        None => set,
    })
}

/// One user-entered triple; `predicate: None` is a wildcard.
#[derive(Clone, Debug, PartialEq)]
pub struct TermTriple {
    pub subject: String,
    pub predicate: Option<String>,
    pub object: String,
}

impl TermTriple {
    pub fn new(subject: &str, predicate: Option<&str>, object: &str) -> Self {
        TermTriple {
            subject: subject.to_owned(),
            predicate: predicate.map(str::to_owned),
            object: object.to_owned(),
        }
    }
}

/// Translates explicit triples into a single conjunction. Identical terms (after
/// normalization) share one node. Subclasses are added when an ontology is given.
pub fn translate_term_query(
    triples: &[TermTriple],
    vocabulary: &Vocabulary,
    ontology: Option<&Ontology>,
) -> Result<DisjunctiveQuery> {
    let mut node_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut terms: Vec<String> = Vec::new();
    let mut nodes = Vec::new();
    let mut patterns = Vec::new();
    for t in triples {
        let mut endpoint = |term: &str| -> Result<usize> {
            let key = crate::text::normalize_label(term);
            if let Some(&i) = node_of.get(&key) {
                return Ok(i);
            }
            nodes.push(translate_component(term, None, vocabulary, ontology)?);
            terms.push(term.trim().to_owned());
            node_of.insert(key, nodes.len() - 1);
            Ok(nodes.len() - 1)
        };
        let s = endpoint(&t.subject)?;
        let o = endpoint(&t.object)?;
        let predicate = match t.predicate.as_deref().map(str::trim) {
            None | Some("?") | Some("*") | Some("") => PredicateSlot::Wildcard,
            Some(p) => PredicateSlot::label(&p.to_lowercase()),
        };
        patterns.push(FactPattern::new(s, predicate, o));
    }
    let q = NarrativeQuery::new(nodes, patterns)?;
    Ok(DisjunctiveQuery::from_narrative(q, terms))
}

/// Every spanning tree of the complete graph on `k` nodes, as sorted `(i, j)` edge lists
/// with `i < j`. There are `k^(k-2)` of them.
pub fn spanning_trees(k: usize) -> Vec<Vec<(usize, usize)>> {
    if k < 2 {
        return Vec::new();
    }
    let all: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let mut trees = Vec::new();
    let mut chosen = Vec::with_capacity(k - 1);
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        r
    }
    fn search(
        all: &[(usize, usize)],
        from: usize,
        k: usize,
        chosen: &mut Vec<(usize, usize)>,
        trees: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if chosen.len() == k - 1 {
            let mut parent: Vec<usize> = (0..k).collect();
            for &(a, b) in chosen.iter() {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra == rb {
                    return;
                }
                parent[ra] = rb;
            }
            trees.push(chosen.clone());
            return;
        }
        for i in from..all.len() {
            chosen.push(all[i]);
            search(all, i + 1, k, chosen, trees);
            chosen.pop();
        }
    }
    search(&all, 0, k, &mut chosen, &mut trees);
    trees
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopicComponent {
    pub term: String,
    pub concept_type: Option<ConceptType>,
}

impl TopicComponent {
    pub fn new(term: &str, concept_type: Option<ConceptType>) -> Self {
        TopicComponent {
            term: term.to_owned(),
            concept_type,
        }
    }
}

/// Compiles benchmark keyword components into a disjunction of wildcard conjunctions,
/// one per spanning tree over the components. A single component compiles to a
/// containment query.
pub fn compile_keyword_topic(
    components: &[TopicComponent],
    vocabulary: &Vocabulary,
    ontology: Option<&Ontology>,
) -> Result<DisjunctiveQuery> {
    let k = components.len();
    if k == 0 {
        return Err(Error::InvalidQuery("topic without components".into()));
    }
    if k > MAX_COMPONENTS {
        return Err(Error::UnsupportedArity(k));
    }
    let nodes = components
        .iter()
        .map(|c| translate_component(&c.term, c.concept_type, vocabulary, ontology))
        .collect::<Result<Vec<_>>>()?;
    let alternatives = spanning_trees(k)
        .into_iter()
        .map(|tree| {
            tree.into_iter()
                .map(|(i, j)| FactPattern::new(i, PredicateSlot::Wildcard, j))
                .collect()
        })
        .collect();
    let terms = components
        .iter()
        .map(|c| c.term.trim().to_owned())
        .collect();
    DisjunctiveQuery::new(nodes, alternatives, terms)
}

/// Detects concepts in free text greedily and compiles the detected spans like keyword
/// components. Fewer than two detected concepts make the topic untranslatable.
pub fn compile_freetext_topic(
    text: &str,
    vocabulary: &Vocabulary,
    ontology: Option<&Ontology>,
) -> Result<DisjunctiveQuery> {
    let spans = greedy_concept_detection(text, vocabulary);
    if spans.len() < 2 {
        return Err(Error::UntranslatableTopic(format!(
            "{:?}: {} concept(s) detected, need at least 2",
            text,
            spans.len()
        )));
    }
    let components: Vec<TopicComponent> = spans
        .iter()
        .map(|s| TopicComponent::new(&s.text, None))
        .collect();
    compile_keyword_topic(&components, vocabulary, ontology)
}
