//! Subclass hierarchy over concepts: closure queries, path-based similarity and
//! upward query rewriting.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::ConceptId;
use crate::error::{Error, Result};
use crate::query::{ConceptOrigin, DisjunctiveQuery, ExpandedConcept};

/// Child -> parents DAG. Acyclicity is checked on construction.
#[derive(Clone, Debug, Default)]
pub struct Ontology {
    parents: HashMap<ConceptId, BTreeSet<ConceptId>>,
    children: HashMap<ConceptId, BTreeSet<ConceptId>>,
}

impl Ontology {
    pub fn from_edges(edges: impl IntoIterator<Item = (ConceptId, ConceptId)>) -> Result<Self> {
        let mut ontology = Ontology::default();
        for (child, parent) in edges {
            if child == parent {
                return Err(Error::OntologyCycle(child.to_string()));
            }
            ontology
                .children
                .entry(parent.clone())
                .or_default()
                .insert(child.clone());
            ontology.parents.entry(child).or_default().insert(parent);
        }
        ontology.check_acyclic()?;
        Ok(ontology)
    }

    /// Loads `child <TAB> parent` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn from_reader(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut edges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split('\t').map(str::trim).collect::<Vec<_>>()[..] {
                [child, parent] if !child.is_empty() && !parent.is_empty() => {
                    edges.push((ConceptId::from(child), ConceptId::from(parent)))
                }
                _ => return Err(Error::record(path, i + 1, "expected `child<TAB>parent`")),
            }
        }
        Self::from_edges(edges)
    }

    pub fn to_tsv(&self) -> String {
        let mut lines: Vec<String> = self
            .parents
            .iter()
            .flat_map(|(c, ps)| ps.iter().map(move |p| format!("{c}\t{p}\n")))
            .collect();
        lines.sort();
        lines.concat()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.values().map(BTreeSet::len).sum()
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm over child -> parent edges
        let mut indegree: BTreeMap<&ConceptId, usize> = BTreeMap::new();
        for (child, parents) in &self.parents {
            indegree.entry(child).or_insert(0);
            for p in parents {
                *indegree.entry(p).or_insert(0) += 1;
            }
        }
        let mut queue: VecDeque<&ConceptId> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(c, _)| *c)
            .collect();
        let mut visited = 0;
        while let Some(c) = queue.pop_front() {
            visited += 1;
            for p in self.parents.get(c).into_iter().flatten() {
                let d = indegree.get_mut(p).expect("parent registered");
                *d -= 1;
                if *d == 0 {
                    queue.push_back(p);
                }
            }
        }
        if visited == indegree.len() {
            return Ok(());
        }
        let stuck = indegree
            .iter()
            .find(|(_, &d)| d > 0)
            .map(|(c, _)| c.to_string());
        Err(Error::OntologyCycle(stuck.unwrap_or_default()))
    }

    /// Breadth-first distances (in edges) from `start` along `links`, excluding `start`.
    fn distances(
        links: &HashMap<ConceptId, BTreeSet<ConceptId>>,
        start: &ConceptId,
    ) -> BTreeMap<ConceptId, usize> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::from([(start, 0usize)]);
        while let Some((c, d)) = queue.pop_front() {
            for next in links.get(c).into_iter().flatten() {
                if next != start && !dist.contains_key(next) {
                    dist.insert(next.clone(), d + 1);
                    queue.push_back((next, d + 1));
                }
            }
        }
        dist
    }

    /// Direct and transitive descendants of `c`.
    pub fn subclasses(&self, c: &ConceptId) -> BTreeSet<ConceptId> {
        Self::distances(&self.children, c).into_keys().collect()
    }

    /// Direct and transitive ancestors of `c`.
    pub fn superclasses(&self, c: &ConceptId) -> BTreeSet<ConceptId> {
        Self::distances(&self.parents, c).into_keys().collect()
    }

    /// Ancestors of `c` with their shortest upward distance in edges.
    pub fn superclass_distances(&self, c: &ConceptId) -> BTreeMap<ConceptId, usize> {
        Self::distances(&self.parents, c)
    }

    /// 1 for identical concepts, `1 / nodes on the shortest ancestor path` when one is an
    /// ancestor of the other, 0 otherwise. A direct parent therefore scores 0.5.
    pub fn ontological_sim(&self, a: &ConceptId, b: &ConceptId) -> f64 {
        if a == b {
            return 1.0;
        }
        let up = Self::distances(&self.parents, a).get(b).copied();
        let down = Self::distances(&self.parents, b).get(a).copied();
        match up.into_iter().chain(down).min() {
            Some(edges) => 1.0 / (edges + 1) as f64,
            None => 0.0,
        }
    }
}

/// Adds every superclass of every concept in the query's concept sets, scored by
/// `ontological_sim(source, superclass) * score(source)`.
///
/// Concepts already present keep their score; a superclass reachable from several
/// sources keeps the best derivation. New superclasses are not expanded downwards.
pub fn expand_query_upwards(query: &DisjunctiveQuery, ontology: &Ontology) -> DisjunctiveQuery {
    let mut expanded = query.clone();
    for node in &mut expanded.nodes {
        let mut added: BTreeMap<ConceptId, f64> = BTreeMap::new();
        for source in node.alternatives() {
            for (sup, edges) in ontology.superclass_distances(&source.concept_id) {
                if node.contains(&sup) {
                    continue;
                }
                let score = 1.0 / (edges + 1) as f64 * source.score;
                added
                    .entry(sup)
                    .and_modify(|s| *s = s.max(score))
                    .or_insert(score);
            }
        }
        for (concept_id, score) in added {
            node.insert(ExpandedConcept {
                concept_id,
                score,
                origin: ConceptOrigin::Superclass,
            });
        }
    }
    expanded
}
