//! Search and evaluation runs over an opened [`Index`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricReport, Qrels, Run, RunEntry, METRIC_NAMES};
use crate::index::Index;
use crate::matcher::{retrieve, Fragment};
use crate::ontology::expand_query_upwards;
use crate::query::DisjunctiveQuery;
use crate::ranker::{assemble_final_ranking, graph_rank, MatchClass, ScoredDocument};
use crate::topics::{Topic, TopicQuery};

/// Environment variable holding the number of worker threads.
pub const THREADS_ENV: &str = "GRAPHRANK_THREADS";

/// Sizes the global worker pool from [`THREADS_ENV`] when set.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MatchMode {
    Full,
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RankerKind {
    GraphRank,
    Bm25Rerank,
    Bm25Native,
    None,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(MatchMode::Full),
            "partial" => Ok(MatchMode::Partial),
            other => Err(Error::Config(format!(
                "unknown match mode {other:?} (full|partial)"
            ))),
        }
    }
}

impl FromStr for RankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "graphrank" => Ok(RankerKind::GraphRank),
            "bm25-rerank" => Ok(RankerKind::Bm25Rerank),
            "bm25-native" => Ok(RankerKind::Bm25Native),
            "none" => Ok(RankerKind::None),
            other => Err(Error::Config(format!(
                "unknown ranker {other:?} (graphrank|bm25-rerank|bm25-native|none)"
            ))),
        }
    }
}

/// One retrieval configuration. Native BM25 ignores the match mode and ontology flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub match_mode: MatchMode,
    pub ontology: bool,
    pub ranker: RankerKind,
}

impl Mode {
    pub fn new(match_mode: MatchMode, ontology: bool, ranker: RankerKind) -> Self {
        if ranker == RankerKind::Bm25Native {
            return Mode {
                match_mode: MatchMode::Full,
                ontology: false,
                ranker,
            };
        }
        Mode {
            match_mode,
            ontology,
            ranker,
        }
    }

    /// File-name friendly form, also used as the run tag.
    pub fn slug(&self) -> String {
        if self.ranker == RankerKind::Bm25Native {
            return "bm25-native".into();
        }
        let mut parts = vec![match self.match_mode {
            MatchMode::Full => "full",
            MatchMode::Partial => "partial",
        }];
        if self.ontology {
            parts.push("ontology");
        }
        parts.push(match self.ranker {
            RankerKind::GraphRank => "graphrank",
            RankerKind::Bm25Rerank => "bm25",
            RankerKind::None => "id-order",
            RankerKind::Bm25Native => unreachable!(),
        });
        parts.join("-")
    }

    /// Every combination of the given options, without duplicates, in a stable order.
    pub fn matrix(matches: &[MatchMode], ontology: &[bool], rankers: &[RankerKind]) -> Vec<Mode> {
        let mut modes = BTreeSet::new();
        for &r in rankers {
            for &m in matches {
                for &o in ontology {
                    modes.insert(Mode::new(m, o, r));
                }
            }
        }
        modes.into_iter().collect()
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ranker == RankerKind::Bm25Native {
            return f.write_str("Native BM25");
        }
        f.write_str(match self.match_mode {
            MatchMode::Full => "Full Match",
            MatchMode::Partial => "Partial Match",
        })?;
        if self.ontology {
            f.write_str(" + Ontology")?;
        }
        f.write_str(match self.ranker {
            RankerKind::GraphRank => " + GraphRank",
            RankerKind::Bm25Rerank => " + BM25",
            RankerKind::None => " + ID Order",
            RankerKind::Bm25Native => "",
        })
    }
}

/// One ranked document. `match_class` is absent for native BM25 results.
#[derive(Clone, Debug, PartialEq)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
    pub match_class: Option<MatchClass>,
    pub fragment: Option<Fragment>,
}

/// A user request: BM25 text plus the compiled graph query, if translation succeeded.
#[derive(Clone, Debug)]
pub struct Request {
    pub text: String,
    pub query: Result<DisjunctiveQuery, String>,
}

impl Request {
    pub fn from_query(query: DisjunctiveQuery) -> Self {
        Request {
            text: query.text(),
            query: Ok(query),
        }
    }

    pub fn from_topic(topic: &Topic, index: &Index) -> Self {
        let text = match &topic.query {
            TopicQuery::Keyword(components) => components
                .iter()
                .map(|c| c.term.as_str())
                .collect::<Vec<_>>()
                .join(" "),
            TopicQuery::FreeText(text) => text.clone(),
        };
        Request {
            text,
            query: topic
                .compile(&index.vocabulary, index.ontology.as_ref())
                .map_err(|e| e.to_string()),
        }
    }
}

/// Reads a scope file: one document id per line.
pub fn load_scope(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut scope = HashSet::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let id = line.trim();
        if !id.is_empty() && !id.starts_with('#') {
            scope.insert(id.to_owned());
        }
    }
    Ok(scope)
}

fn first_fragment(fragments: &[Fragment]) -> Option<Fragment> {
    fragments.iter().min().cloned()
}

fn rerank_class(
    index: &Index,
    text: &str,
    class: &std::collections::BTreeMap<String, Vec<Fragment>>,
    match_class: MatchClass,
) -> Vec<ScoredDocument> {
    let ids: Vec<String> = class.keys().cloned().collect();
    index
        .text
        .bm25_rerank(text, &ids, &index.config.bm25)
        .into_iter()
        .map(|(doc_id, score)| ScoredDocument {
            best_fragment: first_fragment(&class[&doc_id]),
            doc_id,
            score,
            match_class,
        })
        .collect()
}

fn id_order_class(
    class: &std::collections::BTreeMap<String, Vec<Fragment>>,
    match_class: MatchClass,
) -> Vec<ScoredDocument> {
    class
        .iter()
        .rev()
        .map(|(doc_id, fragments)| ScoredDocument {
            doc_id: doc_id.clone(),
            score: 0.0,
            match_class,
            best_fragment: first_fragment(fragments),
        })
        .collect()
}

/// Runs one request under `mode`: expansion, matching, ranking and assembly.
pub fn search(
    index: &Index,
    request: &Request,
    mode: Mode,
    cutoff: usize,
    scope: Option<&HashSet<String>>,
) -> Result<Vec<Hit>> {
    if cutoff == 0 {
        return Err(Error::Config("cutoff must be at least 1".into()));
    }
    if mode.ranker == RankerKind::Bm25Native {
        return Ok(index
            .text
            .bm25_retrieve(&request.text, cutoff, &index.config.bm25, scope)
            .into_iter()
            .map(|(doc_id, score)| Hit {
                doc_id,
                score,
                match_class: None,
                fragment: None,
            })
            .collect());
    }
    let query = request
        .query
        .as_ref()
        .map_err(|m| Error::UntranslatableTopic(m.clone()))?;
    let expanded;
    let query = match (&index.ontology, mode.ontology) {
        (Some(ontology), true) => {
            expanded = expand_query_upwards(query, ontology);
            &expanded
        }
        _ => query,
    };
    let mut result = retrieve(query, &index.statements, &index.corpus, scope);
    if !result.truncated.is_empty() {
        warn!(
            "fragment enumeration truncated in {} document(s)",
            result.truncated.len()
        );
    }
    if mode.match_mode == MatchMode::Full {
        result.partial.clear();
    }
    let (full, partial) = match mode.ranker {
        RankerKind::GraphRank => {
            let rank = |class, mc| {
                graph_rank(
                    query,
                    class,
                    mc,
                    &index.corpus,
                    &index.config.taxonomy,
                    &index.config.weights,
                )
            };
            (
                rank(&result.full, MatchClass::Full)?,
                rank(&result.partial, MatchClass::Partial)?,
            )
        }
        RankerKind::Bm25Rerank => (
            rerank_class(index, &request.text, &result.full, MatchClass::Full),
            rerank_class(index, &request.text, &result.partial, MatchClass::Partial),
        ),
        RankerKind::None => (
            id_order_class(&result.full, MatchClass::Full),
            id_order_class(&result.partial, MatchClass::Partial),
        ),
        RankerKind::Bm25Native => unreachable!(),
    };
    let ranked = assemble_final_ranking(full, partial, cutoff)?;
    Ok(ranked
        .into_iter()
        .map(|d| Hit {
            doc_id: d.doc_id,
            score: d.score,
            match_class: Some(d.match_class),
            fragment: d.best_fragment,
        })
        .collect())
}

/// Run-file scores for a ranking. Full matches are lifted above every partial match so
/// scores never increase down the list; the ID-order ranker scores by position.
pub fn run_entries(hits: &[Hit], ranker: RankerKind) -> Vec<RunEntry> {
    if ranker == RankerKind::None {
        let n = hits.len();
        return hits
            .iter()
            .enumerate()
            .map(|(i, h)| RunEntry {
                doc_id: h.doc_id.clone(),
                score: (n - i) as f64,
            })
            .collect();
    }
    let partial_max = hits
        .iter()
        .filter(|h| h.match_class == Some(MatchClass::Partial))
        .map(|h| h.score)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
    let lift = partial_max.map_or(0.0, |m| m + 1.0);
    hits.iter()
        .map(|h| RunEntry {
            doc_id: h.doc_id.clone(),
            score: if h.match_class == Some(MatchClass::Full) {
                h.score + lift
            } else {
                h.score
            },
        })
        .collect()
}

/// Human-readable listing: one line per hit with the best fragment's edges.
pub fn write_listing(mut out: impl Write, topic: &str, hits: &[Hit]) -> std::io::Result<()> {
    for (i, h) in hits.iter().enumerate() {
        let class = h.match_class.map_or("text".to_owned(), |c| c.to_string());
        write!(
            out,
            "{topic}\t{}\t{}\t{:.6}\t{class}",
            i + 1,
            h.doc_id,
            h.score
        )?;
        if let Some(f) = &h.fragment {
            let edges: Vec<String> = f
                .edges
                .iter()
                .map(|e| format!("{} -[{}]-> {}", e.subject, e.predicate, e.object))
                .collect();
            if edges.is_empty() {
                let concepts: Vec<&str> = f.nodes.values().map(|c| c.as_str()).collect();
                write!(out, "\tmentions {}", concepts.join(", "))?;
            } else {
                write!(out, "\t{}", edges.join("; "))?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Results of running every topic under one mode.
#[derive(Clone, Debug)]
pub struct ModeRun {
    pub mode: Mode,
    pub run: Run,
    /// Topics whose search failed under this mode, with the reason.
    pub failures: Vec<(String, String)>,
}

/// Runs `topics` under `mode` in parallel. Failing topics are logged and left out;
/// internal inconsistencies abort.
pub fn run_topics(
    index: &Index,
    requests: &[(String, Request)],
    mode: Mode,
    cutoff: usize,
    scope: Option<&HashSet<String>>,
) -> Result<ModeRun> {
    let outcomes: Vec<(String, Result<Vec<Hit>>)> = requests
        .par_iter()
        .map(|(id, request)| (id.clone(), search(index, request, mode, cutoff, scope)))
        .collect();
    let mut run = Run::new(&mode.slug());
    let mut failures = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(hits) => run.insert(&id, run_entries(&hits, mode.ranker))?,
            Err(e) if e.is_internal() => return Err(e),
            Err(e) => {
                warn!("{mode}: topic {id} failed: {e}");
                failures.push((id, e.to_string()));
            }
        }
    }
    Ok(ModeRun {
        mode,
        run,
        failures,
    })
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub modes: Vec<(ModeRun, MetricReport)>,
    /// Topics left out of every mode because they could not be translated.
    pub excluded: Vec<(String, String)>,
    /// Translated topics whose query translation score is at least 0.9.
    pub well_translated: usize,
}

pub const WELL_TRANSLATED: f64 = 0.9;

/// Runs every mode over the translatable topics and evaluates each run against `qrels`.
/// All modes share one topic set so their rows are comparable.
pub fn evaluate_modes(
    index: &Index,
    topics: &[Topic],
    qrels: &Qrels,
    modes: &[Mode],
    cutoff: usize,
    scope: Option<&HashSet<String>>,
) -> Result<Evaluation> {
    let mut requests = Vec::new();
    let mut excluded = Vec::new();
    let mut well_translated = 0;
    for topic in topics {
        let request = Request::from_topic(topic, index);
        match &request.query {
            Ok(q) => {
                if q.query_translation_score() >= WELL_TRANSLATED {
                    well_translated += 1;
                }
                requests.push((topic.id.clone(), request));
            }
            Err(reason) => {
                warn!("topic {} excluded: {reason}", topic.id);
                excluded.push((topic.id.clone(), reason.clone()));
            }
        }
    }
    if topics.is_empty() {
        warn!("no topics to evaluate");
    }
    let ids: Vec<String> = requests.iter().map(|(id, _)| id.clone()).collect();
    let excluded_ids: Vec<String> = excluded.iter().map(|(id, _)| id.clone()).collect();
    let mut out = Vec::with_capacity(modes.len());
    for &mode in modes {
        let mode_run = run_topics(index, &requests, mode, cutoff, scope)?;
        let report = evaluate(&mode_run.run, qrels, &ids, &excluded_ids);
        info!("{mode}: {} topics evaluated", report.evaluated());
        out.push((mode_run, report));
    }
    Ok(Evaluation {
        modes: out,
        excluded,
        well_translated,
    })
}

/// Tab-separated table: one row per mode, one column per metric, four decimals.
pub fn metric_table(evaluation: &Evaluation) -> String {
    let mut out = format!("Mode\t{}\tTopics\n", METRIC_NAMES.join("\t"));
    for (mode_run, report) in &evaluation.modes {
        out.push_str(&mode_run.mode.to_string());
        for v in report.mean.values() {
            out.push_str(&format!("\t{v:.4}"));
        }
        out.push_str(&format!("\t{}\n", report.evaluated()));
    }
    out
}

/// Writes `run` to `<dir>/<tag>.run`.
pub fn write_run(run: &Run, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}.run", run.tag));
    let mut bytes = Vec::new();
    run.write_trec(&mut bytes)
        .map_err(|e| Error::io(&path, e))?;
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
}

/// Writes `<slug>.run` per mode and `metrics.tsv` into `dir`.
pub fn write_evaluation(evaluation: &Evaluation, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (mode_run, _) in &evaluation.modes {
        write_run(&mode_run.run, dir)?;
    }
    let path = dir.join("metrics.tsv");
    fs::write(&path, metric_table(evaluation)).map_err(|e| Error::io(&path, e))
}
