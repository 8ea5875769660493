use std::collections::HashSet;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::warn;

use graphrank::error::{Error, Result};
use graphrank::eval::{Qrels, Run};
use graphrank::index::{Index, Sources};
use graphrank::pipeline::{
    configure_threads, evaluate_modes, load_scope, metric_table, run_entries, search,
    write_evaluation, write_listing, write_run, MatchMode, Mode, RankerKind, Request,
};
use graphrank::query::{translate_term_query, TermTriple};
use graphrank::topics::{load_topics, parse_component, Topic, TopicQuery};

/// Graph-based retrieval over concept statement graphs.
#[derive(Debug, Parser)]
#[command(name = "graphrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate inputs and write an index directory.
    Index {
        #[command(flatten)]
        inputs: Inputs,
        /// Output index directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one query, or every topic of a topics file, under a single mode.
    Search {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long = "match", default_value = "full")]
        match_mode: String,
        #[arg(long)]
        expand_ontology: bool,
        #[arg(long, default_value = "graphrank")]
        ranker: String,
        #[arg(long, default_value_t = 1000)]
        cutoff: usize,
        /// Restrict results to the document ids listed in this file.
        #[arg(long)]
        scope: Option<PathBuf>,
        /// Directory for the run file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a mode matrix over a topics file and score every run against qrels.
    Evaluate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        topics: PathBuf,
        #[arg(long)]
        qrels: PathBuf,
        /// Comma-separated match modes.
        #[arg(long = "match", default_value = "full,partial")]
        match_modes: String,
        /// Also run every mode with ontological expansion.
        #[arg(long)]
        expand_ontology: bool,
        /// Comma-separated rankers.
        #[arg(long, default_value = "graphrank")]
        ranker: String,
        #[arg(long, default_value_t = 1000)]
        cutoff: usize,
        #[arg(long)]
        scope: Option<PathBuf>,
        /// Directory for run files and the metric table.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Inputs {
    /// Line-delimited JSON corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Concept vocabulary (TSV).
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Subclass relation (child <TAB> parent).
    #[arg(long)]
    ontology: Option<PathBuf>,
    /// Weights, BM25 parameters and predicate levels.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Source {
    /// Index directory written by `graphrank index`.
    #[arg(long, conflicts_with_all = ["corpus", "vocab", "ontology", "config"])]
    index: Option<PathBuf>,
    #[command(flatten)]
    inputs: Inputs,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct QueryArgs {
    /// `subject,predicate,object`; repeat for a conjunction. `?` is any predicate.
    #[arg(long)]
    triple: Vec<String>,
    /// Keyword components, `term | term:type | ...`.
    #[arg(long)]
    keywords: Option<String>,
    /// Free-text query.
    #[arg(long)]
    text: Option<String>,
    /// Topics file.
    #[arg(long)]
    topics: Option<PathBuf>,
}

impl Inputs {
    fn sources(&self) -> Result<Sources> {
        let missing = |flag: &str| Error::Config(format!("{flag} is required"));
        Ok(Sources {
            corpus: self.corpus.clone().ok_or_else(|| missing("--corpus"))?,
            vocabulary: self.vocab.clone().ok_or_else(|| missing("--vocab"))?,
            ontology: self.ontology.clone(),
            config: self.config.clone(),
        })
    }
}

impl Source {
    fn open(&self) -> Result<Index> {
        match &self.index {
            Some(dir) => Index::open(dir),
            None => Index::build(&self.inputs.sources()?),
        }
    }
}

fn parse_list<T: std::str::FromStr<Err = Error>>(raw: &str) -> Result<Vec<T>> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn parse_triple(raw: &str) -> Result<TermTriple> {
    match raw.split(',').map(str::trim).collect::<Vec<_>>()[..] {
        [s, p, o] => Ok(TermTriple::new(s, Some(p), o)),
        _ => Err(Error::InvalidQuery(format!(
            "expected subject,predicate,object, got {raw:?}"
        ))),
    }
}

fn requests(index: &Index, query: &QueryArgs) -> Result<Vec<(String, Request)>> {
    let single = |q| Ok(vec![("query".to_owned(), q)]);
    if !query.triple.is_empty() {
        let triples = query
            .triple
            .iter()
            .map(|t| parse_triple(t))
            .collect::<Result<Vec<_>>>()?;
        let q = translate_term_query(&triples, &index.vocabulary, index.ontology.as_ref())?;
        return single(Request::from_query(q));
    }
    let topics: Vec<Topic> = if let Some(k) = &query.keywords {
        vec![Topic {
            id: "query".into(),
            query: TopicQuery::Keyword(
                k.split('|')
                    .filter(|c| !c.trim().is_empty())
                    .map(parse_component)
                    .collect(),
            ),
        }]
    } else if let Some(t) = &query.text {
        vec![Topic {
            id: "query".into(),
            query: TopicQuery::FreeText(t.clone()),
        }]
    } else if let Some(path) = &query.topics {
        load_topics(path)?
    } else {
        return Err(Error::InvalidQuery("no query given".into()));
    };
    Ok(topics
        .iter()
        .map(|t| (t.id.clone(), Request::from_topic(t, index)))
        .collect())
}

fn scope(path: &Option<PathBuf>) -> Result<Option<HashSet<String>>> {
    path.as_ref().map(load_scope).transpose()
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Index { inputs, out } => {
            let index = Index::build(&inputs.sources()?)?;
            let manifest = index.write(&out)?;
            println!(
                "indexed {} documents into {}",
                manifest.doc_count,
                out.display()
            );
        }
        Command::Search {
            source,
            query,
            match_mode,
            expand_ontology,
            ranker,
            cutoff,
            scope: scope_path,
            out,
        } => {
            let mode = Mode::new(match_mode.parse()?, expand_ontology, ranker.parse()?);
            let index = source.open()?;
            let scope = scope(&scope_path)?;
            let requests = requests(&index, &query)?;
            let single = query.topics.is_none();
            let mut run = Run::new(&mode.slug());
            let stdout = io::stdout();
            let mut listing = stdout.lock();
            for (id, request) in &requests {
                let hits = match search(&index, request, mode, cutoff, scope.as_ref()) {
                    Ok(hits) => hits,
                    Err(e) if single || e.is_internal() => return Err(e),
                    Err(e) => {
                        warn!("topic {id} failed: {e}");
                        continue;
                    }
                };
                write_listing(&mut listing, id, &hits).map_err(|e| Error::io("<stdout>", e))?;
                run.insert(id, run_entries(&hits, mode.ranker))?;
            }
            listing.flush().map_err(|e| Error::io("<stdout>", e))?;
            if let Some(dir) = out {
                write_run(&run, &dir)?;
            }
        }
        Command::Evaluate {
            source,
            topics,
            qrels,
            match_modes,
            expand_ontology,
            ranker,
            cutoff,
            scope: scope_path,
            out,
        } => {
            let matches: Vec<MatchMode> = parse_list(&match_modes)?;
            let rankers: Vec<RankerKind> = parse_list(&ranker)?;
            let ontology: &[bool] = if expand_ontology {
                &[false, true]
            } else {
                &[false]
            };
            let modes = Mode::matrix(&matches, ontology, &rankers);
            let index = source.open()?;
            let scope = scope(&scope_path)?;
            let topics = load_topics(&topics)?;
            let qrels = Qrels::load(&qrels)?;
            let evaluation =
                evaluate_modes(&index, &topics, &qrels, &modes, cutoff, scope.as_ref())?;
            write_evaluation(&evaluation, &out)?;
            print!("{}", metric_table(&evaluation));
            println!(
                "topics: {} translated ({} with translation >= 0.9), {} excluded",
                topics.len() - evaluation.excluded.len(),
                evaluation.well_translated,
                evaluation.excluded.len()
            );
            for (id, reason) in &evaluation.excluded {
                println!("excluded {id}: {reason}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_internal() { 2 } else { 1 })
        }
    }
}
