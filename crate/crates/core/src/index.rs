//! Persisted index directory.
//!
//! Layout: `corpus.jsonl`, `vocabulary.tsv`, `ontology.tsv`, `config.txt`, `stats.json`,
//! `statements.tsv`, `text_index.json` and `manifest.json` holding the format version,
//! document count and a SHA-256 checksum per file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::TextIndex;
use crate::config::RankingConfig;
use crate::corpus::{Corpus, CorpusStats};
use crate::error::{Error, Result};
use crate::matcher::StatementIndex;
use crate::ontology::Ontology;
use crate::vocabulary::Vocabulary;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

const CORPUS: &str = "corpus.jsonl";
const VOCABULARY: &str = "vocabulary.tsv";
const ONTOLOGY: &str = "ontology.tsv";
const CONFIG: &str = "config.txt";
const STATS: &str = "stats.json";
const STATEMENTS: &str = "statements.tsv";
const TEXT_INDEX: &str = "text_index.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub doc_count: usize,
    /// File name -> hex SHA-256.
    pub files: BTreeMap<String, String>,
}

/// Input files for [`Index::build`].
#[derive(Clone, Debug, Default)]
pub struct Sources {
    pub corpus: PathBuf,
    pub vocabulary: PathBuf,
    pub ontology: Option<PathBuf>,
    pub config: Option<PathBuf>,
}

/// Everything a search needs, loaded and cross-checked.
#[derive(Debug)]
pub struct Index {
    pub corpus: Corpus,
    pub vocabulary: Vocabulary,
    pub ontology: Option<Ontology>,
    pub config: RankingConfig,
    pub statements: StatementIndex,
    pub text: TextIndex,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(value).expect("index structures serialize");
    bytes.push(b'\n');
    bytes
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

impl Index {
    /// Loads and validates the raw inputs. When the configuration defines a predicate
    /// taxonomy, every corpus predicate must belong to it.
    pub fn build(sources: &Sources) -> Result<Self> {
        let vocabulary = Vocabulary::load(&sources.vocabulary)?;
        let ontology = sources.ontology.as_ref().map(Ontology::load).transpose()?;
        let config = match &sources.config {
            Some(path) => RankingConfig::load(path)?,
            None => RankingConfig::default(),
        };
        let corpus = Corpus::load(&sources.corpus)?;
        if config.taxonomy.labels().next().is_some() {
            corpus.check_predicates(&sources.corpus, |p| config.taxonomy.contains(p))?;
        }
        Ok(Self::from_parts(corpus, vocabulary, ontology, config))
    }

    pub fn from_parts(
        corpus: Corpus,
        vocabulary: Vocabulary,
        ontology: Option<Ontology>,
        config: RankingConfig,
    ) -> Self {
        let statements = StatementIndex::build(&corpus);
        let text = TextIndex::build(&corpus);
        Index {
            corpus,
            vocabulary,
            ontology,
            config,
            statements,
            text,
        }
    }

    fn files(&self) -> Vec<(&'static str, Vec<u8>)> {
        let mut corpus = Vec::new();
        self.corpus
            .write_jsonl(&mut corpus)
            .expect("writing to memory");
        let mut statements = String::new();
        for graph in self.corpus.graphs() {
            for (e, r) in &graph.edges {
                let _ = writeln!(
                    statements,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    graph.doc_id,
                    e.subject,
                    e.predicate,
                    e.object,
                    r.max_confidence,
                    r.support_count
                );
            }
        }
        vec![
            (CORPUS, corpus),
            (VOCABULARY, self.vocabulary.to_tsv().into_bytes()),
            (
                ONTOLOGY,
                self.ontology
                    .as_ref()
                    .map(Ontology::to_tsv)
                    .unwrap_or_default()
                    .into_bytes(),
            ),
            (CONFIG, self.config.to_text().into_bytes()),
            (STATS, to_json(self.corpus.stats())),
            (STATEMENTS, statements.into_bytes()),
            (TEXT_INDEX, to_json(&self.text)),
        ]
    }

    /// Writes the index directory. Identical inputs give identical bytes.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Manifest> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut manifest = Manifest {
            format_version: FORMAT_VERSION,
            doc_count: self.corpus.len(),
            files: BTreeMap::new(),
        };
        for (name, bytes) in self.files() {
            let path = dir.join(name);
            fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
            manifest.files.insert(name.to_owned(), sha256_hex(&bytes));
        }
        let path = dir.join(MANIFEST);
        let bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        info!(
            "indexed {} documents into {}",
            manifest.doc_count,
            dir.display()
        );
        Ok(manifest)
    }

    /// Opens an index directory, verifying checksums, document count and derived statistics.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest_path = dir.join(MANIFEST);
        let manifest: Manifest = serde_json::from_slice(&read(&manifest_path)?)
            .map_err(|e| Error::record(&manifest_path, 1, format!("malformed manifest: {e}")))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{}: index format {} is not supported (expected {FORMAT_VERSION})",
                manifest_path.display(),
                manifest.format_version
            )));
        }
        for (name, expected) in &manifest.files {
            let path = dir.join(name);
            if sha256_hex(&read(&path)?) != *expected {
                return Err(Error::Inconsistent(format!(
                    "{} does not match its checksum",
                    path.display()
                )));
            }
        }
        let corpus_path = dir.join(CORPUS);
        let file = fs::File::open(&corpus_path).map_err(|e| Error::io(&corpus_path, e))?;
        let corpus = Corpus::from_reader(BufReader::new(file), &corpus_path)?;
        if corpus.len() != manifest.doc_count {
            return Err(Error::Inconsistent(format!(
                "manifest lists {} documents, corpus holds {}",
                manifest.doc_count,
                corpus.len()
            )));
        }
        let vocabulary = Vocabulary::load(dir.join(VOCABULARY))?;
        let ontology = Ontology::load(dir.join(ONTOLOGY))?;
        let ontology = (ontology.edge_count() > 0).then_some(ontology);
        let config = RankingConfig::load(dir.join(CONFIG))?;

        let stats_path = dir.join(STATS);
        let stats: CorpusStats = serde_json::from_slice(&read(&stats_path)?)
            .map_err(|e| Error::record(&stats_path, 1, format!("malformed statistics: {e}")))?;
        if stats != *corpus.stats() {
            return Err(Error::Inconsistent(
                "stored statistics disagree with the corpus".into(),
            ));
        }
        let text_path = dir.join(TEXT_INDEX);
        let mut text: TextIndex = serde_json::from_slice(&read(&text_path)?)
            .map_err(|e| Error::record(&text_path, 1, format!("malformed text index: {e}")))?;
        text.rebuild_lookup();
        if text.doc_ids.len() != corpus.len() {
            return Err(Error::Inconsistent(
                "text index and corpus differ in size".into(),
            ));
        }
        let statements = StatementIndex::build(&corpus);
        Ok(Index {
            corpus,
            vocabulary,
            ontology,
            config,
            statements,
            text,
        })
    }
}
