//! Ranking configuration file.
//!
//! ```text
//! # confidence, min_tfidf, coverage, relational
//! weights = [0.25, 0.25, 0.25, 0.25]
//! k1 = 1.2
//! b = 0.75
//! treats<TAB>1
//! associated<TAB>3
//! ```
//!
//! `key = value` lines set parameters; `predicate <TAB> level` lines define the predicate
//! taxonomy (level 1 = most specific).

use std::fs;
use std::path::Path;

use crate::baselines::Bm25Params;
use crate::error::{Error, Result};
use crate::ranker::{PredicateTaxonomy, Weights};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankingConfig {
    pub weights: Weights,
    pub taxonomy: PredicateTaxonomy,
    pub bm25: Bm25Params,
}

fn parse_weights(value: &str) -> Option<[f64; 4]> {
    let inner = value.trim().strip_prefix('[')?.strip_suffix(']')?;
    let parsed: Vec<f64> = inner
        .split(',')
        .map(|v| v.trim().parse().ok())
        .collect::<Option<_>>()?;
    parsed.try_into().ok()
}

impl RankingConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut config = RankingConfig::default();
        let mut levels: Vec<(String, u8)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let bad = |what: &str| {
                    Error::record(path, lineno, format!("invalid {what}: {:?}", value.trim()))
                };
                match key.trim() {
                    "weights" => {
                        let w = parse_weights(value).ok_or_else(|| bad("weights"))?;
                        config.weights = Weights::new(w)
                            .map_err(|e| Error::record(path, lineno, e.to_string()))?;
                    }
                    "k1" => config.bm25.k1 = value.trim().parse().map_err(|_| bad("k1"))?,
                    "b" => config.bm25.b = value.trim().parse().map_err(|_| bad("b"))?,
                    other => {
                        return Err(Error::record(
                            path,
                            lineno,
                            format!("unknown key {other:?}"),
                        ))
                    }
                }
                continue;
            }
            match line.split('\t').map(str::trim).collect::<Vec<_>>()[..] {
                [label, level] if !label.is_empty() => {
                    let level: u8 = level.parse().map_err(|_| {
                        Error::record(path, lineno, format!("invalid level {level:?}"))
                    })?;
                    levels.push((label.to_owned(), level));
                }
                _ => {
                    return Err(Error::record(
                        path,
                        lineno,
                        "expected `key = value` or `predicate<TAB>level`",
                    ))
                }
            }
        }
        if config.bm25.k1 <= 0.0 || !(0.0..=1.0).contains(&config.bm25.b) {
            return Err(Error::Config(format!(
                "{}: BM25 needs k1 > 0 and b in [0, 1]",
                path.display()
            )));
        }
        config.taxonomy =
            PredicateTaxonomy::from_levels(levels.iter().map(|(l, v)| (l.as_str(), *v)))
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    /// Canonical text form, accepted by [`RankingConfig::parse`].
    pub fn to_text(&self) -> String {
        let w = self.weights.as_array();
        let mut out = format!(
            "weights = [{}, {}, {}, {}]\nk1 = {}\nb = {}\n",
            w[0], w[1], w[2], w[3], self.bm25.k1, self.bm25.b
        );
        for (label, spec) in self.taxonomy.labels() {
            let level = if spec == 1.0 {
                1
            } else if spec == 0.5 {
                2
            } else {
                3
            };
            out.push_str(&format!("{label}\t{level}\n"));
        }
        out
    }
}
