//! TREC-style evaluation with unjudged documents removed before scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

/// Grade at or above which a document counts as relevant.
pub const RELEVANT_GRADE: u32 = 1;
pub const NDCG_CUTOFFS: [usize; 3] = [10, 20, 100];
pub const PRECISION_CUTOFFS: [usize; 3] = [10, 20, 100];
pub const RECALL_CUTOFF: usize = 1000;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn insert(&mut self, topic: &str, doc: &str, grade: u32) {
        self.judgments
            .entry(topic.to_owned())
            .or_default()
            .insert(doc.to_owned(), grade);
    }

    /// Reads `topic_id iteration doc_id grade` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path)
    }

    pub fn from_reader(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut qrels = Qrels::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[..] {
                [] => continue,
                [topic, _, doc, grade] => {
                    let grade: i64 = grade.parse().map_err(|_| {
                        Error::record(path, i + 1, format!("invalid grade {grade:?}"))
                    })?;
                    // negative grades are treated as non-relevant but judged
                    qrels.insert(topic, doc, grade.max(0) as u32);
                }
                _ => {
                    return Err(Error::record(
                        path,
                        i + 1,
                        "expected `topic iteration doc grade`",
                    ))
                }
            }
        }
        Ok(qrels)
    }

    pub fn grade(&self, topic: &str, doc: &str) -> Option<u32> {
        self.judgments.get(topic).and_then(|t| t.get(doc)).copied()
    }

    pub fn topic(&self, topic: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(topic)
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn relevant_count(&self, topic: &str) -> usize {
        self.topic(topic)
            .map_or(0, |t| t.values().filter(|&&g| g >= RELEVANT_GRADE).count())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunEntry {
    pub doc_id: String,
    pub score: f64,
}

/// Ranked lists per topic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Run {
    pub tag: String,
    pub topics: BTreeMap<String, Vec<RunEntry>>,
}

impl Run {
    pub fn new(tag: &str) -> Self {
        Run {
            tag: tag.to_owned(),
            topics: BTreeMap::new(),
        }
    }

    /// Adds a topic's ranking. Duplicate documents and increasing scores are rejected.
    pub fn insert(&mut self, topic: &str, entries: Vec<RunEntry>) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::Inconsistent(format!(
                    "topic {topic}: document {} ranked twice",
                    e.doc_id
                )));
            }
            if i > 0 && e.score > entries[i - 1].score {
                return Err(Error::Inconsistent(format!(
                    "topic {topic}: scores increase at rank {}",
                    i + 1
                )));
            }
        }
        self.topics.insert(topic.to_owned(), entries);
        Ok(())
    }

    pub fn ranking(&self, topic: &str) -> Vec<&str> {
        self.topics
            .get(topic)
            .map(|l| l.iter().map(|e| e.doc_id.as_str()).collect())
            .unwrap_or_default()
    }

    /// `topic_id Q0 doc_id rank score tag`, rank 1-based, score with six decimals.
    pub fn write_trec(&self, mut out: impl Write) -> std::io::Result<()> {
        for (topic, entries) in &self.topics {
            for (i, e) in entries.iter().enumerate() {
                writeln!(
                    out,
                    "{} Q0 {} {} {:.6} {}",
                    topic,
                    e.doc_id,
                    i + 1,
                    e.score,
                    self.tag
                )?;
            }
        }
        Ok(())
    }

    pub fn from_reader(reader: impl BufRead, path: &Path) -> Result<Self> {
        let mut rows: BTreeMap<String, Vec<(usize, RunEntry)>> = BTreeMap::new();
        let mut tag = String::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[..] {
                [] => continue,
                [topic, _, doc, rank, score, run_tag] => {
                    let bad = |what: &str| Error::record(path, i + 1, format!("invalid {what}"));
                    let rank: usize = rank.parse().map_err(|_| bad("rank"))?;
                    let score: f64 = score.parse().map_err(|_| bad("score"))?;
                    tag = run_tag.to_owned();
                    rows.entry(topic.to_owned()).or_default().push((
                        rank,
                        RunEntry {
                            doc_id: doc.to_owned(),
                            score,
                        },
                    ));
                }
                _ => {
                    return Err(Error::record(
                        path,
                        i + 1,
                        "expected 6 whitespace-separated fields",
                    ))
                }
            }
        }
        let mut run = Run::new(&tag);
        for (topic, mut entries) in rows {
            entries.sort_by_key(|(rank, _)| *rank);
            run.insert(&topic, entries.into_iter().map(|(_, e)| e).collect())?;
        }
        Ok(run)
    }
}

/// Drops unjudged documents, keeping order. Returns the list and the number removed.
pub fn condense<'a>(ranking: &[&'a str], qrels: &Qrels, topic: &str) -> (Vec<&'a str>, usize) {
    let kept: Vec<&str> = ranking
        .iter()
        .copied()
        .filter(|d| qrels.grade(topic, d).is_some())
        .collect();
    let removed = ranking.len() - kept.len();
    (kept, removed)
}

fn is_relevant(qrels: &Qrels, topic: &str, doc: &str) -> bool {
    qrels.grade(topic, doc).is_some_and(|g| g >= RELEVANT_GRADE)
}

/// Relevant documents among the top `k`, divided by `k` even when the list is shorter.
pub fn precision_at_k(ranking: &[&str], qrels: &Qrels, topic: &str, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranking
        .iter()
        .take(k)
        .filter(|d| is_relevant(qrels, topic, d))
        .count();
    hits as f64 / k as f64
}

/// Relevant documents among the top `k` over all relevant documents of the topic;
/// 0 when the topic has none.
pub fn recall_at_k(ranking: &[&str], qrels: &Qrels, topic: &str, k: usize) -> f64 {
    let relevant = qrels.relevant_count(topic);
    if relevant == 0 {
        return 0.0;
    }
    let hits = ranking
        .iter()
        .take(k)
        .filter(|d| is_relevant(qrels, topic, d))
        .count();
    hits as f64 / relevant as f64
}

fn dcg(grades: impl IntoIterator<Item = u32>) -> f64 {
    grades
        .into_iter()
        .enumerate()
        .map(|(i, g)| g as f64 / ((i + 2) as f64).log2())
        .sum()
}

/// nDCG@k with linear gain and `log2(rank + 1)` discount. `None` when the topic has no
/// judged documents.
pub fn ndcg_at_k(ranking: &[&str], qrels: &Qrels, topic: &str, k: usize) -> Option<f64> {
    let judged = qrels.topic(topic).filter(|t| !t.is_empty())?;
    let gains = ranking
        .iter()
        .take(k)
        .map(|d| qrels.grade(topic, d).unwrap_or(0));
    let mut ideal: Vec<u32> = judged.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(k));
    if idcg == 0.0 {
        return Some(0.0);
    }
    Some(dcg(gains) / idcg)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TopicMetrics {
    pub recall: f64,
    pub ndcg: [f64; 3],
    pub precision: [f64; 3],
    pub judged: usize,
    pub unjudged_removed: usize,
    pub relevant: usize,
}

impl TopicMetrics {
    pub fn values(&self) -> [f64; 7] {
        [
            self.recall,
            self.ndcg[0],
            self.ndcg[1],
            self.ndcg[2],
            self.precision[0],
            self.precision[1],
            self.precision[2],
        ]
    }
}

pub const METRIC_NAMES: [&str; 7] = [
    "Recall@1000",
    "nDCG@10",
    "nDCG@20",
    "nDCG@100",
    "P@10",
    "P@20",
    "P@100",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub per_topic: BTreeMap<String, TopicMetrics>,
    pub mean: TopicMetrics,
    /// Topics left out before ranking, e.g. because they could not be translated.
    pub excluded: Vec<String>,
    /// Topics with a ranking but without any judgments.
    pub skipped: Vec<String>,
    /// Evaluated topics without a single relevant document (recall reported as 0).
    pub no_relevant: Vec<String>,
    pub warnings: usize,
}

impl MetricReport {
    pub fn evaluated(&self) -> usize {
        self.per_topic.len()
    }
}

pub fn evaluate_topic(ranking: &[&str], qrels: &Qrels, topic: &str) -> Option<TopicMetrics> {
    let (condensed, removed) = condense(ranking, qrels, topic);
    let ndcg = NDCG_CUTOFFS.map(|k| ndcg_at_k(&condensed, qrels, topic, k));
    if ndcg.iter().any(Option::is_none) {
        return None;
    }
    Some(TopicMetrics {
        recall: recall_at_k(&condensed, qrels, topic, RECALL_CUTOFF),
        ndcg: ndcg.map(|v| v.unwrap_or(0.0)),
        precision: PRECISION_CUTOFFS.map(|k| precision_at_k(&condensed, qrels, topic, k)),
        judged: condensed.len(),
        unjudged_removed: removed,
        relevant: qrels.relevant_count(topic),
    })
}

/// Evaluates `topics` (the ones that produced a ranking; topics missing from the run count
/// as empty rankings) and averages over topics with judgments.
pub fn evaluate(run: &Run, qrels: &Qrels, topics: &[String], excluded: &[String]) -> MetricReport {
    let mut report = MetricReport {
        excluded: excluded.to_vec(),
        ..MetricReport::default()
    };
    for topic in topics {
        let ranking = run.ranking(topic);
        match evaluate_topic(&ranking, qrels, topic) {
            Some(m) => {
                if m.relevant == 0 {
                    report.no_relevant.push(topic.clone());
                }
                report.per_topic.insert(topic.clone(), m);
            }
            None => {
                warn!("topic {topic} has no judgments; skipped");
                report.skipped.push(topic.clone());
                report.warnings += 1;
            }
        }
    }
    if topics.is_empty() {
        report.warnings += 1;
    }
    let n = report.per_topic.len();
    if n > 0 {
        let mut sums = [0.0; 7];
        for m in report.per_topic.values() {
            for (s, v) in sums.iter_mut().zip(m.values()) {
                *s += v;
            }
        }
        let mean = sums.map(|s| s / n as f64);
        report.mean = TopicMetrics {
            recall: mean[0],
            ndcg: [mean[1], mean[2], mean[3]],
            precision: [mean[4], mean[5], mean[6]],
            judged: report.per_topic.values().map(|m| m.judged).sum(),
            unjudged_removed: report.per_topic.values().map(|m| m.unjudged_removed).sum(),
            relevant: report.per_topic.values().map(|m| m.relevant).sum(),
        };
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qrels(rows: &[(&str, &str, u32)]) -> Qrels {
        let mut q = Qrels::default();
        for (t, d, g) in rows {
            q.insert(t, d, *g);
        }
        q
    }

    #[test]
    fn condense_removes_unjudged() {
        let q = qrels(&[("t", "A", 1), ("t", "C", 0)]);
        assert_eq!(condense(&["A", "B", "C"], &q, "t"), (vec!["A", "C"], 1));
        assert_eq!(condense(&["A", "C"], &q, "t"), (vec!["A", "C"], 0));
        assert_eq!(condense(&["X", "Y"], &q, "t"), (vec![], 2));
    }

    #[test]
    fn precision_divides_by_k() {
        let docs: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let rows: Vec<(&str, &str, u32)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| ("t", d.as_str(), (i % 2) as u32))
            .collect();
        let q = qrels(&rows);
        let ranking: Vec<&str> = docs.iter().map(String::as_str).collect();
        assert_eq!(precision_at_k(&ranking, &q, "t", 10), 0.5);
        let five: Vec<&str> = ranking
            .iter()
            .copied()
            .filter(|d| is_relevant(&q, "t", d))
            .collect();
        assert_eq!(five.len(), 5);
        assert_eq!(precision_at_k(&five, &q, "t", 20), 0.25);
        assert_eq!(precision_at_k(&[], &q, "t", 10), 0.0);
    }

    #[test]
    fn recall_over_relevant_count() {
        let q = qrels(&[("t", "a", 1), ("t", "b", 2), ("t", "c", 0)]);
        assert_eq!(recall_at_k(&["a"], &q, "t", 1000), 0.5);
        assert_eq!(recall_at_k(&["c", "b", "a"], &q, "t", 1000), 1.0);
        assert_eq!(recall_at_k(&["c"], &q, "t", 1000), 0.0);
        assert_eq!(recall_at_k(&["a", "b"], &q, "t", 1), 0.5);
        assert_eq!(recall_at_k(&["a"], &q, "other", 1000), 0.0);
    }

    #[test]
    fn ndcg_hand_example() {
        let q = qrels(&[("t", "a", 2), ("t", "b", 0), ("t", "c", 1)]);
        let v = ndcg_at_k(&["a", "b", "c"], &q, "t", 3).unwrap();
        let expected = 2.5 / (2.0 + 1.0 / 3f64.log2());
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.9503).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&["a", "c", "b"], &q, "t", 3), Some(1.0));
        assert_eq!(ndcg_at_k(&["b"], &q, "t", 3), Some(0.0));
        assert_eq!(ndcg_at_k(&["a"], &q, "none", 3), None);
    }

    #[test]
    fn evaluate_averages_topics() {
        let q = qrels(&[("1", "a", 1), ("1", "b", 0), ("2", "a", 1), ("2", "b", 0)]);
        let mut run = Run::new("x");
        let list = || {
            vec![
                RunEntry {
                    doc_id: "a".into(),
                    score: 2.0,
                },
                RunEntry {
                    doc_id: "z".into(),
                    score: 1.5,
                },
                RunEntry {
                    doc_id: "b".into(),
                    score: 1.0,
                },
            ]
        };
        run.insert("1", list()).unwrap();
        run.insert("2", list()).unwrap();
        let report = evaluate(&run, &q, &["1".into(), "2".into()], &[]);
        assert_eq!(report.evaluated(), 2);
        assert_eq!(report.mean.values(), report.per_topic["1"].values());
        assert_eq!(report.per_topic["1"].unjudged_removed, 1);
        assert_eq!(report.mean.precision[0], 0.1);

        let report = evaluate(&run, &Qrels::default(), &["1".into()], &[]);
        assert_eq!(report.evaluated(), 0);
        assert!(report.warnings > 0);
    }

    #[test]
    fn run_file_format() {
        let mut run = Run::new("graphrank");
        run.insert(
            "7",
            vec![
                RunEntry {
                    doc_id: "d1".into(),
                    score: 0.5,
                },
                RunEntry {
                    doc_id: "d2".into(),
                    score: 0.25,
                },
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        run.write_trec(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "7 Q0 d1 1 0.500000 graphrank\n7 Q0 d2 2 0.250000 graphrank\n"
        );
        assert_eq!(
            Run::from_reader(buf.as_slice(), Path::new("r")).unwrap(),
            run
        );

        let dup = run.insert(
            "8",
            vec![
                RunEntry {
                    doc_id: "d".into(),
                    score: 1.0,
                },
                RunEntry {
                    doc_id: "d".into(),
                    score: 0.0,
                },
            ],
        );
        assert!(dup.is_err());
        let rising = run.insert(
            "8",
            vec![
                RunEntry {
                    doc_id: "a".into(),
                    score: 0.0,
                },
                RunEntry {
                    doc_id: "b".into(),
                    score: 1.0,
                },
            ],
        );
        assert!(rising.is_err());
    }

    #[test]
    fn qrels_parsing() {
        let q =
            Qrels::from_reader("1 0 a 2\n1 0 b 0\n\n2 0 a 1\n".as_bytes(), Path::new("q")).unwrap();
        assert_eq!(q.grade("1", "a"), Some(2));
        assert_eq!(q.relevant_count("1"), 1);
        assert!(Qrels::from_reader("1 0 a\n".as_bytes(), Path::new("q")).is_err());
    }
}
