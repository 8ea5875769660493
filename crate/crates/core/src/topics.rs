//! Benchmark topic files.
//!
//! One topic per line, tab separated:
//! `topic_id <TAB> keyword <TAB> melanoma | BRAF:gene | binimetinib:drug` or
//! `topic_id <TAB> freetext <TAB> differences between flu and coronavirus`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ontology::Ontology;
use crate::query::{
    compile_freetext_topic, compile_keyword_topic, DisjunctiveQuery, TopicComponent,
};
use crate::vocabulary::{ConceptType, Vocabulary};

#[derive(Clone, Debug, PartialEq)]
pub enum TopicQuery {
    Keyword(Vec<TopicComponent>),
    FreeText(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topic {
    pub id: String,
    pub query: TopicQuery,
}

impl Topic {
    pub fn compile(
        &self,
        vocabulary: &Vocabulary,
        ontology: Option<&Ontology>,
    ) -> Result<DisjunctiveQuery> {
        match &self.query {
            TopicQuery::Keyword(components) => {
                compile_keyword_topic(components, vocabulary, ontology)
            }
            TopicQuery::FreeText(text) => compile_freetext_topic(text, vocabulary, ontology),
        }
    }
}

/// Splits `term:type`; the suffix only counts when it names a concept type.
pub fn parse_component(raw: &str) -> TopicComponent {
    let raw = raw.trim();
    if let Some((term, ty)) = raw.rsplit_once(':') {
        if let Ok(ty) = ty.parse::<ConceptType>() {
            return TopicComponent::new(term.trim(), Some(ty));
        }
    }
    TopicComponent::new(raw, None)
}

pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_topics(BufReader::new(file), path)
}

pub fn parse_topics(reader: impl BufRead, path: &Path) -> Result<Vec<Topic>> {
    let mut topics = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| Error::record(path, i + 1, m);
        let mut cols = line.splitn(3, '\t');
        let (Some(id), Some(kind), Some(body)) = (cols.next(), cols.next(), cols.next()) else {
            return Err(bad("expected `topic_id<TAB>keyword|freetext<TAB>query`"));
        };
        let query = match kind.trim() {
            "keyword" => {
                let components: Vec<TopicComponent> = body
                    .split('|')
                    .filter(|c| !c.trim().is_empty())
                    .map(parse_component)
                    .collect();
                if components.is_empty() {
                    return Err(bad("keyword topic without components"));
                }
                TopicQuery::Keyword(components)
            }
            "freetext" => TopicQuery::FreeText(body.trim().to_owned()),
            other => return Err(bad(&format!("unknown topic kind {other:?}"))),
        };
        topics.push(Topic {
            id: id.trim().to_owned(),
            query,
        });
    }
    Ok(topics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_kinds() {
        let text = "1\tkeyword\tmelanoma | BRAF:gene | binimetinib:drug\n2\tfreetext\tflu and coronavirus\n";
        let topics = parse_topics(text.as_bytes(), Path::new("t")).unwrap();
        assert_eq!(topics.len(), 2);
        assert_eq!(
            topics[0].query,
            TopicQuery::Keyword(vec![
                TopicComponent::new("melanoma", None),
                TopicComponent::new("BRAF", Some(ConceptType::Gene)),
                TopicComponent::new("binimetinib", Some(ConceptType::Drug)),
            ])
        );
        assert_eq!(
            topics[1].query,
            TopicQuery::FreeText("flu and coronavirus".into())
        );
    }

    #[test]
    fn colon_without_type_stays_in_term() {
        assert_eq!(
            parse_component("ratio 2:1"),
            TopicComponent::new("ratio 2:1", None)
        );
    }

    #[test]
    fn rejects_unknown_kind() {
        assert!(parse_topics("1\tboolean\tx\n".as_bytes(), Path::new("t")).is_err());
        assert!(parse_topics("1 keyword x\n".as_bytes(), Path::new("t")).is_err());
    }
}
