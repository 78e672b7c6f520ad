//! Corpus loading, validation and tokenization.
//!
//! A corpus file is JSON Lines: one object per line with the keys
//! `id`, `text`, `source`, `domain`, `split` (`"train"` or `"validation"`)
//! and an optional integer `label` in {0, 1}. Labels are mandatory on
//! validation records.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub source: String,
    pub domain: String,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

impl Document {
    pub fn tokens(&self) -> TokenSeq {
        tokenize(&self.text)
    }
}

/// Ordered lowercase tokens of a text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits lowercased text into maximal runs of `[a-z0-9_]` and single
/// non-whitespace, non-word characters.
pub fn tokenize(text: &str) -> TokenSeq {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in lower.chars() {
        if is_word_char(c) {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    TokenSeq { tokens }
}

/// A validated, ordered collection of documents.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    sources: Vec<String>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(documents.len());
        let mut sources: Vec<String> = Vec::new();
        for doc in &documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
            if doc.text.trim().is_empty() {
                return Err(Error::invalid(format!(
                    "document `{}` has empty text",
                    doc.id
                )));
            }
            if let Some(label) = doc.label {
                if label > 1 {
                    return Err(Error::invalid(format!(
                        "document `{}` has label {label}, expected 0 or 1",
                        doc.id
                    )));
                }
            }
            match doc.split {
                Split::Validation if doc.label.is_none() => {
                    return Err(Error::MissingLabel(doc.id.clone()));
                }
                Split::Train if !sources.iter().any(|s| s == &doc.source) => {
                    sources.push(doc.source.clone());
                }
                _ => {}
            }
        }
        Ok(Corpus { documents, sources })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    /// Distinct train-split sources in first-appearance order.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn train(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.split == Split::Train)
    }

    pub fn validation(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.split == Split::Validation)
    }

    /// Train documents of `source`, in corpus order.
    pub fn source_docs<'a>(&'a self, source: &'a str) -> impl Iterator<Item = &'a Document> + 'a {
        self.train().filter(move |d| d.source == source)
    }

    pub fn source_index(&self, source: &str) -> Option<usize> {
        self.sources.iter().position(|s| s == source)
    }

    /// Distinct domains in first-appearance order over all documents.
    pub fn domains(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for doc in &self.documents {
            if !out.contains(&doc.domain) {
                out.push(doc.domain.clone());
            }
        }
        out
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn from_jsonl_str(data: &str) -> Result<Self> {
        parse_records(data.lines())
    }

    pub fn to_jsonl_string(&self) -> Result<String> {
        let mut out = String::new();
        for doc in &self.documents {
            out.push_str(&serde_json::to_string(doc)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(file);
        writer
            .write_all(self.to_jsonl_string()?.as_bytes())
            .and_then(|_| writer.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Reads and validates a JSONL corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        lines.push(line.map_err(|e| Error::io(path, e))?);
    }
    parse_records(lines.iter().map(String::as_str))
}

fn parse_records<'a>(lines: impl Iterator<Item = &'a str>) -> Result<Corpus> {
    let mut docs = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
        if doc.text.trim().is_empty() {
            return Err(Error::MalformedRecord {
                line: i + 1,
                message: format!("document `{}` has whitespace-only text", doc.id),
            });
        }
        docs.push(doc);
    }
    Corpus::new(docs)
}
