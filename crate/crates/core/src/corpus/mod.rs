//! Corpus records and line-delimited JSON ingestion.

mod snapshot;

pub use snapshot::{
    build_snapshot, load_snapshot, Snapshot, SnapshotError, SnapshotFiles, MANIFEST_FILE,
};

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::body_text;

pub const MIN_YEAR: i32 = 1500;
pub const MAX_YEAR: i32 = 2100;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paper {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub journal: String,
    /// Publication year, or 0 when unknown.
    #[serde(default)]
    pub year: i32,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    /// Body paragraphs.
    #[serde(default)]
    pub body: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doi: Option<String>,
}

impl Paper {
    /// Title, abstract and body, newline separated.
    pub fn full_text(&self) -> String {
        format!(
            "{}\n{}\n{}",
            self.title,
            self.abstract_text,
            body_text(&self.body)
        )
    }

    pub fn text_without_abstract(&self) -> String {
        format!("{}\n{}", self.title, body_text(&self.body))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("`id` must be a nonempty string".into());
        }
        if self.year != 0 && !(MIN_YEAR..=MAX_YEAR).contains(&self.year) {
            return Err(format!(
                "`year` {} outside {MIN_YEAR}..={MAX_YEAR} (use 0 for unknown)",
                self.year
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate paper id `{0}`")]
    DuplicateId(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads one JSON paper record per line. Blank lines are skipped.
pub fn ingest<R: BufRead>(reader: R) -> Result<Vec<Paper>, CorpusError> {
    let mut papers = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let paper: Paper = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        paper.validate().map_err(|message| CorpusError::Parse {
            line: line_no,
            message,
        })?;
        if !seen.insert(paper.id.clone()) {
            return Err(CorpusError::DuplicateId(paper.id));
        }
        papers.push(paper);
    }
    Ok(papers)
}
