//! Parent-retrieval evaluation: each sampled paper's abstract is used as a
//! query against document embeddings built without abstracts, and we count
//! how often the paper itself comes back first or within the top k.

use std::fmt::Write as _;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Snapshot;
use crate::embedder::{embed_corpus, embed_text, EmbedFields};
use crate::engine::RankTable;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("requested {requested} samples from a corpus of {available} papers")]
    InsufficientCorpus { requested: usize, available: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("malformed report: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Queries actually evaluated (sampled papers minus skipped ones).
    pub samples: usize,
    pub top1_hits: usize,
    pub topk_hits: usize,
    pub top1_rate: f64,
    pub topk_rate: f64,
    pub k: usize,
    pub seed: u64,
    /// Sampled papers skipped because their abstract has no usable embedding.
    pub excluded_invalid: usize,
}

/// Picks `count` distinct ordinals out of `0..n`.
///
/// Partial Fisher-Yates over `0..n` driven by `ChaCha8Rng::seed_from_u64(seed)`:
/// step `i` swaps position `i` with `i + next_u64() % (n - i)`.
pub fn sample_ordinals(n: usize, count: usize, seed: u64) -> Vec<u32> {
    assert!(count <= n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<u32> = (0..n as u32).collect();
    for i in 0..count {
        let j = i + (rng.next_u64() % (n - i) as u64) as usize;
        perm.swap(i, j);
    }
    perm.truncate(count);
    perm
}

pub fn run_parent_retrieval(
    snapshot: &Snapshot,
    samples: usize,
    k: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let n = snapshot.len();
    if samples > n {
        return Err(EvalError::InsufficientCorpus {
            requested: samples,
            available: n,
        });
    }
    let docs = embed_corpus(
        &snapshot.store,
        &snapshot.papers,
        EmbedFields::WithoutAbstract,
    );
    let ids: Vec<String> = snapshot.papers.iter().map(|p| p.id.clone()).collect();
    let table = RankTable::new(snapshot.dim(), &docs, &ids);
    let all: Vec<u32> = (0..n as u32).collect();

    let mut evaluated = 0;
    let mut excluded_invalid = 0;
    let mut top1_hits = 0;
    let mut topk_hits = 0;
    for parent in sample_ordinals(n, samples, seed) {
        let query = embed_text(
            &snapshot.store,
            &snapshot.papers[parent as usize].abstract_text,
        );
        let query_norm = query.norm();
        if !query.valid || query_norm == 0.0 {
            excluded_invalid += 1;
            continue;
        }
        evaluated += 1;
        let ranked = table.rank(&all, &query.vec, query_norm, k, None);
        match ranked.iter().position(|&(o, _)| o == parent) {
            Some(0) => {
                top1_hits += 1;
                topk_hits += 1;
            }
            Some(_) => topk_hits += 1,
            None => {}
        }
    }
    let rate = |hits: usize| {
        if evaluated == 0 {
            0.0
        } else {
            hits as f64 / evaluated as f64
        }
    };
    Ok(EvalReport {
        samples: evaluated,
        top1_hits,
        topk_hits,
        top1_rate: rate(top1_hits),
        topk_rate: rate(topk_hits),
        k,
        seed,
        excluded_invalid,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Tsv,
}

const TSV_HEADER: &str =
    "samples\ttop1_hits\ttopk_hits\ttop1_rate\ttopk_rate\tk\tseed\texcluded_invalid";

pub fn report_to_text(report: &EvalReport, format: ReportFormat) -> String {
    let mut out = String::new();
    match format {
        ReportFormat::Table => {
            let _ = writeln!(
                out,
                "parent retrieval (k={}, seed={})",
                report.k, report.seed
            );
            let _ = writeln!(out, "{:<18}{}", "samples", report.samples);
            let _ = writeln!(out, "{:<18}{}", "excluded_invalid", report.excluded_invalid);
            if report.samples == 0 {
                let _ = writeln!(out, "{:<18}no samples", "error");
            } else {
                let _ = writeln!(out, "{:<18}{:.1}%", "top-1", report.top1_rate * 100.0);
                let _ = writeln!(
                    out,
                    "{:<18}{:.1}%",
                    format!("top-{}", report.k),
                    report.topk_rate * 100.0
                );
            }
        }
        ReportFormat::Tsv => {
            let _ = writeln!(out, "{TSV_HEADER}");
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                report.samples,
                report.top1_hits,
                report.topk_hits,
                report.top1_rate,
                report.topk_rate,
                report.k,
                report.seed,
                report.excluded_invalid
            );
        }
    }
    out
}

pub fn parse_tsv_report(text: &str) -> Result<EvalReport, EvalError> {
    let mut lines = text.lines();
    if lines.next() != Some(TSV_HEADER) {
        return Err(EvalError::Parse("unexpected header".into()));
    }
    let row = lines
        .next()
        .ok_or_else(|| EvalError::Parse("missing data row".into()))?;
    let fields: Vec<&str> = row.split('\t').collect();
    if fields.len() != 8 {
        return Err(EvalError::Parse(format!(
            "expected 8 fields, got {}",
            fields.len()
        )));
    }
    fn num<T: std::str::FromStr>(s: &str) -> Result<T, EvalError> {
        s.parse()
            .map_err(|_| EvalError::Parse(format!("bad number `{s}`")))
    }
    Ok(EvalReport {
        samples: num(fields[0])?,
        top1_hits: num(fields[1])?,
        topk_hits: num(fields[2])?,
        top1_rate: num(fields[3])?,
        topk_rate: num(fields[4])?,
        k: num(fields[5])?,
        seed: num(fields[6])?,
        excluded_invalid: num(fields[7])?,
    })
}
