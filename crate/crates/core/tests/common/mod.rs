//! Random corpus generators and brute-force reference implementations.
//!
//! The oracles here deliberately avoid the engine's code paths: tokens are
//! split by hand, embeddings are averaged in plain loops, filters are checked
//! document by document, and rankings come from a full sort.

#![allow(dead_code)]

use std::collections::HashSet;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use manuscriptor_core::corpus::Paper;
use manuscriptor_core::embedder::{synth_vectors, VectorStore};
use manuscriptor_core::textproc::{tokenize, TokenPipeline};
use manuscriptor_core::{ingest, FilterQuery};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const RESULT_CAP: usize = 1000;

pub fn sample_corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample_corpus.jsonl")
}

pub fn sample_corpus() -> Vec<Paper> {
    ingest(BufReader::new(File::open(sample_corpus_path()).unwrap())).unwrap()
}

pub fn embed_vocab(papers: &[Paper]) -> Vec<String> {
    let mut vocab: HashSet<String> = HashSet::new();
    for p in papers {
        for field in oracle_fields(p, true) {
            vocab.extend(naive_tokens(&field));
        }
    }
    let mut v: Vec<String> = vocab.into_iter().collect();
    v.sort();
    v
}

pub fn synth_for(papers: &[Paper], dim: usize, seed: u64) -> VectorStore {
    let vocab = embed_vocab(papers);
    synth_vectors(vocab.iter().map(String::as_str), dim, seed)
}

// ---------------------------------------------------------------------------
// Random corpora

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ner", "tu", "vas", "zo", "pri", "gen", "dal", "rho", "sti", "bel", "cor",
    "fin", "hep", "lun", "ost", "pla", "que",
];
const SUFFIXES: &[&str] = &["", "", "", "s", "ed", "ing", "ation", "ly", "ness", "al"];
const STOP: &[&str] = &["the", "of", "and", "in", "was", "with", "by", "for"];

pub fn random_vocab(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let n = rng.gen_range(1..4);
        let mut w: String = (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect();
        w.push_str(SUFFIXES.choose(rng).unwrap());
        // Keep only words that survive the index pipeline as exactly one term.
        if tokenize(&w, TokenPipeline::Index).len() == 1 && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn random_text(rng: &mut ChaCha8Rng, vocab: &[String], words: usize) -> String {
    let mut out = Vec::with_capacity(words);
    for i in 0..words {
        let w = if rng.gen_bool(0.15) {
            STOP.choose(rng).unwrap().to_string()
        } else {
            vocab.choose(rng).unwrap().clone()
        };
        if i == 0 || rng.gen_bool(0.1) {
            let mut c = w.chars();
            let first = c.next().unwrap().to_uppercase().collect::<String>();
            out.push(format!("{first}{}", c.as_str()));
        } else {
            out.push(w);
        }
        if rng.gen_bool(0.08) {
            let last = out.last_mut().unwrap();
            last.push_str([".", ",", ";", "?"].choose(rng).unwrap());
        }
    }
    let mut text = out.join(" ");
    text.push('.');
    text
}

/// A corpus of `docs` papers drawing words from `vocab`.
pub fn random_corpus(rng: &mut ChaCha8Rng, docs: usize, vocab: &[String]) -> Vec<Paper> {
    let mut papers = Vec::with_capacity(docs);
    for i in 0..docs {
        // Vocabulary restricted per document keeps term frequencies skewed.
        let local_size = rng.gen_range(5..40).min(vocab.len());
        let local: Vec<String> = vocab.choose_multiple(rng, local_size).cloned().collect();
        let paragraphs = rng.gen_range(0..4);
        let mut body = Vec::with_capacity(paragraphs);
        for _ in 0..paragraphs {
            let words = rng.gen_range(3..30);
            body.push(random_text(rng, &local, words));
        }
        let id = format!("d{:05}-{}", rng.gen_range(0..100_000), i);
        let title_words = rng.gen_range(2..8);
        let title = random_text(rng, &local, title_words);
        let abstract_text = if rng.gen_bool(0.9) {
            let words = rng.gen_range(5..25);
            random_text(rng, &local, words)
        } else {
            String::new()
        };
        papers.push(Paper {
            id,
            title,
            authors: vec!["A. Author".into()],
            journal: "J".into(),
            year: rng.gen_range(1990..2021),
            abstract_text,
            body,
            doi: None,
        });
    }
    papers
}

/// Random filter text over `vocab`, with occasional absent terms.
pub fn random_filter(rng: &mut ChaCha8Rng, vocab: &[String]) -> String {
    if rng.gen_bool(0.1) {
        return String::new();
    }
    let groups = rng.gen_range(1..5);
    (0..groups)
        .map(|_| {
            let alts = rng.gen_range(1..4);
            let body: Vec<String> = (0..alts)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        format!("zq{}x", rng.gen_range(0..1000))
                    } else {
                        vocab.choose(rng).unwrap().clone()
                    }
                })
                .collect();
            let neg = if rng.gen_bool(0.3) { "!" } else { "" };
            format!("{neg}{}", body.join("|"))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// Oracles

/// Lowercase runs of letters and digits, computed character by character.
pub fn naive_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Text fields contributing to a document embedding, in order.
pub fn oracle_fields(p: &Paper, with_abstract: bool) -> Vec<String> {
    let mut f = vec![p.title.clone()];
    if with_abstract {
        f.push(p.abstract_text.clone());
    }
    f.extend(p.body.iter().cloned());
    f
}

/// Mean vector of in-vocabulary tokens, or None when there are none.
pub fn naive_embed(store: &VectorStore, fields: &[String]) -> Option<Vec<f32>> {
    let mut sum = vec![0f64; store.dim()];
    let mut n = 0usize;
    for field in fields {
        for tok in naive_tokens(field) {
            if let Some(v) = store.get(&tok) {
                for i in 0..sum.len() {
                    sum[i] += v[i] as f64;
                }
                n += 1;
            }
        }
    }
    if n == 0 {
        return None;
    }
    let v: Vec<f32> = sum.iter().map(|s| (s / n as f64) as f32).collect();
    if v.iter().all(|&x| x == 0.0) {
        None
    } else {
        Some(v)
    }
}

pub fn naive_distance(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0f64;
    let mut na = 0f64;
    let mut nb = 0f64;
    for i in 0..a.len() {
        dot += a[i] as f64 * b[i] as f64;
    }
    for x in a {
        na += *x as f64 * *x as f64;
    }
    for x in b {
        nb += *x as f64 * *x as f64;
    }
    1.0 - dot / (na.sqrt() * nb.sqrt())
}

/// Index terms of every field of a paper.
pub fn doc_terms(p: &Paper) -> HashSet<String> {
    let mut terms = HashSet::new();
    for field in oracle_fields(p, true) {
        terms.extend(tokenize(&field, TokenPipeline::Index));
    }
    terms
}

/// Per-document evaluation of the clause semantics.
pub fn naive_filter(papers: &[Paper], query: &FilterQuery) -> Vec<u32> {
    let terms: Vec<HashSet<String>> = papers.iter().map(doc_terms).collect();
    naive_filter_terms(&terms, query)
}

/// [`naive_filter`] over precomputed per-document term sets.
pub fn naive_filter_terms(docs: &[HashSet<String>], query: &FilterQuery) -> Vec<u32> {
    let mut out = Vec::new();
    for (i, terms) in docs.iter().enumerate() {
        let mut ok = true;
        for clause in &query.clauses {
            let mut present = false;
            for alt in &clause.alternatives {
                if terms.contains(alt) {
                    present = true;
                }
            }
            if clause.negated == present {
                ok = false;
            }
        }
        if ok {
            out.push(i as u32);
        }
    }
    out
}

pub enum OracleSource<'a> {
    Text(&'a str),
    Paper(usize),
}

/// Full-sort reference search. Returns `None` for an unusable source.
pub fn oracle_search(
    papers: &[Paper],
    store: &VectorStore,
    query: &FilterQuery,
    source: OracleSource<'_>,
    limit: usize,
) -> Option<Vec<(String, f64)>> {
    let (qvec, exclude) = match source {
        OracleSource::Text(t) => (naive_embed(store, &[t.to_string()])?, None),
        OracleSource::Paper(i) => (
            naive_embed(store, &oracle_fields(&papers[i], true))?,
            Some(i),
        ),
    };
    let allowed = naive_filter(papers, query);
    let mut scored: Vec<(String, f64)> = Vec::new();
    for ord in allowed {
        let ord = ord as usize;
        if Some(ord) == exclude {
            continue;
        }
        if let Some(v) = naive_embed(store, &oracle_fields(&papers[ord], true)) {
            scored.push((papers[ord].id.clone(), naive_distance(&qvec, &v)));
        }
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.truncate(limit.min(RESULT_CAP));
    Some(scored)
}
