//! Two-step search: Boolean filter over the inverted index, then brute-force
//! cosine ranking of the surviving papers against a ranking source.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boolquery::{parse_filter, FilterQuery, SyntaxError};
use crate::corpus::{Paper, Snapshot};
use crate::embedder::{cosine_distance_with_norms, embed_text, norm, EmbedFields, Embedding};
use crate::textproc::Sentence;

/// Most results a search ever returns.
pub const RESULT_CAP: usize = 1000;
/// Sentences highlighted when the caller does not choose.
pub const DEFAULT_HIGHLIGHT_K: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid ranking source: {0}")]
    InvalidSource(String),
    #[error("unknown paper `{0}`")]
    UnknownPaper(String),
    #[error("{0} must be at least 1")]
    InvalidLimit(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RankingSource {
    /// A manuscript, a selection or any other free text.
    Text { text: String },
    /// An existing paper of the corpus.
    Paper { id: String },
}

impl RankingSource {
    pub fn text(text: impl Into<String>) -> Self {
        Self::Text { text: text.into() }
    }

    pub fn paper(id: impl Into<String>) -> Self {
        Self::Paper { id: id.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub paper_id: String,
    pub distance: f64,
    pub title: String,
    pub authors: Vec<String>,
    pub journal: String,
    pub year: i32,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Papers that passed the filter, before exclusions and truncation.
    pub matched: usize,
    pub hits: Vec<SearchHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightedSentence {
    pub ordinal: u32,
    pub char_span: (u32, u32),
    pub distance: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightResult {
    pub paper_id: String,
    pub sentences: Vec<HighlightedSentence>,
}

/// Document vectors laid out for scanning, with cached norms.
///
/// Rows whose embedding is invalid or has zero norm are never ranked.
#[derive(Debug, Clone)]
pub struct RankTable {
    dim: usize,
    data: Vec<f32>,
    norms: Vec<f64>,
    rankable: Vec<bool>,
    /// Position of each ordinal's paper id in ascending id order; breaks ties.
    tie_rank: Vec<u32>,
}

#[derive(PartialEq)]
struct HeapEntry {
    distance: f64,
    tie: u32,
    ordinal: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.tie.cmp(&other.tie))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl RankTable {
    pub fn new(dim: usize, embeddings: &[Embedding], ids: &[String]) -> Self {
        assert_eq!(embeddings.len(), ids.len());
        let mut data = Vec::with_capacity(dim * embeddings.len());
        let mut valid = Vec::with_capacity(embeddings.len());
        for e in embeddings {
            assert_eq!(e.vec.len(), dim, "embedding dimension mismatch");
            data.extend_from_slice(&e.vec);
            valid.push(e.valid);
        }
        Self::from_rows(dim, data, valid, ids)
    }

    /// Builds a table from row-major vectors (`dim` components per row).
    pub fn from_rows(dim: usize, data: Vec<f32>, valid: Vec<bool>, ids: &[String]) -> Self {
        assert_eq!(data.len(), dim * ids.len(), "row data does not match ids");
        assert_eq!(valid.len(), ids.len());
        let mut norms = Vec::with_capacity(ids.len());
        let mut rankable = Vec::with_capacity(ids.len());
        for (row, &ok) in data.chunks_exact(dim.max(1)).zip(&valid) {
            let n = norm(row);
            norms.push(n);
            rankable.push(ok && n > 0.0);
        }
        let mut by_id: Vec<u32> = (0..ids.len() as u32).collect();
        by_id.sort_by(|&a, &b| ids[a as usize].cmp(&ids[b as usize]));
        let mut tie_rank = vec![0u32; ids.len()];
        for (rank, &ord) in by_id.iter().enumerate() {
            tie_rank[ord as usize] = rank as u32;
        }
        Self {
            dim,
            data,
            norms,
            rankable,
            tie_rank,
        }
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn is_rankable(&self, ordinal: u32) -> bool {
        self.rankable[ordinal as usize]
    }

    fn row(&self, ordinal: u32) -> &[f32] {
        let start = ordinal as usize * self.dim;
        &self.data[start..start + self.dim]
    }

    /// The `limit` nearest candidates to `query`, ordered by (distance, id).
    ///
    /// `query_norm` must be the nonzero norm of `query`. Uses a bounded
    /// max-heap, so the cost is O(n log limit) for n candidates.
    pub fn rank(
        &self,
        candidates: &[u32],
        query: &[f32],
        query_norm: f64,
        limit: usize,
        exclude: Option<u32>,
    ) -> Vec<(u32, f64)> {
        if limit == 0 {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapEntry> =
            BinaryHeap::with_capacity(limit.min(candidates.len()) + 1);
        for &ordinal in candidates {
            if Some(ordinal) == exclude || !self.rankable[ordinal as usize] {
                continue;
            }
            let entry = HeapEntry {
                distance: cosine_distance_with_norms(
                    query,
                    query_norm,
                    self.row(ordinal),
                    self.norms[ordinal as usize],
                ),
                tie: self.tie_rank[ordinal as usize],
                ordinal,
            };
            if heap.len() < limit {
                heap.push(entry);
            } else if let Some(mut top) = heap.peek_mut() {
                if entry < *top {
                    *top = entry;
                }
            }
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|e| (e.ordinal, e.distance))
            .collect()
    }
}

/// A loaded snapshot ready to answer searches. Immutable; share it freely.
#[derive(Debug, Clone)]
pub struct Engine {
    snapshot: Snapshot,
    table: RankTable,
    by_id: HashMap<String, u32>,
}

pub(crate) struct ResolvedSource {
    vec: Vec<f32>,
    norm: f64,
    exclude: Option<u32>,
}

impl Engine {
    pub fn new(snapshot: Snapshot) -> Self {
        let embeddings = snapshot.embeddings.clone();
        Self::with_document_embeddings(snapshot, embeddings)
    }

    /// Ranks papers by `embeddings` instead of the snapshot's own.
    pub fn with_document_embeddings(snapshot: Snapshot, embeddings: Vec<Embedding>) -> Self {
        let ids: Vec<String> = snapshot.papers.iter().map(|p| p.id.clone()).collect();
        let table = RankTable::new(snapshot.dim(), &embeddings, &ids);
        let by_id = ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, i as u32))
            .collect();
        Self {
            snapshot,
            table,
            by_id,
        }
    }

    /// Same corpus, with document embeddings built from `fields`.
    pub fn for_fields(snapshot: Snapshot, fields: EmbedFields) -> Self {
        let embeddings = crate::embedder::embed_corpus(&snapshot.store, &snapshot.papers, fields);
        Self::with_document_embeddings(snapshot, embeddings)
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }

    pub fn len(&self) -> usize {
        self.snapshot.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshot.papers.is_empty()
    }

    pub fn ordinal(&self, paper_id: &str) -> Option<u32> {
        self.by_id.get(paper_id).copied()
    }

    pub fn paper(&self, paper_id: &str) -> Option<&Paper> {
        self.ordinal(paper_id)
            .map(|o| &self.snapshot.papers[o as usize])
    }

    pub fn sentences(&self, paper_id: &str) -> Option<&[Sentence]> {
        self.ordinal(paper_id)
            .map(|o| self.snapshot.sentences[o as usize].as_slice())
    }

    pub fn paper_by_doi(&self, doi: &str) -> Option<&Paper> {
        self.snapshot.papers.iter().find(|p| {
            p.doi
                .as_deref()
                .is_some_and(|d| d.eq_ignore_ascii_case(doi))
        })
    }

    pub fn rank_table(&self) -> &RankTable {
        &self.table
    }

    pub fn embed(&self, text: &str) -> Embedding {
        embed_text(&self.snapshot.store, text)
    }

    pub(crate) fn resolve(
        &self,
        source: &RankingSource,
        exclude_self: bool,
    ) -> Result<ResolvedSource, EngineError> {
        let (embedding, exclude) = match source {
            RankingSource::Text { text } => (self.embed(text), None),
            RankingSource::Paper { id } => {
                let ordinal = self
                    .ordinal(id)
                    .ok_or_else(|| EngineError::UnknownPaper(id.clone()))?;
                let embedding = Embedding {
                    vec: self.table.row(ordinal).to_vec(),
                    valid: self.table.is_rankable(ordinal),
                };
                (embedding, exclude_self.then_some(ordinal))
            }
        };
        let n = embedding.norm();
        if !embedding.valid || n == 0.0 {
            let what = match source {
                RankingSource::Text { .. } => "text has no in-vocabulary words".to_string(),
                RankingSource::Paper { id } => format!("paper `{id}` has no usable embedding"),
            };
            return Err(EngineError::InvalidSource(what));
        }
        Ok(ResolvedSource {
            vec: embedding.vec,
            norm: n,
            exclude,
        })
    }

    fn hit(&self, ordinal: u32, distance: f64) -> SearchHit {
        let p = &self.snapshot.papers[ordinal as usize];
        SearchHit {
            paper_id: p.id.clone(),
            distance,
            title: p.title.clone(),
            authors: p.authors.clone(),
            journal: p.journal.clone(),
            year: p.year,
            abstract_text: p.abstract_text.clone(),
        }
    }

    /// Ordinals and distances of the best `limit` filtered papers, uncapped.
    pub(crate) fn rank_ordinals(
        &self,
        query: &FilterQuery,
        source: &RankingSource,
        limit: usize,
        exclude_self: bool,
    ) -> Result<(usize, Vec<(u32, f64)>), EngineError> {
        let resolved = self.resolve(source, exclude_self)?;
        let candidates = self.snapshot.index.filter_docs(query);
        let ranked = self.table.rank(
            &candidates,
            &resolved.vec,
            resolved.norm,
            limit,
            resolved.exclude,
        );
        Ok((candidates.len(), ranked))
    }

    pub fn search_query(
        &self,
        query: &FilterQuery,
        source: &RankingSource,
        offset: usize,
        limit: usize,
    ) -> Result<SearchResult, EngineError> {
        if limit == 0 {
            return Err(EngineError::InvalidLimit("limit"));
        }
        let end = offset.saturating_add(limit).min(RESULT_CAP);
        let (matched, ranked) = self.rank_ordinals(query, source, end, true)?;
        let hits = ranked
            .into_iter()
            .skip(offset)
            .map(|(o, d)| self.hit(o, d))
            .collect();
        Ok(SearchResult { matched, hits })
    }

    /// Filters with `filter`, then ranks the survivors by cosine distance to
    /// `source`. A paper source never appears in its own results.
    pub fn search(
        &self,
        filter: &str,
        source: &RankingSource,
        limit: usize,
    ) -> Result<SearchResult, EngineError> {
        self.search_query(&parse_filter(filter)?, source, 0, limit)
    }

    /// Like [`Engine::search`], returning the window `[offset, offset + limit)`
    /// of the capped ranking.
    pub fn search_page(
        &self,
        filter: &str,
        source: &RankingSource,
        offset: usize,
        limit: usize,
    ) -> Result<SearchResult, EngineError> {
        self.search_query(&parse_filter(filter)?, source, offset, limit)
    }

    /// The `k` sentences of `paper_id` closest to `source`, ties by ordinal.
    pub fn highlight(
        &self,
        paper_id: &str,
        source: &RankingSource,
        k: usize,
    ) -> Result<HighlightResult, EngineError> {
        if k == 0 {
            return Err(EngineError::InvalidLimit("k"));
        }
        let sentences = self
            .sentences(paper_id)
            .ok_or_else(|| EngineError::UnknownPaper(paper_id.to_string()))?;
        let resolved = self.resolve(source, false)?;
        let mut scored: Vec<(f64, &Sentence)> = sentences
            .iter()
            .filter_map(|s| {
                let e = self.embed(&s.text);
                let n = e.norm();
                (e.valid && n > 0.0).then(|| {
                    (
                        cosine_distance_with_norms(&resolved.vec, resolved.norm, &e.vec, n),
                        s,
                    )
                })
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.ordinal.cmp(&b.1.ordinal)));
        scored.truncate(k);
        Ok(HighlightResult {
            paper_id: paper_id.to_string(),
            sentences: scored
                .into_iter()
                .map(|(distance, s)| HighlightedSentence {
                    ordinal: s.ordinal,
                    char_span: s.char_span,
                    distance,
                    text: s.text.clone(),
                })
                .collect(),
        })
    }

    /// Checks that filtering before ranking gives the same order as ranking
    /// everything and dropping papers the filter rejects.
    pub fn subset_consistency_check(
        &self,
        filter: &str,
        source: &RankingSource,
    ) -> Result<bool, EngineError> {
        let query = parse_filter(filter)?;
        let everything = self.len();
        let (_, filtered) = self.rank_ordinals(&query, source, everything, true)?;
        let (_, all) = self.rank_ordinals(&FilterQuery::match_all(), source, everything, true)?;
        let allowed = self.snapshot.index.filter_docs(&query);
        let restricted: Vec<(u32, f64)> = all
            .into_iter()
            .filter(|(o, _)| allowed.binary_search(o).is_ok())
            .collect();
        Ok(restricted == filtered)
    }
}
