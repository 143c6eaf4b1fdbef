//! Literature discovery engine.
//!
//! Papers are first filtered with a Boolean keyword query over an inverted
//! unigram index, then the survivors are ranked by cosine distance between
//! averaged word-vector embeddings and a ranking source (free text or another
//! paper). The crate also covers sentence highlighting, snapshot persistence,
//! the user bibliography and a parent-retrieval evaluation harness.

mod binfmt;
pub mod boolquery;
pub mod corpus;
pub mod embedder;
pub mod engine;
pub mod evalharness;
pub mod invindex;
pub mod library;
pub mod textproc;

pub use binfmt::DecodeError;
pub use boolquery::{parse_filter, query_terms, Clause, FilterQuery, SyntaxError};
pub use corpus::{ingest, Paper, Snapshot, SnapshotError};
pub use embedder::{Embedding, VectorStore};
pub use engine::{Engine, EngineError, RankingSource, SearchHit, SearchResult};
