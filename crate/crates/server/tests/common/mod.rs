#![allow(dead_code)]

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use manuscriptor::state::load_dir;
use manuscriptor::{router, AppState};
use manuscriptor_core::corpus::{Paper, Snapshot};
use manuscriptor_core::embedder::{corpus_vocabulary, synth_vectors};
use manuscriptor_core::ingest;
use manuscriptor_core::library::{ExternalMetadata, FixtureResolver, MetadataResolver};
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

pub const EMPTY_BODY_ID: &str = "EMPTY-BODY";

pub fn sample_corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/sample_corpus.jsonl")
}

pub fn sample_papers() -> Vec<Paper> {
    let mut papers = ingest(BufReader::new(File::open(sample_corpus_path()).unwrap())).unwrap();
    papers.push(Paper {
        id: EMPTY_BODY_ID.into(),
        title: "A title without a body".into(),
        abstract_text: "Glucose signalling in the pancreas.".into(),
        year: 2020,
        ..Paper::default()
    });
    papers
}

pub fn write_snapshot(dir: &Path, papers: Vec<Paper>, seed: u64) -> String {
    let vocab = corpus_vocabulary(&papers);
    let store = synth_vectors(vocab.iter().map(String::as_str), 32, seed);
    Snapshot::build(papers, store).unwrap().write(dir).unwrap()
}

/// Resolver with the bundled records plus one that points at a corpus paper.
pub fn resolver(papers: &[Paper]) -> Arc<dyn MetadataResolver> {
    let mut records: Vec<ExternalMetadata> =
        serde_json::from_str(include_str!("../../../core/data/doi_fixture.json")).unwrap();
    let p = papers.iter().find(|p| p.doi.is_some()).unwrap();
    records.push(ExternalMetadata {
        doi: p.doi.clone().unwrap(),
        title: p.title.clone(),
        authors: p.authors.clone(),
        journal: p.journal.clone(),
        year: p.year,
    });
    Arc::new(FixtureResolver::new(records))
}

pub struct Harness {
    pub dir: TempDir,
    pub state: AppState,
    pub app: Router,
    pub papers: Vec<Paper>,
    pub hash: String,
}

impl Harness {
    /// A server with no snapshot loaded yet.
    pub fn unloaded() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let papers = sample_papers();
        let hash = write_snapshot(&dir.path().join("snap"), papers.clone(), 7);
        let state = AppState::new(
            Some(dir.path().join("snap")),
            dir.path().join("library"),
            resolver(&papers),
        );
        let app = router(state.clone(), None);
        Self {
            dir,
            state,
            app,
            papers,
            hash,
        }
    }

    pub fn new() -> Self {
        let h = Self::unloaded();
        h.state
            .install(load_dir(&h.dir.path().join("snap")).unwrap());
        h
    }

    pub fn snapshot_dir(&self) -> PathBuf {
        self.dir.path().join("snap")
    }

    pub fn library_file(&self, user: &str) -> PathBuf {
        self.dir.path().join("library").join(format!("{user}.json"))
    }

    pub async fn raw(
        &self,
        method: &str,
        uri: &str,
        body: Option<&str>,
        user: Option<&str>,
    ) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if body.is_some() {
            req = req.header("content-type", "application/json");
        }
        if let Some(u) = user {
            req = req.header("user", u);
        }
        let req = req
            .body(
                body.map(|b| Body::from(b.to_string()))
                    .unwrap_or_else(Body::empty),
            )
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        (status, bytes)
    }

    /// Sends a request and checks the response body against the schema named
    /// `schema` on success, or against the error schema otherwise.
    pub async fn call(
        &self,
        method: &str,
        uri: &str,
        body: Option<Value>,
        user: Option<&str>,
        schema: &str,
    ) -> (StatusCode, Value) {
        let text = body.map(|b| b.to_string());
        let (status, bytes) = self.raw(method, uri, text.as_deref(), user).await;
        let json: Value = serde_json::from_slice(&bytes).unwrap_or_else(|_| {
            panic!(
                "{method} {uri}: non-JSON body {:?}",
                String::from_utf8_lossy(&bytes)
            )
        });
        let schema = if status.is_success() {
            schema
        } else {
            "api_error"
        };
        assert_valid(schema, &json);
        (status, json)
    }

    pub async fn get(&self, uri: &str, schema: &str) -> (StatusCode, Value) {
        self.call("GET", uri, None, None, schema).await
    }

    pub async fn post(&self, uri: &str, body: Value, schema: &str) -> (StatusCode, Value) {
        self.call("POST", uri, Some(body), None, schema).await
    }
}

pub fn schema(name: &str) -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("schemas/{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn assert_valid(name: &str, instance: &Value) {
    let validator = jsonschema::validator_for(&schema(name)).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{instance:#}");
}

pub fn assert_invalid(name: &str, instance: &Value) {
    let validator = jsonschema::validator_for(&schema(name)).unwrap();
    assert!(!validator.is_valid(instance), "{name} accepted {instance}");
}
