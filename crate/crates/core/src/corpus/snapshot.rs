//! Snapshot directories: section files plus a hash manifest.
//!
//! ```text
//! papers.jsonl     one Paper per line, ordinal order
//! sentences.jsonl  {"id": ..., "spans": [[start, end], ...]} per paper
//! index.idx        IDX1 inverted index
//! embeddings.emb   EMB1 document embeddings
//! vectors.vec      VEC1 word vectors used for on-demand query embedding
//! MANIFEST         filename<TAB>sha256-hex, one line per section
//! ```
//!
//! The snapshot hash is the SHA-256 of the manifest bytes.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::Paper;
use crate::binfmt::DecodeError;
use crate::embedder::{
    embed_corpus, embeddings_from_bytes, embeddings_to_bytes, EmbedFields, Embedding, VectorStore,
};
use crate::invindex::{build_index, IndexError, InvertedIndex};
use crate::textproc::{body_text, split_sentences, Sentence};

pub const MANIFEST_FILE: &str = "MANIFEST";
const PAPERS_FILE: &str = "papers.jsonl";
const SENTENCES_FILE: &str = "sentences.jsonl";
const INDEX_FILE: &str = "index.idx";
const EMBEDDINGS_FILE: &str = "embeddings.emb";
const VECTORS_FILE: &str = "vectors.vec";

const SECTIONS: [&str; 5] = [
    PAPERS_FILE,
    SENTENCES_FILE,
    INDEX_FILE,
    EMBEDDINGS_FILE,
    VECTORS_FILE,
];

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("corrupt snapshot file `{file}`: {reason}")]
    Corrupt { file: String, reason: String },
    #[error(transparent)]
    Build(#[from] IndexError),
    #[error("io error on `{file}`: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
}

fn corrupt(file: &str, reason: impl ToString) -> SnapshotError {
    SnapshotError::Corrupt {
        file: file.to_string(),
        reason: reason.to_string(),
    }
}

fn io_err(file: &str) -> impl FnOnce(std::io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io {
        file: file.to_string(),
        source,
    }
}

/// In-memory engine state: papers with their sentence tables, the inverted
/// index, document embeddings and the word vectors, all ordinal-aligned.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub papers: Vec<Paper>,
    pub sentences: Vec<Vec<Sentence>>,
    pub index: InvertedIndex,
    pub embeddings: Vec<Embedding>,
    pub store: VectorStore,
}

/// Serialized section files, in manifest order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotFiles {
    pub sections: Vec<(&'static str, Vec<u8>)>,
    pub manifest: Vec<u8>,
}

impl SnapshotFiles {
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(&self.manifest))
    }
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    id: String,
    spans: Vec<(u32, u32)>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Snapshot {
    /// Derives index, embeddings and sentence tables from validated papers.
    pub fn build(papers: Vec<Paper>, store: VectorStore) -> Result<Self, IndexError> {
        let index = build_index(&papers)?;
        let embeddings = embed_corpus(&store, &papers, EmbedFields::Full);
        let sentences = papers
            .iter()
            .map(|p| split_sentences(&p.id, &p.body))
            .collect();
        Ok(Self {
            papers,
            sentences,
            index,
            embeddings,
            store,
        })
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.store.dim()
    }

    pub fn encode(&self) -> SnapshotFiles {
        let mut papers = Vec::new();
        let mut sentences = Vec::new();
        for (paper, table) in self.papers.iter().zip(&self.sentences) {
            serde_json::to_writer(&mut papers, paper).expect("paper serializes");
            papers.push(b'\n');
            let record = SentenceRecord {
                id: paper.id.clone(),
                spans: table.iter().map(|s| s.char_span).collect(),
            };
            serde_json::to_writer(&mut sentences, &record).expect("record serializes");
            sentences.push(b'\n');
        }
        let ids: Vec<String> = self.papers.iter().map(|p| p.id.clone()).collect();
        let sections = vec![
            (PAPERS_FILE, papers),
            (SENTENCES_FILE, sentences),
            (INDEX_FILE, self.index.to_bytes()),
            (
                EMBEDDINGS_FILE,
                embeddings_to_bytes(&ids, &self.embeddings, self.store.dim()),
            ),
            (VECTORS_FILE, self.store.to_bytes()),
        ];
        let mut manifest = String::new();
        for (name, bytes) in &sections {
            manifest.push_str(&format!("{name}\t{}\n", hex(&Sha256::digest(bytes))));
        }
        SnapshotFiles {
            sections,
            manifest: manifest.into_bytes(),
        }
    }

    /// Writes all sections, then the manifest. Returns the snapshot hash.
    pub fn write(&self, dir: &Path) -> Result<String, SnapshotError> {
        fs::create_dir_all(dir).map_err(io_err("."))?;
        let files = self.encode();
        for (name, bytes) in &files.sections {
            write_file(&dir.join(name), bytes).map_err(io_err(name))?;
        }
        write_file(&dir.join(MANIFEST_FILE), &files.manifest).map_err(io_err(MANIFEST_FILE))?;
        Ok(files.hash())
    }

    pub fn load(dir: &Path) -> Result<(Self, String), SnapshotError> {
        let manifest = read_file(dir, MANIFEST_FILE)?;
        let manifest_text =
            std::str::from_utf8(&manifest).map_err(|_| corrupt(MANIFEST_FILE, "not UTF-8"))?;
        let mut listed: Vec<(String, String)> = Vec::new();
        for (i, line) in manifest_text.lines().enumerate() {
            let (name, digest) = line
                .split_once('\t')
                .ok_or_else(|| corrupt(MANIFEST_FILE, format!("line {} malformed", i + 1)))?;
            listed.push((name.to_string(), digest.to_string()));
        }
        for section in SECTIONS {
            if !listed.iter().any(|(n, _)| n == section) {
                return Err(corrupt(
                    MANIFEST_FILE,
                    format!("missing entry for `{section}`"),
                ));
            }
        }

        let mut contents: Vec<(String, Vec<u8>)> = Vec::new();
        for (name, digest) in &listed {
            if name.contains('/') || name.contains('\\') || name == ".." {
                return Err(corrupt(
                    MANIFEST_FILE,
                    format!("illegal file name `{name}`"),
                ));
            }
            let bytes = match fs::read(dir.join(name)) {
                Ok(b) => b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    return Err(corrupt(name, "listed in manifest but missing"))
                }
                Err(e) => return Err(io_err(name)(e)),
            };
            if hex(&Sha256::digest(&bytes)) != *digest {
                return Err(corrupt(name, "content hash does not match manifest"));
            }
            contents.push((name.clone(), bytes));
        }
        let section = |name: &str| -> &[u8] {
            &contents
                .iter()
                .find(|(n, _)| n == name)
                .expect("presence checked")
                .1
        };

        let papers = decode_papers(section(PAPERS_FILE))?;
        let spans = decode_sentences(section(SENTENCES_FILE))?;
        let index =
            InvertedIndex::from_bytes(section(INDEX_FILE)).map_err(|e| corrupt(INDEX_FILE, e))?;
        let (emb_dim, embedded) = embeddings_from_bytes(section(EMBEDDINGS_FILE))
            .map_err(|e| corrupt(EMBEDDINGS_FILE, e))?;
        let store = VectorStore::from_bytes(section(VECTORS_FILE))
            .map_err(|e: DecodeError| corrupt(VECTORS_FILE, e))?;

        if emb_dim != store.dim() {
            return Err(corrupt(
                EMBEDDINGS_FILE,
                format!("dimension {emb_dim} differs from vectors ({})", store.dim()),
            ));
        }
        check_alignment(
            INDEX_FILE,
            papers.iter().map(|p| &p.id),
            index.doc_ids().iter(),
            papers.len(),
            index.doc_count(),
        )?;
        check_alignment(
            EMBEDDINGS_FILE,
            papers.iter().map(|p| &p.id),
            embedded.iter().map(|(id, _)| id),
            papers.len(),
            embedded.len(),
        )?;
        check_alignment(
            SENTENCES_FILE,
            papers.iter().map(|p| &p.id),
            spans.iter().map(|r| &r.id),
            papers.len(),
            spans.len(),
        )?;

        let mut sentences = Vec::with_capacity(papers.len());
        for (paper, record) in papers.iter().zip(spans) {
            sentences.push(rebuild_sentences(paper, &record.spans)?);
        }

        let snapshot = Self {
            papers,
            sentences,
            index,
            embeddings: embedded.into_iter().map(|(_, e)| e).collect(),
            store,
        };
        Ok((snapshot, hex(&Sha256::digest(&manifest))))
    }
}

fn check_alignment<'a>(
    file: &str,
    expected: impl Iterator<Item = &'a String>,
    found: impl Iterator<Item = &'a String>,
    expected_len: usize,
    found_len: usize,
) -> Result<(), SnapshotError> {
    if expected_len != found_len {
        return Err(corrupt(
            file,
            format!("{found_len} records for {expected_len} papers"),
        ));
    }
    for (i, (a, b)) in expected.zip(found).enumerate() {
        if a != b {
            return Err(corrupt(
                file,
                format!("ordinal {i} is `{b}`, papers file has `{a}`"),
            ));
        }
    }
    Ok(())
}

fn decode_papers(bytes: &[u8]) -> Result<Vec<Paper>, SnapshotError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt(PAPERS_FILE, "not UTF-8"))?;
    let papers = super::ingest(text.as_bytes()).map_err(|e| corrupt(PAPERS_FILE, e))?;
    Ok(papers)
}

fn decode_sentences(bytes: &[u8]) -> Result<Vec<SentenceRecord>, SnapshotError> {
    let text = std::str::from_utf8(bytes).map_err(|_| corrupt(SENTENCES_FILE, "not UTF-8"))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| corrupt(SENTENCES_FILE, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn rebuild_sentences(paper: &Paper, spans: &[(u32, u32)]) -> Result<Vec<Sentence>, SnapshotError> {
    let chars: Vec<char> = body_text(&paper.body).chars().collect();
    let mut prev_end = 0u32;
    let mut out = Vec::with_capacity(spans.len());
    for (ordinal, &(start, end)) in spans.iter().enumerate() {
        if start < prev_end || end <= start || end as usize > chars.len() {
            return Err(corrupt(
                SENTENCES_FILE,
                format!("invalid span {start}..{end} in `{}`", paper.id),
            ));
        }
        prev_end = end;
        out.push(Sentence {
            paper_id: paper.id.clone(),
            ordinal: ordinal as u32,
            text: chars[start as usize..end as usize].iter().collect(),
            char_span: (start, end),
        });
    }
    Ok(out)
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

fn read_file(dir: &Path, name: &str) -> Result<Vec<u8>, SnapshotError> {
    fs::read(dir.join(name)).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            corrupt(name, "missing")
        } else {
            io_err(name)(e)
        }
    })
}

/// Builds a snapshot from papers and word vectors and writes it to `dir`.
/// Returns the in-memory snapshot and its hash.
pub fn build_snapshot(
    papers: Vec<Paper>,
    store: VectorStore,
    dir: &Path,
) -> Result<(Snapshot, String), SnapshotError> {
    let snapshot = Snapshot::build(papers, store)?;
    let hash = snapshot.write(dir)?;
    Ok((snapshot, hash))
}

pub fn load_snapshot(dir: &Path) -> Result<(Snapshot, String), SnapshotError> {
    Snapshot::load(dir)
}
