//! Word vectors and averaged-unigram embeddings.
//!
//! A text's embedding is the arithmetic mean of the vectors of its in-vocabulary
//! [`TokenPipeline::Embed`] tokens, counted with multiplicity. Means are
//! accumulated in `f64` and stored as `f32`; distances are computed in `f64`
//! from the stored `f32` components, so a snapshot and a live build rank
//! identically.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::binfmt::{DecodeError, Reader, Writer};
use crate::corpus::Paper;
use crate::textproc::{raw_tokens, tokenize, TokenPipeline};

pub const VECTORS_MAGIC: &[u8; 4] = b"VEC1";
pub const EMBEDDINGS_MAGIC: &[u8; 4] = b"EMB1";

/// Dimensionality of the reference model.
pub const DEFAULT_DIM: usize = 400;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn line_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Line {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("embedding is invalid or has zero norm")]
pub struct InvalidEmbedding;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    index: HashMap<String, u32>,
    words: Vec<String>,
    data: Vec<f32>,
}

/// Non-fatal findings while reading a vector file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    /// Lines whose word had already been seen; the later line wins.
    pub duplicates: usize,
    /// Lines whose word is not a single embedding token (phrases, punctuation).
    pub skipped: usize,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be positive");
        Self {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.row(i as usize))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Inserts or replaces a word's vector. Returns true if it replaced one.
    pub fn insert(&mut self, word: &str, vector: &[f32]) -> bool {
        assert_eq!(vector.len(), self.dim, "vector has wrong dimension");
        match self.index.get(word) {
            Some(&i) => {
                let start = i as usize * self.dim;
                self.data[start..start + self.dim].copy_from_slice(vector);
                true
            }
            None => {
                self.index.insert(word.to_string(), self.words.len() as u32);
                self.words.push(word.to_string());
                self.data.extend_from_slice(vector);
                false
            }
        }
    }

    /// Words in ascending byte order.
    pub fn sorted_words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.words.iter().map(String::as_str).collect();
        words.sort_unstable();
        words
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(VECTORS_MAGIC);
        w.u32(self.len() as u32);
        w.u32(self.dim as u32);
        for word in self.sorted_words() {
            w.str(word);
            for &c in self.get(word).expect("word present") {
                w.f32(c);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes, VECTORS_MAGIC)?;
        let count = r.u32()?;
        let dim = r.u32()? as usize;
        if dim == 0 {
            return Err(DecodeError::Invalid("zero dimension".into()));
        }
        let mut store = Self::new(dim);
        let mut vector = vec![0f32; dim];
        for _ in 0..count {
            let word = r.str()?;
            for c in vector.iter_mut() {
                *c = r.f32()?;
            }
            if store.insert(&word, &vector) {
                return Err(DecodeError::Invalid(format!("duplicate word `{word}`")));
            }
        }
        r.finish()?;
        Ok(store)
    }
}

/// Reads the textual vector format: a `<count> <dim>` header followed by
/// `<word> <c1> ... <cdim>` lines.
pub fn load_vectors<R: BufRead>(reader: R) -> Result<(VectorStore, LoadReport), FormatError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| line_err(1, "missing header"))??;
    let mut parts = header.split_whitespace();
    let (count, dim) = match (parts.next(), parts.next(), parts.next()) {
        (Some(c), Some(d), None) => (
            c.parse::<usize>()
                .map_err(|_| line_err(1, "header count is not an integer"))?,
            d.parse::<usize>()
                .map_err(|_| line_err(1, "header dimension is not an integer"))?,
        ),
        _ => return Err(line_err(1, "header must be `<count> <dim>`")),
    };
    if dim == 0 {
        return Err(line_err(1, "dimension must be positive"));
    }

    let mut store = VectorStore::new(dim);
    let mut report = LoadReport::default();
    let mut vector = vec![0f32; dim];
    let mut records = 0usize;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records += 1;
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let word = fields.next().expect("nonblank line has a field");
        let mut n = 0usize;
        for field in fields {
            if n >= dim {
                return Err(line_err(line_no, format!("more than {dim} components")));
            }
            let value: f64 = field
                .parse()
                .map_err(|_| line_err(line_no, format!("`{field}` is not a number")))?;
            let value = value as f32;
            if !value.is_finite() {
                return Err(line_err(line_no, format!("non-finite component `{field}`")));
            }
            vector[n] = value;
            n += 1;
        }
        if n != dim {
            return Err(line_err(
                line_no,
                format!("expected {dim} components, found {n}"),
            ));
        }
        let normalized: Vec<String> = raw_tokens(word).collect();
        if normalized.len() != 1 {
            report.skipped += 1;
            continue;
        }
        if store.insert(&normalized[0], &vector) {
            report.duplicates += 1;
        }
    }
    if records != count {
        return Err(line_err(
            1,
            format!("header announces {count} vectors, file has {records}"),
        ));
    }
    Ok((store, report))
}

/// Deterministic pseudo-random vectors for `vocab`.
///
/// Each word is seeded independently: the 32-byte SHA-256 digest of
/// `seed.to_le_bytes() || word.as_bytes()` seeds a ChaCha8 stream, and
/// component `i` is `next_u32() / 2^32 * 2 - 1`, a uniform value in [-1, 1).
/// The result depends only on `(word, dim, seed)`.
pub fn synth_vectors<'a, I>(vocab: I, dim: usize, seed: u64) -> VectorStore
where
    I: IntoIterator<Item = &'a str>,
{
    let mut words: Vec<&str> = vocab.into_iter().collect();
    words.sort_unstable();
    words.dedup();
    let mut store = VectorStore::new(dim);
    let mut vector = vec![0f32; dim];
    for word in words {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(word.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
        for c in vector.iter_mut() {
            *c = (rng.next_u32() as f64 / 4_294_967_296.0 * 2.0 - 1.0) as f32;
        }
        store.insert(word, &vector);
    }
    store
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub vec: Vec<f32>,
    pub valid: bool,
}

impl Embedding {
    pub fn invalid(dim: usize) -> Self {
        Self {
            vec: vec![0.0; dim],
            valid: false,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.vec)
    }
}

pub fn embed_tokens<'a, I>(store: &VectorStore, tokens: I) -> Embedding
where
    I: IntoIterator<Item = &'a str>,
{
    let mut sum = vec![0f64; store.dim()];
    let mut count = 0usize;
    for token in tokens {
        if let Some(v) = store.get(token) {
            for (s, &c) in sum.iter_mut().zip(v) {
                *s += c as f64;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Embedding::invalid(store.dim());
    }
    let n = count as f64;
    Embedding {
        vec: sum.into_iter().map(|s| (s / n) as f32).collect(),
        valid: true,
    }
}

pub fn embed_text(store: &VectorStore, text: &str) -> Embedding {
    let tokens = tokenize(text, TokenPipeline::Embed);
    embed_tokens(store, tokens.iter().map(String::as_str))
}

pub fn norm(v: &[f32]) -> f64 {
    v.iter()
        .map(|&x| {
            let x = x as f64;
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

/// Cosine distance given precomputed norms. Both norms must be nonzero.
#[inline]
pub fn cosine_distance_with_norms(u: &[f32], u_norm: f64, v: &[f32], v_norm: f64) -> f64 {
    1.0 - dot(u, v) / (u_norm * v_norm)
}

/// `1 - cos(u, v)`, in [0, 2] up to rounding.
pub fn cosine_distance(u: &Embedding, v: &Embedding) -> Result<f64, InvalidEmbedding> {
    if !u.valid || !v.valid {
        return Err(InvalidEmbedding);
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(InvalidEmbedding);
    }
    Ok(cosine_distance_with_norms(&u.vec, nu, &v.vec, nv))
}

/// Which paper fields contribute to its document embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedFields {
    /// Title, abstract and body.
    Full,
    /// Title and body only. Used when abstracts serve as queries.
    WithoutAbstract,
}

pub fn embed_paper(store: &VectorStore, paper: &Paper, fields: EmbedFields) -> Embedding {
    match fields {
        EmbedFields::Full => embed_text(store, &paper.full_text()),
        EmbedFields::WithoutAbstract => embed_text(store, &paper.text_without_abstract()),
    }
}

/// Ordinal-aligned document embeddings.
/// Every embedding token that occurs anywhere in `corpus`.
pub fn corpus_vocabulary(corpus: &[Paper]) -> BTreeSet<String> {
    corpus
        .iter()
        .flat_map(|p| tokenize(&p.full_text(), TokenPipeline::Embed))
        .collect()
}

pub fn embed_corpus(store: &VectorStore, corpus: &[Paper], fields: EmbedFields) -> Vec<Embedding> {
    corpus
        .iter()
        .map(|p| embed_paper(store, p, fields))
        .collect()
}

/// Serializes embeddings in the `EMB1` layout.
pub fn embeddings_to_bytes(ids: &[String], embeddings: &[Embedding], dim: usize) -> Vec<u8> {
    assert_eq!(ids.len(), embeddings.len());
    let mut w = Writer::new(EMBEDDINGS_MAGIC);
    w.u32(ids.len() as u32);
    w.u32(dim as u32);
    for (id, e) in ids.iter().zip(embeddings) {
        w.str(id);
        w.u8(u8::from(e.valid));
        for &c in &e.vec {
            w.f32(c);
        }
    }
    w.finish()
}

pub fn embeddings_from_bytes(
    bytes: &[u8],
) -> Result<(usize, Vec<(String, Embedding)>), DecodeError> {
    let mut r = Reader::new(bytes, EMBEDDINGS_MAGIC)?;
    let count = r.u32()?;
    let dim = r.u32()? as usize;
    let mut out = Vec::new();
    for _ in 0..count {
        let id = r.str()?;
        let valid = match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(DecodeError::Invalid(format!("validity byte {b}"))),
        };
        let mut vec = Vec::with_capacity(dim);
        for _ in 0..dim {
            vec.push(r.f32()?);
        }
        out.push((id, Embedding { vec, valid }));
    }
    r.finish()?;
    Ok((dim, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store2() -> VectorStore {
        let mut s = VectorStore::new(2);
        s.insert("a", &[1.0, 0.0]);
        s.insert("b", &[0.0, 1.0]);
        s
    }

    fn emb(v: &[f32]) -> Embedding {
        Embedding {
            vec: v.to_vec(),
            valid: true,
        }
    }

    #[test]
    fn load_simple_file() {
        let (store, report) = load_vectors("2 3\na 1 0 0\nb 0 1 0\n".as_bytes()).unwrap();
        assert_eq!(store.dim(), 3);
        assert_eq!(store.len(), 2);
        assert_eq!(store.get("b").unwrap(), &[0.0, 1.0, 0.0]);
        assert_eq!(report, LoadReport::default());
    }

    #[test]
    fn wrong_component_count_names_line() {
        let err = load_vectors("2 3\na 1 0 0\nb 0 1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::Line { line: 3, .. }), "{err}");
    }

    #[test]
    fn bad_headers_and_values() {
        for text in [
            "",
            "2\n",
            "x 3\n",
            "1 0\na\n",
            "1 2\na 1 nan\n",
            "1 2\na 1 inf\n",
        ] {
            assert!(load_vectors(text.as_bytes()).is_err(), "{text:?}");
        }
        let err = load_vectors("3 2\na 1 0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("header announces 3"));
    }

    #[test]
    fn duplicate_words_last_wins() {
        let (store, report) = load_vectors("2 2\na 1 0\na 0 1\n".as_bytes()).unwrap();
        assert_eq!(report.duplicates, 1);
        assert_eq!(store.len(), 1);
        assert_eq!(store.get("a").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn words_are_lowercased_and_phrases_skipped() {
        let (store, report) = load_vectors("3 1\nThe 1\nnew_york 2\nthe 3\n".as_bytes()).unwrap();
        assert_eq!(store.get("the").unwrap(), &[3.0]);
        assert_eq!(report.duplicates, 1);
        assert_eq!(report.skipped, 1);
    }

    #[test]
    fn synth_is_deterministic_and_seeded() {
        let vocab = ["lung", "cancer", "kidney"];
        let a = synth_vectors(vocab, 8, 7);
        let b = synth_vectors(vocab, 8, 7);
        assert_eq!(a, b);
        let c = synth_vectors(vocab, 8, 8);
        assert_ne!(a.get("lung"), c.get("lung"));
        assert!(synth_vectors([], 8, 7).is_empty());
        assert!(a
            .get("lung")
            .unwrap()
            .iter()
            .all(|c| (-1.0..1.0).contains(c)));
    }

    #[test]
    fn synth_pinned_values() {
        // Frozen so that a change in the generation scheme is caught.
        let s = synth_vectors(["cell"], 4, 42);
        let bits: Vec<u32> = s.get("cell").unwrap().iter().map(|x| x.to_bits()).collect();
        assert_eq!(bits, [3207816816, 3206751972, 3197110444, 3207883092]);
        assert_eq!(
            s.get("cell").unwrap(),
            synth_reference("cell", 4, 42).as_slice()
        );
    }

    /// Direct transcription of the documented scheme.
    fn synth_reference(word: &str, dim: usize, seed: u64) -> Vec<f32> {
        let mut bytes = seed.to_le_bytes().to_vec();
        bytes.extend_from_slice(word.as_bytes());
        let digest: [u8; 32] = Sha256::digest(&bytes).into();
        let mut rng = ChaCha8Rng::from_seed(digest);
        (0..dim)
            .map(|_| ((rng.next_u32() as f64) / 4294967296.0 * 2.0 - 1.0) as f32)
            .collect()
    }

    #[test]
    fn mean_of_vectors() {
        let s = store2();
        assert_eq!(embed_text(&s, "a"), emb(&[1.0, 0.0]));
        assert_eq!(embed_text(&s, "a b"), emb(&[0.5, 0.5]));
        let e = embed_text(&s, "a a b");
        assert_eq!(e.vec, vec![(2.0f64 / 3.0) as f32, (1.0f64 / 3.0) as f32]);
        assert_eq!(embed_text(&s, "b a"), embed_text(&s, "a b"));
        assert_eq!(embed_text(&s, "A, B!"), embed_text(&s, "a b"));
    }

    #[test]
    fn out_of_vocabulary_is_invalid() {
        let e = embed_text(&store2(), "zzz qqq");
        assert!(!e.valid);
        assert_eq!(e.vec, vec![0.0, 0.0]);
        assert!(!embed_text(&store2(), "").valid);
    }

    #[test]
    fn distance_examples() {
        let v = emb(&[0.3, -2.0]);
        assert!(cosine_distance(&v, &v).unwrap().abs() < 1e-12);
        assert_eq!(
            cosine_distance(&emb(&[1.0, 0.0]), &emb(&[0.0, 1.0])).unwrap(),
            1.0
        );
        assert_eq!(
            cosine_distance(&emb(&[1.0, 0.0]), &emb(&[-1.0, 0.0])).unwrap(),
            2.0
        );
        assert_eq!(
            cosine_distance(&emb(&[0.0, 0.0]), &v),
            Err(InvalidEmbedding)
        );
        assert_eq!(
            cosine_distance(&Embedding::invalid(2), &v),
            Err(InvalidEmbedding)
        );
    }

    #[test]
    fn vec1_round_trip() {
        let s = synth_vectors(["x", "y", "z"], 5, 1);
        let back = VectorStore::from_bytes(&s.to_bytes()).unwrap();
        for w in ["x", "y", "z"] {
            assert_eq!(back.get(w), s.get(w));
        }
        assert_eq!(back.to_bytes(), s.to_bytes());
    }

    #[test]
    fn emb1_round_trip() {
        let ids = vec!["p1".to_string(), "p2".to_string()];
        let embs = vec![emb(&[1.0, 2.0]), Embedding::invalid(2)];
        let bytes = embeddings_to_bytes(&ids, &embs, 2);
        let (dim, back) = embeddings_from_bytes(&bytes).unwrap();
        assert_eq!(dim, 2);
        assert_eq!(back[0], (ids[0].clone(), embs[0].clone()));
        assert_eq!(back[1], (ids[1].clone(), embs[1].clone()));
        let mut bad = bytes.clone();
        bad[4 + 4 + 4 + 4 + 2] = 7; // validity byte of the first record
        assert!(embeddings_from_bytes(&bad).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f32>> {
            prop::collection::vec(-10.0f32..10.0, dim).prop_filter("nonzero", |v| norm(v) > 1e-3)
        }

        proptest! {
            #[test]
            fn symmetric_and_bounded(u in vec_strategy(6), v in vec_strategy(6)) {
                let (u, v) = (emb(&u), emb(&v));
                let a = cosine_distance(&u, &v).unwrap();
                let b = cosine_distance(&v, &u).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
                prop_assert!((-1e-9..=2.0 + 1e-9).contains(&a));
            }

            #[test]
            fn query_scaling_preserves_order(
                q in vec_strategy(5),
                cands in prop::collection::vec(vec_strategy(5), 1..20),
                c in 0.01f32..100.0,
            ) {
                let order = |q: &Embedding| {
                    let mut idx: Vec<usize> = (0..cands.len()).collect();
                    let d: Vec<f64> = cands.iter().map(|x| cosine_distance(q, &emb(x)).unwrap()).collect();
                    idx.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
                    (idx, d)
                };
                let scaled = emb(&q.iter().map(|x| x * c).collect::<Vec<_>>());
                let (o1, d1) = order(&emb(&q));
                let (o2, _) = order(&scaled);
                // Scaling perturbs distances by rounding only; compare orders
                // wherever neighbouring distances are separated by more than that.
                let separated = o1.windows(2).all(|w| (d1[w[1]] - d1[w[0]]).abs() > 1e-5);
                if separated {
                    prop_assert_eq!(o1, o2);
                }
            }
        }
    }
}
