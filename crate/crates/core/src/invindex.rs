//! Presence-only inverted index over normalized unigrams.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::binfmt::{DecodeError, Reader, Writer};
use crate::boolquery::FilterQuery;
use crate::corpus::Paper;
use crate::textproc::{tokenize, TokenPipeline};

pub const INDEX_MAGIC: &[u8; 4] = b"IDX1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("duplicate paper id `{0}`")]
    DuplicateId(String),
}

/// Strictly ascending document ordinals. Never empty once stored in an index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostingList {
    ordinals: Vec<u32>,
}

impl PostingList {
    pub fn as_slice(&self) -> &[u32] {
        &self.ordinals
    }

    pub fn len(&self) -> usize {
        self.ordinals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinals.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvertedIndex {
    dictionary: BTreeMap<String, PostingList>,
    doc_ids: Vec<String>,
}

/// All index-pipeline terms of a paper: title, abstract and body.
pub fn paper_terms(paper: &Paper) -> HashSet<String> {
    let mut terms: HashSet<String> = HashSet::new();
    terms.extend(tokenize(&paper.title, TokenPipeline::Index));
    terms.extend(tokenize(&paper.abstract_text, TokenPipeline::Index));
    for paragraph in &paper.body {
        terms.extend(tokenize(paragraph, TokenPipeline::Index));
    }
    terms
}

pub fn build_index(corpus: &[Paper]) -> Result<InvertedIndex, IndexError> {
    let mut seen = HashSet::with_capacity(corpus.len());
    let mut dictionary: BTreeMap<String, PostingList> = BTreeMap::new();
    for (ordinal, paper) in corpus.iter().enumerate() {
        if !seen.insert(paper.id.as_str()) {
            return Err(IndexError::DuplicateId(paper.id.clone()));
        }
        for term in paper_terms(paper) {
            // Ordinals are visited in ascending order, so pushes keep lists sorted.
            dictionary
                .entry(term)
                .or_default()
                .ordinals
                .push(ordinal as u32);
        }
    }
    Ok(InvertedIndex {
        dictionary,
        doc_ids: corpus.iter().map(|p| p.id.clone()).collect(),
    })
}

/// Sorted union of several sorted lists.
fn union_all(lists: &[&[u32]]) -> Vec<u32> {
    match lists {
        [] => Vec::new(),
        [one] => one.to_vec(),
        _ => {
            let mut out: Vec<u32> = lists.iter().flat_map(|l| l.iter().copied()).collect();
            out.sort_unstable();
            out.dedup();
            out
        }
    }
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn subtract(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len());
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j >= b.len() || b[j] != x {
            out.push(x);
        }
    }
    out
}

impl InvertedIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn term_count(&self) -> usize {
        self.dictionary.len()
    }

    pub fn postings(&self, term: &str) -> &[u32] {
        self.dictionary
            .get(term)
            .map(PostingList::as_slice)
            .unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[u32])> {
        self.dictionary
            .iter()
            .map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    /// Ordinals of every document satisfying `query`, ascending.
    ///
    /// Positive clauses are intersected smallest first, negated clauses are
    /// subtracted afterwards.
    pub fn filter_docs(&self, query: &FilterQuery) -> Vec<u32> {
        let clause_union = |alternatives: &[String]| -> Vec<u32> {
            let lists: Vec<&[u32]> = alternatives.iter().map(|t| self.postings(t)).collect();
            union_all(&lists)
        };

        let mut positives: Vec<Vec<u32>> = query
            .clauses
            .iter()
            .filter(|c| !c.negated)
            .map(|c| clause_union(&c.alternatives))
            .collect();
        positives.sort_by_key(Vec::len);

        let mut result: Vec<u32> = match positives.split_first() {
            None => (0..self.doc_count() as u32).collect(),
            Some((first, rest)) => {
                let mut acc = first.clone();
                for list in rest {
                    if acc.is_empty() {
                        break;
                    }
                    acc = intersect(&acc, list);
                }
                acc
            }
        };

        for clause in query.clauses.iter().filter(|c| c.negated) {
            if result.is_empty() {
                break;
            }
            result = subtract(&result, &clause_union(&clause.alternatives));
        }
        result
    }

    /// Serializes to the `IDX1` layout: counts and lengths as little-endian
    /// u32, strings length-prefixed, postings gap-encoded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(INDEX_MAGIC);
        w.u32(self.doc_ids.len() as u32);
        for id in &self.doc_ids {
            w.str(id);
        }
        w.u32(self.dictionary.len() as u32);
        for (term, postings) in &self.dictionary {
            w.str(term);
            w.u32(postings.ordinals.len() as u32);
            let mut prev = 0u32;
            for &ord in &postings.ordinals {
                w.u32(ord - prev);
                prev = ord;
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes, INDEX_MAGIC)?;
        let doc_count = r.u32()?;
        let mut doc_ids = Vec::new();
        for _ in 0..doc_count {
            doc_ids.push(r.str()?);
        }
        let term_count = r.u32()?;
        let mut dictionary = BTreeMap::new();
        let mut prev_term: Option<String> = None;
        for _ in 0..term_count {
            let term = r.str()?;
            if prev_term.as_ref().is_some_and(|p| *p >= term) {
                return Err(DecodeError::Invalid(format!(
                    "terms out of order at `{term}`"
                )));
            }
            let len = r.u32()?;
            if len == 0 {
                return Err(DecodeError::Invalid(format!(
                    "empty posting list for `{term}`"
                )));
            }
            let mut ordinals = Vec::with_capacity(len as usize);
            let mut current: u32 = 0;
            for i in 0..len {
                let gap = r.u32()?;
                if i > 0 && gap == 0 {
                    return Err(DecodeError::Invalid(format!(
                        "non-increasing postings for `{term}`"
                    )));
                }
                current = current
                    .checked_add(gap)
                    .filter(|&o| o < doc_count)
                    .ok_or_else(|| {
                        DecodeError::Invalid(format!("posting out of range for `{term}`"))
                    })?;
                ordinals.push(current);
            }
            prev_term = Some(term.clone());
            dictionary.insert(term, PostingList { ordinals });
        }
        r.finish()?;
        Ok(Self {
            dictionary,
            doc_ids,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolquery::parse_filter;

    fn paper(id: &str, title: &str) -> Paper {
        Paper {
            id: id.to_string(),
            title: title.to_string(),
            ..Paper::default()
        }
    }

    fn small() -> InvertedIndex {
        build_index(&[paper("d0", "lung cancer"), paper("d1", "kidney cancer")]).unwrap()
    }

    #[test]
    fn empty_corpus() {
        let idx = build_index(&[]).unwrap();
        assert_eq!(idx.doc_count(), 0);
        assert_eq!(idx.term_count(), 0);
        assert!(idx.filter_docs(&FilterQuery::match_all()).is_empty());
    }

    #[test]
    fn two_document_dictionary() {
        let idx = small();
        let dict: Vec<(&str, Vec<u32>)> = idx.terms().map(|(t, p)| (t, p.to_vec())).collect();
        assert_eq!(
            dict,
            vec![
                ("cancer", vec![0, 1]),
                ("kidney", vec![1]),
                ("lung", vec![0])
            ]
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = build_index(&[paper("x", "a"), paper("x", "b")]).unwrap_err();
        assert_eq!(err, IndexError::DuplicateId("x".into()));
    }

    #[test]
    fn filter_examples() {
        let idx = small();
        let run = |f: &str| idx.filter_docs(&parse_filter(f).unwrap());
        assert_eq!(run("cancer !lung"), vec![1]);
        assert_eq!(run(""), vec![0, 1]);
        assert_eq!(run("zzzunknownterm"), Vec::<u32>::new());
        assert_eq!(run("!zzzunknownterm"), vec![0, 1]);
        assert_eq!(run("lung|kidney"), vec![0, 1]);
        assert_eq!(run("lung kidney"), Vec::<u32>::new());
        assert_eq!(run("cancer !lung|kidney"), Vec::<u32>::new());
    }

    #[test]
    fn set_helpers() {
        assert_eq!(intersect(&[1, 3, 5, 7], &[3, 4, 7]), vec![3, 7]);
        assert_eq!(subtract(&[1, 3, 5, 7], &[3, 4, 7]), vec![1, 5]);
        assert_eq!(union_all(&[&[1, 5], &[2, 5, 9], &[]]), vec![1, 2, 5, 9]);
    }

    #[test]
    fn bytes_round_trip_and_layout() {
        let idx = small();
        let bytes = idx.to_bytes();
        assert_eq!(&bytes[..4], b"IDX1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(InvertedIndex::from_bytes(&bytes).unwrap(), idx);
    }

    #[test]
    fn corrupt_bytes_rejected() {
        let bytes = small().to_bytes();
        assert!(InvertedIndex::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(InvertedIndex::from_bytes(&extra).is_err());
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(InvertedIndex::from_bytes(&magic).is_err());
        // Final gap of "lung" points past doc_count.
        let mut range = bytes;
        let n = range.len();
        range[n - 4] = 9;
        assert!(InvertedIndex::from_bytes(&range).is_err());
    }
}
