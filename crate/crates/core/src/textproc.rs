//! Text normalization shared by the index, the filter parser and the embedder.
//!
//! Two token pipelines exist:
//!
//! * [`TokenPipeline::Index`]: lowercase, stop words removed, snowball English
//!   stems. Used for the inverted index and for filter terms.
//! * [`TokenPipeline::Embed`]: lowercase surface forms with stop words kept,
//!   matching the vocabulary of pretrained word-vector files.
//!
//! Tokens are maximal runs of Unicode letters and digits.

use std::collections::HashSet;
use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

const STOPWORDS_TXT: &str = include_str!("../data/stopwords.txt");
const ABBREVIATIONS_TXT: &str = include_str!("../data/abbreviations.txt");

/// Upper bound on repeated stemming when driving a token to its fixpoint.
const MAX_STEM_PASSES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenPipeline {
    Index,
    Embed,
}

/// Parses a word list: one entry per line, `#` starts a comment, blank lines ignored.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|line| match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        })
        .map(str::trim)
        .filter(|line| !line.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn stopwords() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| parse_word_list(STOPWORDS_TXT).into_iter().collect())
}

fn abbreviations() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| parse_word_list(ABBREVIATIONS_TXT).into_iter().collect())
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

pub fn is_stopword(word: &str) -> bool {
    stopwords().contains(word)
}

/// One application of the snowball English stemmer. `word` must be lowercase.
pub fn stem(word: &str) -> String {
    stemmer().stem(word).into_owned()
}

/// Splits `text` into lowercase runs of letters and digits.
pub fn raw_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|piece| !piece.is_empty())
        .map(str::to_lowercase)
}

/// Normalizes one lowercase token for the index. Returns `None` when the token
/// is a stop word before or after stemming.
///
/// Snowball stems are not always stable under a second pass ("agreed" ->
/// "agre" -> "agr"), so the stemmer is applied until the token stops changing.
/// This keeps the pipeline idempotent, which the filter parser relies on when
/// re-parsing rendered queries.
fn normalize_index_token(token: &str) -> Option<String> {
    if is_stopword(token) {
        return None;
    }
    let mut current = stem(token);
    for _ in 0..MAX_STEM_PASSES {
        let next = stem(&current);
        if next == current {
            break;
        }
        current = next;
    }
    if current.is_empty() || is_stopword(&current) {
        None
    } else {
        Some(current)
    }
}

pub fn tokenize(text: &str, pipeline: TokenPipeline) -> Vec<String> {
    match pipeline {
        TokenPipeline::Embed => raw_tokens(text).collect(),
        TokenPipeline::Index => raw_tokens(text)
            .filter_map(|t| normalize_index_token(&t))
            .collect(),
    }
}

/// A sentence of a paper body. `char_span` is a half-open range of character
/// (Unicode scalar) offsets into [`body_text`] of the paper.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub paper_id: String,
    pub ordinal: u32,
    pub text: String,
    pub char_span: (u32, u32),
}

/// Separator placed between paragraphs when a body is viewed as one string.
pub const PARAGRAPH_SEPARATOR: &str = "\n\n";

/// The concatenated body that sentence spans index into.
pub fn body_text(paragraphs: &[String]) -> String {
    paragraphs.join(PARAGRAPH_SEPARATOR)
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

/// Closing punctuation that may trail a terminator and still belongs to the sentence.
fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Whether the period at `chars[dot]` closes an abbreviation or an initial.
fn ends_abbreviation(chars: &[char], dot: usize) -> bool {
    // Walk back over the word (letters and internal periods) preceding the dot.
    let mut start = dot;
    while start > 0 && (chars[start - 1].is_alphanumeric() || chars[start - 1] == '.') {
        start -= 1;
    }
    let word: String = chars[start..dot].iter().collect::<String>().to_lowercase();
    if word.is_empty() {
        return false;
    }
    if word.chars().count() == 1 && word.chars().all(char::is_alphabetic) {
        return true;
    }
    if abbreviations().contains(&word) {
        return true;
    }
    // Two-word entries such as "et al".
    let mut prev_end = start;
    while prev_end > 0 && chars[prev_end - 1] == ' ' {
        prev_end -= 1;
    }
    if prev_end < start {
        let mut prev_start = prev_end;
        while prev_start > 0 && chars[prev_start - 1].is_alphanumeric() {
            prev_start -= 1;
        }
        if prev_start < prev_end {
            let pair = format!(
                "{} {}",
                chars[prev_start..prev_end]
                    .iter()
                    .collect::<String>()
                    .to_lowercase(),
                word
            );
            return abbreviations().contains(&pair);
        }
    }
    false
}

/// Sentence spans of a single paragraph, as char ranges relative to the paragraph.
fn paragraph_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if start.is_none() && !c.is_whitespace() {
            start = Some(i);
        }
        if is_terminator(c) && start.is_some() {
            let mut end = i + 1;
            while end < chars.len() && (is_terminator(chars[end]) || is_closer(chars[end])) {
                end += 1;
            }
            let mut next = end;
            while next < chars.len() && chars[next].is_whitespace() {
                next += 1;
            }
            let at_end = next == chars.len();
            let boundary = at_end
                || (next > end && (chars[next].is_uppercase() || chars[next].is_ascii_digit()));
            let abbreviated = c == '.' && end == i + 1 && ends_abbreviation(chars, i);
            if boundary && !(abbreviated && !at_end) {
                spans.push((start.take().unwrap_or(i), end));
                i = end;
                continue;
            }
            i = end;
            continue;
        }
        i += 1;
    }
    if let Some(s) = start {
        let mut end = chars.len();
        while end > s && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        spans.push((s, end));
    }
    spans
}

/// Splits body paragraphs into sentences. Sentences never cross paragraphs.
pub fn split_sentences(paper_id: &str, paragraphs: &[String]) -> Vec<Sentence> {
    let sep_len = PARAGRAPH_SEPARATOR.chars().count();
    let mut out = Vec::new();
    let mut offset = 0usize;
    for (p, paragraph) in paragraphs.iter().enumerate() {
        if p > 0 {
            offset += sep_len;
        }
        let chars: Vec<char> = paragraph.chars().collect();
        for (s, e) in paragraph_spans(&chars) {
            out.push(Sentence {
                paper_id: paper_id.to_string(),
                ordinal: out.len() as u32,
                text: chars[s..e].iter().collect(),
                char_span: ((offset + s) as u32, (offset + e) as u32),
            });
        }
        offset += chars.len();
    }
    out
}
