//! Keyword filter language.
//!
//! ```text
//! term1 term2|term3 !term4
//! ```
//!
//! Whitespace separates groups, which are ANDed. Inside a group `|` separates
//! alternatives, which are ORed. A leading `!` negates the whole group, so
//! `!a|b` means NOT (a OR b). Every alternative must normalize to exactly one
//! index term.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textproc::{tokenize, TokenPipeline};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid filter group `{group}`: {reason}")]
pub struct SyntaxError {
    pub group: String,
    pub reason: String,
}

impl SyntaxError {
    fn new(group: &str, reason: impl Into<String>) -> Self {
        Self {
            group: group.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub negated: bool,
    /// Normalized index terms; nonempty and free of duplicates.
    pub alternatives: Vec<String>,
}

/// A conjunction of possibly negated OR-groups. No clauses matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterQuery {
    pub clauses: Vec<Clause>,
}

impl FilterQuery {
    pub fn match_all() -> Self {
        Self::default()
    }

    pub fn is_match_all(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Evaluates the query against the set of terms present in one document.
    pub fn matches<F>(&self, mut contains: F) -> bool
    where
        F: FnMut(&str) -> bool,
    {
        self.clauses.iter().all(|clause| {
            let any = clause.alternatives.iter().any(|t| contains(t));
            any != clause.negated
        })
    }
}

/// Canonical text form; parsing it yields an equal query.
impl fmt::Display for FilterQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, clause) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if clause.negated {
                f.write_str("!")?;
            }
            f.write_str(&clause.alternatives.join("|"))?;
        }
        Ok(())
    }
}

fn parse_group(group: &str) -> Result<Clause, SyntaxError> {
    let (negated, rest) = match group.strip_prefix('!') {
        Some(rest) => (true, rest),
        None => (false, group),
    };
    if rest.is_empty() {
        return Err(SyntaxError::new(group, "group has no terms"));
    }
    let mut alternatives: Vec<String> = Vec::new();
    for alt in rest.split('|') {
        if alt.is_empty() {
            return Err(SyntaxError::new(group, "empty alternative"));
        }
        if alt.contains('!') {
            return Err(SyntaxError::new(
                group,
                "`!` is only allowed at the start of a group",
            ));
        }
        let mut terms = tokenize(alt, TokenPipeline::Index);
        match terms.len() {
            0 => {}
            1 => {
                let term = terms.pop().expect("one term");
                if !alternatives.contains(&term) {
                    alternatives.push(term);
                }
            }
            _ => {
                return Err(SyntaxError::new(
                    group,
                    format!("`{alt}` is not a single word; phrases are not supported"),
                ))
            }
        }
    }
    if alternatives.is_empty() {
        return Err(SyntaxError::new(
            group,
            "no searchable terms (only stop words or punctuation)",
        ));
    }
    Ok(Clause {
        negated,
        alternatives,
    })
}

pub fn parse_filter(raw: &str) -> Result<FilterQuery, SyntaxError> {
    let clauses = raw
        .split_whitespace()
        .map(parse_group)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FilterQuery { clauses })
}

/// Union of all alternatives across clauses.
pub fn query_terms(query: &FilterQuery) -> BTreeSet<String> {
    query
        .clauses
        .iter()
        .flat_map(|c| c.alternatives.iter().cloned())
        .collect()
}
