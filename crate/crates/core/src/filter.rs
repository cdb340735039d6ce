//! Rank-order token-coverage filtering and per-type gender assignment.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::Gender;

pub const DEFAULT_COVERAGE: f64 = 0.90;

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("no lemma counts to filter")]
    EmptyCounts,
    #[error("coverage must lie in (0, 1], got {0}")]
    InvalidCoverage(f64),
}

/// Token counts per lemma.
pub fn count_lemmata<'a>(lemmata: impl IntoIterator<Item = &'a str>) -> HashMap<&'a str, u64> {
    let mut counts = HashMap::new();
    for l in lemmata {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
}

/// Smallest prefix of the lemmata, ranked by descending count (ties broken
/// lexicographically), whose cumulative share of all tokens reaches `coverage`.
pub fn coverage_filter<S: AsRef<str>>(counts: &HashMap<S, u64>, coverage: f64) -> Result<BTreeSet<String>, FilterError> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(FilterError::InvalidCoverage(coverage));
    }
    let mut ranked: Vec<(&str, u64)> = counts.iter().filter(|(_, &c)| c > 0).map(|(l, &c)| (l.as_ref(), c)).collect();
    if ranked.is_empty() {
        return Err(FilterError::EmptyCounts);
    }
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let total: u64 = ranked.iter().map(|(_, c)| c).sum();
    let mut retained = BTreeSet::new();
    let mut cumulative = 0u64;
    for (lemma, count) in ranked {
        retained.insert(lemma.to_string());
        cumulative += count;
        if cumulative as f64 / total as f64 >= coverage {
            break;
        }
    }
    Ok(retained)
}

/// Keeps records whose partner and noun both survived their coverage filters.
pub fn apply_retention<T>(
    records: impl IntoIterator<Item = T>,
    partners: &BTreeSet<String>,
    nouns: &BTreeSet<String>,
    partner_of: impl Fn(&T) -> &str,
    noun_of: impl Fn(&T) -> &str,
) -> Vec<T> {
    records
        .into_iter()
        .filter(|r| partners.contains(partner_of(r)) && nouns.contains(noun_of(r)))
        .collect()
}

/// One gender per noun type.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderAssignment {
    pub entries: BTreeMap<String, Gender>,
    /// Lemmata whose token genders tie for the mode.
    pub dropped: BTreeSet<String>,
}

impl GenderAssignment {
    pub fn get(&self, lemma: &str) -> Option<Gender> {
        self.entries.get(lemma).copied()
    }

    pub fn genders(&self) -> BTreeSet<Gender> {
        self.entries.values().copied().collect()
    }
}

/// Modal gender of each noun lemma across its tokens; ties are dropped.
pub fn assign_type_gender<'a>(records: impl IntoIterator<Item = (&'a str, Gender)>) -> GenderAssignment {
    let mut tallies: BTreeMap<&str, [u64; 3]> = BTreeMap::new();
    for (lemma, gender) in records {
        let idx = Gender::ALL.iter().position(|&g| g == gender).unwrap();
        tallies.entry(lemma).or_default()[idx] += 1;
    }
    let mut assignment = GenderAssignment::default();
    for (lemma, tally) in tallies {
        let best = *tally.iter().max().unwrap();
        let mut winners = Gender::ALL.iter().zip(tally).filter(|&(_, c)| c == best);
        let (&gender, _) = winners.next().unwrap();
        if winners.next().is_some() {
            assignment.dropped.insert(lemma.to_string());
        } else {
            assignment.entries.insert(lemma.to_string(), gender);
        }
    }
    assignment
}
