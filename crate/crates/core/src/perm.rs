//! Gender-permutation significance tests for MI.
//!
//! Each noun type is reduced to a [`NounProfile`]: its assigned gender and the
//! sparse vector of partner counts it contributes. Shuffling the gender
//! column over profiles and re-aggregating them gives the permuted table
//! without touching the underlying pairs again.
//!
//! Permutation `i` draws its shuffle from a ChaCha stream keyed by
//! `(seed, i)`, so results do not depend on how permutations are spread over
//! worker threads.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conllu::Gender;
use crate::filter::GenderAssignment;
use crate::info::{ContingencyTable, InfoError};

pub const DEFAULT_PERMUTATIONS: usize = 10_000;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Permuted MI values within this distance of the observed MI count as ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PermError {
    #[error("noun {0:?} has no assigned gender")]
    UnassignedNoun(String),
    #[error("permutation test needs at least two genders")]
    SingleGender,
    #[error("permutation test needs at least two noun profiles, found {0}")]
    TooFewNouns(usize),
    #[error("label sequence is not a permutation of the profile genders")]
    LabelMultisetMismatch,
    #[error("number of permutations must be at least 1")]
    ZeroPermutations,
    #[error(transparent)]
    Table(#[from] InfoError),
}

/// Unit that carries a gender during permutation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermutationLevel {
    /// Shuffle the lemma → gender map over noun types.
    #[default]
    Type,
    /// Shuffle genders over individual pair tokens.
    Token,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounProfile {
    pub lemma: String,
    pub gender: Gender,
    /// (partner index, count), sorted by index, counts ≥ 1.
    pub partner_counts: Vec<(u32, u64)>,
    pub token_total: u64,
}

/// Profiles over a shared partner vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileSet {
    profiles: Vec<NounProfile>,
    partner_labels: Vec<String>,
}

impl ProfileSet {
    pub fn new(profiles: Vec<NounProfile>, partner_labels: Vec<String>) -> Self {
        debug_assert!(profiles
            .iter()
            .all(|p| p.token_total == p.partner_counts.iter().map(|c| c.1).sum::<u64>()
                && p.partner_counts.iter().all(|&(j, _)| (j as usize) < partner_labels.len())));
        ProfileSet { profiles, partner_labels }
    }

    pub fn profiles(&self) -> &[NounProfile] {
        &self.profiles
    }

    pub fn partner_labels(&self) -> &[String] {
        &self.partner_labels
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn genders(&self) -> Vec<Gender> {
        self.profiles.iter().map(|p| p.gender).collect()
    }

    pub fn total(&self) -> u64 {
        self.profiles.iter().map(|p| p.token_total).sum()
    }

    /// Gender × partner table with the given gender per profile.
    pub fn table_under(&self, labels: &[Gender]) -> Result<ContingencyTable, PermError> {
        if labels.len() != self.profiles.len() {
            return Err(PermError::LabelMultisetMismatch);
        }
        let mut rows: BTreeMap<Gender, Vec<u64>> = BTreeMap::new();
        for (p, g) in self.profiles.iter().zip(labels) {
            let row = rows.entry(*g).or_insert_with(|| vec![0; self.partner_labels.len()]);
            for &(j, c) in &p.partner_counts {
                row[j as usize] += c;
            }
        }
        let row_labels = rows.keys().map(|g| g.to_string()).collect();
        Ok(ContingencyTable::new(row_labels, self.partner_labels.clone(), rows.into_values().collect())?)
    }

    pub fn table(&self) -> Result<ContingencyTable, PermError> {
        self.table_under(&self.genders())
    }

    /// One single-token profile per pair token, for token-level permutation.
    pub fn token_level(&self) -> ProfileSet {
        let mut profiles = Vec::with_capacity(self.total() as usize);
        for p in &self.profiles {
            for &(j, c) in &p.partner_counts {
                for _ in 0..c {
                    profiles.push(NounProfile {
                        lemma: p.lemma.clone(),
                        gender: p.gender,
                        partner_counts: vec![(j, 1)],
                        token_total: 1,
                    });
                }
            }
        }
        ProfileSet {
            profiles,
            partner_labels: self.partner_labels.clone(),
        }
    }
}

/// Aggregates `(noun lemma, partner value)` records into one profile per noun
/// type. Also returns the gender × partner table, which is the cell-wise sum
/// of the profiles grouped by gender.
pub fn build_profiles<'a>(
    records: impl IntoIterator<Item = (&'a str, &'a str)>,
    assignment: &GenderAssignment,
) -> Result<(ProfileSet, ContingencyTable), PermError> {
    let mut per_noun: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    let mut partners = BTreeSet::new();
    for (noun, partner) in records {
        *per_noun.entry(noun).or_default().entry(partner).or_insert(0) += 1;
        partners.insert(partner);
    }
    let index: BTreeMap<&str, u32> = partners.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
    let mut profiles = Vec::with_capacity(per_noun.len());
    for (noun, counts) in per_noun {
        let gender = assignment.get(noun).ok_or_else(|| PermError::UnassignedNoun(noun.to_string()))?;
        let partner_counts: Vec<(u32, u64)> = counts.into_iter().map(|(p, c)| (index[p], c)).collect();
        profiles.push(NounProfile {
            lemma: noun.to_string(),
            gender,
            token_total: partner_counts.iter().map(|c| c.1).sum(),
            partner_counts,
        });
    }
    let set = ProfileSet::new(profiles, partners.into_iter().map(str::to_string).collect());
    let table = set.table()?;
    Ok((set, table))
}

/// Evaluates MI for a gender labelling of the profiles without building a
/// [`ContingencyTable`]. Cost is linear in the number of sparse profile
/// entries plus genders × partners.
struct MiKernel {
    /// Flattened partner indices / counts of all profiles.
    idx: Vec<u32>,
    cnt: Vec<u64>,
    offsets: Vec<usize>,
    token_totals: Vec<u64>,
    col_totals: Vec<u64>,
    total: u64,
    n_rows: usize,
}

impl MiKernel {
    fn new(set: &ProfileSet, n_rows: usize) -> Self {
        let mut idx = Vec::new();
        let mut cnt = Vec::new();
        let mut offsets = Vec::with_capacity(set.len() + 1);
        let mut col_totals = vec![0u64; set.partner_labels.len()];
        offsets.push(0);
        for p in &set.profiles {
            for &(j, c) in &p.partner_counts {
                idx.push(j);
                cnt.push(c);
                col_totals[j as usize] += c;
            }
            offsets.push(idx.len());
        }
        MiKernel {
            idx,
            cnt,
            offsets,
            token_totals: set.profiles.iter().map(|p| p.token_total).collect(),
            total: col_totals.iter().sum(),
            col_totals,
            n_rows,
        }
    }

    fn scratch(&self) -> Vec<u64> {
        vec![0; (self.n_rows - 1) * self.col_totals.len()]
    }

    /// `rows[i]` is the row index of profile `i`; row `n_rows - 1` is never
    /// accumulated and is recovered from the column totals.
    fn mi(&self, rows: &[u8], scratch: &mut [u64]) -> f64 {
        let width = self.col_totals.len();
        let last = self.n_rows - 1;
        scratch.fill(0);
        let mut row_totals = [0u64; 3];
        for (i, &r) in rows.iter().enumerate() {
            let r = r as usize;
            row_totals[r] += self.token_totals[i];
            if r == last {
                continue;
            }
            let row = &mut scratch[r * width..(r + 1) * width];
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            for (&j, &c) in self.idx[lo..hi].iter().zip(&self.cnt[lo..hi]) {
                row[j as usize] += c;
            }
        }
        let n = self.total as f64;
        let mut mi = 0.0;
        for (j, &col) in self.col_totals.iter().enumerate() {
            let col = col as f64;
            let mut rest = self.col_totals[j];
            for (r, &row_total) in row_totals.iter().enumerate().take(self.n_rows) {
                let joint = if r == last {
                    rest
                } else {
                    let v = scratch[r * width + j];
                    rest -= v;
                    v
                };
                if joint > 0 {
                    let joint = joint as f64;
                    mi += joint / n * ((joint * n) / (row_total as f64 * col)).log2();
                }
            }
        }
        mi.max(0.0)
    }
}

/// Maps genders onto kernel rows so that the gender held by the most noun
/// types lands on the derived (never accumulated) last row.
fn row_mapping(genders: &[Gender]) -> BTreeMap<Gender, u8> {
    let mut tally: BTreeMap<Gender, usize> = BTreeMap::new();
    for &g in genders {
        *tally.entry(g).or_default() += 1;
    }
    let mut order: Vec<(Gender, usize)> = tally.into_iter().collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    order.into_iter().enumerate().map(|(i, (g, _))| (g, i as u8)).collect()
}

fn same_multiset(a: &[Gender], b: &[Gender]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a == b
}

/// MI of the table the profiles would form if profile `i` had gender
/// `labels[i]`. `labels` must be a rearrangement of the profiles' genders.
pub fn mi_under_assignment(set: &ProfileSet, labels: &[Gender]) -> Result<f64, PermError> {
    let genders = set.genders();
    if labels.len() != genders.len() || !same_multiset(&genders, labels) {
        return Err(PermError::LabelMultisetMismatch);
    }
    if set.is_empty() {
        return Err(PermError::Table(InfoError::EmptyTable));
    }
    let mapping = row_mapping(&genders);
    let kernel = MiKernel::new(set, mapping.len());
    let rows: Vec<u8> = labels.iter().map(|g| mapping[g]).collect();
    Ok(kernel.mi(&rows, &mut kernel.scratch()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiTestResult {
    pub observed_mi: f64,
    pub n_permutations: usize,
    pub count_strictly_higher: usize,
    pub count_higher_or_equal: usize,
    /// Share of permutations with strictly higher MI.
    pub p_paper: f64,
    /// (ties and higher + 1) / (permutations + 1).
    pub p_conservative: f64,
    pub seed: u64,
    pub level: PermutationLevel,
    /// `p_paper < 0.05`.
    pub significant: bool,
}

/// Permutation test settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub n_permutations: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub level: PermutationLevel,
}

impl Default for PermutationTest {
    fn default() -> Self {
        PermutationTest {
            n_permutations: DEFAULT_PERMUTATIONS,
            seed: 0,
            workers: 0,
            level: PermutationLevel::Type,
        }
    }
}

impl PermutationTest {
    pub fn new(n_permutations: usize, seed: u64) -> Self {
        PermutationTest {
            n_permutations,
            seed,
            ..Default::default()
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn level(mut self, level: PermutationLevel) -> Self {
        self.level = level;
        self
    }

    pub fn run(&self, set: &ProfileSet) -> Result<MiTestResult, PermError> {
        match self.level {
            PermutationLevel::Type => self.run_on(set),
            PermutationLevel::Token => self.run_on(&set.token_level()),
        }
    }

    fn run_on(&self, set: &ProfileSet) -> Result<MiTestResult, PermError> {
        if self.n_permutations == 0 {
            return Err(PermError::ZeroPermutations);
        }
        if set.len() < 2 {
            return Err(PermError::TooFewNouns(set.len()));
        }
        let genders = set.genders();
        let mapping = row_mapping(&genders);
        if mapping.len() < 2 {
            return Err(PermError::SingleGender);
        }
        let observed_mi = crate::info::mutual_information(&set.table()?);
        let kernel = MiKernel::new(set, mapping.len());
        let original: Vec<u8> = genders.iter().map(|g| mapping[g]).collect();
        let mut scratch = kernel.scratch();
        let reference = kernel.mi(&original, &mut scratch);

        let seed = self.seed;
        let chunk = |range: std::ops::Range<usize>| -> (usize, usize) {
            let mut scratch = kernel.scratch();
            let mut rows = original.clone();
            let (mut higher, mut ge) = (0, 0);
            for i in range {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                rows.copy_from_slice(&original);
                rows.shuffle(&mut rng);
                let mi = kernel.mi(&rows, &mut scratch);
                if mi > reference + TIE_TOLERANCE {
                    higher += 1;
                }
                if mi >= reference - TIE_TOLERANCE {
                    ge += 1;
                }
            }
            (higher, ge)
        };

        const BLOCK: usize = 64;
        let n = self.n_permutations;
        let blocks = n.div_ceil(BLOCK);
        let sum = |a: (usize, usize), b: (usize, usize)| (a.0 + b.0, a.1 + b.1);
        let par = || {
            (0..blocks)
                .into_par_iter()
                .map(|b| chunk(b * BLOCK..((b + 1) * BLOCK).min(n)))
                .reduce(|| (0, 0), sum)
        };
        let (higher, ge) = match self.workers {
            1 => chunk(0..n),
            0 => par(),
            w => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map(|pool| pool.install(par))
                .unwrap_or_else(|_| chunk(0..n)),
        };

        let p_paper = higher as f64 / n as f64;
        Ok(MiTestResult {
            observed_mi,
            n_permutations: n,
            count_strictly_higher: higher,
            count_higher_or_equal: ge,
            p_paper,
            p_conservative: (ge + 1) as f64 / (n + 1) as f64,
            seed,
            level: self.level,
            significant: p_paper < SIGNIFICANCE_LEVEL,
        })
    }
}

/// Type-level test on the global thread pool.
pub fn permutation_test(set: &ProfileSet, n_permutations: usize, seed: u64) -> Result<MiTestResult, PermError> {
    PermutationTest::new(n_permutations, seed).run(set)
}
