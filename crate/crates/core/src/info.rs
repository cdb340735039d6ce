//! Plug-in entropy, mutual information and normalized MI over contingency
//! tables. All quantities are in bits.
//!
//! ```
//! use gendermi::info::{ContingencyTable, mutual_information};
//!
//! let table = ContingencyTable::from_rows(vec![vec![5, 0], vec![0, 5]]).unwrap();
//! assert_eq!(mutual_information(&table), 1.0);
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InfoError {
    #[error("probabilities must be non-negative and sum to 1 (sum = {0})")]
    NotNormalized(f64),
    #[error("contingency table has no observations")]
    EmptyTable,
    #[error("row {row} has {found} cells, expected {expected}")]
    Ragged { row: usize, found: usize, expected: usize },
    #[error("{labels} labels for {len} entries")]
    LabelMismatch { labels: usize, len: usize },
}

/// Rows × columns matrix of co-occurrence counts. All-zero rows and columns
/// are removed at construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    /// Row-major.
    counts: Vec<u64>,
    total: u64,
    stripped_rows: usize,
    stripped_cols: usize,
}

impl ContingencyTable {
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, rows: Vec<Vec<u64>>) -> Result<Self, InfoError> {
        if row_labels.len() != rows.len() {
            return Err(InfoError::LabelMismatch { labels: row_labels.len(), len: rows.len() });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != col_labels.len() {
                return Err(InfoError::Ragged { row: i, found: row.len(), expected: col_labels.len() });
            }
        }
        let keep_rows: Vec<usize> = (0..rows.len()).filter(|&r| rows[r].iter().any(|&c| c > 0)).collect();
        let keep_cols: Vec<usize> = (0..col_labels.len()).filter(|&c| rows.iter().any(|row| row[c] > 0)).collect();
        if keep_rows.is_empty() {
            return Err(InfoError::EmptyTable);
        }
        let mut counts = Vec::with_capacity(keep_rows.len() * keep_cols.len());
        for &r in &keep_rows {
            counts.extend(keep_cols.iter().map(|&c| rows[r][c]));
        }
        Ok(ContingencyTable {
            stripped_rows: rows.len() - keep_rows.len(),
            stripped_cols: col_labels.len() - keep_cols.len(),
            total: counts.iter().sum(),
            row_labels: keep_rows.iter().map(|&r| row_labels[r].clone()).collect(),
            col_labels: keep_cols.iter().map(|&c| col_labels[c].clone()).collect(),
            counts,
        })
    }

    /// Table with numeric labels, handy for tests.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self, InfoError> {
        let n_cols = rows.first().map_or(0, Vec::len);
        Self::new(
            (0..rows.len()).map(|i| i.to_string()).collect(),
            (0..n_cols).map(|i| i.to_string()).collect(),
            rows,
        )
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// Number of observations (non-unique pairs).
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn stripped(&self) -> (usize, usize) {
        (self.stripped_rows, self.stripped_cols)
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[u64] {
        let w = self.n_cols();
        &self.counts[row * w..(row + 1) * w]
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.n_rows()).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0; self.n_cols()];
        for r in 0..self.n_rows() {
            for (s, c) in sums.iter_mut().zip(self.row(r)) {
                *s += c;
            }
        }
        sums
    }

    /// Number of non-zero cells (distinct row/column combinations observed).
    pub fn nonzero_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn transpose(&self) -> ContingencyTable {
        let (rows, cols) = (self.n_rows(), self.n_cols());
        let mut counts = Vec::with_capacity(self.counts.len());
        for c in 0..cols {
            counts.extend((0..rows).map(|r| self.get(r, c)));
        }
        ContingencyTable {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            counts,
            total: self.total,
            stripped_rows: self.stripped_cols,
            stripped_cols: self.stripped_rows,
        }
    }
}

/// Shannon entropy of a probability vector, 0·log 0 = 0.
pub fn entropy(probs: &[f64]) -> Result<f64, InfoError> {
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(InfoError::NotNormalized(sum));
    }
    let h: f64 = probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    Ok(h.max(0.0))
}

/// Entropy of the empirical distribution given by `counts`.
pub fn entropy_of_counts(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let c = c as f64;
            c / n * (n / c).log2()
        })
        .sum();
    h.max(0.0)
}

/// Plug-in mutual information of the row and column variables.
///
/// The per-cell terms depend symmetrically on the row and column marginals
/// and are summed in sorted order, so `MI(T) == MI(Tᵀ)` holds bit for bit.
pub fn mutual_information(table: &ContingencyTable) -> f64 {
    let n = table.total() as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let mut terms = Vec::with_capacity(table.nonzero_cells());
    for (r, &row_sum) in rows.iter().enumerate() {
        for (c, &col_sum) in cols.iter().enumerate() {
            let joint = table.get(r, c);
            if joint == 0 {
                continue;
            }
            let joint = joint as f64;
            let ratio = (joint * n) / (row_sum as f64 * col_sum as f64);
            terms.push(joint / n * ratio.log2());
        }
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum::<f64>().max(0.0)
}

/// The six normalizers for MI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Normalizer {
    /// min{H(rows), H(cols)}
    MinH,
    /// √(H(rows)·H(cols))
    GeomMeanH,
    /// (H(rows) + H(cols)) / 2
    ArithMeanH,
    /// max{H(rows), H(cols)}
    MaxH,
    /// max{log₂ #rows, log₂ #cols}
    MaxLogCard,
    /// log₂ of the number of observations
    LogM,
}

impl Normalizer {
    pub const ALL: [Normalizer; 6] = [
        Normalizer::MinH,
        Normalizer::GeomMeanH,
        Normalizer::ArithMeanH,
        Normalizer::MaxH,
        Normalizer::MaxLogCard,
        Normalizer::LogM,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Normalizer::MinH => "MinH",
            Normalizer::GeomMeanH => "GeomMeanH",
            Normalizer::ArithMeanH => "ArithMeanH",
            Normalizer::MaxH => "MaxH",
            Normalizer::MaxLogCard => "MaxLogCard",
            Normalizer::LogM => "LogM",
        }
    }
}

impl fmt::Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An NMI value, or `Undefined` when the normalizer is zero.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NmiValue {
    Defined(f64),
    Undefined(UndefinedTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UndefinedTag {
    Undefined,
}

impl NmiValue {
    pub const UNDEFINED: NmiValue = NmiValue::Undefined(UndefinedTag::Undefined);

    pub fn value(self) -> Option<f64> {
        match self {
            NmiValue::Defined(v) => Some(v),
            NmiValue::Undefined(_) => None,
        }
    }
}

impl Serialize for NmiValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NmiValue::Defined(v) => s.serialize_f64(*v),
            NmiValue::Undefined(_) => s.serialize_str("undefined"),
        }
    }
}

/// The six normalizer values for a table, ordered so that
/// min ≤ geometric ≤ arithmetic ≤ max survives rounding.
fn denominators(h_row: f64, h_col: f64, n_rows: usize, n_cols: usize, total: u64) -> [f64; 6] {
    let lo = h_row.min(h_col);
    let hi = h_row.max(h_col);
    let geo = (h_row * h_col).sqrt().clamp(lo, hi);
    let arith = ((h_row + h_col) / 2.0).clamp(geo, hi);
    let card = (n_rows.max(n_cols) as f64).log2();
    let log_m = (total as f64).log2();
    [lo, geo, arith, hi, card, log_m]
}

fn normalize(mi: f64, denom: f64) -> NmiValue {
    if denom > 0.0 {
        NmiValue::Defined((mi / denom).clamp(0.0, 1.0))
    } else {
        NmiValue::UNDEFINED
    }
}

pub fn marginal_entropies(table: &ContingencyTable) -> (f64, f64) {
    (entropy_of_counts(&table.row_sums()), entropy_of_counts(&table.col_sums()))
}

/// MI divided by the chosen normalizer. Zero normalizers (e.g. a single
/// gender) give `Undefined`, not 0.
pub fn nmi(table: &ContingencyTable, normalizer: Normalizer) -> NmiValue {
    nmi_report(table).values[&normalizer]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmiReport {
    pub unit: String,
    pub mi: f64,
    pub h_row: f64,
    pub h_col: f64,
    pub values: BTreeMap<Normalizer, NmiValue>,
}

impl NmiReport {
    pub fn get(&self, normalizer: Normalizer) -> NmiValue {
        self.values[&normalizer]
    }
}

pub fn nmi_report(table: &ContingencyTable) -> NmiReport {
    let mi = mutual_information(table);
    let (h_row, h_col) = marginal_entropies(table);
    let denoms = denominators(h_row, h_col, table.n_rows(), table.n_cols(), table.total());
    let values = Normalizer::ALL.iter().zip(denoms).map(|(&k, d)| (k, normalize(mi, d))).collect();
    NmiReport {
        unit: "bits".to_string(),
        mi,
        h_row,
        h_col,
        values,
    }
}
