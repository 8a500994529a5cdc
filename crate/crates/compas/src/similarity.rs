//! Distances between rhythm patterns and the matrix type that collects them.
//!
//! Three metrics: the L1 area between chronotonic curves, Hamming distance
//! on the onset indicator strings, and the permutation (swap) distance on
//! sorted onset positions, with a monotone-assignment generalization when
//! the onset counts differ.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{chronotonic, chronotonic_l1};
use crate::notation::RhythmPattern;

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("cycle length mismatch: {a} vs {b}")]
    CycleMismatch { a: usize, b: usize },
    #[error("onset count mismatch ({a} vs {b}): use permutation_distance_unequal")]
    OnsetCountMismatch { a: usize, b: usize },
    #[error("distance between {a:?} and {b:?} failed: {source}")]
    PairFailed {
        a: String,
        b: String,
        #[source]
        source: Box<SimilarityError>,
    },
    #[error("distance matrix needs at least one label")]
    EmptyMatrix,
    #[error("duplicate label {label:?}")]
    DuplicateLabel { label: String },
    #[error("matrix row {row} has {got} entries, expected {expected}")]
    NotSquare { row: usize, got: usize, expected: usize },
    #[error("matrix entry ({i},{j}) = {value} is not a finite non-negative number")]
    BadEntry { i: usize, j: usize, value: f64 },
    #[error("matrix is asymmetric at ({i},{j}): {upper} vs {lower}")]
    Asymmetric { i: usize, j: usize, upper: f64, lower: f64 },
    #[error("matrix diagonal entry {i} is {value}, expected 0")]
    NonZeroDiagonal { i: usize, value: f64 },
}

impl SimilarityError {
    /// True when this error is (or wraps) a cycle-length mismatch.
    pub fn is_cycle_mismatch(&self) -> bool {
        match self {
            SimilarityError::CycleMismatch { .. } => true,
            SimilarityError::PairFailed { source, .. } => source.is_cycle_mismatch(),
            _ => false,
        }
    }
}

// ── Pairwise distances ──

fn check_cycles(a: &RhythmPattern, b: &RhythmPattern) -> Result<(), SimilarityError> {
    if a.cycle_len() != b.cycle_len() {
        return Err(SimilarityError::CycleMismatch { a: a.cycle_len(), b: b.cycle_len() });
    }
    Ok(())
}

/// L1 area between the two chronotonic curves. Integer-valued on the beat
/// grid; computed exactly in integer arithmetic.
pub fn chronotonic_distance(a: &RhythmPattern, b: &RhythmPattern) -> Result<f64, SimilarityError> {
    check_cycles(a, b)?;
    Ok(chronotonic_l1(&chronotonic(a), &chronotonic(b)) as f64)
}

/// Number of beats where exactly one of the patterns has an onset.
pub fn hamming_distance(a: &RhythmPattern, b: &RhythmPattern) -> Result<u32, SimilarityError> {
    check_cycles(a, b)?;
    let count = (0..a.cycle_len()).filter(|&i| a.has_onset_at(i) != b.has_onset_at(i)).count();
    Ok(count as u32)
}

/// Swap distance for equal onset counts: total beat displacement between the
/// sorted position vectors. Sorted matching is optimal for L1 costs on a line.
pub fn permutation_distance_equal(
    a: &RhythmPattern,
    b: &RhythmPattern,
) -> Result<u64, SimilarityError> {
    check_cycles(a, b)?;
    if a.onset_count() != b.onset_count() {
        return Err(SimilarityError::OnsetCountMismatch { a: a.onset_count(), b: b.onset_count() });
    }
    Ok(a.onsets().iter().zip(b.onsets()).map(|(&x, &y)| x.abs_diff(y) as u64).sum())
}

/// An optimal monotone assignment from the pattern with more onsets onto the
/// other, as produced by [`permutation_distance_unequal`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneAssignment {
    /// Total beat displacement of the assignment.
    pub distance: u64,
    /// `(beat in the larger pattern, matched beat in the smaller)`, in onset
    /// order. Every smaller-pattern onset appears at least once.
    pub pairs: Vec<(usize, usize)>,
    /// True when the second argument was the pattern with more onsets.
    pub swapped: bool,
}

/// Swap distance for differing onset counts: minimum total displacement over
/// order-preserving onto assignments of the larger pattern's onsets to the
/// smaller pattern's. Positions are compared on the linear beat axis with no
/// wrap-around, matching the equal-count variant.
pub fn permutation_distance_unequal(
    a: &RhythmPattern,
    b: &RhythmPattern,
) -> Result<MonotoneAssignment, SimilarityError> {
    check_cycles(a, b)?;
    let swapped = b.onset_count() > a.onset_count();
    let (big, small) = if swapped { (b, a) } else { (a, b) };
    let (p1, p2) = (big.onsets(), small.onsets());
    let (k1, k2) = (p1.len(), p2.len());

    const INF: u64 = u64::MAX / 4;
    // dp[i][j]: first i onsets of p1 assigned, first j targets of p2 all used.
    let mut dp = vec![vec![INF; k2 + 1]; k1 + 1];
    dp[0][0] = 0;
    for i in 1..=k1 {
        let hi = k2.min(i);
        for j in 1..=hi {
            let cost = p1[i - 1].abs_diff(p2[j - 1]) as u64;
            let stay = dp[i - 1][j]; // another source onto target j
            let advance = dp[i - 1][j - 1]; // first source onto target j
            dp[i][j] = stay.min(advance).saturating_add(cost);
        }
    }

    let mut pairs = vec![(0usize, 0usize); k1];
    let (mut i, mut j) = (k1, k2);
    while i > 0 {
        pairs[i - 1] = (p1[i - 1], p2[j - 1]);
        // Prefer opening target j at this source when it ties.
        if j > 0 && dp[i - 1][j - 1] <= dp[i - 1][j] {
            j -= 1;
        }
        i -= 1;
    }
    Ok(MonotoneAssignment { distance: dp[k1][k2], pairs, swapped })
}

/// Swap distance with automatic dispatch on the onset counts.
pub fn permutation_distance(a: &RhythmPattern, b: &RhythmPattern) -> Result<u64, SimilarityError> {
    if a.onset_count() == b.onset_count() {
        permutation_distance_equal(a, b)
    } else {
        Ok(permutation_distance_unequal(a, b)?.distance)
    }
}

// ── Distance matrices ──

/// Distance used to fill a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    Chronotonic,
    Permutation,
    Hamming,
}

impl DistanceMetric {
    pub fn compute(&self, a: &RhythmPattern, b: &RhythmPattern) -> Result<f64, SimilarityError> {
        match self {
            DistanceMetric::Chronotonic => chronotonic_distance(a, b),
            DistanceMetric::Permutation => Ok(permutation_distance(a, b)? as f64),
            DistanceMetric::Hamming => Ok(f64::from(hamming_distance(a, b)?)),
        }
    }
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMetric::Chronotonic => "chronotonic",
            DistanceMetric::Permutation => "permutation",
            DistanceMetric::Hamming => "hamming",
        })
    }
}

impl FromStr for DistanceMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "chronotonic" => Ok(DistanceMetric::Chronotonic),
            "permutation" => Ok(DistanceMetric::Permutation),
            "hamming" => Ok(DistanceMetric::Hamming),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

/// A labeled symmetric distance matrix with a zero diagonal.
///
/// Column sums and maxima are always recomputed from the entries; they are
/// summary views, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<f64>, // row-major k x k
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, SimilarityError> {
        let k = labels.len();
        if k == 0 {
            return Err(SimilarityError::EmptyMatrix);
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(SimilarityError::DuplicateLabel { label: label.clone() });
            }
        }
        if rows.len() != k {
            return Err(SimilarityError::NotSquare { row: 0, got: rows.len(), expected: k });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(SimilarityError::NotSquare { row: i, got: row.len(), expected: k });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(SimilarityError::NonZeroDiagonal { i, value: row[i] });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(SimilarityError::BadEntry { i, j, value: v });
                }
                if j > i && v != rows[j][i] {
                    return Err(SimilarityError::Asymmetric { i, j, upper: v, lower: rows[j][i] });
                }
            }
        }
        let values = rows.into_iter().flatten().collect();
        Ok(DistanceMatrix { labels, values })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    /// Per-column sums (equal to row sums by symmetry).
    pub fn column_sums(&self) -> Vec<f64> {
        let k = self.size();
        (0..k).map(|j| (0..k).map(|i| self.get(i, j)).sum()).collect()
    }

    /// Per-column maxima.
    pub fn column_maxima(&self) -> Vec<f64> {
        let k = self.size();
        (0..k).map(|j| (0..k).map(|i| self.get(i, j)).fold(0.0, f64::max)).collect()
    }

    /// Triples `(i, j, k)` where `d(i,k) > d(i,j) + d(j,k)` beyond rounding.
    /// Purely diagnostic; nothing here requires the triangle inequality.
    pub fn triangle_violations(&self) -> Vec<(usize, usize, usize)> {
        let k = self.size();
        let mut out = Vec::new();
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    if i != j
                        && j != l
                        && i != l
                        && self.get(i, l) > self.get(i, j) + self.get(j, l) + 1e-9
                    {
                        out.push((i, j, l));
                    }
                }
            }
        }
        out
    }

    /// CSV rendering: header, one row per label, then `Sum` and `Max` rows.
    pub fn to_csv(&self, corner: &str) -> String {
        let mut out = String::new();
        out.push_str(corner);
        for label in &self.labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        let k = self.size();
        for i in 0..k {
            out.push_str(&self.labels[i]);
            for j in 0..k {
                out.push(',');
                out.push_str(&format_value(self.get(i, j)));
            }
            out.push('\n');
        }
        for (name, row) in [("Sum", self.column_sums()), ("Max", self.column_maxima())] {
            out.push_str(name);
            for v in row {
                out.push(',');
                out.push_str(&format_value(v));
            }
            out.push('\n');
        }
        out
    }

    /// Fixed-width text rendering with the same layout as the CSV.
    pub fn to_aligned_text(&self, corner: &str) -> String {
        let k = self.size();
        let mut cells: Vec<Vec<String>> = Vec::with_capacity(k + 3);
        let mut header = vec![corner.to_string()];
        header.extend(self.labels.iter().cloned());
        cells.push(header);
        for i in 0..k {
            let mut row = vec![self.labels[i].clone()];
            row.extend((0..k).map(|j| format_value(self.get(i, j))));
            cells.push(row);
        }
        for (name, values) in [("Sum", self.column_sums()), ("Max", self.column_maxima())] {
            let mut row = vec![name.to_string()];
            row.extend(values.iter().map(|&v| format_value(v)));
            cells.push(row);
        }
        let widths: Vec<usize> =
            (0..=k).map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for row in &cells {
            for (c, cell) in row.iter().enumerate() {
                if c == 0 {
                    out.push_str(&format!("{cell:<width$}", width = widths[0]));
                } else {
                    out.push_str(&format!("  {cell:>width$}", width = widths[c]));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Integer values print without a decimal point; everything else gets six
/// decimals with trailing zeros trimmed.
fn format_value(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        let mut s = format!("{v:.6}");
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
        s
    }
}

/// Fills a matrix over `patterns` under `metric`. Labels come from pattern
/// names (falling back to `pattern1`, `pattern2`, ...) and must be unique.
/// Any failing pair aborts the whole matrix, named in the error.
pub fn distance_matrix(
    patterns: &[RhythmPattern],
    metric: DistanceMetric,
) -> Result<DistanceMatrix, SimilarityError> {
    if patterns.is_empty() {
        return Err(SimilarityError::EmptyMatrix);
    }
    let labels: Vec<String> = patterns
        .iter()
        .enumerate()
        .map(|(i, p)| p.name().map_or_else(|| format!("pattern{}", i + 1), str::to_string))
        .collect();
    let k = patterns.len();
    let mut rows = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = metric.compute(&patterns[i], &patterns[j]).map_err(|e| {
                SimilarityError::PairFailed {
                    a: labels[i].clone(),
                    b: labels[j].clone(),
                    source: Box::new(e),
                }
            })?;
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    DistanceMatrix::new(labels, rows)
}

// ── Published reference tables ──

/// Reference distance tables for the canonical five patterns, used by the
/// acceptance suite and the CLI selfcheck.
///
/// The tables are stored exactly as published, including their printed `Sum`
/// and `Max` rows. One published cell is internally inconsistent: the
/// permutation `Sum` entry for seguiriya reads 34, while the published
/// seguiriya column itself sums to 31. `selfcheck` reports that cell as a
/// reference inconsistency rather than silently correcting either side.
pub mod reference {
    /// Label order shared by both tables.
    pub const PATTERN_ORDER: [&str; 5] = ["solea", "buleria", "seguiriya", "guajira", "fandango"];

    pub const CHRONOTONIC: [[f64; 5]; 5] = [
        [0.0, 6.0, 8.0, 4.0, 10.0],
        [6.0, 0.0, 12.0, 8.0, 14.0],
        [8.0, 12.0, 0.0, 8.0, 6.0],
        [4.0, 8.0, 8.0, 0.0, 6.0],
        [10.0, 14.0, 6.0, 6.0, 0.0],
    ];
    pub const CHRONOTONIC_SUM: [f64; 5] = [28.0, 40.0, 34.0, 26.0, 36.0];
    pub const CHRONOTONIC_MAX: [f64; 5] = [10.0, 14.0, 12.0, 8.0, 14.0];

    pub const PERMUTATION: [[f64; 5]; 5] = [
        [0.0, 1.0, 11.0, 7.0, 7.0],
        [1.0, 0.0, 12.0, 8.0, 8.0],
        [11.0, 12.0, 0.0, 4.0, 4.0],
        [7.0, 8.0, 4.0, 0.0, 2.0],
        [7.0, 8.0, 4.0, 2.0, 0.0],
    ];
    /// As published; the seguiriya entry (34) conflicts with its own column.
    pub const PERMUTATION_SUM: [f64; 5] = [26.0, 29.0, 34.0, 21.0, 21.0];
    pub const PERMUTATION_MAX: [f64; 5] = [11.0, 12.0, 12.0, 8.0, 8.0];
}
