//! Best onset selections: which k-subsets of n beats are the most regular.
//!
//! Regularity is judged on the inscribed onset polygon under one of four
//! criteria. The sweep is exhaustive over all C(n,k) subsets, guarded by an
//! enumeration budget, and reports every optimizer rather than one winner.
//!
//! Criterion values depend only on the cyclic gap multiset, so values are
//! cached per multiset. Equal multisets therefore compare bit-identically
//! and tie detection needs no per-subset tolerance gymnastics.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use thiserror::Error;

use crate::geometry::{ear_area, polygon_area, polygon_perimeter};
use crate::notation::{GapProfile, RhythmPattern};

/// Hard ceiling on C(n,k) for a sweep; larger requests error out rather
/// than running unbounded.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegularityError {
    #[error("onset count must be at least 1")]
    ZeroOnsets,
    #[error("onset count {k} exceeds cycle length {n}")]
    TooManyOnsets { k: usize, n: usize },
    #[error("C({n},{k}) = {subsets} subsets exceeds the enumeration budget of {budget}")]
    BudgetExceeded { n: usize, k: usize, subsets: u128, budget: u64 },
}

/// What "most regular" means for a selection sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegularityCriterion {
    /// Maximize the area of the onset polygon.
    MaxArea,
    /// Maximize the perimeter of the onset polygon.
    MaxPerimeter,
    /// Minimize the total area outside the polygon but inside the regular
    /// n-gon (the ear sum). Equivalent to `MaxArea` by conservation.
    MinSumEars,
    /// Minimize the largest ear, refined lexicographically: descending ear
    /// profiles are compared elementwise, so ties on the largest ear fall
    /// through to the second largest and so on. The refinement pins down the
    /// balanced selections; the largest ear alone would also admit lopsided
    /// ones that pay for a small ear with a second large one.
    MinMaxEar,
}

impl RegularityCriterion {
    pub const ALL: [RegularityCriterion; 4] = [
        RegularityCriterion::MaxArea,
        RegularityCriterion::MaxPerimeter,
        RegularityCriterion::MinSumEars,
        RegularityCriterion::MinMaxEar,
    ];

    fn maximizing(&self) -> bool {
        matches!(self, RegularityCriterion::MaxArea | RegularityCriterion::MaxPerimeter)
    }

    /// Criterion value of a gap multiset (descending), as a vector compared
    /// lexicographically. Scalar criteria use a single element.
    fn profile(&self, multiset: &[usize], n: usize) -> Vec<f64> {
        match self {
            RegularityCriterion::MaxArea | RegularityCriterion::MaxPerimeter => {
                let gaps = GapProfile::from_gaps(multiset.to_vec()).expect("gaps are positive");
                vec![match self {
                    RegularityCriterion::MaxArea => polygon_area(&gaps),
                    _ => polygon_perimeter(&gaps),
                }]
            }
            RegularityCriterion::MinSumEars => {
                vec![multiset.iter().map(|&g| ear_area(g, n)).sum()]
            }
            // Descending gaps give descending ears: ear area is strictly
            // increasing in the gap.
            RegularityCriterion::MinMaxEar => multiset.iter().map(|&g| ear_area(g, n)).collect(),
        }
    }
}

impl fmt::Display for RegularityCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegularityCriterion::MaxArea => "max-area",
            RegularityCriterion::MaxPerimeter => "max-perimeter",
            RegularityCriterion::MinSumEars => "min-sum-ears",
            RegularityCriterion::MinMaxEar => "min-max-ear",
        })
    }
}

impl FromStr for RegularityCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let key: String =
            s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        match key.as_str() {
            "maxarea" => Ok(RegularityCriterion::MaxArea),
            "maxperimeter" => Ok(RegularityCriterion::MaxPerimeter),
            "minsumears" => Ok(RegularityCriterion::MinSumEars),
            "minmaxear" => Ok(RegularityCriterion::MinMaxEar),
            _ => Err(format!("unknown criterion {s:?}")),
        }
    }
}

/// Optimal criterion value, tagged by criterion kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimalValue {
    Area(f64),
    Perimeter(f64),
    EarSum(f64),
    /// Largest ear of the lexicographically minimal ear profile.
    MaxEar(f64),
}

impl OptimalValue {
    pub fn scalar(&self) -> f64 {
        match *self {
            OptimalValue::Area(v)
            | OptimalValue::Perimeter(v)
            | OptimalValue::EarSum(v)
            | OptimalValue::MaxEar(v) => v,
        }
    }
}

/// Everything a selection sweep found.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub n: usize,
    pub k: usize,
    pub criterion: RegularityCriterion,
    pub value: OptimalValue,
    /// Every optimal subset, 0-based positions, ascending within a subset
    /// and lexicographically ordered across subsets.
    pub optimizers: Vec<Vec<usize>>,
    pub subsets_examined: u64,
}

impl SelectionResult {
    pub fn count(&self) -> usize {
        self.optimizers.len()
    }

    pub fn contains(&self, onsets: &[usize]) -> bool {
        self.optimizers.iter().any(|o| o == onsets)
    }

    /// Optimizers grouped by descending gap multiset, with counts, ordered
    /// lexicographically by multiset.
    pub fn optimal_multisets(&self) -> Vec<(Vec<usize>, usize)> {
        let mut groups: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for onsets in &self.optimizers {
            *groups.entry(gap_multiset(onsets, self.n)).or_insert(0) += 1;
        }
        groups.into_iter().collect()
    }
}

/// Cyclic gaps of a sorted subset, returned in descending order.
fn gap_multiset(onsets: &[usize], n: usize) -> Vec<usize> {
    let k = onsets.len();
    let mut gaps: Vec<usize> = (0..k)
        .map(|i| if i + 1 < k { onsets[i + 1] - onsets[i] } else { n - onsets[k - 1] + onsets[0] })
        .collect();
    gaps.sort_unstable_by(|a, b| b.cmp(a));
    gaps
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

const TIE: f64 = 1e-9;

/// Lexicographic comparison outcome of `candidate` against `best` under the
/// criterion's direction. Profiles within a sweep have equal length.
fn beats(candidate: &[f64], best: &[f64], maximizing: bool) -> Option<bool> {
    for (&c, &b) in candidate.iter().zip(best) {
        if (c - b).abs() > TIE {
            return Some(if maximizing { c > b } else { c < b });
        }
    }
    None // tie
}

/// Exhaustive sweep over all C(n,k) subsets with the default budget.
pub fn best_selection(
    n: usize,
    k: usize,
    criterion: RegularityCriterion,
) -> Result<SelectionResult, RegularityError> {
    best_selection_with_budget(n, k, criterion, DEFAULT_ENUMERATION_BUDGET)
}

pub fn best_selection_with_budget(
    n: usize,
    k: usize,
    criterion: RegularityCriterion,
    budget: u64,
) -> Result<SelectionResult, RegularityError> {
    if k == 0 {
        return Err(RegularityError::ZeroOnsets);
    }
    if k > n {
        return Err(RegularityError::TooManyOnsets { k, n });
    }
    let subsets = binomial(n, k);
    if subsets > u128::from(budget) {
        return Err(RegularityError::BudgetExceeded { n, k, subsets, budget });
    }

    let maximizing = criterion.maximizing();
    let mut cache: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    let mut best: Option<Vec<f64>> = None;
    let mut optimizers: Vec<Vec<usize>> = Vec::new();
    let mut examined = 0u64;

    for subset in (0..n).combinations(k) {
        examined += 1;
        let multiset = gap_multiset(&subset, n);
        let profile = cache.entry(multiset).or_insert_with_key(|m| criterion.profile(m, n)).clone();
        match &best {
            None => {
                best = Some(profile);
                optimizers.push(subset);
            }
            Some(current) => match beats(&profile, current, maximizing) {
                Some(true) => {
                    best = Some(profile);
                    optimizers.clear();
                    optimizers.push(subset);
                }
                Some(false) => {}
                None => optimizers.push(subset),
            },
        }
    }

    let best = best.expect("k >= 1 and k <= n gives at least one subset");
    let value = match criterion {
        RegularityCriterion::MaxArea => OptimalValue::Area(best[0]),
        RegularityCriterion::MaxPerimeter => OptimalValue::Perimeter(best[0]),
        RegularityCriterion::MinSumEars => OptimalValue::EarSum(best[0]),
        RegularityCriterion::MinMaxEar => OptimalValue::MaxEar(best[0]),
    };
    Ok(SelectionResult { n, k, criterion, value, optimizers, subsets_examined: examined })
}

/// The balanced gap multiset for k onsets on n beats: with n = kq + r,
/// r gaps of q+1 and k−r gaps of q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedCharacterization {
    pub n: usize,
    pub k: usize,
    pub q: usize,
    pub r: usize,
    /// Descending: r copies of q+1, then k−r copies of q.
    pub multiset: Vec<usize>,
    /// ⌈n/k⌉, the largest gap any optimal selection uses.
    pub max_gap: usize,
    /// True when an exhaustive sweep ran within budget and confirmed that
    /// the optimizers are exactly the subsets with this multiset.
    pub verified: bool,
}

/// Characterizes the optimal selections for `(n, k)` under `criterion` and,
/// when C(n,k) fits the default budget, verifies the characterization by
/// exhaustive sweep.
pub fn characterize_optimal(
    n: usize,
    k: usize,
    criterion: RegularityCriterion,
) -> Result<BalancedCharacterization, RegularityError> {
    if k == 0 {
        return Err(RegularityError::ZeroOnsets);
    }
    if k > n {
        return Err(RegularityError::TooManyOnsets { k, n });
    }
    let (q, r) = (n / k, n % k);
    let mut multiset = vec![q + 1; r];
    multiset.extend(std::iter::repeat_n(q, k - r));
    let max_gap = multiset[0];
    debug_assert_eq!(max_gap, n.div_ceil(k));

    let verified = match best_selection(n, k, criterion) {
        Err(RegularityError::BudgetExceeded { .. }) => false,
        Err(e) => return Err(e),
        Ok(result) => result.optimizers.iter().all(|o| gap_multiset(o, n) == multiset),
    };
    Ok(BalancedCharacterization { n, k, q, r, multiset, max_gap, verified })
}

/// How one pattern fares against the best selections for its (n, k).
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub criterion: RegularityCriterion,
    pub optimal: bool,
    /// The pattern's own criterion value (largest ear for `MinMaxEar`).
    pub value: f64,
    /// The optimal value.
    pub best: f64,
    /// Always ≥ 0; how far `value` is from `best` in the losing direction.
    pub shortfall: f64,
}

pub fn is_optimal(
    pattern: &RhythmPattern,
    criterion: RegularityCriterion,
) -> Result<OptimalityReport, RegularityError> {
    let result = best_selection(pattern.cycle_len(), pattern.onset_count(), criterion)?;
    let own = criterion
        .profile(&gap_multiset(pattern.onsets(), pattern.cycle_len()), pattern.cycle_len());
    let optimal = result.contains(pattern.onsets());
    let (value, best) = (own[0], result.value.scalar());
    let shortfall = if criterion.maximizing() { best - value } else { value - best }.max(0.0);
    Ok(OptimalityReport { criterion, optimal, value, best, shortfall })
}
