//! Step-function approximation of pitch contours and distances between the
//! resulting step functions.
//!
//! A contour is replaced by the fewest horizontal pieces that stay within a
//! vertical tolerance alpha of every sample. The greedy sweep is linear and
//! provably minimal; an independent dynamic program certifies minimality in
//! tests. Distances integrate |f − g| over the common time domain.

use thiserror::Error;

use crate::geometry::ChronotonicCurve;
use crate::notation::{TimedPitchSequence, ValueUnit};

/// Largest input the dynamic-program verifier accepts by default.
pub const DEFAULT_ORACLE_BUDGET: usize = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentationError {
    #[error("tolerance must be a finite value >= 0, got {alpha}")]
    BadAlpha { alpha: f64 },
    #[error("cannot compare step functions in {a} with step functions in {b}")]
    UnitMismatch { a: ValueUnit, b: ValueUnit },
    #[error("time domains do not overlap on an interval of positive length")]
    DisjointDomains,
    #[error("input has {len} points, over the verifier budget of {budget}")]
    OracleBudget { len: usize, budget: usize },
}

/// One horizontal piece of a step function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

/// A piecewise-constant approximation: contiguous steps tiling the source
/// track's time span, each within `alpha` of every sample it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct StepApproximation {
    steps: Vec<Step>,
    alpha: f64,
    source_len: usize,
    unit: ValueUnit,
}

impl StepApproximation {
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn piece_count(&self) -> usize {
        self.steps.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn unit(&self) -> ValueUnit {
        self.unit
    }

    /// Number of samples the approximation was built from.
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    /// `(first start, last end)` of the tiled time span.
    pub fn domain(&self) -> (f64, f64) {
        (self.steps[0].start, self.steps[self.steps.len() - 1].end)
    }

    /// Value at time `t`, or `None` outside the domain. Pieces are closed on
    /// the left and open on the right; the last piece is closed on both ends.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let idx = self.steps.partition_point(|s| s.start <= t);
        if idx == 0 {
            return None;
        }
        let step = &self.steps[idx - 1];
        (t <= step.end).then_some(step.value)
    }

    /// `(duration, value)` per piece, in time order.
    pub fn encode(&self) -> Vec<(f64, f64)> {
        self.steps.iter().map(|s| (s.end - s.start, s.value)).collect()
    }

    /// Reinterprets a chronotonic curve as a step function (adjacent equal
    /// heights merged), so rhythm curves can go through [`step_distance`].
    pub fn from_chronotonic(curve: &ChronotonicCurve) -> StepApproximation {
        let mut steps: Vec<Step> = Vec::new();
        for (start, end) in curve.segments() {
            let value = (end - start) as f64;
            match steps.last_mut() {
                Some(last) if last.value == value => last.end = end as f64,
                _ => steps.push(Step { start: start as f64, end: end as f64, value }),
            }
        }
        StepApproximation { source_len: steps.len(), steps, alpha: 0.0, unit: ValueUnit::Beats }
    }
}

/// `(duration, value)` pairs of the approximation, in time order. A pitch
/// transposition of the source shifts the values and nothing else.
pub fn encode_melody(a: &StepApproximation) -> Vec<(f64, f64)> {
    a.encode()
}

fn check_alpha(alpha: f64) -> Result<(), SegmentationError> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(SegmentationError::BadAlpha { alpha });
    }
    Ok(())
}

/// Turns inclusive index runs into steps. The step value is the midpoint of
/// the run's final feasible interval, which is (min + max) / 2 of the run's
/// values. Boundaries sit halfway between adjacent runs' edge samples; the
/// outer boundaries sit on the first and last sample times.
fn build_steps(points: &[(f64, f64)], runs: &[(usize, usize)]) -> Vec<Step> {
    runs.iter()
        .enumerate()
        .map(|(r, &(s, e))| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &(_, y) in &points[s..=e] {
                lo = lo.min(y);
                hi = hi.max(y);
            }
            Step {
                start: if r == 0 { points[s].0 } else { (points[s - 1].0 + points[s].0) / 2.0 },
                end: if r + 1 == runs.len() {
                    points[e].0
                } else {
                    (points[e].0 + points[e + 1].0) / 2.0
                },
                value: (lo + hi) / 2.0,
            }
        })
        .collect()
}

/// Statistics from the greedy sweep, for checking the linear-time contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GreedyStats {
    /// Samples examined; the sweep touches each exactly once.
    pub points_visited: usize,
}

/// Left-to-right sweep holding the running feasible value interval; a new
/// piece starts exactly when the next sample's interval [y − α, y + α] no
/// longer intersects it. Intervals are closed, so exact tangency extends the
/// piece. Minimal piece count; linear time.
pub fn segment_greedy(
    track: &TimedPitchSequence,
    alpha: f64,
) -> Result<StepApproximation, SegmentationError> {
    segment_greedy_with_stats(track, alpha).map(|(a, _)| a)
}

pub fn segment_greedy_with_stats(
    track: &TimedPitchSequence,
    alpha: f64,
) -> Result<(StepApproximation, GreedyStats), SegmentationError> {
    check_alpha(alpha)?;
    let points = track.points();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let (mut lo, mut hi) = (points[0].1, points[0].1);
    for (i, &(_, y)) in points.iter().enumerate().skip(1) {
        let (nlo, nhi) = (lo.min(y), hi.max(y));
        if nhi - nlo <= 2.0 * alpha {
            (lo, hi) = (nlo, nhi);
        } else {
            runs.push((start, i - 1));
            start = i;
            (lo, hi) = (y, y);
        }
    }
    runs.push((start, points.len() - 1));
    let approx = StepApproximation {
        steps: build_steps(points, &runs),
        alpha,
        source_len: points.len(),
        unit: track.unit(),
    };
    Ok((approx, GreedyStats { points_visited: points.len() }))
}

/// Dynamic program over break positions minimizing the piece count, as an
/// independent check on the sweep. Quadratic; guarded by a budget.
pub fn segment_oracle(
    track: &TimedPitchSequence,
    alpha: f64,
) -> Result<StepApproximation, SegmentationError> {
    segment_oracle_with_budget(track, alpha, DEFAULT_ORACLE_BUDGET)
}

pub fn segment_oracle_with_budget(
    track: &TimedPitchSequence,
    alpha: f64,
    budget: usize,
) -> Result<StepApproximation, SegmentationError> {
    check_alpha(alpha)?;
    let points = track.points();
    let n = points.len();
    if n > budget {
        return Err(SegmentationError::OracleBudget { len: n, budget });
    }

    // dp[i]: minimal pieces covering the first i points; from[i]: start index
    // of the last piece in one such cover, preferring the longest last piece.
    let mut dp = vec![u32::MAX; n + 1];
    let mut from = vec![0usize; n + 1];
    dp[0] = 0;
    for i in 1..=n {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for j in (0..i).rev() {
            lo = lo.min(points[j].1);
            hi = hi.max(points[j].1);
            if hi - lo > 2.0 * alpha {
                break; // widening the window further can only stay infeasible
            }
            let cand = dp[j].saturating_add(1);
            if cand <= dp[i] {
                dp[i] = cand;
                from[i] = j;
            }
        }
    }

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = n;
    while i > 0 {
        runs.push((from[i], i - 1));
        i = from[i];
    }
    runs.reverse();
    Ok(StepApproximation {
        steps: build_steps(points, &runs),
        alpha,
        source_len: n,
        unit: track.unit(),
    })
}

fn common_domain(
    f: &StepApproximation,
    g: &StepApproximation,
) -> Result<(f64, f64), SegmentationError> {
    if f.unit() != g.unit() {
        return Err(SegmentationError::UnitMismatch { a: f.unit(), b: g.unit() });
    }
    let lo = f.domain().0.max(g.domain().0);
    let hi = f.domain().1.min(g.domain().1);
    if hi > lo {
        Ok((lo, hi))
    } else {
        Err(SegmentationError::DisjointDomains)
    }
}

/// ∫ |f − g| over the common time domain. Specializes to the chronotonic
/// rhythm distance when both inputs come from chronotonic curves.
pub fn step_distance_unnormalized(
    f: &StepApproximation,
    g: &StepApproximation,
) -> Result<f64, SegmentationError> {
    let (lo, hi) = common_domain(f, g)?;
    let mut cuts: Vec<f64> = vec![lo, hi];
    for approx in [f, g] {
        cuts.extend(approx.steps().iter().map(|s| s.start).filter(|&t| t > lo && t < hi));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = (a + b) / 2.0;
        let fv = f.value_at(mid).expect("mid lies inside f's domain");
        let gv = g.value_at(mid).expect("mid lies inside g's domain");
        total += (fv - gv).abs() * (b - a);
    }
    Ok(total)
}

/// Mean absolute value difference over the common time domain: the
/// unnormalized integral divided by the domain length. Symmetric; zero
/// exactly when the functions agree almost everywhere on the overlap.
pub fn step_distance(
    f: &StepApproximation,
    g: &StepApproximation,
) -> Result<f64, SegmentationError> {
    let (lo, hi) = common_domain(f, g)?;
    Ok(step_distance_unnormalized(f, g)? / (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chronotonic;
    use crate::notation::canonical;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn track(points: &[(f64, f64)], unit: ValueUnit) -> TimedPitchSequence {
        TimedPitchSequence::new(points.to_vec(), unit).unwrap()
    }

    fn debla() -> TimedPitchSequence {
        track(
            &[
                (0.2, 385.0),
                (0.4, 407.0),
                (2.2, 407.0),
                (3.0, 385.0),
                (3.3, 407.0),
                (4.3, 385.0),
                (4.7, 407.0),
                (5.2, 385.0),
                (5.8, 407.0),
                (6.1, 385.0),
                (6.5, 330.0),
            ],
            ValueUnit::Hz,
        )
    }

    #[test]
    fn constant_melody_is_one_step() {
        let t = track(&[(0.0, 440.0), (1.0, 440.0), (2.5, 440.0)], ValueUnit::Hz);
        for alpha in [0.0, 3.0, 100.0] {
            let a = segment_greedy(&t, alpha).unwrap();
            assert_eq!(a.piece_count(), 1);
            assert_eq!(a.steps()[0], Step { start: 0.0, end: 2.5, value: 440.0 });
        }
    }

    #[test]
    fn debla_at_twelve_hz_gives_two_steps() {
        let a = segment_greedy(&debla(), 12.0).unwrap();
        assert_eq!(a.piece_count(), 2);
        let first = a.steps()[0];
        assert_eq!(first.value, 396.0);
        assert!(first.value >= 395.0 && first.value <= 397.0); // final feasible interval
        assert_eq!(first.start, 0.2);
        assert!((first.end - 6.3).abs() < TOL); // midpoint of 6.1 and 6.5
        let last = a.steps()[1];
        assert_eq!(last.value, 330.0);
        assert_eq!(last.end, 6.5);
        assert_eq!(encode_melody(&a).len(), 2);
    }

    #[test]
    fn debla_piece_counts_across_tolerances() {
        for (alpha, expected) in [(1.0, 10), (5.0, 10), (12.0, 2), (25.0, 2)] {
            let greedy = segment_greedy(&debla(), alpha).unwrap();
            let oracle = segment_oracle(&debla(), alpha).unwrap();
            assert_eq!(greedy.piece_count(), expected, "greedy at alpha {alpha}");
            assert_eq!(oracle.piece_count(), expected, "oracle at alpha {alpha}");
        }
    }

    #[test]
    fn near_miss_then_jump_splits_once() {
        let t = track(&[(0.0, 0.0), (1.0, 0.1), (2.0, 5.0)], ValueUnit::Hz);
        let a = segment_greedy(&t, 1.0).unwrap();
        assert_eq!(a.piece_count(), 2);
        assert!((a.steps()[0].value - 0.05).abs() < TOL);
        assert_eq!(a.steps()[1].value, 5.0);
    }

    #[test]
    fn tangency_extends_the_piece() {
        // Exactly 2*alpha apart: closed intervals touch at one value.
        let t = track(&[(0.0, 10.0), (1.0, 14.0)], ValueUnit::Hz);
        assert_eq!(segment_greedy(&t, 2.0).unwrap().piece_count(), 1);
        assert_eq!(segment_greedy(&t, 1.999).unwrap().piece_count(), 2);
    }

    #[test]
    fn single_point_is_one_degenerate_step() {
        let t = track(&[(1.5, 200.0)], ValueUnit::Hz);
        for segmented in [segment_greedy(&t, 0.0).unwrap(), segment_oracle(&t, 0.0).unwrap()] {
            assert_eq!(segmented.piece_count(), 1);
            assert_eq!(segmented.domain(), (1.5, 1.5));
        }
    }

    #[test]
    fn feasibility_holds_at_every_sample() {
        for alpha in [1.0, 5.0, 12.0, 25.0] {
            let a = segment_greedy(&debla(), alpha).unwrap();
            for &(t, y) in debla().points() {
                let v = a.value_at(t).expect("sample inside domain");
                assert!((v - y).abs() <= alpha + TOL, "alpha {alpha}: |{v} - {y}| > {alpha}");
            }
        }
    }

    #[test]
    fn chronotonic_curves_through_step_distance() {
        let fa = StepApproximation::from_chronotonic(&chronotonic(&canonical("fandango").unwrap()));
        let se =
            StepApproximation::from_chronotonic(&chronotonic(&canonical("seguiriya").unwrap()));
        assert_eq!(fa.unit(), ValueUnit::Beats);
        assert_eq!(fa.piece_count(), 1); // constant height 3
        assert_eq!(step_distance_unnormalized(&fa, &se).unwrap(), 6.0);
        assert_eq!(step_distance(&fa, &se).unwrap(), 0.5);
        assert_eq!(step_distance_unnormalized(&fa, &fa).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_distance_is_the_offset() {
        let f =
            segment_greedy(&track(&[(0.0, 100.0), (4.0, 100.0)], ValueUnit::Cents), 0.0).unwrap();
        let g =
            segment_greedy(&track(&[(0.0, 107.5), (4.0, 107.5)], ValueUnit::Cents), 0.0).unwrap();
        assert!((step_distance(&f, &g).unwrap() - 7.5).abs() < TOL);
        assert!((step_distance_unnormalized(&f, &g).unwrap() - 30.0).abs() < TOL);
    }

    #[test]
    fn distance_errors() {
        let f = segment_greedy(&track(&[(0.0, 1.0), (1.0, 1.0)], ValueUnit::Hz), 0.0).unwrap();
        let g = segment_greedy(&track(&[(0.0, 1.0), (1.0, 1.0)], ValueUnit::Cents), 0.0).unwrap();
        assert_eq!(
            step_distance(&f, &g).unwrap_err(),
            SegmentationError::UnitMismatch { a: ValueUnit::Hz, b: ValueUnit::Cents }
        );
        let far = segment_greedy(&track(&[(5.0, 1.0), (6.0, 1.0)], ValueUnit::Hz), 0.0).unwrap();
        assert_eq!(step_distance(&f, &far).unwrap_err(), SegmentationError::DisjointDomains);
        let touching =
            segment_greedy(&track(&[(1.0, 1.0), (2.0, 1.0)], ValueUnit::Hz), 0.0).unwrap();
        assert_eq!(step_distance(&f, &touching).unwrap_err(), SegmentationError::DisjointDomains);
    }

    #[test]
    fn input_errors() {
        let t = track(&[(0.0, 1.0), (1.0, 2.0)], ValueUnit::Hz);
        assert_eq!(
            segment_greedy(&t, -1.0).unwrap_err(),
            SegmentationError::BadAlpha { alpha: -1.0 }
        );
        assert!(segment_greedy(&t, f64::NAN).is_err());
        assert_eq!(
            segment_oracle_with_budget(&debla(), 12.0, 10).unwrap_err(),
            SegmentationError::OracleBudget { len: 11, budget: 10 }
        );
    }

    #[test]
    fn forced_break_concatenates_encodings() {
        let a = [(0.0, 100.0), (1.0, 102.0)];
        let b = [(2.0, 300.0), (3.0, 302.0)];
        let alpha = 2.0;
        let ea = encode_melody(&segment_greedy(&track(&a, ValueUnit::Hz), alpha).unwrap());
        let eb = encode_melody(&segment_greedy(&track(&b, ValueUnit::Hz), alpha).unwrap());
        let joined: Vec<(f64, f64)> = a.iter().chain(&b).copied().collect();
        let ej = encode_melody(&segment_greedy(&track(&joined, ValueUnit::Hz), alpha).unwrap());
        assert_eq!(ej.len(), ea.len() + eb.len());
        let values = |e: &[(f64, f64)]| e.iter().map(|p| p.1).collect::<Vec<f64>>();
        let mut expected = values(&ea);
        expected.extend(values(&eb));
        assert_eq!(values(&ej), expected);
    }

    #[test]
    fn alpha_zero_counts_equal_runs() {
        let t = track(
            &[(0.0, 5.0), (1.0, 5.0), (2.0, 7.0), (3.0, 7.0), (4.0, 7.0), (5.0, 5.0)],
            ValueUnit::Hz,
        );
        assert_eq!(segment_greedy(&t, 0.0).unwrap().piece_count(), 3);
    }

    prop_compose! {
        fn arb_track()(
            n in 1usize..=50,
        )(
            gaps in proptest::collection::vec(0.01f64..2.0, n),
            values in proptest::collection::vec(-5i32..=5, n),
        ) -> TimedPitchSequence {
            let mut t = 0.0;
            let points: Vec<(f64, f64)> = gaps
                .iter()
                .zip(&values)
                .map(|(&g, &v)| {
                    t += g;
                    (t, f64::from(v))
                })
                .collect();
            TimedPitchSequence::new(points, ValueUnit::Hz).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn greedy_matches_oracle_count(t in arb_track(), alpha in 0.0f64..6.0) {
            let greedy = segment_greedy(&t, alpha).unwrap();
            let oracle = segment_oracle(&t, alpha).unwrap();
            prop_assert_eq!(greedy.piece_count(), oracle.piece_count());
        }

        #[test]
        fn every_sample_within_alpha(t in arb_track(), alpha in 0.0f64..6.0) {
            for segmented in [segment_greedy(&t, alpha).unwrap(), segment_oracle(&t, alpha).unwrap()] {
                for &(x, y) in t.points() {
                    let v = segmented.value_at(x).expect("sample inside domain");
                    prop_assert!((v - y).abs() <= alpha + TOL);
                }
            }
        }

        #[test]
        fn piece_count_non_increasing_in_alpha(t in arb_track(), a1 in 0.0f64..6.0, a2 in 0.0f64..6.0) {
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let at_lo = segment_greedy(&t, lo).unwrap().piece_count();
            let at_hi = segment_greedy(&t, hi).unwrap().piece_count();
            prop_assert!(at_hi <= at_lo);
        }

        #[test]
        fn sweep_is_single_pass(t in arb_track(), alpha in 0.0f64..6.0) {
            let (_, stats) = segment_greedy_with_stats(&t, alpha).unwrap();
            prop_assert_eq!(stats.points_visited, t.len());
        }

        #[test]
        fn distance_is_symmetric_and_zero_on_self(t1 in arb_track(), t2 in arb_track(), alpha in 0.0f64..3.0) {
            let f = segment_greedy(&t1, alpha).unwrap();
            let g = segment_greedy(&t2, alpha).unwrap();
            if f.domain().1 > f.domain().0 {
                prop_assert_eq!(step_distance(&f, &f).unwrap(), 0.0);
            } else {
                // A single sample gives a zero-width domain: nothing to average over.
                prop_assert_eq!(step_distance(&f, &f).unwrap_err(), SegmentationError::DisjointDomains);
            }
            match step_distance(&f, &g) {
                Ok(d) => {
                    prop_assert!(d >= 0.0);
                    prop_assert_eq!(d, step_distance(&g, &f).unwrap());
                }
                Err(SegmentationError::DisjointDomains) => {}
                Err(other) => prop_assert!(false, "unexpected error {other}"),
            }
        }
    }
}
