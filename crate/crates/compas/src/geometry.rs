//! Geometric views of a pattern: the chronotonic step curve and the
//! inscribed clock polygon with its ears.
//!
//! Clock coordinates put beat 0 at 12 o'clock and run clockwise, one beat
//! per `2π/n` arc, on the unit circle.

use std::f64::consts::PI;

use crate::notation::{GapProfile, RhythmPattern};

// ── Chronotonic curve ──

/// Step curve of a pattern over one cycle `[0, n]`: each inter-onset span
/// becomes a square box whose height equals its width.
///
/// Segment boundaries are `{0} ∪ onsets ∪ {n}`. When the first onset is not
/// on beat 0 the leading segment `[0, first)` is the pickup before the first
/// onset and gets height `first`; the wrap-around span is split at beat 0
/// rather than joined across the cycle edge, so the curve always describes
/// one cycle as played from its downbeat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChronotonicCurve {
    /// `{0} ∪ onsets ∪ {n}`, strictly increasing.
    breakpoints: Vec<usize>,
}

impl ChronotonicCurve {
    /// Cycle length `n`.
    pub fn cycle_len(&self) -> usize {
        *self.breakpoints.last().expect("curve has at least two breakpoints")
    }

    pub fn breakpoints(&self) -> &[usize] {
        &self.breakpoints
    }

    /// `(start, end)` of each box; the height equals `end - start`.
    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// Box heights in time order.
    pub fn heights(&self) -> Vec<usize> {
        self.segments().map(|(a, b)| b - a).collect()
    }

    /// Height of the box covering beat `t` (`t < n`).
    pub fn height_at_beat(&self, t: usize) -> usize {
        let i = self.breakpoints.partition_point(|&b| b <= t);
        debug_assert!(i >= 1 && i < self.breakpoints.len(), "beat out of range");
        self.breakpoints[i] - self.breakpoints[i - 1]
    }

    /// Area under the curve: the sum of squared box widths.
    pub fn integral(&self) -> usize {
        self.segments().map(|(a, b)| (b - a) * (b - a)).sum()
    }
}

/// Builds the chronotonic curve of a pattern.
pub fn chronotonic(p: &RhythmPattern) -> ChronotonicCurve {
    let n = p.cycle_len();
    let mut breakpoints = Vec::with_capacity(p.onset_count() + 2);
    breakpoints.push(0);
    for &o in p.onsets() {
        if o != 0 {
            breakpoints.push(o);
        }
    }
    breakpoints.push(n);
    ChronotonicCurve { breakpoints }
}

/// Exact L1 area between two curves of equal cycle length, by integrating
/// over the merged breakpoints. Integer arithmetic throughout.
pub fn chronotonic_l1(a: &ChronotonicCurve, b: &ChronotonicCurve) -> u64 {
    assert_eq!(a.cycle_len(), b.cycle_len(), "curves must share a cycle length");
    let mut cuts: Vec<usize> = a.breakpoints.iter().chain(&b.breakpoints).copied().collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut total: u64 = 0;
    for w in cuts.windows(2) {
        let (start, end) = (w[0], w[1]);
        let ha = a.height_at_beat(start) as i64;
        let hb = b.height_at_beat(start) as i64;
        total += (end - start) as u64 * ha.abs_diff(hb);
    }
    total
}

// ── Clock polygon ──

/// One circular arc between consecutive onsets, together with the region
/// between that arc's chord and the regular-grid arc polygon: the "ear"
/// sliced off the full n-gon by the chord.
#[derive(Debug, Clone, PartialEq)]
pub struct Ear {
    /// Onset beat the arc starts at.
    pub from: usize,
    /// Onset beat the arc ends at (cyclically).
    pub to: usize,
    /// Arc length in beats.
    pub gap: usize,
    /// Area between the chord and the `gap + 1` grid vertices it cuts off.
    pub area: f64,
    /// True when the arc spans more than half the circle, so the chord's
    /// central triangle lies outside the polygon and enters the area sums
    /// with a negative sine.
    pub reflex: bool,
}

/// A pattern's onsets as vertices of a polygon inscribed in the clock circle.
#[derive(Debug, Clone, PartialEq)]
pub struct OnsetPolygon {
    n: usize,
    onsets: Vec<usize>,
    vertices: Vec<(f64, f64)>,
    gaps: GapProfile,
}

impl OnsetPolygon {
    pub fn cycle_len(&self) -> usize {
        self.n
    }

    pub fn onsets(&self) -> &[usize] {
        &self.onsets
    }

    /// Unit-circle vertices in onset order (clockwise from 12 o'clock).
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn gap_profile(&self) -> &GapProfile {
        &self.gaps
    }

    /// Fewer than 3 vertices: a point or chord with zero area. Kept, not
    /// rejected; the area formulas below degrade to 0 for these.
    pub fn is_degenerate(&self) -> bool {
        self.onsets.len() < 3
    }

    /// True when some arc spans more than half the circle.
    pub fn has_reflex_arc(&self) -> bool {
        2 * self.gaps.max_gap() > self.n
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.gaps)
    }

    pub fn perimeter(&self) -> f64 {
        polygon_perimeter(&self.gaps)
    }

    /// One ear per arc, in onset order.
    pub fn ears(&self) -> Vec<Ear> {
        let k = self.onsets.len();
        self.gaps
            .gaps()
            .iter()
            .enumerate()
            .map(|(i, &g)| Ear {
                from: self.onsets[i],
                to: self.onsets[(i + 1) % k],
                gap: g,
                area: ear_area(g, self.n),
                reflex: 2 * g > self.n,
            })
            .collect()
    }
}

/// Inscribes a pattern's onsets in the clock circle.
pub fn polygon(p: &RhythmPattern) -> OnsetPolygon {
    let n = p.cycle_len();
    let vertices = p.onsets().iter().map(|&pos| clock_vertex(pos, n)).collect();
    OnsetPolygon { n, onsets: p.onsets().to_vec(), vertices, gaps: p.gap_profile() }
}

/// Unit-circle coordinates of a beat: beat 0 at (0, 1), clockwise.
pub fn clock_vertex(beat: usize, n: usize) -> (f64, f64) {
    let theta = PI / 2.0 - 2.0 * PI * beat as f64 / n as f64;
    (theta.cos(), theta.sin())
}

/// Signed area of the central triangle over an arc of `gap` beats:
/// `sin(gap·2π/n)/2`. Negative for arcs longer than half the circle.
pub fn central_triangle_area(gap: usize, n: usize) -> f64 {
    (gap as f64 * 2.0 * PI / n as f64).sin() / 2.0
}

/// Area of the inscribed polygon with the given gap profile: the sum of its
/// central triangles. This equals the shoelace area of the vertex cycle for
/// any vertex count, including the degenerate 0 of points and chords.
pub fn polygon_area(gaps: &GapProfile) -> f64 {
    let n = gaps.cycle_len();
    gaps.gaps().iter().map(|&g| central_triangle_area(g, n)).sum()
}

/// Perimeter of the inscribed polygon: each arc of `g` beats contributes a
/// chord of length `2·sin(g·π/n)`.
pub fn polygon_perimeter(gaps: &GapProfile) -> f64 {
    let n = gaps.cycle_len();
    gaps.gaps().iter().map(|&g| 2.0 * (g as f64 * PI / n as f64).sin()).sum()
}

/// Area of the ear over an arc of `gap` beats: the `gap` grid triangles it
/// covers minus its own central triangle.
pub fn ear_area(gap: usize, n: usize) -> f64 {
    gap as f64 * central_triangle_area(1, n) - central_triangle_area(gap, n)
}

/// Area of the full regular n-gon on the beat grid.
pub fn regular_polygon_area(n: usize) -> f64 {
    n as f64 * central_triangle_area(1, n)
}
