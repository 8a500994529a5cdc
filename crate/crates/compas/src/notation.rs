//! Pattern and pitch-track types plus the text formats that carry them.
//!
//! Three rhythm notations are supported: `binary` strings (`1` = onset),
//! `grid` strings (`x` = onset, `.` = rest), and 1-based `onset_list`
//! comma lists. Binary and grid carry their own cycle length; onset lists
//! take it from context (default [`DEFAULT_CYCLE`]).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Cycle length assumed for onset lists when none is given.
pub const DEFAULT_CYCLE: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum NotationError {
    #[error("empty pattern: no onsets")]
    EmptyPattern,
    #[error("cycle length must be at least 1")]
    ZeroCycle,
    #[error("onset {onset} out of range for cycle length {n} (beats are 1..={n} in text)")]
    OnsetOutOfRange { onset: usize, n: usize },
    #[error("duplicate onset at beat {beat}")]
    DuplicateOnset { beat: usize },
    #[error("illegal character {ch:?} in {format} pattern")]
    IllegalCharacter { ch: char, format: RhythmFormat },
    #[error("pattern spans {got} beats but the declared cycle length is {declared}")]
    DeclaredCycleMismatch { declared: usize, got: usize },
    #[error("gap of length 0 in gap profile")]
    ZeroGap,
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<NotationError>,
    },
    #[error("line {line}: expected `name = pattern`")]
    MissingEquals { line: usize },
    #[error("line {line}: pattern name is empty")]
    EmptyName { line: usize },
    #[error("line {line}: duplicate pattern name {name:?}")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: unknown header {key:?} (expected `format` or `n`)")]
    UnknownHeader { line: usize, key: String },
    #[error("line {line}: unknown format {text:?} (expected binary, onset_list, or grid)")]
    UnknownFormat { line: usize, text: String },
    #[error("no `format:` header before the first pattern (line {line})")]
    MissingFormatHeader { line: usize },
    #[error("rhythm file contains no patterns")]
    EmptyFile,
    #[error("pitch track contains no data rows")]
    EmptyPitchTrack,
    #[error("line {line}: expected `time,value`, got {got:?}")]
    MalformedRow { line: usize, got: String },
    #[error("line {line}: cannot parse {token:?} as a number")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: time {time} does not increase over the previous time {prev}")]
    NonMonotoneTime { line: usize, time: f64, prev: f64 },
}

// ── Rhythm patterns ──

/// Text notation for rhythm patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhythmFormat {
    /// `"001001010101"`, one character per beat, `1` = onset.
    Binary,
    /// `"3,6,8,10,12"`, 1-based beat numbers of the onsets.
    OnsetList,
    /// `"..x..x.x.x.x"`, `x` = onset, `.` = rest.
    Grid,
}

impl fmt::Display for RhythmFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RhythmFormat::Binary => "binary",
            RhythmFormat::OnsetList => "onset_list",
            RhythmFormat::Grid => "grid",
        })
    }
}

impl FromStr for RhythmFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "binary" => Ok(RhythmFormat::Binary),
            "onset_list" => Ok(RhythmFormat::OnsetList),
            "grid" => Ok(RhythmFormat::Grid),
            other => Err(format!("unknown rhythm format {other:?}")),
        }
    }
}

/// A cyclic onset pattern: `k` distinct beat positions on a cycle of `n` beats.
///
/// Positions are 0-based and kept strictly increasing. Beat 0 is the downbeat;
/// a pattern need not place an onset there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhythmPattern {
    name: Option<String>,
    n: usize,
    onsets: Vec<usize>,
}

impl RhythmPattern {
    /// Builds a pattern from 0-based onset positions (any order; they are sorted).
    pub fn new(n: usize, onsets: &[usize]) -> Result<Self, NotationError> {
        if n == 0 {
            return Err(NotationError::ZeroCycle);
        }
        if onsets.is_empty() {
            return Err(NotationError::EmptyPattern);
        }
        let mut sorted = onsets.to_vec();
        sorted.sort_unstable();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(NotationError::DuplicateOnset { beat: w[0] + 1 });
            }
        }
        if let Some(&last) = sorted.last() {
            if last >= n {
                return Err(NotationError::OnsetOutOfRange { onset: last, n });
            }
        }
        Ok(RhythmPattern { name: None, n, onsets: sorted })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Cycle length `n` in beats.
    pub fn cycle_len(&self) -> usize {
        self.n
    }

    /// 0-based onset positions, strictly increasing.
    pub fn onsets(&self) -> &[usize] {
        &self.onsets
    }

    pub fn onset_count(&self) -> usize {
        self.onsets.len()
    }

    pub fn has_onset_at(&self, beat: usize) -> bool {
        self.onsets.binary_search(&beat).is_ok()
    }

    /// The same pattern started `shift` beats later. The name is kept.
    pub fn rotated(&self, shift: usize) -> RhythmPattern {
        let mut onsets: Vec<usize> = self.onsets.iter().map(|&p| (p + shift) % self.n).collect();
        onsets.sort_unstable();
        RhythmPattern { name: self.name.clone(), n: self.n, onsets }
    }

    /// Cyclic inter-onset gaps starting from the first onset. Gaps sum to `n`.
    pub fn gap_profile(&self) -> GapProfile {
        let k = self.onsets.len();
        let gaps = (0..k)
            .map(|i| {
                let here = self.onsets[i];
                let next = self.onsets[(i + 1) % k];
                let g = (next + self.n - here) % self.n;
                if g == 0 {
                    self.n // single onset wraps the whole cycle
                } else {
                    g
                }
            })
            .collect();
        GapProfile { gaps }
    }
}

/// Cyclic gap sequence of a pattern: `k` integers >= 1 summing to the cycle length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapProfile {
    gaps: Vec<usize>,
}

impl GapProfile {
    pub fn from_gaps(gaps: Vec<usize>) -> Result<Self, NotationError> {
        if gaps.is_empty() {
            return Err(NotationError::EmptyPattern);
        }
        if gaps.contains(&0) {
            return Err(NotationError::ZeroGap);
        }
        Ok(GapProfile { gaps })
    }

    pub fn gaps(&self) -> &[usize] {
        &self.gaps
    }

    /// Sum of all gaps, i.e. the cycle length.
    pub fn cycle_len(&self) -> usize {
        self.gaps.iter().sum()
    }

    pub fn max_gap(&self) -> usize {
        *self.gaps.iter().max().expect("profile is never empty")
    }

    /// Gaps in descending order: the canonical multiset key, independent of
    /// which onset the profile was anchored at.
    pub fn sorted_desc(&self) -> Vec<usize> {
        let mut v = self.gaps.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

impl fmt::Display for GapProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.gaps.iter().map(|g| g.to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

// ── Rhythm parsing and serialization ──

/// Parses a single pattern. Onset lists assume a [`DEFAULT_CYCLE`]-beat cycle.
pub fn parse_rhythm(text: &str, format: RhythmFormat) -> Result<RhythmPattern, NotationError> {
    parse_rhythm_with_cycle(text, format, None)
}

/// Parses a single pattern with an explicit cycle length.
///
/// For onset lists `n` replaces the default; for binary and grid strings it
/// must match the string length.
pub fn parse_rhythm_with_cycle(
    text: &str,
    format: RhythmFormat,
    n: Option<usize>,
) -> Result<RhythmPattern, NotationError> {
    match format {
        RhythmFormat::Binary => parse_marks(text, format, n, '1', '0'),
        RhythmFormat::Grid => parse_marks(text, format, n, 'x', '.'),
        RhythmFormat::OnsetList => {
            let n = n.unwrap_or(DEFAULT_CYCLE);
            if n == 0 {
                return Err(NotationError::ZeroCycle);
            }
            let text = text.trim();
            if text.is_empty() {
                return Err(NotationError::EmptyPattern);
            }
            let mut onsets = Vec::new();
            for token in text.split(',') {
                let token = token.trim();
                let beat: usize = token.parse().map_err(|_| NotationError::IllegalCharacter {
                    ch: token.chars().next().unwrap_or(','),
                    format,
                })?;
                if beat == 0 || beat > n {
                    return Err(NotationError::OnsetOutOfRange { onset: beat, n });
                }
                onsets.push(beat - 1);
            }
            RhythmPattern::new(n, &onsets)
        }
    }
}

fn parse_marks(
    text: &str,
    format: RhythmFormat,
    declared: Option<usize>,
    onset_ch: char,
    rest_ch: char,
) -> Result<RhythmPattern, NotationError> {
    let mut onsets = Vec::new();
    let mut len = 0;
    for ch in text.chars() {
        if ch.is_ascii_whitespace() {
            continue;
        }
        if ch == onset_ch {
            onsets.push(len);
        } else if ch != rest_ch {
            return Err(NotationError::IllegalCharacter { ch, format });
        }
        len += 1;
    }
    if let Some(declared) = declared {
        if declared != len {
            return Err(NotationError::DeclaredCycleMismatch { declared, got: len });
        }
    }
    if len == 0 {
        return Err(NotationError::ZeroCycle);
    }
    RhythmPattern::new(len, &onsets)
}

/// Renders a pattern in the given format. Onset lists come out 1-based.
pub fn serialize_rhythm(p: &RhythmPattern, format: RhythmFormat) -> String {
    match format {
        RhythmFormat::Binary => mark_string(p, '1', '0'),
        RhythmFormat::Grid => mark_string(p, 'x', '.'),
        RhythmFormat::OnsetList => {
            let beats: Vec<String> = p.onsets.iter().map(|&o| (o + 1).to_string()).collect();
            beats.join(",")
        }
    }
}

fn mark_string(p: &RhythmPattern, onset_ch: char, rest_ch: char) -> String {
    (0..p.n).map(|i| if p.has_onset_at(i) { onset_ch } else { rest_ch }).collect()
}

// ── Rhythm files ──

/// Parses a rhythm file: `# comment` lines, a `format:` header (required,
/// before the first pattern), an optional `n:` header, then one
/// `name = pattern` line per pattern.
pub fn parse_rhythm_file(text: &str) -> Result<Vec<RhythmPattern>, NotationError> {
    let mut format: Option<RhythmFormat> = None;
    let mut cycle: Option<usize> = None;
    let mut patterns: Vec<RhythmPattern> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some((key, value)) = split_header(content) {
            match key {
                "format" => {
                    format = Some(value.parse().map_err(|_| NotationError::UnknownFormat {
                        line,
                        text: value.to_string(),
                    })?);
                }
                "n" => {
                    let n: usize = value
                        .parse()
                        .map_err(|_| NotationError::BadNumber { line, token: value.to_string() })?;
                    cycle = Some(n);
                }
                other => return Err(NotationError::UnknownHeader { line, key: other.to_string() }),
            }
            continue;
        }
        let Some((name, body)) = content.split_once('=') else {
            return Err(NotationError::MissingEquals { line });
        };
        let name = name.trim();
        if name.is_empty() {
            return Err(NotationError::EmptyName { line });
        }
        if patterns.iter().any(|p| p.name() == Some(name)) {
            return Err(NotationError::DuplicateName { line, name: name.to_string() });
        }
        let Some(format) = format else {
            return Err(NotationError::MissingFormatHeader { line });
        };
        let pattern = parse_rhythm_with_cycle(body.trim(), format, cycle)
            .map_err(|e| NotationError::AtLine { line, source: Box::new(e) })?;
        patterns.push(pattern.with_name(name));
    }

    if patterns.is_empty() {
        return Err(NotationError::EmptyFile);
    }
    Ok(patterns)
}

fn split_header(content: &str) -> Option<(&str, &str)> {
    // Header lines use `key: value`; pattern lines always contain `=`.
    if content.contains('=') {
        return None;
    }
    let (key, value) = content.split_once(':')?;
    Some((key.trim(), value.trim()))
}

/// Renders patterns as a rhythm file that [`parse_rhythm_file`] accepts.
///
/// All patterns must share one cycle length, which becomes the `n:` header.
pub fn serialize_rhythm_file(
    patterns: &[RhythmPattern],
    format: RhythmFormat,
) -> Result<String, NotationError> {
    let Some(first) = patterns.first() else {
        return Err(NotationError::EmptyFile);
    };
    let n = first.cycle_len();
    for p in patterns {
        if p.cycle_len() != n {
            return Err(NotationError::DeclaredCycleMismatch { declared: n, got: p.cycle_len() });
        }
    }
    let mut out = format!("format: {format}\nn: {n}\n");
    let width = patterns.iter().map(|p| p.name().map_or(7, str::len)).max().unwrap_or(0);
    for (i, p) in patterns.iter().enumerate() {
        let fallback = format!("pattern{}", i + 1);
        let name = p.name().unwrap_or(&fallback);
        out.push_str(&format!("{name:width$} = {}\n", serialize_rhythm(p, format)));
    }
    Ok(out)
}

// ── The canonical registry ──

/// The five canonical 12-beat patterns, 0-based, in distance-table order.
///
/// Each is anchored so that beat 0 is the start of its traditional count;
/// solea and buleria begin with a two-beat anacrusis before the first onset.
pub const CANONICAL_PATTERNS: [(&str, &[usize]); 5] = [
    ("solea", &[2, 5, 7, 9, 11]),
    ("buleria", &[2, 6, 7, 9, 11]),
    ("seguiriya", &[0, 2, 4, 7, 10]),
    ("guajira", &[0, 3, 6, 8, 10]),
    ("fandango", &[0, 3, 6, 9]),
];

/// All canonical patterns, named, in distance-table order.
pub fn canonical_patterns() -> Vec<RhythmPattern> {
    CANONICAL_PATTERNS
        .iter()
        .map(|(name, onsets)| {
            RhythmPattern::new(DEFAULT_CYCLE, onsets)
                .expect("registry entries are valid")
                .with_name(*name)
        })
        .collect()
}

/// Looks up one canonical pattern by name.
pub fn canonical(name: &str) -> Option<RhythmPattern> {
    canonical_patterns().into_iter().find(|p| p.name() == Some(name))
}

// ── Pitch tracks ──

/// Unit of the value axis of a pitch track or step function.
///
/// Units are metadata: nothing in this crate converts between them, and
/// operations that combine two curves require the units to match.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueUnit {
    Hz,
    Cents,
    /// Beat-duration axis of a rhythm step curve.
    Beats,
}

impl fmt::Display for ValueUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueUnit::Hz => "hz",
            ValueUnit::Cents => "cents",
            ValueUnit::Beats => "beats",
        })
    }
}

impl FromStr for ValueUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hz" => Ok(ValueUnit::Hz),
            "cents" => Ok(ValueUnit::Cents),
            "beats" => Ok(ValueUnit::Beats),
            other => Err(format!("unknown unit {other:?}")),
        }
    }
}

/// A pitch track: `(time, value)` samples with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedPitchSequence {
    points: Vec<(f64, f64)>,
    unit: ValueUnit,
}

impl TimedPitchSequence {
    pub fn new(points: Vec<(f64, f64)>, unit: ValueUnit) -> Result<Self, NotationError> {
        if points.is_empty() {
            return Err(NotationError::EmptyPitchTrack);
        }
        for (i, &(t, v)) in points.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(NotationError::BadNumber { line: i + 1, token: format!("{t},{v}") });
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(NotationError::NonMonotoneTime {
                    line: i + 2,
                    time: w[1].0,
                    prev: w[0].0,
                });
            }
        }
        Ok(TimedPitchSequence { points, unit })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn unit(&self) -> ValueUnit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the constructor rejects empty tracks
    }

    /// First and last sample times.
    pub fn span(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// Consecutive `(dt, dv)` differences, anchored at the first sample.
    pub fn to_intervals(&self) -> IntervalSequence {
        let deltas = self.points.windows(2).map(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1)).collect();
        IntervalSequence { anchor: self.points[0], deltas, unit: self.unit }
    }
}

/// Relative encoding of a pitch track: an anchor point plus `(dt, dv)` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSequence {
    anchor: (f64, f64),
    deltas: Vec<(f64, f64)>,
    unit: ValueUnit,
}

impl IntervalSequence {
    pub fn anchor(&self) -> (f64, f64) {
        self.anchor
    }

    pub fn deltas(&self) -> &[(f64, f64)] {
        &self.deltas
    }

    pub fn unit(&self) -> ValueUnit {
        self.unit
    }

    /// Rebuilds the absolute track by accumulating the deltas onto the anchor.
    pub fn reconstruct(&self) -> TimedPitchSequence {
        let mut points = Vec::with_capacity(self.deltas.len() + 1);
        let (mut t, mut v) = self.anchor;
        points.push((t, v));
        for &(dt, dv) in &self.deltas {
            t += dt;
            v += dv;
            points.push((t, v));
        }
        TimedPitchSequence::new(points, self.unit)
            .expect("deltas came from a strictly increasing track")
    }
}

/// Parses a `time,value` CSV pitch track. A non-numeric first row is treated
/// as a header. Times must strictly increase.
pub fn parse_pitch_track(text: &str, unit: ValueUnit) -> Result<TimedPitchSequence, NotationError> {
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut prev_time: Option<f64> = None;
    let mut header_allowed = true;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(NotationError::MalformedRow { line, got: content.to_string() });
        }
        let parsed: Option<(f64, f64)> = match (fields[0].parse(), fields[1].parse()) {
            (Ok(t), Ok(v)) => Some((t, v)),
            _ => None,
        };
        let Some((t, v)) = parsed else {
            if header_allowed {
                header_allowed = false; // only the first content line may be a header
                continue;
            }
            let bad = if fields[0].parse::<f64>().is_err() { fields[0] } else { fields[1] };
            return Err(NotationError::BadNumber { line, token: bad.to_string() });
        };
        header_allowed = false;
        if !t.is_finite() || !v.is_finite() {
            let bad = if !t.is_finite() { fields[0] } else { fields[1] };
            return Err(NotationError::BadNumber { line, token: bad.to_string() });
        }
        if let Some(prev) = prev_time {
            if t <= prev {
                return Err(NotationError::NonMonotoneTime { line, time: t, prev });
            }
        }
        prev_time = Some(t);
        points.push((t, v));
    }

    if points.is_empty() {
        return Err(NotationError::EmptyPitchTrack);
    }
    TimedPitchSequence::new(points, unit)
}
