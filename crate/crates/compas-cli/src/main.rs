//! `compas`: rhythm-pattern distances, regular onset selections, melody
//! segmentation, neighbor-joining trees, and SVG figures, from the terminal.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or arguments,
//! 3 cycle-length mismatch between compared patterns.

mod config;
mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use compas::notation::{
    canonical_patterns, parse_pitch_track, parse_rhythm_file, NotationError, RhythmPattern,
    TimedPitchSequence, ValueUnit,
};
use compas::phylo::{neighbor_joining, to_newick, PhyloError};
use compas::regularity::{
    best_selection_with_budget, OptimalValue, RegularityCriterion, RegularityError,
    DEFAULT_ENUMERATION_BUDGET,
};
use compas::segmentation::{segment_greedy, SegmentationError, StepApproximation};
use compas::similarity::{distance_matrix, reference, DistanceMetric, SimilarityError};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "compas",
    version,
    about = "Cyclic rhythm patterns and melodic contours as discrete geometry"
)]
struct Cli {
    /// TOML run configuration; values in it override flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write the fully resolved configuration of this run to PATH.
    #[arg(long, global = true, value_name = "PATH")]
    write_config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pairwise distance matrix over the patterns in a rhythm file.
    Distances(DistancesArgs),
    /// Most regular k-onset selections on an n-beat cycle.
    Regularity(RegularityArgs),
    /// Fewest-steps approximation of a pitch track.
    Segment(SegmentArgs),
    /// Neighbor-joining tree over a rhythm file, in Newick form.
    Tree(TreeArgs),
    /// SVG figure of one pattern.
    Plot(PlotArgs),
    /// Verify the built-in reference tables against computed matrices.
    Selfcheck,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Distances(_) => "distances",
            Command::Regularity(_) => "regularity",
            Command::Segment(_) => "segment",
            Command::Tree(_) => "tree",
            Command::Plot(_) => "plot",
            Command::Selfcheck => "selfcheck",
        }
    }
}

#[derive(Args)]
struct DistancesArgs {
    /// Rhythm pattern file.
    input: Option<PathBuf>,
    /// chronotonic, permutation, or hamming.
    #[arg(long)]
    metric: Option<String>,
    /// Also write the matrix as CSV to this path.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Also write the aligned text rendering to this path.
    #[arg(short, long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegularityArgs {
    /// Cycle length in beats.
    #[arg(long)]
    n: Option<usize>,
    /// Number of onsets to place.
    #[arg(long)]
    k: Option<usize>,
    /// max-area, max-perimeter, min-sum-ears, or min-max-ear.
    #[arg(long)]
    criterion: Option<String>,
    /// Maximum number of subsets the sweep may enumerate.
    #[arg(long)]
    budget: Option<u64>,
    /// Also write the report to this path.
    #[arg(short, long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SegmentArgs {
    /// Pitch track CSV (time,value per line, optional header).
    input: Option<PathBuf>,
    /// Tolerance, optionally with a unit suffix: 12, 12hz, 100cents.
    #[arg(long)]
    alpha: Option<String>,
    /// Unit for an unsuffixed alpha and the track values: hz, cents.
    #[arg(long)]
    unit: Option<String>,
    /// Also write the step CSV to this path.
    #[arg(short, long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write an SVG overlay of contour and steps to this path.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct TreeArgs {
    /// Rhythm pattern file.
    input: Option<PathBuf>,
    /// chronotonic, permutation, or hamming.
    #[arg(long)]
    metric: Option<String>,
    /// Also write the Newick text to this path.
    #[arg(short, long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Rhythm pattern file.
    input: Option<PathBuf>,
    /// polygon or chronotonic.
    #[arg(long)]
    kind: Option<String>,
    /// Which pattern to draw; required when the file holds several.
    #[arg(long)]
    pattern: Option<String>,
    /// Write the SVG to this path instead of stdout.
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
}

// ── Errors and exit codes ──

struct CliError {
    code: u8,
    message: String,
}

type CliResult<T> = Result<T, CliError>;

impl CliError {
    fn io(context: &str, e: std::io::Error) -> CliError {
        CliError { code: 1, message: format!("{context}: {e}") }
    }

    fn invalid(message: impl Into<String>) -> CliError {
        CliError { code: 2, message: message.into() }
    }
}

impl From<NotationError> for CliError {
    fn from(e: NotationError) -> CliError {
        CliError::invalid(e.to_string())
    }
}

impl From<SimilarityError> for CliError {
    fn from(e: SimilarityError) -> CliError {
        let code = if e.is_cycle_mismatch() { 3 } else { 2 };
        CliError { code, message: e.to_string() }
    }
}

impl From<RegularityError> for CliError {
    fn from(e: RegularityError) -> CliError {
        CliError::invalid(e.to_string())
    }
}

impl From<SegmentationError> for CliError {
    fn from(e: SegmentationError) -> CliError {
        CliError::invalid(e.to_string())
    }
}

impl From<PhyloError> for CliError {
    fn from(e: PhyloError) -> CliError {
        CliError::invalid(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = read_file(path)?;
            RunConfig::parse(&text)
                .map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(expected) = &cfg.command {
        if expected != cli.command.name() {
            return Err(CliError::invalid(format!(
                "config is for command {expected:?} but {:?} was invoked",
                cli.command.name()
            )));
        }
    }

    let resolved = resolve(&cli.command, cfg)?;
    if let Some(path) = &cli.write_config {
        write_file(path, &resolved.to_toml())?;
    }

    match &cli.command {
        Command::Distances(_) => cmd_distances(&resolved),
        Command::Regularity(_) => cmd_regularity(&resolved),
        Command::Segment(_) => cmd_segment(&resolved),
        Command::Tree(_) => cmd_tree(&resolved),
        Command::Plot(_) => cmd_plot(&resolved),
        Command::Selfcheck => cmd_selfcheck(),
    }
}

/// Folds flags into the config (config wins) and stamps the command name,
/// yielding the settings the run actually uses.
fn resolve(command: &Command, mut cfg: RunConfig) -> CliResult<RunConfig> {
    cfg.command = Some(command.name().to_string());
    match command {
        Command::Distances(a) => {
            cfg.input = cfg.input.take().or_else(|| a.input.clone());
            cfg.metric = cfg.metric.take().or_else(|| a.metric.clone());
            cfg.csv = cfg.csv.take().or_else(|| a.csv.clone());
            cfg.out = cfg.out.take().or_else(|| a.out.clone());
        }
        Command::Regularity(a) => {
            cfg.n = cfg.n.or(a.n);
            cfg.k = cfg.k.or(a.k);
            cfg.criterion = cfg.criterion.take().or_else(|| a.criterion.clone());
            cfg.budget = cfg.budget.or(a.budget);
            cfg.out = cfg.out.take().or_else(|| a.out.clone());
        }
        Command::Segment(a) => {
            cfg.input = cfg.input.take().or_else(|| a.input.clone());
            cfg.alpha = cfg.alpha.take().or_else(|| a.alpha.clone());
            cfg.unit = cfg.unit.take().or_else(|| a.unit.clone());
            cfg.out = cfg.out.take().or_else(|| a.out.clone());
            cfg.svg = cfg.svg.take().or_else(|| a.svg.clone());
        }
        Command::Tree(a) => {
            cfg.input = cfg.input.take().or_else(|| a.input.clone());
            cfg.metric = cfg.metric.take().or_else(|| a.metric.clone());
            cfg.out = cfg.out.take().or_else(|| a.out.clone());
        }
        Command::Plot(a) => {
            cfg.input = cfg.input.take().or_else(|| a.input.clone());
            cfg.kind = cfg.kind.take().or_else(|| a.kind.clone());
            cfg.pattern = cfg.pattern.take().or_else(|| a.pattern.clone());
            cfg.svg = cfg.svg.take().or_else(|| a.svg.clone());
        }
        Command::Selfcheck => {}
    }
    Ok(cfg)
}

// ── Shared helpers ──

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))
}

fn write_file(path: &Path, content: &str) -> CliResult<()> {
    std::fs::write(path, content)
        .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

fn require_input(cfg: &RunConfig) -> CliResult<&PathBuf> {
    cfg.input.as_ref().ok_or_else(|| CliError::invalid("no input file given"))
}

fn load_patterns(cfg: &RunConfig) -> CliResult<Vec<RhythmPattern>> {
    let path = require_input(cfg)?;
    let text = read_file(path)?;
    Ok(parse_rhythm_file(&text)?)
}

fn parse_metric(cfg: &RunConfig) -> CliResult<DistanceMetric> {
    match &cfg.metric {
        None => Ok(DistanceMetric::Chronotonic),
        Some(text) => text.parse::<DistanceMetric>().map_err(CliError::invalid),
    }
}

/// Six decimals, trailing zeros trimmed; integers print bare.
fn fmt_num(v: f64) -> String {
    let mut s = format!("{v:.6}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn onsets_one_based(onsets: &[usize]) -> String {
    let parts: Vec<String> = onsets.iter().map(|&b| (b + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

// ── Commands ──

fn cmd_distances(cfg: &RunConfig) -> CliResult<()> {
    let patterns = load_patterns(cfg)?;
    let metric = parse_metric(cfg)?;
    let matrix = distance_matrix(&patterns, metric)?;
    let text = matrix.to_aligned_text(&metric.to_string());
    print!("{text}");
    let violations = matrix.triangle_violations();
    if !violations.is_empty() {
        eprintln!("note: {} triangle-inequality violations (diagnostic only)", violations.len());
    }
    if let Some(path) = &cfg.csv {
        write_file(path, &matrix.to_csv(&metric.to_string()))?;
    }
    if let Some(path) = &cfg.out {
        write_file(path, &text)?;
    }
    Ok(())
}

fn cmd_regularity(cfg: &RunConfig) -> CliResult<()> {
    let n = cfg.n.ok_or_else(|| CliError::invalid("missing --n (cycle length)"))?;
    let k = cfg.k.ok_or_else(|| CliError::invalid("missing --k (onset count)"))?;
    let criterion = match &cfg.criterion {
        None => RegularityCriterion::MaxArea,
        Some(text) => text.parse::<RegularityCriterion>().map_err(CliError::invalid)?,
    };
    let budget = cfg.budget.unwrap_or(DEFAULT_ENUMERATION_BUDGET);
    let result = best_selection_with_budget(n, k, criterion, budget)?;

    let value_name = match result.value {
        OptimalValue::Area(_) => "area",
        OptimalValue::Perimeter(_) => "perimeter",
        OptimalValue::EarSum(_) => "ear sum",
        OptimalValue::MaxEar(_) => "largest ear",
    };
    let mut report = String::new();
    let _ = writeln!(report, "selection over n={n} beats, k={k} onsets, criterion {criterion}");
    let _ = writeln!(report, "subsets examined: {}", result.subsets_examined);
    let _ = writeln!(report, "optimal {value_name}: {}", fmt_num(result.value.scalar()));
    let groups = result.optimal_multisets();
    let _ = writeln!(
        report,
        "optimizers: {} subsets in {} gap multiset(s)",
        result.count(),
        groups.len()
    );
    for (multiset, count) in &groups {
        let shape: Vec<String> = multiset.iter().map(|g| g.to_string()).collect();
        let _ = writeln!(report, "gap multiset {} ({count} subsets):", shape.join("+"));
        for onsets in &result.optimizers {
            let p = RhythmPattern::new(n, onsets).expect("optimizer subsets are valid");
            if &p.gap_profile().sorted_desc() == multiset {
                let _ = writeln!(report, "  {}", onsets_one_based(onsets));
            }
        }
    }
    print!("{report}");
    if let Some(path) = &cfg.out {
        write_file(path, &report)?;
    }
    Ok(())
}

/// `(value, explicit unit)` from a tolerance like `12`, `12hz`, `100cents`.
fn parse_alpha(text: &str) -> CliResult<(f64, Option<ValueUnit>)> {
    let lower = text.trim().to_ascii_lowercase();
    let (number, unit) = if let Some(v) = lower.strip_suffix("cents") {
        (v, Some(ValueUnit::Cents))
    } else if let Some(v) = lower.strip_suffix("hz") {
        (v, Some(ValueUnit::Hz))
    } else if let Some(v) = lower.strip_suffix("beats") {
        (v, Some(ValueUnit::Beats))
    } else {
        (lower.as_str(), None)
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| CliError::invalid(format!("cannot parse tolerance {text:?}")))?;
    Ok((value, unit))
}

fn load_track(cfg: &RunConfig, unit: ValueUnit) -> CliResult<TimedPitchSequence> {
    let path = require_input(cfg)?;
    let text = read_file(path)?;
    Ok(parse_pitch_track(&text, unit)?)
}

fn steps_csv(approx: &StepApproximation) -> String {
    let mut out = String::from("t_start,t_end,value\n");
    for s in approx.steps() {
        let _ = writeln!(out, "{},{},{}", fmt_num(s.start), fmt_num(s.end), fmt_num(s.value));
    }
    out
}

fn cmd_segment(cfg: &RunConfig) -> CliResult<()> {
    let alpha_text =
        cfg.alpha.as_ref().ok_or_else(|| CliError::invalid("missing --alpha (tolerance)"))?;
    let (alpha, suffix_unit) = parse_alpha(alpha_text)?;
    let flag_unit = match &cfg.unit {
        None => None,
        Some(text) => Some(text.parse::<ValueUnit>().map_err(CliError::invalid)?),
    };
    if let (Some(a), Some(b)) = (suffix_unit, flag_unit) {
        if a != b {
            return Err(CliError::invalid(format!(
                "tolerance suffix says {a} but --unit says {b}"
            )));
        }
    }
    let unit = suffix_unit.or(flag_unit).unwrap_or(ValueUnit::Hz);
    if unit == ValueUnit::Hz {
        eprintln!(
            "note: tolerance interpreted in Hz; cents are recommended so one \
             tolerance spans registers"
        );
    }
    let track = load_track(cfg, unit)?;
    let approx = segment_greedy(&track, alpha)?;
    let csv = steps_csv(&approx);
    print!("{csv}");
    if let Some(path) = &cfg.out {
        write_file(path, &csv)?;
    }
    if let Some(path) = &cfg.svg {
        write_file(path, &svg::segment_svg(&track, &approx))?;
    }
    Ok(())
}

fn cmd_tree(cfg: &RunConfig) -> CliResult<()> {
    let patterns = load_patterns(cfg)?;
    let metric = parse_metric(cfg)?;
    let matrix = distance_matrix(&patterns, metric)?;
    let (tree, diagnostics) = neighbor_joining(&matrix)?;
    if diagnostics.clamped_edges > 0 {
        eprintln!(
            "note: {} negative branch length(s) clamped to 0; the input matrix \
             is not additive",
            diagnostics.clamped_edges
        );
    }
    let newick = format!("{}\n", to_newick(&tree));
    print!("{newick}");
    if let Some(path) = &cfg.out {
        write_file(path, &newick)?;
    }
    Ok(())
}

fn cmd_plot(cfg: &RunConfig) -> CliResult<()> {
    let patterns = load_patterns(cfg)?;
    let pattern = match &cfg.pattern {
        Some(name) => {
            patterns.iter().find(|p| p.name() == Some(name.as_str())).ok_or_else(|| {
                let known: Vec<&str> = patterns.iter().filter_map(|p| p.name()).collect();
                CliError::invalid(format!(
                    "no pattern named {name:?} in the input; available: {}",
                    known.join(", ")
                ))
            })?
        }
        None if patterns.len() == 1 => &patterns[0],
        None => {
            return Err(CliError::invalid(format!(
                "input holds {} patterns; pick one with --pattern",
                patterns.len()
            )))
        }
    };
    let rendered = match cfg.kind.as_deref() {
        None | Some("polygon") => svg::polygon_svg(pattern),
        Some("chronotonic") => svg::chronotonic_svg(pattern),
        Some(other) => {
            return Err(CliError::invalid(format!(
                "unknown plot kind {other:?}; use polygon or chronotonic"
            )))
        }
    };
    match &cfg.svg {
        Some(path) => write_file(path, &rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

/// Compares computed matrices against the stored reference tables. A stored
/// summary cell that disagrees with its own stored pairwise column is
/// reported as a reference inconsistency (a note, not a failure); computed
/// values are then checked against the column instead.
fn cmd_selfcheck() -> CliResult<()> {
    let patterns = canonical_patterns();
    let mut failures = 0usize;
    let mut notes = 0usize;

    type ReferenceTable =
        (DistanceMetric, &'static [[f64; 5]; 5], &'static [f64; 5], &'static [f64; 5]);
    let tables: [ReferenceTable; 2] = [
        (
            DistanceMetric::Chronotonic,
            &reference::CHRONOTONIC,
            &reference::CHRONOTONIC_SUM,
            &reference::CHRONOTONIC_MAX,
        ),
        (
            DistanceMetric::Permutation,
            &reference::PERMUTATION,
            &reference::PERMUTATION_SUM,
            &reference::PERMUTATION_MAX,
        ),
    ];
    for (metric, pairwise, stored_sums, stored_maxima) in tables {
        let matrix = distance_matrix(&patterns, metric)?;
        let mut pairwise_ok = true;
        for (i, row) in pairwise.iter().enumerate() {
            for (j, &want) in row.iter().enumerate() {
                if matrix.get(i, j) != want {
                    println!(
                        "[fail] {metric} {}-{}: computed {}, reference {}",
                        reference::PATTERN_ORDER[i],
                        reference::PATTERN_ORDER[j],
                        fmt_num(matrix.get(i, j)),
                        fmt_num(want)
                    );
                    pairwise_ok = false;
                    failures += 1;
                }
            }
        }
        if pairwise_ok {
            println!("[ok] {metric}: all 25 pairwise entries match the reference");
        }

        type SummaryRow<'a> = (&'a str, &'a [f64; 5], Vec<f64>, Vec<f64>);
        let summaries: [SummaryRow; 2] = [
            (
                "Sum",
                stored_sums,
                matrix.column_sums(),
                (0..5).map(|j| (0..5).map(|i| pairwise[i][j]).sum()).collect(),
            ),
            (
                "Max",
                stored_maxima,
                matrix.column_maxima(),
                (0..5).map(|j| (0..5).map(|i| pairwise[i][j]).fold(0.0, f64::max)).collect(),
            ),
        ];
        for (row, stored, computed, from_column) in summaries {
            for j in 0..5 {
                let label = reference::PATTERN_ORDER[j];
                if stored[j] != from_column[j] {
                    notes += 1;
                    println!(
                        "[note] reference {metric} {row} entry for {label} is {}, but its own \
                         stored column gives {}; the stored table is internally inconsistent \
                         at that cell",
                        fmt_num(stored[j]),
                        fmt_num(from_column[j])
                    );
                    if computed[j] != from_column[j] {
                        println!(
                            "[fail] {metric} {row}[{label}]: computed {} does not even match \
                             the stored column's {}",
                            fmt_num(computed[j]),
                            fmt_num(from_column[j])
                        );
                        failures += 1;
                    }
                } else if computed[j] != stored[j] {
                    println!(
                        "[fail] {metric} {row}[{label}]: computed {}, reference {}",
                        fmt_num(computed[j]),
                        fmt_num(stored[j])
                    );
                    failures += 1;
                }
            }
        }
    }

    println!(
        "selfcheck: {} with {notes} reference note(s)",
        if failures == 0 { "passed" } else { "FAILED" }
    );
    if failures > 0 {
        Err(CliError::invalid(format!("{failures} selfcheck comparison(s) failed")))
    } else {
        Ok(())
    }
}
