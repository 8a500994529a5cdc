//! End-to-end acceptance checks. Each test covers one criterion and prints
//! one `[PASS]`/`[FAIL]` line (visible with `--nocapture`).
//!
//! Known red: `permutation_reference_matrix` fails on one stored reference
//! cell (the Sum row's seguiriya entry, 34) that is arithmetically
//! inconsistent with its own stored pairwise column (which sums to 31). The
//! computed matrix matches every pairwise entry and the Max row; the test
//! asserts the stored Sum row as-is instead of papering over the conflict.

use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use compas::geometry::{central_triangle_area, clock_vertex, polygon};
use compas::notation::{
    canonical, canonical_patterns, RhythmPattern, TimedPitchSequence, ValueUnit,
};
use compas::phylo::{neighbor_joining, parse_newick, to_newick, PhyloTree};
use compas::regularity::{best_selection, RegularityCriterion};
use compas::segmentation::{segment_greedy, segment_oracle, step_distance};
use compas::similarity::{
    chronotonic_distance, distance_matrix, hamming_distance, permutation_distance,
    permutation_distance_equal, permutation_distance_unequal, reference, DistanceMatrix,
    DistanceMetric,
};

fn criterion(name: &str, run: impl FnOnce() -> Result<(), String>) {
    match run() {
        Ok(()) => println!("[PASS] {name}"),
        Err(msg) => {
            println!("[FAIL] {name}: {msg}");
            panic!("{name}: {msg}");
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($arg)+)),
        }
    };
}

fn within(budget: Duration, started: Instant, what: &str) -> Result<(), String> {
    let took = started.elapsed();
    if took <= budget {
        Ok(())
    } else {
        Err(format!("{what} took {took:?}, budget {budget:?}"))
    }
}

#[test]
fn chronotonic_reference_matrix() {
    criterion("chronotonic reference matrix (exact, < 1s)", || {
        let started = Instant::now();
        let m = distance_matrix(&canonical_patterns(), DistanceMetric::Chronotonic)
            .map_err(|e| e.to_string())?;
        for i in 0..5 {
            for j in 0..5 {
                ensure!(
                    m.get(i, j) == reference::CHRONOTONIC[i][j],
                    "entry ({i},{j}): computed {} vs reference {}",
                    m.get(i, j),
                    reference::CHRONOTONIC[i][j]
                );
            }
        }
        ensure!(m.column_sums() == reference::CHRONOTONIC_SUM, "Sum row mismatch");
        ensure!(m.column_maxima() == reference::CHRONOTONIC_MAX, "Max row mismatch");
        within(Duration::from_secs(1), started, "matrix")
    });
}

#[test]
fn permutation_reference_matrix() {
    criterion("permutation reference matrix (exact, < 1s)", || {
        let started = Instant::now();
        let m = distance_matrix(&canonical_patterns(), DistanceMetric::Permutation)
            .map_err(|e| e.to_string())?;
        for i in 0..5 {
            for j in 0..5 {
                ensure!(
                    m.get(i, j) == reference::PERMUTATION[i][j],
                    "entry ({i},{j}): computed {} vs reference {}",
                    m.get(i, j),
                    reference::PERMUTATION[i][j]
                );
            }
        }
        ensure!(m.column_maxima() == reference::PERMUTATION_MAX, "Max row mismatch");
        within(Duration::from_secs(1), started, "matrix")?;
        // The stored Sum row is asserted as-is. Its seguiriya entry (34)
        // contradicts the stored pairwise column right above it, which sums
        // to 31; every pairwise entry and the Max row match, so the computed
        // column sums cannot reproduce that one cell.
        let sums = m.column_sums();
        for (j, label) in m.labels().iter().enumerate() {
            ensure!(
                sums[j] == reference::PERMUTATION_SUM[j],
                "Sum[{label}]: computed column sum {} vs stored reference {}; \
                 the stored pairwise column for {label} itself sums to {}, so the \
                 stored Sum cell is internally inconsistent",
                sums[j],
                reference::PERMUTATION_SUM[j],
                (0..5).map(|i| reference::PERMUTATION[i][j]).sum::<f64>()
            );
        }
        Ok(())
    });
}

#[test]
fn worked_distance_values() {
    criterion("worked distance values (exact)", || {
        let p = |name: &str| canonical(name).expect("canonical name");
        let checks: [(&str, f64, f64); 5] = [
            (
                "chronotonic fandango-seguiriya",
                chronotonic_distance(&p("fandango"), &p("seguiriya")).map_err(|e| e.to_string())?,
                6.0,
            ),
            (
                "permutation seguiriya-guajira",
                permutation_distance(&p("seguiriya"), &p("guajira")).map_err(|e| e.to_string())?
                    as f64,
                4.0,
            ),
            (
                "permutation seguiriya-fandango",
                permutation_distance(&p("seguiriya"), &p("fandango")).map_err(|e| e.to_string())?
                    as f64,
                4.0,
            ),
            (
                "hamming solea-buleria",
                f64::from(hamming_distance(&p("solea"), &p("buleria")).map_err(|e| e.to_string())?),
                2.0,
            ),
            (
                "permutation solea-buleria",
                permutation_distance(&p("solea"), &p("buleria")).map_err(|e| e.to_string())? as f64,
                1.0,
            ),
        ];
        for (what, got, expected) in checks {
            ensure!(got == expected, "{what}: computed {got}, expected {expected}");
        }
        Ok(())
    });
}

#[test]
fn area_claims() {
    criterion("area claims (solea-buleria gap, exhaustive optimizers, < 1s)", || {
        let started = Instant::now();
        // The two patterns differ on one interior wedge: solea spans it with
        // gaps 3+2, buleria with 4+1. Central-triangle algebra gives the gap.
        let solea_side = central_triangle_area(3, 12) + central_triangle_area(2, 12);
        let buleria_side = central_triangle_area(4, 12) + central_triangle_area(1, 12);
        let closed_form = (3f64.sqrt() / 4.0 + 0.5) - (0.25 + 3f64.sqrt() / 4.0);
        ensure!(
            (solea_side - buleria_side - 0.25).abs() < 1e-9,
            "wedge difference: {} vs 1/4",
            solea_side - buleria_side
        );
        ensure!((closed_form - 0.25).abs() < 1e-9, "closed form: {closed_form} vs 1/4");
        let full_diff = polygon(&canonical("solea").unwrap()).area()
            - polygon(&canonical("buleria").unwrap()).area();
        ensure!((full_diff - 0.25).abs() < 1e-9, "full area difference: {full_diff} vs 1/4");

        let r = best_selection(12, 5, RegularityCriterion::MaxArea).map_err(|e| e.to_string())?;
        ensure!(r.subsets_examined == 792, "examined {} of 792 subsets", r.subsets_examined);
        ensure!(
            r.optimal_multisets() == vec![(vec![3, 3, 2, 2, 2], 24)],
            "optimal multisets: {:?}",
            r.optimal_multisets()
        );
        // Optimizers are exactly the subsets carrying the balanced multiset.
        let balanced: Vec<Vec<usize>> = (0..12usize)
            .combinations(5)
            .filter(|s| {
                let p = RhythmPattern::new(12, s).expect("valid subset");
                p.gap_profile().sorted_desc() == vec![3, 3, 2, 2, 2]
            })
            .collect();
        ensure!(r.optimizers == balanced, "optimizer set differs from balanced subsets");
        for name in ["solea", "seguiriya", "guajira"] {
            ensure!(
                r.contains(canonical(name).unwrap().onsets()),
                "{name} missing from optimizers"
            );
        }
        ensure!(
            !r.contains(canonical("buleria").unwrap().onsets()),
            "buleria should not be optimal"
        );

        let r4 = best_selection(12, 4, RegularityCriterion::MaxArea).map_err(|e| e.to_string())?;
        ensure!(
            r4.optimal_multisets() == vec![(vec![3, 3, 3, 3], 3)],
            "(12,4) multisets: {:?}",
            r4.optimal_multisets()
        );
        ensure!(
            r4.contains(canonical("fandango").unwrap().onsets()),
            "fandango missing from (12,4) optimizers"
        );
        within(Duration::from_secs(1), started, "sweeps")
    });
}

#[test]
fn min_max_ear_selection() {
    criterion("min-max-ear selection (gap 3 at (12,5), pigeonhole to n=16, < 10s)", || {
        let started = Instant::now();
        let ears =
            best_selection(12, 5, RegularityCriterion::MinMaxEar).map_err(|e| e.to_string())?;
        for o in &ears.optimizers {
            let p = RhythmPattern::new(12, o).expect("valid subset");
            ensure!(
                p.gap_profile().max_gap() == 3,
                "optimizer {o:?} has max gap {}",
                p.gap_profile().max_gap()
            );
        }
        let area =
            best_selection(12, 5, RegularityCriterion::MaxArea).map_err(|e| e.to_string())?;
        ensure!(
            ears.optimizers == area.optimizers,
            "min-max-ear optimizers ({}) differ from max-area optimizers ({})",
            ears.count(),
            area.count()
        );
        // Pigeonhole: some gap is always >= ceil(n/k), and the optimum
        // attains it for every cycle length up to 16.
        for n in 1..=16usize {
            for k in 1..=n {
                let r = best_selection(n, k, RegularityCriterion::MinMaxEar)
                    .map_err(|e| e.to_string())?;
                let bound = n.div_ceil(k);
                for o in &r.optimizers {
                    let p = RhythmPattern::new(n, o).expect("valid subset");
                    ensure!(
                        p.gap_profile().max_gap() == bound,
                        "(n={n}, k={k}): optimizer {o:?} has max gap {}, bound {bound}",
                        p.gap_profile().max_gap()
                    );
                }
            }
        }
        within(Duration::from_secs(10), started, "pigeonhole sweep")
    });
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut subset = pool[..k].to_vec();
    subset.sort_unstable();
    subset
}

#[test]
fn oracle_equivalences() {
    criterion("oracle equivalences (shoelace, brute-force distances, DP segmentation)", || {
        // (a) Central-triangle polygon area equals the shoelace area on
        // every onset subset of a 12-beat cycle.
        for k in 1..=12usize {
            for subset in (0..12usize).combinations(k) {
                let p = RhythmPattern::new(12, &subset).expect("valid subset");
                let area = polygon(&p).area();
                let shoelace = 0.5
                    * subset
                        .iter()
                        .map(|&b| clock_vertex(b, 12))
                        .circular_tuple_windows()
                        .map(|((x1, y1), (x2, y2))| x2 * y1 - x1 * y2)
                        .sum::<f64>();
                ensure!(
                    (area - shoelace).abs() <= 1e-12,
                    "subset {subset:?}: area {area} vs shoelace {shoelace}"
                );
            }
        }

        // (b) Equal onset counts: sorted-position distance equals the
        // minimum over all bijections.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0001);
        for trial in 0..1000 {
            let k = 1 + trial % 6;
            let oa = random_subset(&mut rng, 12, k);
            let ob = random_subset(&mut rng, 12, k);
            let a = RhythmPattern::new(12, &oa).unwrap();
            let b = RhythmPattern::new(12, &ob).unwrap();
            let fast = permutation_distance_equal(&a, &b).map_err(|e| e.to_string())?;
            let brute = ob
                .iter()
                .copied()
                .permutations(k)
                .map(|perm| oa.iter().zip(&perm).map(|(&x, &y)| x.abs_diff(y) as u64).sum::<u64>())
                .min()
                .expect("non-empty");
            ensure!(fast == brute, "equal-k trial {trial}: {fast} vs brute {brute}");
        }

        // (c) Unequal onset counts: the assignment DP equals the minimum
        // over all order-preserving onto maps.
        for trial in 0..1000 {
            let k1 = 2 + trial % 5;
            let k2 = 1 + trial % (k1 - 1);
            let o1 = random_subset(&mut rng, 12, k1);
            let o2 = random_subset(&mut rng, 12, k2);
            let a = RhythmPattern::new(12, &o1).unwrap();
            let b = RhythmPattern::new(12, &o2).unwrap();
            let fast = permutation_distance_unequal(&a, &b).map_err(|e| e.to_string())?.distance;
            let brute = (1..k1)
                .combinations(k2 - 1)
                .map(|advance_at| {
                    let mut j = 0;
                    let mut cost = 0u64;
                    for (i, &x) in o1.iter().enumerate() {
                        if advance_at.contains(&i) {
                            j += 1;
                        }
                        cost += x.abs_diff(o2[j]) as u64;
                    }
                    cost
                })
                .min()
                .expect("at least one onto map");
            ensure!(fast == brute, "unequal-k trial {trial}: {fast} vs brute {brute}");
            let swapped = permutation_distance(&b, &a).map_err(|e| e.to_string())?;
            ensure!(swapped == fast, "dispatch asymmetry on trial {trial}");
        }

        // (d) Greedy segmentation is minimal: piece counts match the DP on
        // random tracks and on the bundled melody at several tolerances.
        for trial in 0..1000u64 {
            let n = 1 + (trial as usize) % 50;
            let mut t = 0.0;
            let points: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    t += rng.random_range(0.05..1.0);
                    (t, f64::from(rng.random_range(-5i32..=5)))
                })
                .collect();
            let track = TimedPitchSequence::new(points, ValueUnit::Hz).unwrap();
            let alpha = rng.random_range(0.0..6.0);
            let greedy = segment_greedy(&track, alpha).map_err(|e| e.to_string())?;
            let oracle = segment_oracle(&track, alpha).map_err(|e| e.to_string())?;
            ensure!(
                greedy.piece_count() == oracle.piece_count(),
                "segmentation trial {trial}: greedy {} vs oracle {}",
                greedy.piece_count(),
                oracle.piece_count()
            );
        }
        let debla = debla_track();
        for alpha in [1.0, 5.0, 12.0, 25.0] {
            let greedy = segment_greedy(&debla, alpha).map_err(|e| e.to_string())?;
            let oracle = segment_oracle(&debla, alpha).map_err(|e| e.to_string())?;
            ensure!(
                greedy.piece_count() == oracle.piece_count(),
                "melody at alpha {alpha}: greedy {} vs oracle {}",
                greedy.piece_count(),
                oracle.piece_count()
            );
        }
        Ok(())
    });
}

fn debla_track() -> TimedPitchSequence {
    TimedPitchSequence::new(
        vec![
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
    .expect("valid track")
}

#[test]
fn segmentation_behavior() {
    criterion("segmentation behavior (2 steps at tolerance 12, feasibility, monotonicity)", || {
        let debla = debla_track();
        let a = segment_greedy(&debla, 12.0).map_err(|e| e.to_string())?;
        ensure!(a.piece_count() == 2, "expected 2 steps, got {}", a.piece_count());
        let first = a.steps()[0].value;
        ensure!((first - 396.0).abs() <= 1.0, "first step value {first}, expected 396 +/- 1");

        for alpha in [1.0, 5.0, 12.0, 25.0] {
            let approx = segment_greedy(&debla, alpha).map_err(|e| e.to_string())?;
            for &(t, y) in debla.points() {
                let v = approx.value_at(t).ok_or_else(|| format!("no value at {t}"))?;
                ensure!(
                    (v - y).abs() <= alpha + 1e-9,
                    "alpha {alpha}: |{v} - {y}| exceeds tolerance"
                );
            }
        }

        let mut last = usize::MAX;
        for i in 0..=60 {
            let alpha = 0.5 * f64::from(i);
            let count = segment_greedy(&debla, alpha).map_err(|e| e.to_string())?.piece_count();
            ensure!(count <= last, "piece count rose from {last} to {count} at tolerance {alpha}");
            last = count;
        }
        Ok(())
    });
}

/// Random tree with positive edge lengths; its path-length matrix is exactly
/// additive, so neighbor joining must reconstruct it.
fn random_additive_tree(leaves: usize, rng: &mut ChaCha8Rng) -> PhyloTree {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut next = leaves;
    let center = next;
    next += 1;
    for leaf in 0..3 {
        edges.push((center, leaf, rng.random_range(1.0..=10.0f64)));
    }
    for leaf in 3..leaves {
        let at = rng.random_range(0..edges.len());
        let (u, v, w) = edges.swap_remove(at);
        let split = w * rng.random_range(0.2..=0.8);
        let mid = next;
        next += 1;
        edges.push((u, mid, split));
        edges.push((mid, v, w - split));
        edges.push((mid, leaf, rng.random_range(1.0..=10.0f64)));
    }
    let labels = (0..leaves).map(|i| format!("L{i}")).collect();
    parse_tree_from_parts(labels, edges, next)
}

/// Builds a tree through the public Newick surface so this test exercises
/// only exported behavior.
fn parse_tree_from_parts(
    labels: Vec<String>,
    edges: Vec<(usize, usize, f64)>,
    node_count: usize,
) -> PhyloTree {
    // Render the edge list as Newick rooted at the last internal node, then
    // parse it back.
    let mut adj = vec![Vec::new(); node_count];
    for &(u, v, w) in &edges {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    fn render(
        node: usize,
        parent: Option<usize>,
        labels: &[String],
        adj: &[Vec<(usize, f64)>],
    ) -> String {
        if node < labels.len() {
            return labels[node].clone();
        }
        let parts: Vec<String> = adj[node]
            .iter()
            .filter(|&&(c, _)| Some(c) != parent)
            .map(|&(c, w)| format!("{}:{:.9}", render(c, Some(node), labels, adj), w))
            .collect();
        format!("({})", parts.join(","))
    }
    let root = labels.len(); // the first internal node always exists here
    let text = format!("{};", render(root, None, &labels, &adj));
    parse_newick(&text).expect("self-rendered tree parses")
}

#[test]
fn additive_tree_recovery() {
    criterion("additive tree recovery (100/100 trials, Newick round-trip)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0002);
        for trial in 0..100 {
            let leaves = 4 + trial % 5; // 4..=8
            let source = random_additive_tree(leaves, &mut rng);
            let matrix = source.path_length_matrix();
            let d = DistanceMatrix::new(source.labels().to_vec(), matrix.clone())
                .map_err(|e| e.to_string())?;
            let (recovered, diag) = neighbor_joining(&d).map_err(|e| e.to_string())?;
            ensure!(diag.clamped_edges == 0, "trial {trial}: clamped {}", diag.clamped_edges);
            let rm = recovered.path_length_matrix();
            for i in 0..leaves {
                for j in 0..leaves {
                    ensure!(
                        (rm[i][j] - matrix[i][j]).abs() < 1e-9,
                        "trial {trial}: path ({i},{j}) {} vs {}",
                        rm[i][j],
                        matrix[i][j]
                    );
                }
            }
            let mut sa = source.splits();
            let mut sb = recovered.splits();
            sa.sort();
            sb.sort();
            ensure!(sa == sb, "trial {trial}: topology differs");

            let text = to_newick(&recovered);
            let reparsed = parse_newick(&text).map_err(|e| e.to_string())?;
            ensure!(
                to_newick(&reparsed) == text,
                "trial {trial}: Newick round-trip not a fixpoint"
            );
        }
        Ok(())
    });
}

#[test]
fn corpus_pipeline() {
    criterion("corpus pipeline (two families split in >= 38/40 seeded trials)", || {
        let template_a =
            [400.0, 400.0, 430.0, 430.0, 400.0, 380.0, 380.0, 400.0, 420.0, 420.0, 400.0, 400.0];
        let template_b =
            [300.0, 300.0, 280.0, 310.0, 310.0, 300.0, 320.0, 320.0, 300.0, 290.0, 290.0, 300.0];
        let alpha = 15.0;
        let mut successes = 0;
        for trial in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE_0000 + trial);
            let mut approximations = Vec::new();
            let mut labels = Vec::new();
            for melody in 0..20usize {
                let template: &[f64; 12] = if melody < 10 { &template_a } else { &template_b };
                let points: Vec<(f64, f64)> = template
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (i as f64, v + rng.random_range(-8.0..=8.0)))
                    .collect();
                let track = TimedPitchSequence::new(points, ValueUnit::Hz).unwrap();
                approximations.push(segment_greedy(&track, alpha).map_err(|e| e.to_string())?);
                labels.push(format!("m{:02}", melody + 1));
            }
            let mut rows = vec![vec![0.0; 20]; 20];
            for i in 0..20 {
                for j in (i + 1)..20 {
                    let d = step_distance(&approximations[i], &approximations[j])
                        .map_err(|e| e.to_string())?;
                    rows[i][j] = d;
                    rows[j][i] = d;
                }
            }
            let d = DistanceMatrix::new(labels, rows).map_err(|e| e.to_string())?;
            let (tree, _) = neighbor_joining(&d).map_err(|e| e.to_string())?;
            let family_a: Vec<usize> = (0..10).collect();
            if tree.has_leaf_split(&family_a) {
                successes += 1;
            }
        }
        ensure!(successes >= 38, "families split in only {successes}/40 trials");
        Ok(())
    });
}
