//! Discrete geometry of cyclic rhythm patterns and stepwise melodic contours.
//!
//! A rhythm is a set of onset positions on a cycle of `n` beats. This crate
//! turns such patterns into geometric objects (step curves, inscribed clock
//! polygons), measures how evenly an onset set covers its cycle, compares
//! patterns under several distances, approximates pitch tracks by minimal
//! step functions, and exports distance matrices as neighbor-joining trees
//! in Newick form.
//!
//! Onset positions are 0-based internally. Every text format (onset lists,
//! printed subsets, plot labels) is 1-based; only parsers and serializers
//! translate between the two.

pub mod geometry;
pub mod notation;
pub mod phylo;
pub mod regularity;
pub mod segmentation;
pub mod similarity;

pub use geometry::{chronotonic, polygon, ChronotonicCurve, Ear, OnsetPolygon};
pub use notation::{
    canonical, canonical_patterns, parse_pitch_track, parse_rhythm, parse_rhythm_file, GapProfile,
    NotationError, RhythmFormat, RhythmPattern, TimedPitchSequence, ValueUnit,
};
pub use phylo::{neighbor_joining, parse_newick, to_newick, PhyloError, PhyloTree};
pub use regularity::{
    best_selection, characterize_optimal, is_optimal, RegularityCriterion, RegularityError,
    SelectionResult,
};
pub use segmentation::{
    encode_melody, segment_greedy, segment_oracle, step_distance, step_distance_unnormalized,
    SegmentationError, Step, StepApproximation,
};
pub use similarity::{
    chronotonic_distance, distance_matrix, hamming_distance, permutation_distance,
    permutation_distance_equal, permutation_distance_unequal, DistanceMatrix, DistanceMetric,
    SimilarityError,
};
