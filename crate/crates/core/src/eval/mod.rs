//! The accuracy/efficiency objective, score normalization, per-sequence MSE
//! and convergence curves of expensive explainers.

mod curve;
mod normalize;
mod objective;

pub use curve::{
    CURVE_CSV_HEADER,
    convergence_curve, convergence_curve_with_references, intersection_point, read_curve_csv, reference_maps,
    write_curve_csv, ConvergenceCurve, CurveConfig, CurvePoint,
};
pub use normalize::{normalize_map, Normalization};
pub use objective::{map_mse, mean_map_mse, objective, paper_passes, ObjectiveWeights};
