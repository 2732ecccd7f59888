//! Dataset-independent comparisons over the simplex projection, and
//! dataset-level metrics over certified samples.

mod dataset;
mod sweep;
pub mod wilcoxon;

pub use dataset::{
    certified_accuracy_curve, certify_records, classify_sample_region, median, summarize, DatasetSummary, Evidence,
    FieldSummary, ImprovementStats, RadiusField, SampleRecord, DEFAULT_THRESHOLD,
};
pub use sweep::{
    diff_map, lattice_feasible, ratio_map, region_of_superiority, sweep_simplex, Boundary, Lattice, RegionMap,
    SweepGrid,
};
pub use wilcoxon::{wilcoxon_pratt, wilcoxon_pratt_differences, PValueMethod, WilcoxonResult};
