//! The data-dependent weight function g, the g-weighted path norm and
//! Monte-Carlo diagnostics of g.

mod gfun;
mod norm;
mod population;

pub use gfun::{BranchSums, g_detail, g_empirical, DirectionSweep, DirectionThreshold, GParts, GValue};
pub use norm::{
    activation_rates, beos_bound_check, weighted_path_norm, ActivationStats, BeosBound, NeuronWeight,
    WeightedNormReport,
};
pub use population::{
    g_deviation_scan, g_domination_check, g_population_curve, g_population_mc, probe_grid, DeviationOptions, DeviationScan,
    DominationReport, DominationRow, McEstimate,
};
