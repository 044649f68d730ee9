//! Disjoint spherical caps, localized ReLU atoms and the indistinguishable pair
//! behind the lower bound for boundary-concentrated data.

mod capmass;
mod empty;
mod packing;

pub use capmass::{
    atom_eval, cap_mass_naive, cap_scaling_report, choose_eps, choose_eps_with, CapEstimate, CapMassEstimator,
    CapScalingReport, EpsChoice, DEFAULT_CALIBRATION_MC,
};
pub use empty::{
    build_adversarial_pair, empty_cap_experiment, separation, separation_scan, AdversarialPair, EmptyCapOptions,
    EmptyCapReport, EmptyCapTrial, SeparationEstimate, SeparationReport, SeparationRow,
};
pub use packing::{cap_area_fraction, expected_cap_count, pack_caps, sphere_cosine_constant, CapPacking};
