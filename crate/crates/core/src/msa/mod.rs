//! Multi-scale analysis: scale sequence, cube verdicts and Monte Carlo estimators.

mod estimators;
mod params;
mod verdict;

pub use estimators::{
    block_norm_decay_curve, estimate_frequency, estimate_pair_probability, estimate_singularity_probability,
    estimate_wegner, estimate_wegner_pair, mass_from_rate, mock_verdict, realize_pair, union_window,
    weak_interaction_scan, DecayCurve, DecayRow, EstimateRecord, McSettings, WeakRow, WeakScan, GRID_NOTE,
    MIN_DECAY_RATE, OUTSIDE_WEGNER,
};
pub use params::{
    default_p, energy_grid, gamma, resonance_threshold, scale_sequence, singularity_threshold,
    variable_energy_interval, EnergyWindow, MsaParams, ALPHA,
};
pub use verdict::{
    classify_cube, classify_cube_full, cnr_sizes, is_cnr, is_localized_pi, noninteracting_ns_implication_check,
    subcube_lattice, CnrReport, CnrScan, CubeSpectrum, CubeVerdict, FactorLocalization, ImplicationReport,
    ImplicationStatus, LocalizationReport,
};
