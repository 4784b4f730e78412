//! Eigendecompositions, Green-function block norms and numerical checks of
//! the resolvent inequalities.

mod eigen;
mod green;
mod tensor;
mod weyl;

pub use eigen::{
    check_nonresonant, dist_to_spectrum, eigendecompose, eigendecompose_dense, eigenvalues, eigenvalues_dense,
    lanczos_lowest, spectral_radius, EigenDecomposition, DENSE_LIMIT, RESONANCE_GUARD,
};
pub use green::{
    cube_block_norm, edi_check, tridiagonal_green_block, green_block, green_block_norm, gri_check, resolvent,
    resolvent_perturbation_residual, spectral_norm, EdiReport, GreenProbe, GriReport, Region, ResidualReport,
    ILL_CONDITIONED,
};
pub use tensor::{cube_eigenvalues, decompose_cube, interaction_groups, tensor_spectrum};
pub use weyl::{continuum_interval_count, count_below, weyl_asymptotic, weyl_count, WeylCount, WeylParams};
