//! Random potential, pair interaction and the finite-difference Hamiltonian.

mod disorder;
mod hamiltonian;

pub use disorder::{
    log_holder_threshold, sample_disorder, site_key, DisorderField, DisorderSpec, HolderCheck, SiteStream,
    SiteWindow,
};
pub use hamiltonian::{
    assemble_multiparticle, assemble_single, assemble_with_cap, field_window, interaction_potential, CubeGrid,
    DomainSpec, HamiltonianContext, HamiltonianMatrix, InteractionSpec, ModelSpec, DEFAULT_MAX_DIM,
};
