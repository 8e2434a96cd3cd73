//! Resolvent blocks, deterministic certificates, restricted estimators, spectral checks and decay fits.

mod borel;
mod certificate;
mod estimator;
mod evolution;
mod fit;
mod panel;
mod reduction;
mod regularity;
mod resolvent;

pub use borel::{borel_theta, BorelTheta};
pub use certificate::{
    ct_certificate, locality_check, sample_buffer_sets, CtCertificate, CtConstants, LocalityCheck,
    RANDOM_HYPOTHESIS_SETS,
};
pub use estimator::{
    f_estimator, f_pq, f_pq_selectors, f_terms, theta_candidates, FEstimate, ThetaScope,
    FULL_SCOPE_LIMIT,
};
pub use evolution::{
    evolution_bound, evolution_decay_check, BumpSpec, EvolutionReport, EvolutionSample,
    FunctionSample,
};
pub use fit::{fit_decay, DecayProfile, ProfileSample, Z95};
pub use panel::{Panel, PanelBlock};
pub use reduction::{
    energy_reduction_check, ReductionOptions, ReductionReport, REDUCTION_SITE_LIMIT, ZERO_LEVEL_TOL,
};
pub use regularity::{regularity, Regularity, RegularityWitness};
pub use resolvent::{
    dressed_resolvent_block, probe_hamiltonian, DressedBlock, ProbeFlavor, ProbeParams, Resolvent,
    NEAR_SINGULAR_CONDITION,
};
