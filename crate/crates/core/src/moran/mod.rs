//! Exact and simulated quantities for the finite-population Moran chain.

pub mod chain;
pub mod simulate;

pub use chain::{
    absorption_profile, chain_green, discretize_measure, dual_hitting_cdf, expected_site_counts,
    moran_step_matrix, stationary_site_counts, ChainGreen, MoranMatrix, SiteCountField,
};
pub use simulate::{
    simulate_absorption, simulate_divergence_tables, simulate_dual_hitting, simulate_field, DivergenceSim,
    stream_rng, HittingEstimate, JumpChain,
};
