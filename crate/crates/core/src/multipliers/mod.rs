//! Section functions, Fourier multipliers of continuous and lattice
//! averages, and checkers for the multiplier and section bounds.

mod discrete;
mod multiplier;
mod section;
mod symbol;

pub use discrete::{
    dirichlet_kernel, dirichlet_product, discrete_multiplier, discrete_multiplier_with_cap,
    explore_conjectural_bounds, kappa, to_torus, DiscreteMultiplier,
};
pub use multiplier::{
    check_multiplier_bounds, multiplier, random_xi, MultiplierEstimator, MultiplierSample,
    PROOF_CONSTANTS, THEOREM_CONSTANT,
};
pub use section::{
    check_section_bounds, section_profile, section_profile_auto, SectionProfile, MIN_SLAB_COUNT,
};
pub use symbol::{dyadic_symbol_sum, poisson_symbol, SymbolSum};
