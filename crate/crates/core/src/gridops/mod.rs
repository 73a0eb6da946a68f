//! Grid-discretized continuous operators for `d ≤ 3`.
//!
//! Averages use cell-centre stencils with normalized weights; large
//! stencils are applied by FFT convolution. The Poisson semigroup acts on
//! periodic grids through its symbol.

mod average;
mod checks;
mod dyadic;
mod fft;
mod grid;
mod poisson;

pub use average::{
    apply_stencil, average, averages, dyadic_t_set, geometric_t_set, maximal, parse_t_grid,
    spherical_average, GridStencil, SphericalAverage, DIRECT_STENCIL_LIMIT, PERIODIC_BOX_FACTOR,
};
pub use checks::{decomposition_check, poisson_domination_check, spherical_domination_check, DISCRETIZATION_C};
pub use dyadic::{rademacher_menshov, DyadicSequence, RmBound};
pub use grid::{axis_len, Boundary, GridFunction, MAX_GRID_DIM};
pub use poisson::{lp_projection, poisson, poisson_many, poisson_tail_mass};
