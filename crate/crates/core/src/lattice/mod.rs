//! Lattice-point enumeration, discrete averaging operators on `Z^d`, and the
//! lattice counting lemmas behind the discrete-to-continuous comparison.

mod chain;
mod enumerate;
mod function;
mod lemmas;

pub use chain::{
    cell_ball_intersection, comparison_chain_check, random_sparse_input, rect_disc_area, ChainRegime,
    BOUNDARY_MC_POINTS,
};
pub use enumerate::{
    enumerate_ball, enumerate_ball_with_cap, BallCount, WeightedBall, BOUNDARY_RTOL, DEFAULT_CAP,
};
pub use function::{
    discrete_average, discrete_average_at, discrete_maximal, distinct_b2_radii, dyadic_radii,
    extend_to_grid, CellExtension, LatticeFunction, Stencil,
};
pub(crate) use function::maximal_with;
pub use lemmas::{
    cube_halfspace_measure, cube_tail_check, lemma61_check, lemma62_check, lemma63_check, lemma63_constants,
    tail_directions, Lemma63Constants,
};
