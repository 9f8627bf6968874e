//! Matrix phase functions evaluated from `Ω²`.
//!
//! Everything here works on the squared frequency matrix directly; the
//! series involved are even in `Ω`, so no matrix square root is needed.

mod matrix;
mod trig;

pub use matrix::{linear_solve, LuDecomposition, SquareMatrix, CONDITION_LIMIT};
pub use trig::{
    effective_delta, phase_functions, scalar_phase, PhaseFunctionSet, MAX_SERIES_TERMS, SERIES_TOL,
};

#[cfg(test)]
pub(crate) use matrix::max_abs_diff;
pub(crate) use matrix::{add_vec, dot, sub_vec};
pub(crate) use trig::delta_from_phase;
