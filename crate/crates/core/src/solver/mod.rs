//! The absorbing operator `W`, the modified operator `P = □ₖ + m² − iW`,
//! per-frequency forward solves and the coercivity checks.

mod absorber;
mod coercivity;
mod forward;
mod linalg;
mod properties;

pub use absorber::{
    absorber_block, absorber_symbol, apply_w, AbsorberBlock, AbsorberSpec, GridSpec, MAX_PAD, MIN_WINDOW_POINTS,
};
pub use coercivity::{coercivity_check, coercivity_on, CoercivityGrid, CoercivityReport, CoercivityTrial};
pub use forward::{
    assemble_p_lambda, damping_ratio, frobenius_ratio, interior_residual, solve_block, solve_forward, BlockInfo,
    ForwardSolution, PBlock, SolveReport, SINGULAR_PIVOT_RATIO, TIKHONOV,
};
pub use linalg::LuFactor;
pub use properties::{absorber_properties, AbsorberProperties};
