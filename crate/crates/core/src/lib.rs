//! Numerical laboratory for mode solutions of the Klein–Gordon equation on a
//! rotating cosmic string background.
//!
//! The crate is organised bottom-up:
//!
//! * [`background`]: metric parameters, the mode operator □ₖ and its symbol;
//! * [`rays`]: null bicharacteristics, forward flowouts and escape times;
//! * [`specfun`]: Bessel functions of real order and Γ;
//! * [`modes`]: exact and integrated radial modes, the H¹ₖ norm, unique
//!   continuation and the non-H¹ₖ superposition;
//! * [`solver`]: the absorbing operator W and per-frequency forward solves;
//! * [`wavefront`]: windowed-Fourier phase-space energy and flowout checks.

pub mod background;
pub mod cutoff;
pub mod error;
pub mod field;
pub mod io;
pub mod modes;
pub mod ode;
pub mod quad;
pub mod rays;
pub mod rng;
pub mod solver;
pub mod specfun;
pub mod stencil;
pub mod wavefront;

pub use background::{BackgroundParams, ModeParams, PhasePoint};
pub use error::{Error, Result};
pub use field::{RadialGrid, SpacetimeField, TimeGrid};
pub use num_complex::Complex64;
