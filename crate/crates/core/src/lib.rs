//! Pseudo-spectral solvers for the primitive equations and the scaled
//! anisotropic Navier-Stokes system on the periodic box
//! (0,L1) x (0,L2) x (-1,1), plus the diagnostics and sweep machinery used
//! to verify the hydrostatic small-aspect-ratio limit numerically.

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod oracles;
pub mod pe;
pub mod sns;
pub mod symmetry;

pub use error::{Error, Result};
pub use field::{NormKind, Parity, PhysicalField, SpectralField};
pub use grid::{Axis, Grid};
pub use symmetry::{
    diagnostic_w, divergence_3d, divergence_h, make_initial_data, HorizontalField,
    InitialDataRecipe, PeState, SnsState,
};
