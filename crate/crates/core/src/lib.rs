//! Characteristic-coordinate solvers for two nonlinear hyperbolic equations
//! whose solutions develop gradient blowup:
//!
//! * `u_tx + f'(u) u_xx + lambda f''(u) u_x^2 = 0` ([`unichar`]),
//! * `u_tt - c(u)^2 u_xx - 2 lambda c(u) c'(u) u_x^2 = 0` ([`wavechar`]).
//!
//! Both are rewritten in energy-dependent coordinates as semi-linear systems
//! that remain regular when `u_x` becomes infinite, solved by Picard
//! iteration on a lattice and mapped back to `(x, t)`. The [`verify`] module
//! holds the independent finite-difference and closed-form references.
//!
//! The crate is `no_std` (with `alloc`).

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod func;
pub mod grid;
pub mod math;
pub mod model;
pub mod primitive;
pub mod report;
pub mod testfn;
pub mod verify;
pub mod unichar;
pub mod wavechar;

pub use error::{Error, Result};
pub use func::{Func1, Velocity};
pub use model::{builtin_model, Model, ModelSpec1, ModelSpec2, Regime};
