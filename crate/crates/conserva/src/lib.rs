//! conserva: a finite-volume conservation-law workbench.
//!
//! The crate implements implicit finite-volume discretizations of scalar
//! conservation laws (plus the 2D compressible Euler equations), the iterative
//! solvers used to approximate the implicit steps — Newton, Richardson,
//! Jacobi, Gauss-Seidel, GMRES, a two-level coarse grid correction and
//! explicit Runge-Kutta pseudo-time iterations — and the conservation
//! diagnostics that distinguish them:
//!
//! * global mass conservation of every iterate, checked to machine precision
//!   and, for Jacobi and Gauss-Seidel, compared against their closed-form
//!   drift expressions;
//! * the locally conservative flux form of truncated pseudo-time iterations,
//!   reconstructed explicitly and verified as an interface-flux identity;
//! * the modification constant c(μ₀, .., μ_{N-1}) = 1 - Π φ(-μ_l) of the
//!   effective conservation law u_t + c·f(u)_x = 0, together with root-first
//!   pseudo-time schedules that force c = 1.
//!
//! Core numerics are generic over the floating-point scalar via [`Real`];
//! the `*64` aliases below fix `f64` for the experiment drivers and the CLI.

pub mod diagnostics;
pub mod error;
pub mod euler2d;
pub mod experiments;
pub mod flux;
pub mod grid;
pub mod linalg;
pub mod linear_solvers;
pub mod newton;
pub mod pseudo;
pub mod scalar;
pub mod semidisc;
pub mod tableau;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` instantiations used by the experiment drivers and the CLI.
pub type Grid1D64 = grid::Grid1D<f64>;
pub type Grid2D64 = grid::Grid2D<f64>;
pub type State1D64 = grid::State1<f64>;
pub type State2D64 = grid::State2<f64>;
pub type Tableau64 = tableau::ButcherTableau<f64>;
pub type Schedule64 = pseudo::PseudoSchedule<f64>;
pub type LinearSystem64 = linear_solvers::LinearSystem<f64>;
pub type ImplicitEulerSystem64 = semidisc::ImplicitEulerSystem<f64>;
