//! Polytope invariants and a variational solver for real Monge-Ampère equations
//! `MA_g(φ) = C e^{-φ}` on ℝⁿ whose gradient image is a lattice polytope.
//!
//! The crate is organised bottom-up: exact polytope geometry ([`polytope`]),
//! toric invariants ([`toric`]), discrete convex functions ([`convexfn`]), the
//! semi-discrete solver ([`solver`]) and the discrete flow ([`flow`]).

pub mod error;
pub mod polytope;
pub mod quadrature;
pub mod rational;

pub use error::{Error, Result};
pub mod convexfn;
pub mod expint;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod laguerre;
pub mod solver;
pub mod toric;
