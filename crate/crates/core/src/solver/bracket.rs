//! Bracketing the greatest `r` for which the twisted equation is solvable.

use serde::Serialize;

use crate::error::Result;
use crate::polytope::Polytope;

use super::{assemble, solve, Mode, SolveOptions, Status};

#[derive(Debug, Clone, Serialize)]
pub struct RSample {
    pub r: f64,
    pub status: Status,
    pub iters: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RBracket {
    pub lo: f64,
    pub hi: f64,
    /// Values of `r` at which the solver neither converged nor diverged.
    pub indeterminate: Vec<f64>,
    pub samples: Vec<RSample>,
}

/// Bisection on `r ∈ (0, 1)` with a twisted solve at each midpoint: solvable values raise
/// the lower end, detected divergence lowers the upper end.
pub fn r_analytic(p: &Polytope, tol_r: f64, refinement: usize, opts: &SolveOptions) -> Result<RBracket> {
    let ns = assemble(p, &vec![0.0; p.dim], refinement)?;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut indeterminate: Vec<f64> = Vec::new();
    let mut samples = Vec::new();
    let mut guard = 0;
    while hi - lo > tol_r && guard < 64 {
        guard += 1;
        let width = hi - lo;
        let mut r = 0.5 * (lo + hi);
        // step away from points that already failed to resolve
        let mut k = 1.0;
        while indeterminate.iter().any(|x| (x - r).abs() < width / 16.0) && k < 4.0 {
            r = lo + width * (0.5 + if guard % 2 == 0 { k } else { -k } / 8.0);
            k += 1.0;
        }
        let mut status = Status::MaxIter;
        let mut iters = 0;
        for scale in [1, 4] {
            let o = SolveOptions { max_iter: opts.max_iter * scale, ..opts.clone() };
            let rep = solve(&ns, Mode::Twisted { r }, &o)?;
            status = rep.status;
            iters = rep.iters;
            if status != Status::MaxIter {
                break;
            }
        }
        samples.push(RSample { r, status, iters });
        match status {
            Status::Solved => lo = r,
            Status::NoSolutionDetected => hi = r,
            Status::MaxIter => indeterminate.push(r),
        }
    }
    Ok(RBracket { lo, hi, indeterminate, samples })
}
