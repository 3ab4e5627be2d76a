//! The soliton vector: the critical point of `Λ(a) = log ∫_P e^{⟨a,p⟩} dp`.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polytope::{Polytope, DEFAULT_ORDER};

use super::solve_dense;

#[derive(Debug, Clone)]
pub struct SolitonOptions {
    /// Target for `‖∇Λ(a)‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
    /// Gauss points per direction in the moment quadrature.
    pub order: usize,
}

impl Default for SolitonOptions {
    fn default() -> Self {
        SolitonOptions { tol: 1e-10, max_iter: 100, order: DEFAULT_ORDER }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Soliton {
    pub a: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
}

struct Lambda {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<Vec<f64>>,
}

fn lambda(p: &Polytope, a: &[f64], order: usize) -> Lambda {
    let w = p.measures(Some(a), order).weighted.expect("weighted moments requested");
    let n = a.len();
    let mean: Vec<f64> = w.b.iter().map(|x| x / w.v).collect();
    let hess = (0..n).map(|i| (0..n).map(|j| w.cov[i][j] / w.v - mean[i] * mean[j]).collect()).collect();
    Lambda { value: w.v.ln(), grad: mean, hess }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration on the strictly convex `Λ`. Returns exactly `a = 0` when the
/// barycenter of `P` vanishes.
pub fn soliton_vector(p: &Polytope, opts: &SolitonOptions) -> Result<Soliton> {
    let n = p.dim;
    if p.barycenter().iter().all(|x| x.is_zero()) {
        return Ok(Soliton { a: vec![0.0; n], gradient_norm: 0.0, iterations: 0 });
    }
    let mut a = vec![0.0; n];
    let mut cur = lambda(p, &a, opts.order);
    for it in 0..opts.max_iter {
        let gn = inf_norm(&cur.grad);
        if gn <= opts.tol {
            return Ok(Soliton { a, gradient_norm: gn, iterations: it });
        }
        let step = solve_dense(cur.hess.clone(), cur.grad.iter().map(|g| -g).collect())
            .ok_or_else(|| Error::Invalid("singular covariance in soliton iteration".into()))?;
        let slope: f64 = step.iter().zip(&cur.grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        let mut next = None;
        while t > 1e-12 {
            let trial: Vec<f64> = a.iter().zip(&step).map(|(x, s)| x + t * s).collect();
            let l = lambda(p, &trial, opts.order);
            if l.value <= cur.value + 1e-4 * t * slope || (gn < 1e-6 && inf_norm(&l.grad) < gn) {
                next = Some((trial, l));
                break;
            }
            t *= 0.5;
        }
        match next {
            Some((trial, l)) => {
                a = trial;
                cur = l;
            }
            None => break,
        }
    }
    let gn = inf_norm(&cur.grad);
    if gn <= opts.tol {
        Ok(Soliton { a, gradient_norm: gn, iterations: opts.max_iter })
    } else {
        Err(Error::MaxIter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn uneven_segment_against_bisection() {
        let p = Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(2))]).unwrap();
        let s = soliton_vector(&p, &SolitonOptions::default()).unwrap();
        // ∫_{-1}^{2} p e^{ap} dp = 0, solved by bisection on the closed form
        let f = |a: f64| {
            let e = |x: f64| (a * x).exp() * (x / a - 1.0 / (a * a));
            e(2.0) - e(-1.0)
        };
        let (mut lo, mut hi) = (-5.0, -1e-3);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(lo) * f(m) <= 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        assert!(s.a[0] < 0.0);
        assert!((s.a[0] - lo).abs() < 1e-9, "{} vs {lo}", s.a[0]);
    }

    #[test]
    fn symmetric_body_gives_zero() {
        let p = Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(1))]).unwrap();
        let s = soliton_vector(&p, &SolitonOptions::default()).unwrap();
        assert_eq!(s.a, vec![0.0]);
    }
}
