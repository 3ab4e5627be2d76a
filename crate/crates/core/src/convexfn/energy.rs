//! Energy `ℰ_g` in its Legendre and mixed forms, and the functionals built from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rational::factorial;
use crate::solver::{exp_masses, mabuchi_substitution as substitution, Mode, NodeSystem, Problem};

use super::{fills, legendre, slope_representatives, subdivision, MaxAffine, PLonP};

fn check_tilt(phi: &MaxAffine, a: &[f64]) -> Result<()> {
    if a.len() != phi.dim() {
        return Err(Error::Invalid(format!("tilt has length {}, expected {}", a.len(), phi.dim())));
    }
    Ok(())
}

/// `ℰ_g(φ, φ_P) = −n! ∫ φ* e^{⟨a,p⟩} dp` over the slope hull. With `reference`, the slope hull
/// must be that polytope.
pub fn energy_legendre(phi: &MaxAffine, a: &[f64], reference: Option<&Polytope>) -> Result<f64> {
    check_tilt(phi, a)?;
    if let Some(p) = reference {
        if !fills(phi, p)? {
            return Err(Error::NotFull);
        }
    }
    let nf = factorial(phi.dim()) as f64;
    Ok(-nf * legendre(phi)?.integrate(a))
}

/// `n! ∫ λ_k e^{⟨a,p⟩} dp` per piece, with `λ_k` the hat function of the hull triangulation
/// (zero for inactive pieces). The height derivative of `ℰ_g` is minus this vector.
pub fn hull_weights(phi: &MaxAffine, a: &[f64]) -> Result<Vec<f64>> {
    check_tilt(phi, a)?;
    let sub = subdivision(phi)?;
    let pl = PLonP { nodes: phi.slopes.clone(), values: phi.heights.clone(), simplices: sub.simplices() };
    let nf = factorial(phi.dim()) as f64;
    Ok(pl.hat_weights(a).into_iter().map(|w| nf * w).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedEnergy {
    pub value: f64,
    /// Estimated quadrature error in `t`.
    pub error: f64,
    pub evaluations: usize,
}

/// Pieces of `(1−t)φ₀ + tφ`: slopes `(1−t)p_i + t p_j` and heights `(1−t)u_i + t u_j` over
/// pairs of active pieces, with duplicate slopes merged.
fn interpolant(phi0: &MaxAffine, act0: &[usize], phi1: &MaxAffine, act1: &[usize], t: f64) -> MaxAffine {
    let mut slopes = Vec::with_capacity(act0.len() * act1.len());
    let mut heights = Vec::with_capacity(act0.len() * act1.len());
    for &i in act0 {
        for &j in act1 {
            slopes.push(phi0.slopes[i].iter().zip(&phi1.slopes[j]).map(|(p, q)| (1.0 - t) * p + t * q).collect());
            heights.push((1.0 - t) * phi0.heights[i] + t * phi1.heights[j]);
        }
    }
    let reps = slope_representatives(&slopes, &heights);
    let keep: Vec<usize> = (0..slopes.len()).filter(|&k| reps[k] == k).collect();
    MaxAffine {
        slopes: keep.iter().map(|&k| slopes[k].clone()).collect(),
        heights: keep.iter().map(|&k| heights[k]).collect(),
    }
}

/// `∫ (φ − φ₀) MA_g((1−t)φ₀ + tφ)` at one `t`.
fn mixed_integrand(
    phi0: &MaxAffine,
    act0: &[usize],
    phi: &MaxAffine,
    act1: &[usize],
    a: &[f64],
    t: f64,
) -> Result<f64> {
    let psi = interpolant(phi0, act0, phi, act1, t);
    let mu = super::ma_measure_weighted(&psi, a)?;
    Ok(mu.points.iter().zip(&mu.masses).map(|(x, m)| (phi.eval(x) - phi0.eval(x)) * m).sum())
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson on one panel; returns the Richardson-corrected value and the error
/// estimate.
#[allow(clippy::too_many_arguments)]
fn adapt<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<(f64, f64)> {
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m))?;
    let frm = f(0.5 * (m + b))?;
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return Ok((left + right + diff / 15.0, diff.abs() / 15.0));
    }
    let (l, el) = adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let (r, er) = adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok((l + r, el + er))
}

/// `ℰ_g(φ) − ℰ_g(φ₀) = ∫₀¹ ∫ (φ − φ₀) MA_g((1−t)φ₀ + tφ) dt` by composite Simpson over 32
/// panels in `t`, each refined adaptively to `tol`.
pub fn energy_mixed(phi: &MaxAffine, phi0: &MaxAffine, a: &[f64], tol: f64) -> Result<MixedEnergy> {
    check_tilt(phi, a)?;
    if phi.slopes != phi0.slopes {
        return Err(Error::SlopeMismatch);
    }
    let s0 = subdivision(phi0)?;
    let s1 = subdivision(phi)?;
    let act0: Vec<usize> = (0..phi0.len()).filter(|&k| s0.active[k]).collect();
    let act1: Vec<usize> = (0..phi.len()).filter(|&k| s1.active[k]).collect();
    let mut evaluations = 0;
    let mut f = |t: f64| {
        evaluations += 1;
        mixed_integrand(phi0, &act0, phi, &act1, a, t)
    };
    const PANELS: usize = 32;
    let h = 1.0 / PANELS as f64;
    let mut value = 0.0;
    let mut error = 0.0;
    let mut fa = f(0.0)?;
    for i in 0..PANELS {
        let (lo, hi) = (i as f64 * h, (i + 1) as f64 * h);
        let fm = f(0.5 * (lo + hi))?;
        let fb = f(hi)?;
        let (v, e) = adapt(&mut f, lo, hi, fa, fm, fb, simpson(fa, fm, fb, h), tol / PANELS as f64, 24)?;
        value += v;
        error += e;
        fa = fb;
    }
    Ok(MixedEnergy { value, error, evaluations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    /// `−log ∫ e^{-φ} dx`.
    #[serde(rename = "I")]
    pub i: f64,
    /// `ℰ_g/(n! V_g) − 𝓘`.
    #[serde(rename = "G")]
    pub g: f64,
    /// `n! ∫ (φ* − min φ*) g dp`.
    #[serde(rename = "J")]
    pub j: f64,
    /// `ℰ_g(φ, φ_P)`.
    #[serde(rename = "E")]
    pub e: f64,
}

/// The functionals of `φ` relative to `φ_P` with weight `g = e^{⟨a,p⟩}`. The slope hull must
/// be `P`.
pub fn functionals(phi: &MaxAffine, p: &Polytope, a: &[f64]) -> Result<Functionals> {
    check_tilt(phi, a)?;
    if !fills(phi, p)? {
        return Err(Error::NotFull);
    }
    let nf = factorial(phi.dim()) as f64;
    let l = legendre(phi)?;
    let e = -nf * l.integrate(a);
    let vg = PLonP { values: vec![1.0; l.nodes.len()], ..l.clone() }.integrate(a);
    let umin = l.values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let reps = slope_representatives(&phi.slopes, &phi.heights);
    let keep: Vec<usize> = (0..phi.len()).filter(|&k| reps[k] == k).collect();
    let slopes: Vec<Vec<f64>> = keep.iter().map(|&k| phi.slopes[k].clone()).collect();
    let heights: Vec<f64> = keep.iter().map(|&k| phi.heights[k]).collect();
    let i = -exp_masses(&slopes, &heights)?.log_total;
    Ok(Functionals { i, g: e / (nf * vg) - i, j: -e - nf * umin * vg, e })
}

/// Mabuchi value of solved heights by substitution of the equation. Fails with
/// `NOT_A_SOLUTION` when the mass residual exceeds `tol`.
pub fn mabuchi_substitution(ns: &NodeSystem, u: &[f64], tol: f64) -> Result<f64> {
    let mode = if ns.a.iter().all(|x| *x == 0.0) { Mode::Ke } else { Mode::Soliton };
    let ev = Problem::new(ns, mode)?.evaluate(u)?;
    let r = ev.grad_inf();
    if !(r <= tol) {
        return Err(Error::NotASolution(r));
    }
    Ok(substitution(ns, u, &ev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::catalog;

    #[test]
    fn support_function_energy() {
        let sq = catalog::square();
        let phi = MaxAffine::support(&sq);
        assert_eq!(energy_legendre(&phi, &[0.0, 0.0], Some(&sq)).unwrap(), 0.0);
        let c = 1.5;
        let e = energy_legendre(&phi.add_constant(c), &[0.0, 0.0], Some(&sq)).unwrap();
        assert!((e - c * 2.0 * 4.0).abs() < 1e-13);
        let half = MaxAffine::new(vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![0.0, 1.0]], vec![0.0; 3]).unwrap();
        assert_eq!(energy_legendre(&half, &[0.0, 0.0], Some(&sq)).unwrap_err(), Error::NotFull);
    }

    #[test]
    fn mixed_form_on_v_shape() {
        let phi0 = MaxAffine::new(vec![vec![-1.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
        let phi = MaxAffine::new(vec![vec![-1.0], vec![1.0]], vec![0.3, -0.4]).unwrap();
        let m = energy_mixed(&phi, &phi0, &[0.0], 1e-12).unwrap();
        let l = energy_legendre(&phi, &[0.0], None).unwrap() - energy_legendre(&phi0, &[0.0], None).unwrap();
        assert!((m.value - l).abs() < 1e-10, "{} vs {l}", m.value);
    }

    #[test]
    fn functionals_of_v_shape() {
        let seg = catalog::segment();
        let phi = MaxAffine::new(vec![vec![-1.0], vec![1.0]], vec![0.0, 0.0]).unwrap();
        let f = functionals(&phi, &seg, &[0.0]).unwrap();
        // ∫ e^{-|x|} = 2
        assert!((f.i + 2f64.ln()).abs() < 1e-14);
        assert_eq!(f.e, 0.0);
        assert!((f.g - 2f64.ln()).abs() < 1e-14);
        assert_eq!(f.j, 0.0);
    }
}
