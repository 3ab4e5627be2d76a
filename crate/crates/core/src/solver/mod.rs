//! Semi-discrete solver for `MA_g(φ) = C e^{-φ}` and its twisted and inhomogeneous
//! variants, by concave maximization over node heights.
//!
//! The unknown is the max-affine function `φ_u(x) = max_k ⟨p_k, x⟩ − u_k` with slopes at the
//! nodes of a refined triangulation of `P`. Its cells carry exact exponential masses, and
//! the objective's gradient is the mismatch between normalized cell masses and node
//! weights.

pub mod bracket;
pub mod nodes;
pub mod objective;
pub mod soliton;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laguerre::Diagram;
use crate::polytope::Polytope;
use crate::rational::factorial;

pub use bracket::{r_analytic, RBracket, RSample};
pub use nodes::{assemble, NodeSystem};
pub use objective::{exp_masses, Evaluation, ExpMasses, Mode, Problem, Target};
pub use soliton::{soliton_vector, Soliton, SolitonOptions};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop when `‖g‖_∞` falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Number of stored curvature pairs.
    pub memory: usize,
    /// Translation drift over `window` iterations that signals divergence.
    pub t_max: f64,
    /// Accumulated ascent that signals divergence.
    pub g_cap: f64,
    pub window: usize,
    /// Random initial heights in `[-1, 1]` when set; zero heights otherwise.
    pub seed: Option<u64>,
    pub init: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iter: 3000,
            memory: 20,
            t_max: 1e3,
            g_cap: 1e6,
            window: 50,
            seed: None,
            init: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Solved,
    NoSolutionDetected,
    MaxIter,
}

#[derive(Debug, Clone, Serialize)]
pub struct Functionals {
    /// Discrete energy `−n! Σ w_k u_k`.
    #[serde(rename = "E")]
    pub energy: f64,
    /// Objective value.
    #[serde(rename = "G")]
    pub ding: f64,
    /// Mabuchi value by substitution of the solved equation; absent away from solutions.
    #[serde(rename = "M")]
    pub mabuchi: Option<f64>,
    /// `n! Σ w_k (u_k − min u)`.
    #[serde(rename = "J")]
    pub aubin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub k: usize,
    pub bounded: bool,
    /// Finite vertices, closed up with one unit along each ray for unbounded cells. In one
    /// dimension, the interval endpoints.
    pub polygon: Vec<Vec<f64>>,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: Status,
    pub mode: Mode,
    pub refinement: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub heights: Vec<f64>,
    #[serde(rename = "C")]
    pub c: f64,
    pub residuals: Vec<f64>,
    pub residual_max: f64,
    pub functionals: Functionals,
    pub iters: usize,
    pub evaluations: usize,
    pub drift_history: Vec<f64>,
    pub cells: Vec<CellReport>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves the small dense system `m x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

/// Weighted least-squares affine fit `u_k ≈ c + ⟨v, p_k⟩`; returns `(c, v)`.
pub fn affine_fit(nodes: &[Vec<f64>], weights: &[f64], u: &[f64]) -> (f64, Vec<f64>) {
    let n = nodes[0].len();
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    let mut rhs = vec![0.0; n + 1];
    for ((p, w), uk) in nodes.iter().zip(weights).zip(u) {
        let row: Vec<f64> = std::iter::once(1.0).chain(p.iter().copied()).collect();
        for i in 0..=n {
            rhs[i] += w * row[i] * uk;
            for j in 0..=n {
                m[i][j] += w * row[i] * row[j];
            }
        }
    }
    let x = solve_dense(m, rhs).unwrap_or_else(|| vec![0.0; n + 1]);
    (x[0], x[1..].to_vec())
}

/// Removes from `g` its component along `diag(w)·(affine functions)`, leaving a vector with
/// zero affine moments `Σ g_k = 0`, `Σ g_k p_k = 0`.
fn project_affine_moments(nodes: &[Vec<f64>], weights: &[f64], g: &[f64]) -> Vec<f64> {
    let n = nodes[0].len();
    let mut m = vec![vec![0.0; n + 1]; n + 1];
    let mut rhs = vec![0.0; n + 1];
    for ((p, w), gk) in nodes.iter().zip(weights).zip(g) {
        let row: Vec<f64> = std::iter::once(1.0).chain(p.iter().copied()).collect();
        for i in 0..=n {
            rhs[i] += row[i] * gk;
            for j in 0..=n {
                m[i][j] += w * row[i] * row[j];
            }
        }
    }
    let x = solve_dense(m, rhs).unwrap_or_else(|| vec![0.0; n + 1]);
    g.iter().zip(nodes).zip(weights).map(|((gk, p), w)| gk - w * (x[0] + dot(&x[1..], p))).collect()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Limited-memory product `H g` with initial matrix `γ·diag(metric)`.
fn two_loop(g: &[f64], mem: &VecDeque<Pair>, gamma: f64, metric: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for pair in mem.iter().rev() {
        let a = pair.rho * dot(&pair.s, &q);
        for (qi, yi) in q.iter_mut().zip(&pair.y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let mut r: Vec<f64> = q.iter().zip(metric).map(|(qi, d)| gamma * d * qi).collect();
    for (pair, a) in mem.iter().zip(alphas.iter().rev()) {
        let b = pair.rho * dot(&pair.y, &r);
        for (ri, si) in r.iter_mut().zip(&pair.s) {
            *ri += si * (a - b);
        }
    }
    r
}

struct Solver<'a> {
    prob: Problem<'a>,
    opts: SolveOptions,
    evaluations: usize,
}

struct Step {
    alpha: f64,
    u: Vec<f64>,
    ev: Evaluation,
}

impl<'a> Solver<'a> {
    fn eval(&mut self, u: &[f64]) -> Result<Evaluation> {
        self.evaluations += 1;
        self.prob.evaluate(u)
    }

    /// Backtracking line search for ascent along `d`, with step doubling while the
    /// directional derivative stays large. Returns `None` when no acceptable step exists.
    fn line_search(&mut self, u: &[f64], d: &[f64], ev: &Evaluation, alpha0: f64, max_alpha: f64) -> Option<Step> {
        let f0 = ev.value;
        let slope0 = dot(d, &ev.grad);
        if !(slope0 > 0.0) {
            return None;
        }
        let at = |alpha: f64| -> Vec<f64> { u.iter().zip(d).map(|(a, b)| a + alpha * b).collect() };
        let accept = |e: &Evaluation, alpha: f64| {
            let armijo = e.value >= f0 + 1e-4 * alpha * slope0;
            let flat = e.value >= f0 - 1e-13 * (1.0 + f0.abs()) && dot(d, &e.grad) >= -slope0;
            e.value.is_finite() && (armijo || flat)
        };
        let mut alpha = alpha0.min(max_alpha);
        let mut found = None;
        let mut backtracked = false;
        for _ in 0..60 {
            let un = at(alpha);
            if let Ok(e) = self.eval(&un) {
                if accept(&e, alpha) {
                    found = Some(Step { alpha, u: un, ev: e });
                    break;
                }
            }
            alpha *= 0.5;
            backtracked = true;
        }
        let mut step = found?;
        if !backtracked {
            while dot(d, &step.ev.grad) > 0.9 * slope0 && 2.0 * step.alpha <= max_alpha {
                let a2 = 2.0 * step.alpha;
                let un = at(a2);
                match self.eval(&un) {
                    Ok(e) if accept(&e, a2) && e.value >= step.ev.value => step = Step { alpha: a2, u: un, ev: e },
                    _ => break,
                }
            }
        }
        Some(step)
    }

    /// Subtracts the normalization (affine fit or weighted mean) and returns the
    /// translation drift it represents.
    fn normalize(&self, u: &mut [f64], previous_v: &mut Vec<f64>) -> f64 {
        let ns = self.prob.ns;
        let (c, v) = affine_fit(&ns.nodes, &ns.weights, u);
        if self.prob.mode.is_homogeneous() {
            for (uk, p) in u.iter_mut().zip(&ns.nodes) {
                *uk -= c + dot(&v, p);
            }
            v.iter().map(|x| x * x).sum::<f64>().sqrt()
        } else {
            let mean = dot(&ns.weights, u) / ns.total;
            for uk in u.iter_mut() {
                *uk -= mean;
            }
            let drift = v.iter().zip(previous_v.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            *previous_v = v;
            drift
        }
    }

    fn run(&mut self) -> Result<(Status, Vec<f64>, Evaluation, usize, Vec<f64>)> {
        let ns = self.prob.ns;
        let n = ns.len();
        let homogeneous = self.prob.mode.is_homogeneous();
        let metric: Vec<f64> = ns.weights.iter().map(|w| ns.total / w).collect();
        let mut u = match (&self.opts.init, self.opts.seed) {
            (Some(init), _) => {
                if init.len() != n {
                    return Err(Error::Invalid(format!("initial heights have length {}, expected {n}", init.len())));
                }
                init.clone()
            }
            (None, Some(seed)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
            (None, None) => vec![0.0; n],
        };
        let mut fit_v = affine_fit(&ns.nodes, &ns.weights, &u).1;
        self.normalize(&mut u, &mut fit_v);
        let mut ev = self.eval(&u)?;
        let mut mem: VecDeque<Pair> = VecDeque::new();
        let mut gamma = 1.0;
        let mut trans_alpha = 1.0;
        let mut ascent = 0.0;
        let mut drift_history = Vec::new();
        let mut failures = 0;
        let p_scale: Vec<f64> = (0..ns.dim()).map(|i| ns.nodes.iter().map(|p| p[i].abs()).sum()).collect();
        let project = |g: &[f64]| -> Vec<f64> {
            if homogeneous {
                project_affine_moments(&ns.nodes, &ns.weights, g)
            } else {
                g.to_vec()
            }
        };
        for iter in 0..self.opts.max_iter {
            if ev.grad_inf() <= self.opts.tol {
                return Ok((Status::Solved, u, ev, iter, drift_history));
            }
            let mut drift = 0.0;
            let gq = project(&ev.grad);
            let mut d = two_loop(&gq, &mem, gamma, &metric);
            if !(dot(&d, &gq) > 0.0) {
                mem.clear();
                d = gq.iter().zip(&metric).map(|(g, m)| g * m).collect();
            }
            let alpha0 = if iter == 0 { (1.0 / inf_norm(&d)).min(1.0) } else { 1.0 };
            match self.line_search(&u, &d, &ev, alpha0, f64::INFINITY) {
                Some(step) => {
                    failures = 0;
                    ascent += step.ev.value - ev.value;
                    let mut un = step.u;
                    drift += self.normalize(&mut un, &mut fit_v);
                    let en = self.eval(&un)?;
                    let gqn = project(&en.grad);
                    let s: Vec<f64> = un.iter().zip(&u).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = gq.iter().zip(&gqn).map(|(a, b)| a - b).collect();
                    let sy = dot(&s, &y);
                    let yy: f64 = y.iter().zip(&metric).map(|(a, m)| a * a * m).sum();
                    if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && yy > 0.0 {
                        gamma = sy / yy;
                        mem.push_back(Pair { s, y, rho: 1.0 / sy });
                        if mem.len() > self.opts.memory {
                            mem.pop_front();
                        }
                    }
                    u = un;
                    ev = en;
                }
                None => {
                    failures += 1;
                    mem.clear();
                    gamma = 1.0;
                    if failures >= 3 {
                        return Ok((Status::MaxIter, u, ev, iter, drift_history));
                    }
                }
            }
            // Translation search along τ_i = Σ_k g_k p_{k,i}; when the gate holds, ‖g‖_∞ > tol.
            let tau: Vec<f64> =
                (0..ns.dim()).map(|i| ev.grad.iter().zip(&ns.nodes).map(|(g, p)| g * p[i]).sum()).collect();
            let gated = tau.iter().zip(&p_scale).any(|(t, s)| t.abs() > self.opts.tol * s);
            if gated {
                let tn = tau.iter().map(|x| x * x).sum::<f64>().sqrt();
                let dir: Vec<f64> = ns.nodes.iter().map(|p| dot(&tau, p) / tn).collect();
                if let Some(step) = self.line_search(&u, &dir, &ev, trans_alpha, 2.0 * self.opts.t_max) {
                    trans_alpha = step.alpha;
                    ascent += step.ev.value - ev.value;
                    let mut un = step.u;
                    drift += self.normalize(&mut un, &mut fit_v);
                    ev = self.eval(&un)?;
                    u = un;
                } else {
                    trans_alpha = (trans_alpha * 0.25).max(1e-8);
                }
            }
            drift_history.push(drift);
            let w = self.opts.window.min(drift_history.len());
            let recent: f64 = drift_history[drift_history.len() - w..].iter().sum();
            if recent > self.opts.t_max || ascent > self.opts.g_cap {
                return Ok((Status::NoSolutionDetected, u, ev, iter + 1, drift_history));
            }
        }
        let status = if ev.grad_inf() <= self.opts.tol { Status::Solved } else { Status::MaxIter };
        Ok((status, u, ev, self.opts.max_iter, drift_history))
    }
}

pub fn cell_reports(diagram: &Diagram, masses: &[f64]) -> Vec<CellReport> {
    let mut out = Vec::new();
    match diagram {
        Diagram::One(cells) => {
            for (k, c) in cells.iter().enumerate() {
                if let Some(iv) = c {
                    out.push(CellReport {
                        k,
                        bounded: iv.lo.is_finite() && iv.hi.is_finite(),
                        polygon: vec![vec![iv.lo], vec![iv.hi]],
                        mass: masses[k],
                    });
                }
            }
        }
        Diagram::Two(cells) => {
            for (k, c) in cells.iter().enumerate() {
                if let Some(c) = c {
                    out.push(CellReport {
                        k,
                        bounded: c.region.is_bounded(),
                        polygon: c.region.display_polygon().iter().map(|v| v.to_vec()).collect(),
                        mass: masses[k],
                    });
                }
            }
        }
    }
    out
}

/// Mabuchi value at a solution: `−ℰ/(n!W) + ∫φ dμ + ∫ρ log ρ`, where `μ = MA_g(φ)/(n!W)`
/// puts mass `w_k/W` on cell `k` and the entropy uses the solved density `ρ = e^{-φ}/M`.
pub fn mabuchi_substitution(ns: &NodeSystem, u: &[f64], ev: &Evaluation) -> f64 {
    let big_w = ns.total;
    let mut phi_mu = 0.0;
    let mut phi_rho = 0.0;
    for k in 0..u.len() {
        let m = ev.masses[k];
        if m > 0.0 {
            let cell_phi = dot(&ns.nodes[k], &ev.moments[k]) - u[k] * m;
            phi_mu += ns.weights[k] / big_w * cell_phi / m;
            phi_rho += cell_phi;
        }
    }
    let entropy = -phi_rho - ev.log_total;
    dot(&ns.weights, u) / big_w + phi_mu + entropy
}

pub fn solve(ns: &NodeSystem, mode: Mode, opts: &SolveOptions) -> Result<SolveReport> {
    if mode == Mode::Soliton {
        let b = ns.barycenter();
        if inf_norm(&b) > 1e-6 {
            return Err(Error::Invalid(format!(
                "soliton mode needs weights with barycenter 0, got {b:?}; assemble with the soliton vector"
            )));
        }
    }
    let prob = Problem::new(ns, mode)?;
    let mut solver = Solver { prob, opts: opts.clone(), evaluations: 0 };
    let (status, u, ev, iters, drift_history) = solver.run()?;
    let n = ns.dim();
    let nf = factorial(n) as f64;
    let big_w = ns.total;
    let residuals: Vec<f64> = ev.grad.iter().map(|g| g.abs()).collect();
    let residual_max = inf_norm(&residuals);
    let c = match mode {
        Mode::Inhomogeneous { .. } => nf * big_w,
        _ => nf * big_w * (-ev.log_total).exp(),
    };
    let umin = u.iter().zip(&ev.masses).filter(|(_, m)| **m > 0.0).map(|(x, _)| *x).fold(f64::INFINITY, f64::min);
    let functionals = Functionals {
        energy: -nf * dot(&ns.weights, &u),
        ding: ev.value,
        mabuchi: (status == Status::Solved && mode.is_homogeneous()).then(|| mabuchi_substitution(ns, &u, &ev)),
        aubin: nf * ns.weights.iter().zip(&u).map(|(w, x)| w * (x - umin)).sum::<f64>(),
    };
    Ok(SolveReport {
        status,
        mode,
        refinement: ns.refinement,
        nodes: ns.nodes.clone(),
        weights: ns.weights.clone(),
        cells: cell_reports(&ev.diagram, &ev.masses),
        heights: u,
        c,
        residuals,
        residual_max,
        functionals,
        iters,
        evaluations: solver.evaluations,
        drift_history,
    })
}

/// Assembles the node system appropriate for `mode` (soliton vector tilt in soliton mode)
/// and solves.
pub fn solve_polytope(p: &Polytope, mode: Mode, refinement: usize, opts: &SolveOptions) -> Result<SolveReport> {
    let a = match mode {
        Mode::Soliton => soliton_vector(p, &SolitonOptions::default())?.a,
        _ => vec![0.0; p.dim],
    };
    let ns = assemble(p, &a, refinement)?;
    solve(&ns, mode, opts)
}
