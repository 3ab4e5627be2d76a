//! Discrete convex analysis in dual form.
//!
//! A convex function on ℝⁿ with gradient image in a polytope is represented by a
//! max-affine function `φ(x) = max_k ⟨p_k,x⟩ − u_k`. Its Legendre transform is the lower
//! convex hull of the lifted slopes `(p_k, u_k)`, its Monge-Ampère measure is atomic on the
//! vertices of the induced subdivision, and geodesics are straight lines in the heights.

pub mod energy;
pub mod grid;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expint::{cross2, P2};
use crate::geometry::{convex_hull, polygon_area, strictly_inside};
use crate::laguerre::{self, diagram_2d, lower_hull_1d};
use crate::polytope::Polytope;
use crate::rational::{factorial, from_f64, Rational};
use crate::solver::nodes::hat_integrals;
use crate::solver::solve_dense;

pub use energy::{
    energy_legendre, energy_mixed, functionals, hull_weights, mabuchi_substitution, Functionals, MixedEnergy,
};
pub use grid::{abreu_s, dual_f, Abreu, DualF, GridFn};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `φ(x) = max_k ⟨p_k, x⟩ − u_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxAffine {
    pub slopes: Vec<Vec<f64>>,
    pub heights: Vec<f64>,
}

impl MaxAffine {
    pub fn new(slopes: Vec<Vec<f64>>, heights: Vec<f64>) -> Result<MaxAffine> {
        let phi = MaxAffine { slopes, heights };
        phi.validate()?;
        Ok(phi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slopes.is_empty() || self.slopes.len() != self.heights.len() {
            return Err(Error::Invalid("need at least one piece and as many heights as slopes".into()));
        }
        let n = self.slopes[0].len();
        if n == 0 || self.slopes.iter().any(|p| p.len() != n) {
            return Err(Error::Invalid("slopes must share a positive dimension".into()));
        }
        if self.slopes.iter().flatten().chain(&self.heights).any(|x| !x.is_finite()) {
            return Err(Error::Invalid("slopes and heights must be finite".into()));
        }
        Ok(())
    }

    /// Support function `φ_P`: vertex slopes with zero heights.
    pub fn support(p: &Polytope) -> MaxAffine {
        let slopes = p.vertices_f64();
        let heights = vec![0.0; slopes.len()];
        MaxAffine { slopes, heights }
    }

    pub fn from_json(text: &str) -> Result<MaxAffine> {
        let phi: MaxAffine = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        phi.validate()?;
        Ok(phi)
    }

    pub fn dim(&self) -> usize {
        self.slopes[0].len()
    }

    pub fn len(&self) -> usize {
        self.slopes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        laguerre::eval_max(&self.slopes, &self.heights, x).0
    }

    /// `φ + c`.
    pub fn add_constant(&self, c: f64) -> MaxAffine {
        MaxAffine { slopes: self.slopes.clone(), heights: self.heights.iter().map(|u| u - c).collect() }
    }

    /// `x ↦ φ(x − v)`, i.e. heights `u_k + ⟨v, p_k⟩`.
    pub fn translate(&self, v: &[f64]) -> MaxAffine {
        let heights = self.heights.iter().zip(&self.slopes).map(|(u, p)| u + dot(v, p)).collect();
        MaxAffine { slopes: self.slopes.clone(), heights }
    }

    /// Flags pieces whose lifted slope is a vertex of the lower hull.
    pub fn active(&self) -> Result<Vec<bool>> {
        Ok(subdivision(self)?.active)
    }
}

/// Groups numerically identical slopes. Returns the representative of each piece, which is
/// the lowest-height piece among its duplicates.
pub fn slope_representatives(slopes: &[Vec<f64>], heights: &[f64]) -> Vec<usize> {
    let scale = 1.0 + slopes.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-13 * scale;
    let mut idx: Vec<usize> = (0..slopes.len()).collect();
    idx.sort_by(|&a, &b| slopes[a][0].total_cmp(&slopes[b][0]).then(a.cmp(&b)));
    let mut rep: Vec<usize> = (0..slopes.len()).collect();
    for (pos, &i) in idx.iter().enumerate() {
        for &j in idx[..pos].iter().rev() {
            if slopes[i][0] - slopes[j][0] > tol {
                break;
            }
            if slopes[i].iter().zip(&slopes[j]).all(|(a, b)| (a - b).abs() <= tol) {
                rep[i] = rep[j];
                break;
            }
        }
    }
    // move each group's representative to its lowest member
    let mut best: Vec<usize> = (0..slopes.len()).collect();
    for i in 0..slopes.len() {
        let r = rep[i];
        if heights[i] < heights[best[r]] {
            best[r] = i;
        }
    }
    (0..slopes.len()).map(|i| best[rep[i]]).collect()
}

/// Lower-hull structure of a max-affine function.
#[derive(Debug, Clone)]
pub struct Subdivision {
    /// Pieces whose lifted slope is a vertex of the lower hull.
    pub active: Vec<bool>,
    /// Lower-hull faces as piece indices, counter-clockwise (increasing slope in 1D).
    pub faces: Vec<Vec<usize>>,
    /// Vertex of the subdivision of ℝⁿ dual to each face.
    pub vertices: Vec<Vec<f64>>,
}

impl Subdivision {
    /// Simplices of the fan triangulation of every face.
    pub fn simplices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for f in &self.faces {
            if f.len() == 2 {
                out.push(f.clone());
            } else {
                for t in 1..f.len() - 1 {
                    out.push(vec![f[0], f[t], f[t + 1]]);
                }
            }
        }
        out
    }
}

fn p2(p: &[f64]) -> P2 {
    [p[0], p[1]]
}

/// Computes the lower hull of `{(p_k, u_k)}` and the dual vertices. In the plane the faces
/// are read off the power diagram: the pieces tied at a diagram vertex span one face.
pub fn subdivision(phi: &MaxAffine) -> Result<Subdivision> {
    phi.validate()?;
    let reps = slope_representatives(&phi.slopes, &phi.heights);
    let uniq: Vec<usize> = (0..phi.len()).filter(|&i| reps[i] == i).collect();
    let slopes: Vec<Vec<f64>> = uniq.iter().map(|&i| phi.slopes[i].clone()).collect();
    let heights: Vec<f64> = uniq.iter().map(|&i| phi.heights[i]).collect();
    let mut active = vec![false; phi.len()];
    match phi.dim() {
        1 => {
            let s: Vec<f64> = slopes.iter().map(|p| p[0]).collect();
            let hull = lower_hull_1d(&s, &heights);
            if hull.len() < 2 {
                return Err(Error::DegenerateHull("fewer than two distinct slopes".into()));
            }
            let mut faces = Vec::new();
            let mut vertices = Vec::new();
            for w in hull.windows(2) {
                faces.push(vec![uniq[w[0]], uniq[w[1]]]);
                vertices.push(vec![(heights[w[1]] - heights[w[0]]) / (s[w[1]] - s[w[0]])]);
            }
            for &h in &hull {
                active[uniq[h]] = true;
            }
            Ok(Subdivision { active, faces, vertices })
        }
        2 => subdivision_2d(phi, &uniq, &slopes, &heights, active),
        d => Err(Error::Dimension(d)),
    }
}

fn subdivision_2d(
    phi: &MaxAffine,
    uniq: &[usize],
    slopes: &[Vec<f64>],
    heights: &[f64],
    mut active: Vec<bool>,
) -> Result<Subdivision> {
    let pts: Vec<P2> = slopes.iter().map(|p| p2(p)).collect();
    if convex_hull(&pts).len() < 3 {
        return Err(Error::DegenerateHull("slopes are collinear".into()));
    }
    let cells = diagram_2d(&pts, heights)?;
    let pmax = pts.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let umax = heights.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for cell in cells.iter().flatten() {
        for x in cell.region.vertices() {
            let vals: Vec<f64> = pts.iter().zip(heights).map(|(p, u)| p[0] * x[0] + p[1] * x[1] - u).collect();
            let top = vals.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
            let tol = 1e-10 * (1.0 + top.abs() + umax + pmax * x[0].abs().max(x[1].abs()));
            let tied: Vec<usize> = (0..pts.len()).filter(|&j| vals[j] >= top - tol).collect();
            if tied.len() >= 3 && !sets.contains(&tied) {
                sets.push(tied);
            }
        }
    }
    let maximal: Vec<Vec<usize>> = sets
        .iter()
        .filter(|s| !sets.iter().any(|t| t.len() > s.len() && s.iter().all(|i| t.contains(i))))
        .cloned()
        .collect();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for set in maximal {
        let local: Vec<P2> = set.iter().map(|&j| pts[j]).collect();
        let hull = convex_hull(&local);
        if hull.len() < 3 {
            continue;
        }
        faces.push(hull.iter().map(|&h| set[h]).collect());
    }
    faces.sort();
    let face_area: f64 = faces.iter().map(|f| polygon_area(&f.iter().map(|&j| pts[j]).collect::<Vec<_>>())).sum();
    let total_area = polygon_area(&convex_hull(&pts).iter().map(|&j| pts[j]).collect::<Vec<_>>());
    if (face_area - total_area).abs() > 1e-9 * total_area {
        return Err(Error::DegenerateHull(format!(
            "hull faces cover area {face_area} of slope hull area {total_area}"
        )));
    }
    let mut vertices = Vec::with_capacity(faces.len());
    for f in &faces {
        // the dual vertex solves ⟨p_j, x⟩ − c = u_j on three face corners
        let rows: Vec<Vec<f64>> = f[..3].iter().map(|&j| vec![pts[j][0], pts[j][1], -1.0]).collect();
        let rhs: Vec<f64> = f[..3].iter().map(|&j| heights[j]).collect();
        let sol = solve_dense(rows, rhs).ok_or_else(|| Error::DegenerateHull("flat hull face".into()))?;
        vertices.push(vec![sol[0], sol[1]]);
    }
    let faces: Vec<Vec<usize>> = faces.into_iter().map(|f| f.into_iter().map(|j| uniq[j]).collect()).collect();
    for f in &faces {
        for &j in f {
            active[j] = true;
        }
    }
    debug_assert_eq!(phi.len(), active.len());
    Ok(Subdivision { active, faces, vertices })
}

/// Piecewise-linear function on a simplicial decomposition of a polytope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLonP {
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub simplices: Vec<Vec<usize>>,
}

/// Barycentric coordinates of `p` in the simplex with vertices `s`.
fn barycentric(s: &[&Vec<f64>], p: &[f64]) -> Option<Vec<f64>> {
    let n = p.len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| (1..=n).map(|j| s[j][i] - s[0][i]).collect()).collect();
    let rhs: Vec<f64> = (0..n).map(|i| p[i] - s[0][i]).collect();
    let l = solve_dense(rows, rhs)?;
    let l0 = 1.0 - l.iter().sum::<f64>();
    Some(std::iter::once(l0).chain(l).collect())
}

fn simplex_volume_f64(s: &[&Vec<f64>]) -> f64 {
    match s.len() {
        2 => (s[1][0] - s[0][0]).abs(),
        3 => 0.5 * cross2([s[1][0] - s[0][0], s[1][1] - s[0][1]], [s[2][0] - s[0][0], s[2][1] - s[0][1]]).abs(),
        _ => 0.0,
    }
}

impl PLonP {
    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, |p| p.len())
    }

    /// Value at `p`; `+∞` outside the decomposition.
    pub fn eval(&self, p: &[f64]) -> f64 {
        for s in &self.simplices {
            let verts: Vec<&Vec<f64>> = s.iter().map(|&i| &self.nodes[i]).collect();
            if let Some(l) = barycentric(&verts, p) {
                if l.iter().all(|x| *x >= -1e-12) {
                    return s.iter().zip(&l).map(|(&i, li)| li * self.values[i]).sum();
                }
            }
        }
        f64::INFINITY
    }

    /// `∫ λ_k e^{⟨a,p⟩} dp` for every node, with `λ_k` the hat functions of the decomposition.
    pub fn hat_weights(&self, a: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        for s in &self.simplices {
            let verts: Vec<&Vec<f64>> = s.iter().map(|&i| &self.nodes[i]).collect();
            let pts: Vec<Vec<f64>> = verts.iter().map(|v| v.to_vec()).collect();
            for (&i, h) in s.iter().zip(hat_integrals(&pts, simplex_volume_f64(&verts), a)) {
                w[i] += h;
            }
        }
        w
    }

    /// `∫ u e^{⟨a,p⟩} dp` over the decomposition.
    pub fn integrate(&self, a: &[f64]) -> f64 {
        dot(&self.hat_weights(a), &self.values)
    }

    pub fn volume(&self) -> f64 {
        self.simplices.iter().map(|s| simplex_volume_f64(&s.iter().map(|&i| &self.nodes[i]).collect::<Vec<_>>())).sum()
    }

    /// `u*(x) = max_k ⟨p_k, x⟩ − u(p_k)`, exact for convex `u`.
    pub fn legendre(&self) -> MaxAffine {
        MaxAffine { slopes: self.nodes.clone(), heights: self.values.clone() }
    }
}

/// The Legendre transform `φ*` on the slope hull: hull-vertex slopes with their heights,
/// triangulated along the lower-hull faces.
pub fn legendre(phi: &MaxAffine) -> Result<PLonP> {
    let sub = subdivision(phi)?;
    let index: Vec<Option<usize>> = {
        let mut next = 0;
        sub.active
            .iter()
            .map(|&a| {
                a.then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    };
    let nodes = (0..phi.len()).filter(|&k| sub.active[k]).map(|k| phi.slopes[k].clone()).collect();
    let values = (0..phi.len()).filter(|&k| sub.active[k]).map(|k| phi.heights[k]).collect();
    let simplices = sub
        .simplices()
        .into_iter()
        .map(|s| s.into_iter().map(|k| index[k].expect("face vertices are active")).collect())
        .collect();
    Ok(PLonP { nodes, values, simplices })
}

/// Atomic measure `Σ m_j δ_{x_j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomicMeasure {
    pub points: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
}

impl AtomicMeasure {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }
}

fn face_points(phi: &MaxAffine, f: &[usize]) -> Vec<Vec<f64>> {
    f.iter().map(|&k| phi.slopes[k].clone()).collect()
}

/// Monge-Ampère measure with density `g = e^{⟨a,p⟩}` on the gradient side: an atom at each
/// subdivision vertex with mass `n! ∫_{face} g dp`.
pub fn ma_measure_weighted(phi: &MaxAffine, a: &[f64]) -> Result<AtomicMeasure> {
    let sub = subdivision(phi)?;
    let n = phi.dim();
    if a.len() != n {
        return Err(Error::Invalid(format!("tilt has length {}, expected {n}", a.len())));
    }
    let nf = factorial(n) as f64;
    let mut masses = Vec::with_capacity(sub.faces.len());
    for f in &sub.faces {
        let pl = PLonP {
            nodes: face_points(phi, f),
            values: vec![1.0; f.len()],
            simplices: if f.len() == 2 {
                vec![vec![0, 1]]
            } else {
                (1..f.len() - 1).map(|t| vec![0, t, t + 1]).collect()
            },
        };
        masses.push(nf * pl.integrate(a));
    }
    Ok(AtomicMeasure { points: sub.vertices, masses })
}

/// Alexandrov Monge-Ampère measure: an atom at each subdivision vertex with mass
/// `n!·vol(face)`.
pub fn ma_measure(phi: &MaxAffine) -> Result<AtomicMeasure> {
    ma_measure_weighted(phi, &vec![0.0; phi.dim()])
}

fn exact_area(pts: &[Vec<Rational>]) -> Rational {
    let m = pts.len();
    let mut s = Rational::zero();
    for i in 0..m {
        let (a, b) = (&pts[i], &pts[(i + 1) % m]);
        s += &a[0] * &b[1] - &a[1] * &b[0];
    }
    (s / Rational::from_integer(2.into())).abs()
}

/// Exact total Monge-Ampère mass `Σ_faces n!·vol(face)` and `n!·vol(conv{active slopes})`,
/// computed in rationals from the binary values of the slopes.
pub fn ma_total_exact(phi: &MaxAffine) -> Result<(Rational, Rational)> {
    let sub = subdivision(phi)?;
    let q = |k: usize| -> Vec<Rational> { phi.slopes[k].iter().map(|x| from_f64(*x)).collect() };
    let nf = Rational::from_integer((factorial(phi.dim()) as i64).into());
    match phi.dim() {
        1 => {
            let total = sub.faces.iter().fold(Rational::zero(), |s, f| s + (&q(f[1])[0] - &q(f[0])[0]).abs());
            let act: Vec<usize> = (0..phi.len()).filter(|&k| sub.active[k]).collect();
            let lo = act.iter().map(|&k| q(k)[0].clone()).min().expect("active pieces exist");
            let hi = act.iter().map(|&k| q(k)[0].clone()).max().expect("active pieces exist");
            Ok((&nf * total, nf * (hi - lo)))
        }
        _ => {
            let total = sub
                .faces
                .iter()
                .fold(Rational::zero(), |s, f| s + exact_area(&f.iter().map(|&k| q(k)).collect::<Vec<_>>()));
            let act: Vec<usize> = (0..phi.len()).filter(|&k| sub.active[k]).collect();
            let pts: Vec<P2> = act.iter().map(|&k| p2(&phi.slopes[k])).collect();
            let hull: Vec<Vec<Rational>> = convex_hull(&pts).iter().map(|&h| q(act[h])).collect();
            Ok((&nf * total, nf * exact_area(&hull)))
        }
    }
}

/// Minimizes `φ` over its subdivision vertices and returns `x ↦ φ(x + x̂) − φ(x̂)` together
/// with the minimizer `x̂`.
pub fn normalize(phi: &MaxAffine) -> Result<(MaxAffine, Vec<f64>)> {
    let sub = subdivision(phi)?;
    let act: Vec<usize> = (0..phi.len()).filter(|&k| sub.active[k]).collect();
    let inside = match phi.dim() {
        1 => {
            let lo = act.iter().map(|&k| phi.slopes[k][0]).fold(f64::INFINITY, f64::min);
            let hi = act.iter().map(|&k| phi.slopes[k][0]).fold(f64::NEG_INFINITY, f64::max);
            lo < 0.0 && hi > 0.0
        }
        _ => {
            let pts: Vec<P2> = act.iter().map(|&k| p2(&phi.slopes[k])).collect();
            let poly: Vec<P2> = convex_hull(&pts).iter().map(|&h| pts[h]).collect();
            strictly_inside(&poly, [0.0, 0.0], 1e-12)
        }
    };
    if !inside {
        return Err(Error::UnboundedBelow);
    }
    let mut best: Option<(f64, f64, &Vec<f64>)> = None;
    for x in &sub.vertices {
        let v = phi.eval(x);
        let r = dot(x, x);
        let better = match best {
            None => true,
            Some((bv, br, _)) => v < bv - 1e-14 * (1.0 + bv.abs()) || (v <= bv + 1e-14 * (1.0 + bv.abs()) && r < br),
        };
        if better {
            best = Some((v, r, x));
        }
    }
    let (v, _, x) = best.ok_or_else(|| Error::DegenerateHull("no subdivision vertex".into()))?;
    let heights = phi.heights.iter().zip(&phi.slopes).map(|(u, p)| u - dot(p, x) + v).collect();
    Ok((MaxAffine { slopes: phi.slopes.clone(), heights }, x.clone()))
}

/// Geodesic between two functions with the same slopes: heights `(1−t)u₀ + t u₁`.
pub fn geodesic(phi0: &MaxAffine, phi1: &MaxAffine, t: f64) -> Result<MaxAffine> {
    if phi0.slopes != phi1.slopes {
        return Err(Error::SlopeMismatch);
    }
    let heights = phi0.heights.iter().zip(&phi1.heights).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    Ok(MaxAffine { slopes: phi0.slopes.clone(), heights })
}

/// Lower convex envelope of the node graph, on the same nodes and triangulated along the
/// envelope's faces.
pub fn convexify(u: &PLonP) -> Result<PLonP> {
    let phi = u.legendre();
    phi.validate()?;
    let sub = subdivision(&phi)?;
    let simplices = sub.simplices();
    let hull = PLonP { nodes: u.nodes.clone(), values: u.values.clone(), simplices: simplices.clone() };
    let values = u
        .nodes
        .iter()
        .enumerate()
        .map(|(k, p)| if sub.active[k] { u.values[k] } else { hull.eval(p).min(u.values[k]) })
        .collect();
    Ok(PLonP { nodes: u.nodes.clone(), values, simplices })
}

/// `true` when every slope lies in `P` and the slope hull has the volume of `P`.
pub fn fills(phi: &MaxAffine, p: &Polytope) -> Result<bool> {
    if phi.dim() != p.dim {
        return Err(Error::Invalid(format!("function has dimension {}, polytope {}", phi.dim(), p.dim)));
    }
    if !phi.slopes.iter().all(|s| p.contains_f64(s, 1e-12)) {
        return Ok(false);
    }
    let vol = legendre(phi)?.volume();
    let target = crate::rational::to_f64(&p.volume());
    Ok((vol - target).abs() <= 1e-10 * target)
}
