//! Discrete Ding-type objectives over node heights and their exact gradients.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::expint::{self, cross2, P2};
use crate::geometry::{Line, Region2, RegionError, TaggedPolygon};
use crate::laguerre::{self, Cell2, Diagram};
use crate::quadrature::{simplex_rule, SimplexRule};

use super::nodes::NodeSystem;

/// Probability density replacing `e^{-φ}` in the inhomogeneous equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Target {
    /// Centered isotropic Gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// `e^{-φ_P} / ∫ e^{-φ_P}`.
    SupportExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    Ke,
    Soliton,
    Twisted { r: f64 },
    Inhomogeneous { target: Target },
}

impl Mode {
    pub fn is_homogeneous(&self) -> bool {
        matches!(self, Mode::Ke | Mode::Soliton)
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Normalized cell masses: `m_k/M`, `I_k/I`, or `ν(C_k)`.
    pub masses: Vec<f64>,
    /// First moments of the normalized cell measures.
    pub moments: Vec<Vec<f64>>,
    /// Logarithm of the total unnormalized mass (`log M`, `log I`), zero for a fixed density.
    pub log_total: f64,
    pub diagram: Diagram,
}

impl Evaluation {
    pub fn grad_inf(&self) -> f64 {
        self.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()))
    }
}

/// One region of integration with integrand `e^{⟨c,x⟩ + d}` belonging to cell `k`.
enum Piece {
    One { k: usize, lo: f64, hi: f64, c: f64, d: f64 },
    Two { k: usize, region: Region2, c: P2, d: f64 },
}

impl Piece {
    fn max_exponent(&self) -> f64 {
        match self {
            Piece::One { lo, hi, c, d, .. } => {
                [*lo, *hi].iter().filter(|x| x.is_finite()).map(|x| c * x + d).fold(f64::NEG_INFINITY, f64::max)
            }
            Piece::Two { region, c, d, .. } => {
                region.vertices().iter().map(|v| expint::dot2(*c, *v) + d).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    fn integrate(&self, shift: f64) -> (usize, f64, Vec<f64>) {
        match self {
            Piece::One { k, lo, hi, c, d } => {
                let (i, m) = expint::interval(*lo, *hi, *c, d - shift);
                (*k, i, vec![m])
            }
            Piece::Two { k, region, c, d } => {
                let (i, m) = region.integrate_exp(*c, d - shift);
                (*k, i, m.to_vec())
            }
        }
    }
}

/// Sums the pieces into per-cell masses and first moments, normalized by the total, and
/// returns `log` of the unnormalized total.
fn integrate_pieces(pieces: &[Piece], n: usize, dim: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64)> {
    let shift = pieces.iter().map(Piece::max_exponent).fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let mut masses = vec![0.0; n];
    let mut moments = vec![vec![0.0; dim]; n];
    for piece in pieces {
        let (k, i, m) = piece.integrate(shift);
        if i.is_nan() {
            return Err(Error::DegenerateHull(format!("cell {k} produced an undefined integral")));
        }
        masses[k] += i;
        for (a, b) in moments[k].iter_mut().zip(&m) {
            *a += b;
        }
    }
    let total: f64 = masses.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::NotFull);
    }
    for (m, mom) in masses.iter_mut().zip(moments.iter_mut()) {
        *m /= total;
        for x in mom.iter_mut() {
            *x /= total;
        }
    }
    Ok((masses, moments, shift + total.ln()))
}

/// Cell masses of `e^{-φ}` for `φ(x) = max_k ⟨p_k,x⟩ − u_k`.
#[derive(Debug, Clone)]
pub struct ExpMasses {
    /// `log ∫ e^{-φ} dx`.
    pub log_total: f64,
    /// `∫_{C_k} e^{-φ} / ∫ e^{-φ}`.
    pub masses: Vec<f64>,
    pub moments: Vec<Vec<f64>>,
    pub diagram: Diagram,
}

/// Exact cell masses of `e^{-φ}` for an arbitrary max-affine function with distinct slopes.
/// Fails with `NOT_FULL` when `e^{-φ}` is not integrable.
pub fn exp_masses(slopes: &[Vec<f64>], heights: &[f64]) -> Result<ExpMasses> {
    let diagram = laguerre::diagram(slopes, heights)?;
    let n = slopes.len();
    let dim = slopes[0].len();
    let mut pieces = Vec::new();
    match &diagram {
        Diagram::One(cells) => {
            for (k, iv) in cells.iter().enumerate() {
                if let Some(iv) = iv {
                    pieces.push(Piece::One { k, lo: iv.lo, hi: iv.hi, c: -slopes[k][0], d: heights[k] });
                }
            }
        }
        Diagram::Two(cells) => {
            for (k, cell) in cells.iter().enumerate() {
                if let Some(cell) = cell {
                    let c = [-slopes[k][0], -slopes[k][1]];
                    pieces.push(Piece::Two { k, region: cell.region.clone(), c, d: heights[k] });
                }
            }
        }
    }
    let (masses, moments, log_total) = integrate_pieces(&pieces, n, dim)?;
    Ok(ExpMasses { log_total, masses, moments, diagram })
}

pub struct Problem<'a> {
    pub ns: &'a NodeSystem,
    pub mode: Mode,
    /// Vertices of `P` in cyclic order.
    vertices: Vec<Vec<f64>>,
    log_z: f64,
    rule: SimplexRule,
    order: Option<Vec<Vec<u32>>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Problem<'a> {
    pub fn new(ns: &'a NodeSystem, mode: Mode) -> Result<Problem<'a>> {
        if ns.dim() > 2 {
            return Err(Error::Dimension(ns.dim()));
        }
        match mode {
            Mode::Twisted { r } if !(r > 0.0 && r < 1.0) => {
                return Err(Error::Invalid(format!("twisted mode needs 0 < r < 1, got {r}")))
            }
            Mode::Inhomogeneous { target: Target::Gaussian { sigma } } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(Error::Invalid(format!("gaussian target needs sigma > 0, got {sigma}")))
            }
            _ => {}
        }
        let mut prob = Problem {
            ns,
            mode,
            vertices: ns.polytope_vertices_ccw(),
            log_z: 0.0,
            rule: simplex_rule(2, 8),
            order: (ns.dim() == 2).then(|| {
                let s: Vec<P2> = ns.nodes.iter().map(|p| [p[0], p[1]]).collect();
                laguerre::neighbor_order(&s)
            }),
        };
        if let Mode::Inhomogeneous { target: Target::SupportExp } = mode {
            prob.log_z = prob.log_support_partition()?;
        }
        Ok(prob)
    }

    pub fn len(&self) -> usize {
        self.ns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ns.is_empty()
    }

    /// `log ∫ e^{-φ_P} dx`, summed over the normal cones of the vertices of `P`.
    fn log_support_partition(&self) -> Result<f64> {
        let n = self.ns.dim();
        let mut z = 0.0;
        if n == 1 {
            for v in &self.vertices {
                z += 1.0 / v[0].abs();
            }
            return Ok(z.ln());
        }
        for j in 0..self.vertices.len() {
            let mut poly = TaggedPolygon::square(1.0);
            for line in self.cone_lines(j, 0) {
                poly.clip(line);
            }
            poly.refine_vertices();
            let region = poly
                .to_region(|d| self.in_vertex_cone(j, d))
                .map_err(|e| Error::DegenerateHull(format!("normal cone {j}: {e:?}")))?;
            let vj = [self.vertices[j][0], self.vertices[j][1]];
            z += region.integrate_exp([-vj[0], -vj[1]], 0.0).0;
        }
        Ok(z.ln())
    }

    /// Half-planes `⟨v_i − v_j, x⟩ ≤ 0` for the neighbours `v_i` of vertex `j`.
    fn cone_lines(&self, j: usize, id_base: usize) -> [Line; 2] {
        let m = self.vertices.len();
        let v = &self.vertices;
        let mk = |i: usize| Line { n: [v[i][0] - v[j][0], v[i][1] - v[j][1]], c: 0.0, id: (id_base + j) as u32 };
        [mk((j + m - 1) % m), mk((j + 1) % m)]
    }

    fn in_vertex_cone(&self, j: usize, d: P2) -> bool {
        let m = self.vertices.len();
        let v = &self.vertices;
        [(j + m - 1) % m, (j + 1) % m].iter().all(|&i| {
            let e = [v[i][0] - v[j][0], v[i][1] - v[j][1]];
            expint::dot2(e, d) <= 1e-9 * (e[0].abs() + e[1].abs())
        })
    }

    /// Exponent coefficients `(c, d)` of the integrand on cell `k` intersected with the
    /// normal cone of vertex `j` (ignored in the homogeneous modes).
    fn exponent(&self, k: usize, j: usize, u: &[f64]) -> (Vec<f64>, f64) {
        let p = &self.ns.nodes[k];
        match self.mode {
            Mode::Ke | Mode::Soliton => (p.iter().map(|x| -x).collect(), u[k]),
            Mode::Twisted { r } => {
                let v = &self.vertices[j];
                (p.iter().zip(v).map(|(pk, vj)| -r * pk - (1.0 - r) * vj).collect(), r * u[k])
            }
            Mode::Inhomogeneous { .. } => (self.vertices[j].iter().map(|x| -x).collect(), -self.log_z),
        }
    }

    fn uses_cones(&self) -> bool {
        matches!(self.mode, Mode::Twisted { .. } | Mode::Inhomogeneous { target: Target::SupportExp })
    }

    pub fn diagram(&self, u: &[f64]) -> Result<Diagram> {
        if u.len() != self.ns.len() {
            return Err(Error::Invalid(format!("expected {} heights, got {}", self.ns.len(), u.len())));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("heights must be finite".into()));
        }
        laguerre::diagram_ordered(&self.ns.nodes, u, self.order.as_deref())
    }

    fn pieces_1d(&self, cells: &[Option<laguerre::Interval>], u: &[f64]) -> Vec<Piece> {
        let mut out = Vec::new();
        for (k, iv) in cells.iter().enumerate() {
            let Some(iv) = iv else { continue };
            if self.uses_cones() {
                let cones = [(f64::NEG_INFINITY, 0.0), (0.0, f64::INFINITY)];
                for (j, (clo, chi)) in cones.iter().enumerate() {
                    let lo = iv.lo.max(*clo);
                    let hi = iv.hi.min(*chi);
                    if hi > lo {
                        let (c, d) = self.exponent(k, j, u);
                        out.push(Piece::One { k, lo, hi, c: c[0], d });
                    }
                }
            } else {
                let (c, d) = self.exponent(k, 0, u);
                out.push(Piece::One { k, lo: iv.lo, hi: iv.hi, c: c[0], d });
            }
        }
        out
    }

    fn cone_piece(&self, cell: &Cell2, k: usize, j: usize) -> std::result::Result<Option<Region2>, RegionError> {
        let mut poly = cell.poly.clone();
        for line in self.cone_lines(j, self.ns.len()) {
            poly.clip(line);
            if poly.is_empty() {
                return Ok(None);
            }
        }
        poly.refine_vertices();
        if poly.is_empty() || poly.is_sliver() {
            return Ok(None);
        }
        let slopes: Vec<P2> = self.ns.nodes.iter().map(|p| [p[0], p[1]]).collect();
        poly.to_region(|d| laguerre::in_normal_cone(&slopes, k, d) && self.in_vertex_cone(j, d)).map(Some)
    }

    fn pieces_2d(&self, cells: &[Option<Cell2>], u: &[f64]) -> Result<Vec<Piece>> {
        let mut out = Vec::new();
        let slopes: Vec<P2> = self.ns.nodes.iter().map(|p| [p[0], p[1]]).collect();
        let all: Vec<u32> = (0..slopes.len() as u32).collect();
        for (k, cell) in cells.iter().enumerate() {
            let Some(cell) = cell else { continue };
            if !self.uses_cones() {
                let (c, d) = self.exponent(k, 0, u);
                out.push(Piece::Two { k, region: cell.region.clone(), c: [c[0], c[1]], d });
                continue;
            }
            for j in 0..self.vertices.len() {
                let mut current = cell.clone();
                let mut attempts = 0;
                let region = loop {
                    match self.cone_piece(&current, k, j) {
                        Ok(r) => break r,
                        Err(RegionError::BoxTooSmall) if attempts < 8 => {
                            attempts += 1;
                            let l = current.poly.half_width * 64.0;
                            current = laguerre::cell_2d(&slopes, u, k, &all, l)?
                                .ok_or_else(|| Error::DegenerateHull(format!("cell {k} vanished on enlargement")))?;
                        }
                        Err(e) => return Err(Error::DegenerateHull(format!("cell {k} in cone {j}: {e:?}"))),
                    }
                };
                if let Some(region) = region {
                    let (c, d) = self.exponent(k, j, u);
                    out.push(Piece::Two { k, region, c: [c[0], c[1]], d });
                }
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        let diagram = self.diagram(u)?;
        let n = self.ns.len();
        let dim = self.ns.dim();
        let (mut masses, mut moments) = if let Mode::Inhomogeneous { target: Target::Gaussian { sigma } } = self.mode {
            self.gaussian_masses(&diagram, u, sigma)?
        } else {
            let pieces = match &diagram {
                Diagram::One(cells) => self.pieces_1d(cells, u),
                Diagram::Two(cells) => self.pieces_2d(cells, u)?,
            };
            let (masses, moments, log_total) = integrate_pieces(&pieces, n, dim)?;
            let ev = self.finish(u, masses, moments, log_total, diagram);
            return Ok(ev);
        };
        let total: f64 = masses.iter().sum();
        for (m, mom) in masses.iter_mut().zip(moments.iter_mut()) {
            *m /= total;
            for x in mom.iter_mut() {
                *x /= total;
            }
        }
        Ok(self.finish(u, masses, moments, 0.0, diagram))
    }

    fn finish(
        &self,
        u: &[f64],
        masses: Vec<f64>,
        moments: Vec<Vec<f64>>,
        log_total: f64,
        diagram: Diagram,
    ) -> Evaluation {
        let w = &self.ns.weights;
        let big_w = self.ns.total;
        let linear = -dot(w, u) / big_w;
        let value = match self.mode {
            Mode::Ke | Mode::Soliton => linear + log_total,
            Mode::Twisted { r } => linear + log_total / r,
            Mode::Inhomogeneous { .. } => {
                let mut phi_nu = 0.0;
                for k in 0..u.len() {
                    phi_nu += dot(&self.ns.nodes[k], &moments[k]) - u[k] * masses[k];
                }
                linear - phi_nu
            }
        };
        let grad = masses.iter().zip(w).map(|(m, wk)| m - wk / big_w).collect();
        Evaluation { value, grad, masses, moments, log_total, diagram }
    }

    fn gaussian_masses(&self, diagram: &Diagram, u: &[f64], sigma: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.ns.len();
        let mut masses = vec![0.0; n];
        let mut moments = vec![vec![0.0; self.ns.dim()]; n];
        match diagram {
            Diagram::One(cells) => {
                let cdf = |x: f64| 0.5 * erfc(-x / (sigma * std::f64::consts::SQRT_2));
                let dens = |x: f64| {
                    if x.is_finite() {
                        (-x * x / (2.0 * sigma * sigma)).exp()
                    } else {
                        0.0
                    }
                };
                let c = sigma / (2.0 * std::f64::consts::PI).sqrt();
                for (k, iv) in cells.iter().enumerate() {
                    if let Some(iv) = iv {
                        masses[k] = cdf(iv.hi) - cdf(iv.lo);
                        moments[k][0] = c * (dens(iv.lo) - dens(iv.hi));
                    }
                }
            }
            Diagram::Two(_) => {
                let half = 8.0 * sigma;
                let slopes: Vec<P2> = self.ns.nodes.iter().map(|p| [p[0], p[1]]).collect();
                let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma * sigma);
                for k in 0..n {
                    let mut poly = TaggedPolygon::square(half);
                    for j in 0..n {
                        if j == k {
                            continue;
                        }
                        poly.clip(Line {
                            n: [slopes[j][0] - slopes[k][0], slopes[j][1] - slopes[k][1]],
                            c: u[j] - u[k],
                            id: j as u32,
                        });
                        if poly.is_empty() {
                            break;
                        }
                    }
                    if poly.is_empty() {
                        continue;
                    }
                    let v = &poly.verts;
                    for t in 1..v.len() - 1 {
                        let (m, mom) = self.gaussian_triangle([v[0], v[t], v[t + 1]], sigma, 0);
                        masses[k] += norm * m;
                        moments[k][0] += norm * mom[0];
                        moments[k][1] += norm * mom[1];
                    }
                }
            }
        }
        Ok((masses, moments))
    }

    fn gaussian_triangle(&self, t: [P2; 3], sigma: f64, depth: usize) -> (f64, P2) {
        let diam = (0..3)
            .map(|i| {
                let a = t[i];
                let b = t[(i + 1) % 3];
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .fold(0.0f64, f64::max);
        if diam > 0.5 * sigma && depth < 12 {
            let mid = |a: P2, b: P2| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let (ab, bc, ca) = (mid(t[0], t[1]), mid(t[1], t[2]), mid(t[2], t[0]));
            let mut m = 0.0;
            let mut mom = [0.0; 2];
            for s in [[t[0], ab, ca], [ab, t[1], bc], [ca, bc, t[2]], [ab, bc, ca]] {
                let (a, b) = self.gaussian_triangle(s, sigma, depth + 1);
                m += a;
                mom[0] += b[0];
                mom[1] += b[1];
            }
            return (m, mom);
        }
        let area = 0.5 * cross2(expint::sub2(t[1], t[0]), expint::sub2(t[2], t[0])).abs();
        let pts: Vec<Vec<f64>> = t.iter().map(|p| p.to_vec()).collect();
        let s2 = 2.0 * sigma * sigma;
        let g = |x: &[f64]| (-(x[0] * x[0] + x[1] * x[1]) / s2).exp();
        let m = self.rule.integrate(&pts, area, g);
        let mx = self.rule.integrate(&pts, area, |x| x[0] * g(x));
        let my = self.rule.integrate(&pts, area, |x| x[1] * g(x));
        (m, [mx, my])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::Polytope;
    use crate::rational::int;
    use crate::solver::nodes::assemble;

    fn segment() -> Polytope {
        Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(1))]).unwrap()
    }

    fn square() -> Polytope {
        let one = int(1);
        Polytope::from_hrep_i64(&[
            (&[1, 0], one.clone()),
            (&[-1, 0], one.clone()),
            (&[0, 1], one.clone()),
            (&[0, -1], one),
        ])
        .unwrap()
    }

    #[test]
    fn v_shape_masses() {
        let ns = assemble(&segment(), &[0.0], 0).unwrap();
        let prob = Problem::new(&ns, Mode::Ke).unwrap();
        let e = prob.evaluate(&[0.0, 0.0]).unwrap();
        assert!((e.log_total - 2f64.ln()).abs() < 1e-15);
        assert_eq!(e.masses, vec![0.5, 0.5]);
        assert!(e.grad_inf() < 1e-15);
    }

    #[test]
    fn square_corner_masses_equal() {
        let ns = assemble(&square(), &[0.0, 0.0], 0).unwrap();
        let prob = Problem::new(&ns, Mode::Ke).unwrap();
        let e = prob.evaluate(&[0.0; 4]).unwrap();
        // ∫ e^{-|x|_1} over the plane = 4
        assert!((e.log_total - 4f64.ln()).abs() < 1e-14);
        for m in &e.masses {
            assert!((m - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn twisted_and_support_targets_on_symmetric_data() {
        let ns = assemble(&square(), &[0.0, 0.0], 1).unwrap();
        let u: Vec<f64> = vec![0.0; ns.len()];
        // φ_u = φ_P at zero heights, so every twisted integrand equals e^{-φ_P}
        let tw = Problem::new(&ns, Mode::Twisted { r: 0.4 }).unwrap().evaluate(&u).unwrap();
        let ke = Problem::new(&ns, Mode::Ke).unwrap().evaluate(&u).unwrap();
        assert!((tw.log_total - ke.log_total).abs() < 1e-13);
        for (a, b) in tw.masses.iter().zip(&ke.masses) {
            assert!((a - b).abs() < 1e-14);
        }
        let inh = Problem::new(&ns, Mode::Inhomogeneous { target: Target::SupportExp }).unwrap().evaluate(&u).unwrap();
        for (a, b) in inh.masses.iter().zip(&ke.masses) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gaussian_target_total_mass() {
        let ns = assemble(&square(), &[0.0, 0.0], 1).unwrap();
        let prob = Problem::new(&ns, Mode::Inhomogeneous { target: Target::Gaussian { sigma: 0.7 } }).unwrap();
        let u: Vec<f64> = (0..ns.len()).map(|k| 0.1 * (k as f64).sin()).collect();
        let e = prob.evaluate(&u).unwrap();
        assert!((e.masses.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // the four corner cells share the quadrant masses at zero heights
        let e0 = prob.evaluate(&vec![0.0; ns.len()]).unwrap();
        let corner: f64 = e0
            .masses
            .iter()
            .zip(&ns.nodes)
            .filter(|(_, p)| p[0].abs() == 1.0 && p[1].abs() == 1.0)
            .map(|(m, _)| m)
            .sum();
        assert!((corner - 1.0).abs() < 1e-12, "{corner}");
    }
}
