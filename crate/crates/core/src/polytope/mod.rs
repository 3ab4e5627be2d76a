//! Exact rational convex polytopes `P = {p : ⟨l_F, p⟩ ≥ -a_F}` containing the origin.

pub mod boundary;
pub mod catalog;
pub mod region;

pub use boundary::{boundary_functional, facet_data, sigma_total, BoundaryValue, FacetData, Measure};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::quadrature::simplex_rule;
use crate::rational::{self, dot_int, format_rational, to_f64, to_f64_vec, RVec, Rational};
use region::{cyclic_order_2d, face_simplices, simplex_volume, Halfspace, Region};

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    /// Primitive inward integer normal `l_F`.
    pub normal: Vec<BigInt>,
    /// Offset `a_F > 0`.
    pub a: Rational,
    /// Indices into `Polytope::vertices` of the vertices on this facet.
    pub vertices: Vec<usize>,
}

impl Facet {
    pub fn normal_q(&self) -> RVec {
        self.normal.iter().map(|x| Rational::from_integer(x.clone())).collect()
    }

    pub fn normal_f64(&self) -> Vec<f64> {
        rational::int_vec_f64(&self.normal)
    }

    pub fn norm(&self) -> f64 {
        self.normal_f64().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    pub name: Option<String>,
    pub dim: usize,
    pub facets: Vec<Facet>,
    /// Extreme points in lexicographic order.
    pub vertices: Vec<RVec>,
    /// Extra triangulation point (the vertex centroid) in dimension 3.
    pub apex: Option<RVec>,
    /// Simplices as indices into [`Polytope::points`].
    pub triangulation: Vec<Vec<usize>>,
}

/// Exact and weighted moments of a polytope.
#[derive(Debug, Clone)]
pub struct Measures {
    pub volume: Rational,
    pub barycenter: RVec,
    pub weighted: Option<WeightedMoments>,
}

/// Moments of `g(p) = e^{⟨a,p⟩}`: `V_g = ∫g`, `b_g = ∫p g`, `cov_g = ∫p pᵀ g`.
#[derive(Debug, Clone)]
pub struct WeightedMoments {
    pub v: f64,
    pub b: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub error_bound: f64,
}

pub const DEFAULT_ORDER: usize = 16;

#[derive(Debug, Clone)]
pub enum Transform {
    Scale(Rational),
    Recenter(RVec),
}

impl Polytope {
    pub fn from_hrep(facets: &[(Vec<BigInt>, Rational)]) -> Result<Polytope> {
        let Some(first) = facets.first() else {
            return Err(Error::EmptyOrLowDim);
        };
        let dim = first.0.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        for (l, a) in facets {
            if l.len() != dim {
                return Err(Error::Invalid(format!("normal {l:?} has wrong length")));
            }
            let g = rational::gcd_all(l);
            if g.is_zero() {
                return Err(Error::Invalid("zero facet normal".into()));
            }
            if g != BigInt::from(1) {
                let reduced: Vec<BigInt> = l.iter().map(|x| x / &g).collect();
                return Err(Error::NonPrimitiveNormal { given: format!("{l:?}"), reduced: format!("{reduced:?}") });
            }
            if !a.is_positive() {
                return Err(Error::OriginOutside(format!("a_F = {} for normal {l:?}", format_rational(a))));
            }
        }
        let hs: Vec<Halfspace> = facets
            .iter()
            .map(|(l, a)| Halfspace {
                normal: l.iter().map(|x| Rational::from_integer(x.clone())).collect(),
                offset: a.clone(),
            })
            .collect();
        if !region::is_bounded(dim, &hs) {
            return Err(Error::Unbounded);
        }
        let reg = Region::new(dim, &hs).ok_or(Error::EmptyOrLowDim)?;
        let mut kept: Vec<Facet> = Vec::new();
        for (ci, (l, a)) in facets.iter().enumerate() {
            let Some(rf) = reg.facets.iter().find(|f| f.constraint == ci) else { continue };
            if kept.iter().any(|k| k.vertices == rf.vertices) {
                continue;
            }
            kept.push(Facet { normal: l.clone(), a: a.clone(), vertices: rf.vertices.clone() });
        }
        let vertices = reg.vertices.clone();
        let (apex, triangulation) = triangulate(dim, &vertices, &kept);
        Ok(Polytope { name: None, dim, facets: kept, vertices, apex, triangulation })
    }

    /// Convenience constructor with small integer normals and rational offsets.
    pub fn from_hrep_i64(facets: &[(&[i64], Rational)]) -> Result<Polytope> {
        let f: Vec<(Vec<BigInt>, Rational)> =
            facets.iter().map(|(l, a)| (l.iter().map(|&x| BigInt::from(x)).collect(), a.clone())).collect();
        Polytope::from_hrep(&f)
    }

    pub fn from_vrep(points: &[RVec]) -> Result<Polytope> {
        let Some(first) = points.first() else {
            return Err(Error::LowDim);
        };
        let dim = first.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Dimension(dim));
        }
        if points.iter().any(|p| p.len() != dim) || rational::affine_rank(points) < dim {
            return Err(Error::LowDim);
        }
        let mut facets: Vec<(Vec<BigInt>, Rational)> = Vec::new();
        let mut push = |normal: RVec, on: &RVec| -> Result<()> {
            let l = rational::primitive(&normal);
            let a = -dot_int(&l, on);
            if !a.is_positive() {
                return Err(Error::OriginOutside(format!(
                    "supporting hyperplane {l:?} passes at offset {}",
                    format_rational(&a)
                )));
            }
            if !facets.iter().any(|(m, b)| *m == l && *b == a) {
                facets.push((l, a));
            }
            Ok(())
        };
        match dim {
            1 => {
                let lo = points.iter().min().unwrap().clone();
                let hi = points.iter().max().unwrap().clone();
                push(vec![rational::int(1)], &lo)?;
                push(vec![rational::int(-1)], &hi)?;
            }
            2 => {
                let order = cyclic_order_2d(points);
                for i in 0..order.len() {
                    let p = &points[order[i]];
                    let q = &points[order[(i + 1) % order.len()]];
                    let e = rational::sub(q, p);
                    push(vec![-e[1].clone(), e[0].clone()], p)?;
                }
            }
            _ => {
                let m = points.len();
                let mut cands: Vec<(Vec<BigInt>, RVec)> = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        for k in j + 1..m {
                            let nrm = region::cross3(
                                &rational::sub(&points[j], &points[i]),
                                &rational::sub(&points[k], &points[i]),
                            );
                            if nrm.iter().all(|x| x.is_zero()) {
                                continue;
                            }
                            let side: Vec<Rational> =
                                points.iter().map(|p| rational::dot(&nrm, &rational::sub(p, &points[i]))).collect();
                            let sign = if side.iter().all(|s| !s.is_negative()) {
                                rational::int(1)
                            } else if side.iter().all(|s| !s.is_positive()) {
                                rational::int(-1)
                            } else {
                                continue;
                            };
                            let nv = rational::scale(&nrm, &sign);
                            let l = rational::primitive(&nv);
                            if !cands.iter().any(|(m2, _)| *m2 == l) {
                                cands.push((l, points[i].clone()));
                            }
                        }
                    }
                }
                cands.sort_by(|a, b| a.0.cmp(&b.0));
                for (l, p) in cands {
                    let nv: RVec = l.iter().map(|x| Rational::from_integer(x.clone())).collect();
                    push(nv, &p)?;
                }
            }
        }
        Polytope::from_hrep(&facets)
    }

    pub fn with_name(mut self, name: &str) -> Polytope {
        self.name = Some(name.to_string());
        self
    }

    /// Triangulation points: vertices followed by the apex if present.
    pub fn points(&self) -> Vec<RVec> {
        let mut p = self.vertices.clone();
        if let Some(a) = &self.apex {
            p.push(a.clone());
        }
        p
    }

    pub fn simplex_points(&self) -> Vec<Vec<RVec>> {
        let pts = self.points();
        self.triangulation.iter().map(|s| s.iter().map(|&i| pts[i].clone()).collect()).collect()
    }

    pub fn simplex_points_f64(&self) -> Vec<Vec<Vec<f64>>> {
        self.simplex_points().iter().map(|s| s.iter().map(|p| to_f64_vec(p)).collect()).collect()
    }

    /// (dim-1)-simplices triangulating facet `f`.
    pub fn facet_simplices(&self, f: usize) -> Vec<Vec<RVec>> {
        let pts: Vec<RVec> = self.facets[f].vertices.iter().map(|&v| self.vertices[v].clone()).collect();
        face_simplices(self.dim, &pts)
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(|v| to_f64_vec(v)).collect()
    }

    pub fn offsets(&self) -> Vec<Rational> {
        self.facets.iter().map(|f| f.a.clone()).collect()
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        self.facets.iter().all(|f| !(dot_int(&f.normal, p) + &f.a).is_negative())
    }

    pub fn contains_f64(&self, p: &[f64], tol: f64) -> bool {
        self.facets.iter().all(|f| {
            let l = f.normal_f64();
            l.iter().zip(p).map(|(x, y)| x * y).sum::<f64>() + to_f64(&f.a) >= -tol
        })
    }

    pub fn volume(&self) -> Rational {
        self.simplex_points().iter().map(|s| simplex_volume(s)).fold(Rational::zero(), |a, b| a + b)
    }

    pub fn barycenter(&self) -> RVec {
        let mut m = vec![Rational::zero(); self.dim];
        let mut vol = Rational::zero();
        for s in self.simplex_points() {
            let v = simplex_volume(&s);
            let c = region::centroid(&s);
            for (mi, ci) in m.iter_mut().zip(&c) {
                *mi += &v * ci;
            }
            vol += v;
        }
        m.iter().map(|x| x / &vol).collect()
    }

    /// Volume, barycenter, and, when `a` is given, the moments of `e^{⟨a,p⟩}` using a
    /// collapsed Gauss rule with `order` points per direction on each simplex.
    pub fn measures(&self, a: Option<&[f64]>, order: usize) -> Measures {
        let weighted = a.map(|a| {
            let hi = weighted_moments(self, a, order);
            let lo = weighted_moments(self, a, order.saturating_sub(4).max(2));
            let mut err = (hi.0 - lo.0).abs();
            for i in 0..self.dim {
                err = err.max((hi.1[i] - lo.1[i]).abs());
                for j in 0..self.dim {
                    err = err.max((hi.2[i][j] - lo.2[i][j]).abs());
                }
            }
            WeightedMoments { v: hi.0, b: hi.1, cov: hi.2, error_bound: err }
        });
        Measures { volume: self.volume(), barycenter: self.barycenter(), weighted }
    }

    pub fn transform(&self, t: &Transform) -> Result<Polytope> {
        let facets: Vec<(Vec<BigInt>, Rational)> = self
            .facets
            .iter()
            .map(|f| {
                let a = match t {
                    Transform::Scale(s) => {
                        if !s.is_positive() {
                            return Err(Error::Invalid("scale factor must be positive".into()));
                        }
                        &f.a * s
                    }
                    Transform::Recenter(v) => {
                        if v.len() != self.dim {
                            return Err(Error::Invalid("recentering vector has wrong length".into()));
                        }
                        &f.a + dot_int(&f.normal, v)
                    }
                };
                Ok((f.normal.clone(), a))
            })
            .collect::<Result<_>>()?;
        let mut p = Polytope::from_hrep(&facets)?;
        p.name = self.name.clone();
        Ok(p)
    }
}

fn triangulate(dim: usize, vertices: &[RVec], facets: &[Facet]) -> (Option<RVec>, Vec<Vec<usize>>) {
    let index = |p: &RVec| vertices.iter().position(|v| v == p).expect("triangulation point is a vertex");
    match dim {
        1 => (None, vec![vec![0, vertices.len() - 1]]),
        2 => {
            let order = cyclic_order_2d(vertices);
            let tris = order.windows(2).skip(1).map(|w| vec![order[0], w[0], w[1]]).collect();
            (None, tris)
        }
        _ => {
            let apex = region::centroid(vertices);
            let ai = vertices.len();
            let mut tets = Vec::new();
            for f in facets {
                let pts: Vec<RVec> = f.vertices.iter().map(|&v| vertices[v].clone()).collect();
                for tri in face_simplices(3, &pts) {
                    let mut s = vec![ai];
                    s.extend(tri.iter().map(index));
                    tets.push(s);
                }
            }
            (Some(apex), tets)
        }
    }
}

#[allow(clippy::type_complexity)]
fn weighted_moments(p: &Polytope, a: &[f64], order: usize) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let n = p.dim;
    let rule = simplex_rule(n, order);
    let mut v = 0.0;
    let mut b = vec![0.0; n];
    let mut cov = vec![vec![0.0; n]; n];
    for (s, sq) in p.simplex_points_f64().iter().zip(p.simplex_points()) {
        let vol = to_f64(&simplex_volume(&sq));
        let mut x = vec![0.0; n];
        for (bary, w) in rule.bary.iter().zip(&rule.weights) {
            for (c, xc) in x.iter_mut().enumerate() {
                *xc = bary.iter().zip(s).map(|(bi, pt)| bi * pt[c]).sum();
            }
            let g = (a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<f64>()).exp() * w * vol;
            v += g;
            for i in 0..n {
                b[i] += g * x[i];
                for j in 0..n {
                    cov[i][j] += g * x[i] * x[j];
                }
            }
        }
    }
    (v, b, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int, rvec};

    pub fn dp1() -> Polytope {
        Polytope::from_hrep_i64(&[(&[1, 0], int(1)), (&[0, 1], int(1)), (&[-1, -1], int(1)), (&[1, 1], int(1))])
            .unwrap()
    }

    #[test]
    fn segment_from_hrep() {
        let p = Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(1))]).unwrap();
        assert_eq!(p.vertices, vec![rvec(&[-1]), rvec(&[1])]);
        assert_eq!(p.volume(), int(2));
    }

    #[test]
    fn triangle_vertices_match_pairwise_solutions() {
        let p = Polytope::from_hrep_i64(&[(&[1, 0], int(1)), (&[0, 1], int(1)), (&[-1, -1], int(1))]).unwrap();
        assert_eq!(p.vertices, vec![rvec(&[-1, -1]), rvec(&[-1, 2]), rvec(&[2, -1])]);
        assert_eq!(p.volume(), frac(9, 2));
    }

    #[test]
    fn dp1_data() {
        let p = dp1();
        assert_eq!(p.vertices, vec![rvec(&[-1, 0]), rvec(&[-1, 2]), rvec(&[0, -1]), rvec(&[2, -1])]);
        assert_eq!(p.volume(), int(4));
        assert_eq!(p.barycenter(), vec![frac(1, 12), frac(1, 12)]);
    }

    #[test]
    fn validation_errors() {
        let e = Polytope::from_hrep_i64(&[(&[2], int(1)), (&[-1], int(1))]).unwrap_err();
        assert_eq!(e.code(), "NONPRIMITIVE_NORMAL");
        let e = Polytope::from_hrep_i64(&[(&[1], int(0)), (&[-1], int(1))]).unwrap_err();
        assert_eq!(e.code(), "ORIGIN_OUTSIDE");
        let e = Polytope::from_hrep_i64(&[(&[1, 0], int(1)), (&[0, 1], int(1))]).unwrap_err();
        assert_eq!(e.code(), "UNBOUNDED");
        let e = Polytope::from_vrep(&[rvec(&[1, 1]), rvec(&[2, 2]), rvec(&[3, 1])]).unwrap_err();
        assert_eq!(e.code(), "ORIGIN_OUTSIDE");
        let e = Polytope::from_vrep(&[rvec(&[-1, -1]), rvec(&[1, 1])]).unwrap_err();
        assert_eq!(e.code(), "LOWDIM");
    }

    #[test]
    fn redundant_facets_dropped() {
        let p = Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(1)), (&[1], int(5))]).unwrap();
        assert_eq!(p.facets.len(), 2);
    }

    #[test]
    fn vrep_examples() {
        let p = Polytope::from_vrep(&[rvec(&[-1]), rvec(&[1])]).unwrap();
        assert_eq!(p.facets.len(), 2);
        let hex = Polytope::from_vrep(&[
            rvec(&[1, 0]),
            rvec(&[0, 1]),
            rvec(&[-1, 1]),
            rvec(&[-1, 0]),
            rvec(&[0, -1]),
            rvec(&[1, -1]),
        ])
        .unwrap();
        assert_eq!(hex.facets.len(), 6);
        assert!(hex.facets.iter().all(|f| f.a == int(1)));
        let cube: Vec<RVec> = (0..8).map(|i| rvec(&[2 * (i & 1) - 1, (i & 2) - 1, (i & 4) / 2 - 1])).collect();
        let c = Polytope::from_vrep(&cube).unwrap();
        assert_eq!(c.facets.len(), 6);
        assert_eq!(c.volume(), int(8));
        assert_eq!(c.barycenter(), rvec(&[0, 0, 0]));
    }

    #[test]
    fn transforms() {
        let seg = Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(1))]).unwrap();
        let s2 = seg.transform(&Transform::Scale(int(2))).unwrap();
        assert_eq!(s2.vertices, vec![rvec(&[-2]), rvec(&[2])]);
        let p = dp1();
        let r = p.transform(&Transform::Recenter(p.barycenter())).unwrap();
        assert_eq!(r.offsets(), vec![frac(13, 12), frac(13, 12), frac(5, 6), frac(7, 6)]);
        assert_eq!(r.barycenter(), rvec(&[0, 0]));
        let id = p.transform(&Transform::Recenter(rvec(&[0, 0]))).unwrap();
        assert_eq!(id, p);
        let e = seg.transform(&Transform::Recenter(rvec(&[1]))).unwrap_err();
        assert_eq!(e.code(), "ORIGIN_OUTSIDE");
    }

    #[test]
    fn weighted_moments_segment() {
        let seg = Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(1))]).unwrap();
        let m = seg.measures(Some(&[0.0]), DEFAULT_ORDER);
        let w = m.weighted.unwrap();
        assert!((w.v - 2.0).abs() < 1e-14);
        assert!(w.b[0].abs() < 1e-14);
        assert!((w.cov[0][0] - 2.0 / 3.0).abs() < 1e-14);
        let m = seg.measures(Some(&[0.7]), DEFAULT_ORDER).weighted.unwrap();
        let exact = ((0.7f64).exp() - (-0.7f64).exp()) / 0.7;
        assert!((m.v - exact).abs() < 1e-13);
    }
}
