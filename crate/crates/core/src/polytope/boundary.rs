use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::region::simplex_volume;
use super::Polytope;
use crate::quadrature::simplex_rule;
use crate::rational::{self, det, norm2_int, sub, to_f64, to_f64_vec, RVec, Rational};

/// Boundary measure choice: `a_F/‖l_F‖` (canonical) or `1/‖l_F‖` (lattice) times surface measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Canonical,
    Lattice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetData {
    pub index: usize,
    pub euclidean_area: f64,
    pub sigma_canonical_density: f64,
    pub sigma_lattice_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryValue {
    /// `∫_{∂P} u dσ`.
    pub boundary: f64,
    /// `∫_P u dp`.
    pub interior: f64,
    /// `∫_{∂P} u dσ − (σ(∂P)/vol P) ∫_P u dp`.
    pub l_sigma: f64,
}

/// Lattice-normalised measure `λ(S)/‖l‖` of a (dim-1)-simplex `S` lying in a facet with
/// normal `l`, computed exactly as `|det(q_i − q_0, l)| / ((dim-1)! ‖l‖²)`.
pub fn facet_simplex_mass(s: &[RVec], l: &[Rational]) -> Rational {
    let n = l.len();
    let mut m: Vec<RVec> = s[1..].iter().map(|q| sub(q, &s[0])).collect();
    m.push(l.to_vec());
    let nn = l.iter().fold(Rational::zero(), |a, x| a + x * x);
    det(m).abs() / (nn * rational::int(rational::factorial(n - 1) as i64))
}

/// Exact `σ'`-mass (density `1/‖l_F‖`) of each facet.
pub fn facet_lattice_mass(p: &Polytope, f: usize) -> Rational {
    let l = p.facets[f].normal_q();
    p.facet_simplices(f).iter().map(|s| facet_simplex_mass(s, &l)).fold(Rational::zero(), |a, b| a + b)
}

pub fn facet_data(p: &Polytope) -> Vec<FacetData> {
    (0..p.facets.len())
        .map(|f| {
            let nrm = to_f64(&norm2_int(&p.facets[f].normal)).sqrt();
            let a = to_f64(&p.facets[f].a);
            FacetData {
                index: f,
                euclidean_area: to_f64(&facet_lattice_mass(p, f)) * nrm,
                sigma_canonical_density: a / nrm,
                sigma_lattice_density: 1.0 / nrm,
            }
        })
        .collect()
}

/// Total boundary mass, exact. For the canonical measure this is `dim · vol(P)`.
pub fn sigma_total(p: &Polytope, measure: Measure) -> Rational {
    (0..p.facets.len())
        .map(|f| {
            let m = facet_lattice_mass(p, f);
            match measure {
                Measure::Canonical => m * &p.facets[f].a,
                Measure::Lattice => m,
            }
        })
        .fold(Rational::zero(), |a, b| a + b)
}

/// Evaluates the boundary integral and the linear functional `ℒ_σ(u)` by quadrature with
/// `order` points per direction on facet and interior simplices.
pub fn boundary_functional<F: Fn(&[f64]) -> f64>(p: &Polytope, u: F, measure: Measure, order: usize) -> BoundaryValue {
    let n = p.dim;
    let frule = simplex_rule(n - 1, order);
    let mut boundary = 0.0;
    for f in 0..p.facets.len() {
        let l = p.facets[f].normal_q();
        let dens = match measure {
            Measure::Canonical => to_f64(&p.facets[f].a),
            Measure::Lattice => 1.0,
        };
        for s in p.facet_simplices(f) {
            let mass = to_f64(&facet_simplex_mass(&s, &l));
            let pts: Vec<Vec<f64>> = s.iter().map(|q| to_f64_vec(q)).collect();
            boundary += dens * frule.integrate(&pts, mass, &u);
        }
    }
    let rule = simplex_rule(n, order);
    let mut interior = 0.0;
    for (s, sq) in p.simplex_points_f64().iter().zip(p.simplex_points()) {
        interior += rule.integrate(s, to_f64(&simplex_volume(&sq)), &u);
    }
    let coef = to_f64(&(sigma_total(p, measure) / p.volume()));
    BoundaryValue { boundary, interior, l_sigma: boundary - coef * interior }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn seg(a: i64, b: i64) -> Polytope {
        Polytope::from_hrep_i64(&[(&[1], int(a)), (&[-1], int(b))]).unwrap()
    }

    #[test]
    fn segment_examples() {
        let p = seg(1, 2);
        let v = boundary_functional(&p, |x| x[0], Measure::Canonical, 8);
        assert!((v.boundary - 3.0).abs() < 1e-14);
        assert!((v.l_sigma - 1.5).abs() < 1e-14);
        let q = seg(1, 1);
        let v = boundary_functional(&q, |x| x[0] * x[0], Measure::Canonical, 8);
        assert!((v.l_sigma - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn canonical_mass_is_dim_times_volume() {
        let dp1 =
            Polytope::from_hrep_i64(&[(&[1, 0], int(1)), (&[0, 1], int(2)), (&[-1, -1], int(3)), (&[1, 1], int(1))])
                .unwrap();
        assert_eq!(sigma_total(&dp1, Measure::Canonical), int(2) * dp1.volume());
        let v = boundary_functional(&dp1, |_| 1.0, Measure::Canonical, 6);
        assert!(v.l_sigma.abs() < 1e-12);
        let fd = facet_data(&dp1);
        for f in &fd {
            assert!(
                (f.sigma_canonical_density / f.sigma_lattice_density - to_f64(&dp1.facets[f.index].a)).abs() < 1e-14
            );
        }
    }
}
