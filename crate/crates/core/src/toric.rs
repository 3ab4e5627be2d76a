//! Invariants read off a polytope: divisor coefficients, Futaki and Donaldson-Futaki
//! invariants, the greatest Ricci lower bound `R_P`, and Song-Wang coefficients.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::boundary::facet_simplex_mass;
use crate::polytope::region::{self, face_simplices, simplex_volume, Halfspace, Region};
use crate::polytope::{sigma_total, Measure, Polytope};
use crate::rational::{self, dot, dot_int, int, to_f64_vec, RVec, Rational};

#[derive(Debug, Clone, PartialEq)]
pub struct DivisorData {
    /// `c_F = 1 − a_F` per facet.
    pub coefficients: Vec<Rational>,
    pub klt: Vec<bool>,
    pub effective: Vec<bool>,
    pub fano_canonical: bool,
    pub reflexive: bool,
    pub gorenstein_index: BigInt,
}

pub fn divisor_data(p: &Polytope) -> DivisorData {
    let coefficients: Vec<Rational> = p.facets.iter().map(|f| Rational::one() - &f.a).collect();
    let klt = p.facets.iter().map(|f| f.a.is_positive()).collect();
    let effective = coefficients.iter().map(|c| !c.is_negative()).collect();
    let fano_canonical = p.facets.iter().all(|f| f.a.is_one());
    let reflexive = fano_canonical && p.vertices.iter().all(|v| v.iter().all(|x| x.is_integer()));
    let gorenstein_index = p.facets.iter().fold(BigInt::one(), |l, f| l.lcm(f.a.denom()));
    DivisorData { coefficients, klt, effective, fano_canonical, reflexive, gorenstein_index }
}

/// Exact boundary and interior integrals of a linear function `⟨a,p⟩`.
fn linear_integrals(p: &Polytope, a: &[Rational]) -> (Rational, Rational) {
    let vol = p.volume();
    let interior = dot(a, &p.barycenter()) * &vol;
    let mut boundary = Rational::zero();
    for (fi, f) in p.facets.iter().enumerate() {
        let l = f.normal_q();
        for s in p.facet_simplices(fi) {
            boundary += facet_simplex_mass(&s, &l) * &f.a * dot(a, &region::centroid(&s));
        }
    }
    (boundary, interior)
}

/// Futaki invariant `−ℒ_{σ_P}(⟨a,·⟩)` together with the closed form `−∫_P ⟨a,p⟩ dp`.
pub fn futaki(p: &Polytope, a: &[Rational]) -> (Rational, Rational) {
    let (bd, int_) = linear_integrals(p, a);
    let n = int(p.dim as i64);
    let l = bd - n * &int_;
    (-l, -int_)
}

/// Futaki vector over the coordinate basis.
pub fn futaki_vector(p: &Polytope) -> Vec<Rational> {
    (0..p.dim)
        .map(|i| {
            let mut e = vec![Rational::zero(); p.dim];
            e[i] = Rational::one();
            futaki(p, &e).0
        })
        .collect()
}

/// Euler identity check data: `(∫_{∂P} ⟨a,p⟩ σ_P, (n+1) ∫_P ⟨a,p⟩ dp)`.
pub fn euler_identity(p: &Polytope, a: &[Rational]) -> (Rational, Rational) {
    let (bd, int_) = linear_integrals(p, a);
    (bd, int(p.dim as i64 + 1) * int_)
}

/// Convex piecewise-linear function `u(p) = max_j ⟨m_j, p⟩ + c_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfiguration {
    pub pieces: Vec<Piece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(with = "crate::io::rvec_str")]
    pub m: RVec,
    #[serde(with = "crate::io::rational_str")]
    pub c: Rational,
}

impl TestConfiguration {
    pub fn eval(&self, p: &[Rational]) -> Rational {
        self.pieces.iter().map(|q| dot(&q.m, p) + &q.c).max().expect("nonempty")
    }

    pub fn eval_f64(&self, p: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|q| to_f64_vec(&q.m).iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + rational::to_f64(&q.c))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exact integrals of a piecewise-linear convex function over `P` and its facets.
#[derive(Debug, Clone, PartialEq)]
pub struct PlIntegrals {
    pub interior: Rational,
    /// `∫_F u σ'` with density `1/‖l_F‖`, per facet.
    pub facet_lattice: Vec<Rational>,
}

/// Integrates the PL function exactly by splitting `P` into the regions where each piece
/// attains the maximum.
pub fn pl_integrals(p: &Polytope, tc: &TestConfiguration) -> Result<PlIntegrals> {
    if tc.pieces.is_empty() {
        return Err(Error::NonconvexInput);
    }
    let n = p.dim;
    if tc.pieces.iter().any(|q| q.m.len() != n) {
        return Err(Error::Invalid("piece slope has wrong length".into()));
    }
    let mut pieces: Vec<&Piece> = Vec::new();
    for q in &tc.pieces {
        if !pieces.iter().any(|r| *r == q) {
            pieces.push(q);
        }
    }
    let base: Vec<Halfspace> =
        p.facets.iter().map(|f| Halfspace { normal: f.normal_q(), offset: f.a.clone() }).collect();
    let mut interior = Rational::zero();
    let mut facet_lattice = vec![Rational::zero(); p.facets.len()];
    for (j, pj) in pieces.iter().enumerate() {
        let mut hs = base.clone();
        for (i, pi) in pieces.iter().enumerate() {
            if i != j {
                hs.push(Halfspace { normal: rational::sub(&pj.m, &pi.m), offset: &pj.c - &pi.c });
            }
        }
        let Some(reg) = Region::new(n, &hs) else { continue };
        let uj = |x: &RVec| dot(&pj.m, x) + &pj.c;
        for s in reg.simplices() {
            interior += simplex_volume(&s) * uj(&region::centroid(&s));
        }
        for (fi, f) in p.facets.iter().enumerate() {
            // Pieces agreeing with an earlier piece on the whole facet are counted once.
            let shadowed = pieces[..j].iter().any(|pi| agree_on_hyperplane(pi, pj, &f.normal_q(), &f.a));
            if shadowed {
                continue;
            }
            let on: Vec<RVec> =
                reg.vertices.iter().filter(|v| (dot_int(&f.normal, v) + &f.a).is_zero()).cloned().collect();
            if on.is_empty() || rational::affine_rank(&on) + 1 != n {
                continue;
            }
            let l = f.normal_q();
            for s in face_simplices(n, &on) {
                facet_lattice[fi] += facet_simplex_mass(&s, &l) * uj(&region::centroid(&s));
            }
        }
    }
    Ok(PlIntegrals { interior, facet_lattice })
}

fn agree_on_hyperplane(a: &Piece, b: &Piece, l: &[Rational], off: &Rational) -> bool {
    let dm = rational::sub(&a.m, &b.m);
    let k = l.iter().position(|x| !x.is_zero()).expect("nonzero normal");
    let lambda = &dm[k] / &l[k];
    dm.iter().zip(l).all(|(d, li)| *d == &lambda * li) && &a.c - &b.c == lambda * off
}

/// Donaldson-Futaki data for a test configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DonaldsonFutaki {
    /// `ℒ_σ(u)` for the requested measure.
    pub value: Rational,
    pub canonical: Rational,
    pub lattice: Rational,
    /// `ℒ_{σ_P}(u) − ℒ_{σ'}(u) = Σ_F (1 − a_F)(b_F ∫_P u − ∫_F u σ')` with `b_F = σ'(F)/vol P`.
    pub correction: Rational,
    pub interior: Rational,
}

pub fn donaldson_futaki(p: &Polytope, tc: &TestConfiguration, measure: Measure) -> Result<DonaldsonFutaki> {
    let pl = pl_integrals(p, tc)?;
    let vol = p.volume();
    let bd_can = p.facets.iter().zip(&pl.facet_lattice).fold(Rational::zero(), |s, (f, v)| s + &f.a * v);
    let bd_lat = pl.facet_lattice.iter().fold(Rational::zero(), |s, v| s + v);
    let canonical = bd_can - sigma_total(p, Measure::Canonical) / &vol * &pl.interior;
    let lattice = bd_lat - sigma_total(p, Measure::Lattice) / &vol * &pl.interior;
    let mut correction = Rational::zero();
    for (fi, f) in p.facets.iter().enumerate() {
        let bf = crate::polytope::boundary::facet_lattice_mass(p, fi) / &vol;
        correction += (Rational::one() - &f.a) * (bf * &pl.interior - &pl.facet_lattice[fi]);
    }
    let value = match measure {
        Measure::Canonical => canonical.clone(),
        Measure::Lattice => lattice.clone(),
    };
    Ok(DonaldsonFutaki { value, canonical, lattice, correction, interior: pl.interior })
}

/// `R_P = (s*−1)/s*` where `s* = max{s : (1−s) b ∈ P}`; equal to 1 when `b = 0`.
pub fn r_invariant(p: &Polytope) -> Rational {
    let b = p.barycenter();
    if b.iter().all(|x| x.is_zero()) {
        return Rational::one();
    }
    let s_star = p
        .facets
        .iter()
        .filter_map(|f| {
            let lb = dot_int(&f.normal, &b);
            lb.is_positive().then(|| Rational::one() + &f.a / lb)
        })
        .min()
        .expect("some facet faces the barycenter");
    (&s_star - Rational::one()) / s_star
}

/// Same invariant via the support-function condition `(1−r) φ_P(x) + r⟨b,x⟩ ≥ 0`
/// tested on the facet directions `x = −l_F`.
pub fn r_invariant_support(p: &Polytope) -> Rational {
    let b = p.barycenter();
    p.facets
        .iter()
        .filter_map(|f| {
            // φ_P(−l_F) = a_F; the condition reads (1−r) a_F − r ⟨b, l_F⟩ ≥ 0.
            let lb = dot_int(&f.normal, &b);
            lb.is_positive().then(|| &f.a / (&f.a + lb))
        })
        .min()
        .unwrap_or_else(Rational::one)
}

/// Song-Wang coefficients `c_F(r) = 1 − r − r⟨l_F, b⟩` and whether they are all nonnegative.
pub fn song_wang_coefficients(p: &Polytope, r: &Rational) -> Result<(Vec<Rational>, bool)> {
    if let Some(i) = p.facets.iter().position(|f| !f.a.is_one()) {
        return Err(Error::NotCanonical(i));
    }
    if !r.is_positive() || *r >= Rational::one() {
        return Err(Error::Invalid("r must lie in (0, 1)".into()));
    }
    let b = p.barycenter();
    let c: Vec<Rational> = p.facets.iter().map(|f| Rational::one() - r - r * dot_int(&f.normal, &b)).collect();
    let eff = c.iter().all(|x| !x.is_negative());
    Ok((c, eff))
}

/// Summary of the polytope-level invariants.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub volume: Rational,
    pub barycenter: RVec,
    pub r_invariant: Rational,
    pub divisor: DivisorData,
    pub futaki: Vec<Rational>,
}

pub fn analyze(p: &Polytope) -> Analysis {
    Analysis {
        volume: p.volume(),
        barycenter: p.barycenter(),
        r_invariant: r_invariant(p),
        divisor: divisor_data(p),
        futaki: futaki_vector(p),
    }
}

/// One row of a family sweep.
#[derive(Debug, Clone)]
pub enum SweepRow {
    Ok { t: Rational, barycenter: RVec, soliton: Vec<f64>, r_invariant: Rational, divisor: DivisorData },
    Failed { t: Rational, error: Error },
}

/// Samples `a_F(t) = (1−t) a_F(P₀) + t a_F(P₁)` at `samples` evenly spaced `t ∈ [0,1]`.
pub fn family_sweep(p0: &Polytope, p1: &Polytope, samples: usize) -> Result<Vec<SweepRow>> {
    if p0.facets.len() != p1.facets.len() || p0.facets.iter().zip(&p1.facets).any(|(a, b)| a.normal != b.normal) {
        return Err(Error::Invalid("end polytopes must share their facet normals in order".into()));
    }
    let samples = samples.max(2);
    let mut rows = Vec::new();
    for i in 0..samples {
        let t = rational::frac(i as i64, samples as i64 - 1);
        let facets: Vec<(Vec<BigInt>, Rational)> = p0
            .facets
            .iter()
            .zip(&p1.facets)
            .map(|(f0, f1)| (f0.normal.clone(), (Rational::one() - &t) * &f0.a + &t * &f1.a))
            .collect();
        let row = match Polytope::from_hrep(&facets) {
            Ok(pt) => {
                let sol = crate::solver::soliton_vector(&pt, &Default::default());
                match sol {
                    Ok(s) => SweepRow::Ok {
                        t: t.clone(),
                        barycenter: pt.barycenter(),
                        soliton: s.a,
                        r_invariant: r_invariant(&pt),
                        divisor: divisor_data(&pt),
                    },
                    Err(e) => SweepRow::Failed { t, error: e },
                }
            }
            Err(e) => SweepRow::Failed { t, error: e },
        };
        rows.push(row);
    }
    Ok(rows)
}
