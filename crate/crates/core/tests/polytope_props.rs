use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_ma::polytope::region::simplex_volume;
use toric_ma::polytope::{boundary_functional, catalog, Measure, Polytope, Transform};
use toric_ma::rational::{frac, int, rvec, to_f64, to_f64_vec, RVec, Rational};
use toric_ma::toric::{donaldson_futaki, euler_identity, futaki_vector, r_invariant, Piece, TestConfiguration};

fn recentered(p: &Polytope) -> Polytope {
    p.transform(&Transform::Recenter(p.barycenter())).unwrap()
}

/// A few polytopes with non-canonical facet constants.
fn log_polytopes() -> Vec<Polytope> {
    vec![
        catalog::uneven_segment(),
        recentered(&catalog::dp1()),
        Polytope::from_hrep_i64(&[
            (&[1, 0], frac(3, 2)),
            (&[0, 1], int(1)),
            (&[-1, -1], frac(1, 2)),
            (&[1, -2], int(2)),
        ])
        .unwrap(),
    ]
}

fn random_cloud(rng: &mut ChaCha8Rng) -> Vec<RVec> {
    let mut pts = vec![rvec(&[-3, -3]), rvec(&[3, -3]), rvec(&[0, 3])];
    for _ in 0..rng.gen_range(2..9) {
        pts.push(vec![
            frac(rng.gen_range(-12..=12), rng.gen_range(1..=4)),
            frac(rng.gen_range(-12..=12), rng.gen_range(1..=4)),
        ]);
    }
    pts
}

fn ccw(p: &Polytope) -> Vec<Vec<f64>> {
    let v = p.vertices_f64();
    let c: Vec<f64> = (0..2).map(|i| v.iter().map(|x| x[i]).sum::<f64>() / v.len() as f64).collect();
    let mut v = v;
    v.sort_by(|a, b| {
        let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
        let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
        ta.partial_cmp(&tb).unwrap()
    });
    v
}

/// Exact shoelace area of the vertex polygon.
fn shoelace(p: &Polytope) -> Rational {
    let v = p.vertices.clone();
    let c: Vec<f64> =
        (0..2).map(|i| to_f64_vec(&v.iter().map(|x| x[i].clone()).collect::<Vec<_>>()).iter().sum::<f64>()).collect();
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = (to_f64(&v[a][1]) - c[1] / v.len() as f64).atan2(to_f64(&v[a][0]) - c[0] / v.len() as f64);
        let tb = (to_f64(&v[b][1]) - c[1] / v.len() as f64).atan2(to_f64(&v[b][0]) - c[0] / v.len() as f64);
        ta.partial_cmp(&tb).unwrap()
    });
    let mut s = Rational::zero();
    for i in 0..order.len() {
        let (a, b) = (&v[order[i]], &v[order[(i + 1) % order.len()]]);
        s += &a[0] * &b[1] - &a[1] * &b[0];
    }
    s.abs() / int(2)
}

/// `∫_{tP} u` by a collapsed three-point Gauss rule on a fan triangulation, exact for cubics.
fn integral_scaled(p: &Polytope, t: f64, u: &dyn Fn(&[f64]) -> f64) -> f64 {
    let g = [(-(0.6f64).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((0.6f64).sqrt(), 5.0 / 9.0)];
    if p.dim == 1 {
        let v = p.vertices_f64();
        let (a, b) = (t * v[0][0], t * v[v.len() - 1][0]);
        return g.iter().map(|(x, w)| w * u(&[0.5 * (a + b) + 0.5 * (b - a) * x])).sum::<f64>() * 0.5 * (b - a);
    }
    let v: Vec<Vec<f64>> = ccw(p).into_iter().map(|x| vec![t * x[0], t * x[1]]).collect();
    let mut total = 0.0;
    for i in 1..v.len() - 1 {
        let (a, b, c) = (&v[0], &v[i], &v[i + 1]);
        let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
        for (xi, wx) in g {
            for (eta, wy) in g {
                let s = 0.5 * (1.0 + xi);
                let r = 0.5 * (1.0 - s) * (1.0 + eta);
                let q = [a[0] + s * (b[0] - a[0]) + r * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + r * (c[1] - a[1])];
                total += wx * wy * (1.0 - s) * 0.25 * area2 * u(&q);
            }
        }
    }
    total
}

fn random_cubic(rng: &mut ChaCha8Rng, dim: usize) -> impl Fn(&[f64]) -> f64 {
    let c: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    move |x: &[f64]| {
        let (a, b) = (x[0], if dim == 2 { x[1] } else { 0.0 });
        c[0] + c[1] * a
            + c[2] * b
            + c[3] * a * a
            + c[4] * a * b
            + c[5] * b * b
            + c[6] * a * a * a
            + c[7] * a * a * b
            + c[8] * a * b * b
            + c[9] * b * b * b
    }
}

fn random_config(rng: &mut ChaCha8Rng, dim: usize, homogeneous: bool) -> TestConfiguration {
    let mut pieces = vec![Piece { m: vec![Rational::zero(); dim], c: Rational::zero() }];
    for _ in 0..rng.gen_range(1..5) {
        let m: RVec = (0..dim).map(|_| frac(rng.gen_range(-6..=6), rng.gen_range(1..=3))).collect();
        let c = if homogeneous { Rational::zero() } else { -frac(rng.gen_range(0..=6), rng.gen_range(1..=4)) };
        pieces.push(Piece { m, c });
    }
    TestConfiguration { pieces }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn vertex_and_facet_descriptions_round_trip(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Polytope::from_vrep(&random_cloud(&mut rng)).unwrap();
        let facets: Vec<_> = p.facets.iter().map(|f| (f.normal.clone(), f.a.clone())).collect();
        let q = Polytope::from_hrep(&facets).unwrap();
        prop_assert_eq!(&q.vertices, &p.vertices);
        let r = Polytope::from_vrep(&q.vertices).unwrap();
        let mut a: Vec<_> = r.facets.iter().map(|f| (f.normal.clone(), f.a.clone())).collect();
        let mut b = facets.clone();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn triangulation_volume_is_exact(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Polytope::from_vrep(&random_cloud(&mut rng)).unwrap();
        let sum = p.simplex_points().iter().fold(Rational::zero(), |s, t| s + simplex_volume(t));
        prop_assert_eq!(&sum, &p.volume());
        prop_assert_eq!(sum, shoelace(&p));
    }

    #[test]
    fn euler_identity_is_exact(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = log_polytopes();
        ps.extend(catalog::all());
        ps.push(Polytope::from_vrep(&random_cloud(&mut rng)).unwrap());
        for p in &ps {
            let a: RVec = (0..p.dim).map(|_| frac(rng.gen_range(-9..=9), rng.gen_range(1..=5))).collect();
            let (lhs, rhs) = euler_identity(p, &a);
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn positivity_of_the_boundary_functional(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ps = [catalog::segment(), catalog::square(), catalog::p2(), catalog::hexagon(), recentered(&catalog::dp1()), recentered(&catalog::uneven_segment())];
        for p in &ps {
            let tc = random_config(&mut rng, p.dim, false);
            let d = donaldson_futaki(p, &tc, Measure::Canonical).unwrap();
            prop_assert!(d.canonical >= d.interior, "{} < {}", d.canonical, d.interior);
            let h = random_config(&mut rng, p.dim, true);
            let d = donaldson_futaki(p, &h, Measure::Canonical).unwrap();
            prop_assert_eq!(&d.canonical, &d.interior);
        }
    }

    #[test]
    fn lattice_and_canonical_agree_on_fano_polytopes(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for p in catalog::all().iter().filter(|p| p.facets.iter().all(|f| f.a.is_one())) {
            let tc = random_config(&mut rng, p.dim, false);
            let d = donaldson_futaki(p, &tc, Measure::Lattice).unwrap();
            prop_assert_eq!(&d.lattice, &d.canonical);
            prop_assert!(d.correction.is_zero());
        }
    }
}

#[test]
fn boundary_measure_is_derivative_of_dilation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ps = log_polytopes();
    ps.push(catalog::hexagon());
    ps.push(catalog::p2());
    assert_eq!(ps.len(), 5);
    for p in &ps {
        for _ in 0..20 {
            let u = random_cubic(&mut rng, p.dim);
            let h = 1e-5;
            let fd = (integral_scaled(p, 1.0 + h, &u) - integral_scaled(p, 1.0 - h, &u)) / (2.0 * h);
            let facet_sum = boundary_functional(p, &u, Measure::Canonical, 8).boundary;
            assert!((fd - facet_sum).abs() <= 1e-6 * (1.0 + facet_sum.abs()), "{fd} vs {facet_sum}");
        }
    }
}

#[test]
fn tilted_moments() {
    for p in catalog::all() {
        let n = p.dim;
        let m = p.measures(Some(&vec![0.0; n]), 16);
        let w = m.weighted.unwrap();
        let b = to_f64_vec(&p.barycenter());
        assert!((w.v - to_f64(&p.volume())).abs() < 1e-12);
        for i in 0..n {
            assert!((w.b[i] / w.v - b[i]).abs() < 1e-12);
        }
        let a: Vec<f64> = (0..n).map(|i| 0.3 - 0.2 * i as f64).collect();
        let w = p.measures(Some(&a), 16).weighted.unwrap();
        let h = 1e-5;
        for i in 0..n {
            let mut up = a.clone();
            up[i] += h;
            let mut dn = a.clone();
            dn[i] -= h;
            let lv = |x: &[f64]| p.measures(Some(x), 16).weighted.unwrap().v.ln();
            let fd = (lv(&up) - lv(&dn)) / (2.0 * h);
            assert!((fd - w.b[i] / w.v).abs() < 1e-6);
        }
    }
}

#[test]
fn futaki_vanishes_exactly_when_barycenter_does() {
    let mut ps = catalog::all();
    ps.extend(log_polytopes());
    ps.extend(catalog::all().iter().map(recentered));
    for p in &ps {
        let centered = p.barycenter().iter().all(|x| x.is_zero());
        let f = futaki_vector(p);
        assert_eq!(f.iter().all(|x| x.is_zero()), centered);
        // −∫ p dp
        let expected: Vec<Rational> = p.barycenter().iter().map(|b| -(b * p.volume())).collect();
        assert_eq!(f, expected);
    }
}

#[test]
fn r_invariant_range_and_scaling() {
    let mut ps = catalog::all();
    ps.extend(log_polytopes());
    for p in &ps {
        let r = r_invariant(p);
        assert!(r.is_positive() && r <= Rational::one());
        assert_eq!(r.is_one(), p.barycenter().iter().all(|x| x.is_zero()));
        for t in [frac(1, 3), int(2), frac(7, 5)] {
            assert_eq!(r_invariant(&p.transform(&Transform::Scale(t)).unwrap()), r);
        }
    }
}
