use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_ma::convexfn::{
    convexify, energy_legendre, energy_mixed, functionals, geodesic, hull_weights, legendre, ma_measure,
    ma_measure_weighted, ma_total_exact, MaxAffine, PLonP,
};
use toric_ma::polytope::{catalog, Polytope};
use toric_ma::rational::to_f64;
use toric_ma::solver::assemble;

fn node_slopes(p: &Polytope, refinement: usize) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
    let ns = assemble(p, &vec![0.0; p.dim], refinement).unwrap();
    (ns.nodes, ns.simplices)
}

fn polytopes_2d() -> Vec<Polytope> {
    vec![catalog::square(), catalog::p2(), catalog::hexagon(), catalog::dp1()]
}

fn random_phi(p: &Polytope, seed: u64, spread: f64) -> MaxAffine {
    let (slopes, _) = node_slopes(p, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let heights = slopes.iter().map(|_| rng.gen_range(-spread..spread)).collect();
    MaxAffine::new(slopes, heights).unwrap()
}

/// `φ*(p)` as the smallest interpolated height over all triangles of slopes containing `p`.
fn legendre_by_caratheodory(phi: &MaxAffine, p: &[f64]) -> f64 {
    let s = &phi.slopes;
    let u = &phi.heights;
    let mut best = f64::INFINITY;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            for k in j + 1..s.len() {
                let d = (s[j][0] - s[i][0]) * (s[k][1] - s[i][1]) - (s[j][1] - s[i][1]) * (s[k][0] - s[i][0]);
                if d.abs() < 1e-12 {
                    continue;
                }
                let l1 = ((p[0] - s[i][0]) * (s[k][1] - s[i][1]) - (p[1] - s[i][1]) * (s[k][0] - s[i][0])) / d;
                let l2 = ((s[j][0] - s[i][0]) * (p[1] - s[i][1]) - (s[j][1] - s[i][1]) * (p[0] - s[i][0])) / d;
                let l0 = 1.0 - l1 - l2;
                if l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12 {
                    best = best.min(l0 * u[i] + l1 * u[j] + l2 * u[k]);
                }
            }
        }
    }
    best
}

fn random_point_in(p: &Polytope, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let v = p.vertices_f64();
    let w: Vec<f64> = v.iter().map(|_| rng.gen_range(0.0..1.0f64).powi(2)).collect();
    let t: f64 = w.iter().sum();
    (0..p.dim).map(|i| v.iter().zip(&w).map(|(x, wi)| x[i] * wi / t).sum()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn legendre_matches_triangle_oracle_and_is_involutive(seed in 0u64..1_000_000, which in 0usize..4) {
        let p = &polytopes_2d()[which];
        let phi = random_phi(p, seed, 1.0);
        let star = legendre(&phi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..20 {
            let q = random_point_in(p, &mut rng);
            let oracle = legendre_by_caratheodory(&phi, &q);
            prop_assert!((star.eval(&q) - oracle).abs() < 1e-12, "{} vs {}", star.eval(&q), oracle);
        }
        let back = star.legendre();
        for _ in 0..100 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-5.0..5.0)).collect();
            prop_assert!((back.eval(&x) - phi.eval(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn legendre_1d_matches_pair_oracle(seed in 0u64..1_000_000) {
        let phi = random_phi(&catalog::uneven_segment(), seed, 1.0);
        let star = legendre(&phi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let q = rng.gen_range(-1.0..2.0);
            let mut oracle = f64::INFINITY;
            for i in 0..phi.len() {
                for j in 0..phi.len() {
                    let (a, b) = (phi.slopes[i][0], phi.slopes[j][0]);
                    if a <= q && q <= b && b > a {
                        let t = (q - a) / (b - a);
                        oracle = oracle.min((1.0 - t) * phi.heights[i] + t * phi.heights[j]);
                    }
                }
            }
            prop_assert!((star.eval(&[q]) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn isometry_with_support_function(seed in 0u64..1_000_000, which in 0usize..4) {
        let p = &polytopes_2d()[which];
        let phi = random_phi(p, seed, 1.0);
        let support = MaxAffine::support(p);
        let star = legendre(&phi).unwrap();
        let min_star = star.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_abs_star = star.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut samples: Vec<Vec<f64>> = ma_measure(&phi).unwrap().points;
        samples.push(vec![0.0, 0.0]);
        for i in 0..720 {
            let th = (i as f64 + 0.5) * std::f64::consts::PI / 360.0;
            for r in [1e-1, 1.0, 3.0, 1e4] {
                samples.push(vec![r * th.cos(), r * th.sin()]);
            }
        }
        let diffs: Vec<f64> = samples.iter().map(|x| phi.eval(x) - support.eval(x)).collect();
        let sup = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sup_abs = diffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!((sup + min_star).abs() < 1e-9, "{sup} vs {}", -min_star);
        prop_assert!((sup_abs - max_abs_star).abs() < 1e-9, "{sup_abs} vs {max_abs_star}");
    }

    #[test]
    fn translation_covariance(seed in 0u64..1_000_000, v0 in -2.0..2.0f64, v1 in -2.0..2.0f64) {
        let phi = random_phi(&catalog::hexagon(), seed, 1.0);
        let shifted = phi.translate(&[v0, v1]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let lhs = shifted.eval(&x);
            let rhs = phi.eval(&[x[0] - v0, x[1] - v1]);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn ma_mass_is_hull_volume(seed in 0u64..1_000_000, which in 0usize..4) {
        let p = &polytopes_2d()[which];
        let phi = random_phi(p, seed, 2.0);
        let (faces, hull) = ma_total_exact(&phi).unwrap();
        prop_assert_eq!(&faces, &hull);
        prop_assert_eq!(hull, toric_ma::rational::int(2) * p.volume());
        let float_total = ma_measure(&phi).unwrap().total();
        prop_assert!((float_total - 2.0 * to_f64(&p.volume())).abs() < 1e-12);
    }

    #[test]
    fn ma_mass_in_one_dimension(seed in 0u64..1_000_000) {
        let phi = random_phi(&catalog::uneven_segment(), seed, 2.0);
        let (faces, hull) = ma_total_exact(&phi).unwrap();
        prop_assert_eq!(&faces, &hull);
        prop_assert_eq!(hull, toric_ma::rational::int(3));
    }

    #[test]
    fn energy_gradient_is_minus_hull_weights(seed in 0u64..1_000_000, which in 0usize..4) {
        let p = &polytopes_2d()[which];
        let phi = random_phi(p, seed, 1.0);
        let a = [0.3, -0.2];
        let w = hull_weights(&phi, &a).unwrap();
        let h = 1e-6;
        for k in 0..phi.len() {
            let mut up = phi.clone();
            up.heights[k] += h;
            let mut dn = phi.clone();
            dn.heights[k] -= h;
            let fd = (energy_legendre(&up, &a, None).unwrap() - energy_legendre(&dn, &a, None).unwrap()) / (2.0 * h);
            prop_assert!((fd + w[k]).abs() < 1e-6, "piece {k}: {fd} vs {}", -w[k]);
        }
    }
}

#[test]
fn energy_forms_agree_on_seeded_instances() {
    let sq = catalog::square();
    let slopes = vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![-1.0, 1.0], vec![0.0, 0.0]];
    let phi0 = MaxAffine::new(slopes.clone(), vec![0.0; 5]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..50 {
        let heights = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = MaxAffine::new(slopes.clone(), heights).unwrap();
        let a = if i % 2 == 0 { [0.0, 0.0] } else { [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)] };
        let reference = if i % 2 == 0 { Some(&sq) } else { None };
        let l = energy_legendre(&phi, &a, reference).unwrap() - energy_legendre(&phi0, &a, reference).unwrap();
        let m = energy_mixed(&phi, &phi0, &a, 1e-10).unwrap();
        assert!((l - m.value).abs() <= 1e-6 * (1.0 + l.abs()), "instance {i}: {l} vs {}", m.value);
    }
}

#[test]
fn weighted_ma_mass_is_weighted_volume() {
    let p = catalog::dp2();
    let phi = random_phi(&p, 9, 1.0);
    let a = [0.4, -0.1];
    let mu = ma_measure_weighted(&phi, &a).unwrap();
    let vg = p.measures(Some(&a), 16).weighted.unwrap().v;
    assert!((mu.total() - 2.0 * vg).abs() < 1e-12 * vg);
}

/// Heights `α q(p) + ⟨b, p⟩ + c` for a fixed generic quadratic `q`, so that every pair shares
/// its lower-hull triangulation and height interpolation is the geodesic of Legendre transforms.
fn quadratic_heights(slopes: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let alpha = rng.gen_range(0.3..2.0);
    let b = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
    let c = rng.gen_range(-1.0..1.0);
    slopes
        .iter()
        .map(|p| alpha * (p[0] * p[0] + p[1] * p[1] + 0.3 * p[0] * p[1]) + b[0] * p[0] + b[1] * p[1] + c)
        .collect()
}

#[test]
fn ding_functional_is_concave_along_geodesics() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for p in [catalog::square(), catalog::hexagon()] {
        let (slopes, _) = node_slopes(&p, 1);
        for _ in 0..5 {
            let phi0 = MaxAffine::new(slopes.clone(), quadratic_heights(&slopes, &mut rng)).unwrap();
            let phi1 = MaxAffine::new(slopes.clone(), quadratic_heights(&slopes, &mut rng)).unwrap();
            let g: Vec<f64> = (0..=20)
                .map(|i| functionals(&geodesic(&phi0, &phi1, i as f64 / 20.0).unwrap(), &p, &[0.0, 0.0]).unwrap().g)
                .collect();
            for w in g.windows(3) {
                assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-8, "{:?}", w);
            }
        }
    }
}

#[test]
fn shift_leaves_g_and_j_unchanged() {
    let p = catalog::hexagon();
    let phi = random_phi(&p, 5, 1.0);
    let f0 = functionals(&phi, &p, &[0.0, 0.0]).unwrap();
    let f1 = functionals(&phi.add_constant(2.75), &p, &[0.0, 0.0]).unwrap();
    assert!((f0.g - f1.g).abs() < 1e-12);
    assert!((f0.j - f1.j).abs() < 1e-12);
    assert!((f1.e - f0.e - 2.75 * 2.0 * to_f64(&p.volume())).abs() < 1e-12);
}

#[test]
fn convexification_raises_g() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for p in [catalog::square(), catalog::p2(), catalog::dp1()] {
        let (nodes, simplices) = node_slopes(&p, 1);
        let vol = to_f64(&p.volume());
        for _ in 0..10 {
            let values: Vec<f64> = nodes.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
            let raw = PLonP { nodes: nodes.clone(), values, simplices: simplices.clone() };
            let conv = convexify(&raw).unwrap();
            assert!(conv.values.iter().zip(&raw.values).all(|(c, r)| c <= r));
            let i = functionals(&raw.legendre(), &p, &[0.0, 0.0]).unwrap().i;
            let g_raw = -raw.integrate(&[0.0, 0.0]) / vol - i;
            let g_conv = functionals(&conv.legendre(), &p, &[0.0, 0.0]).unwrap().g;
            assert!(g_conv >= g_raw - 1e-12, "{g_conv} < {g_raw}");
            assert!((-conv.integrate(&[0.0, 0.0]) / vol - i - g_conv).abs() < 1e-12);
        }
    }
}

#[test]
fn normalization_moves_minimum_to_origin() {
    let phi = random_phi(&catalog::dp2(), 3, 1.0);
    let (psi, xhat) = toric_ma::convexfn::normalize(&phi).unwrap();
    assert!(psi.eval(&[0.0, 0.0]).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        assert!(psi.eval(&x) >= -1e-12);
        let y = [x[0] + xhat[0], x[1] + xhat[1]];
        assert!((psi.eval(&x) - (phi.eval(&y) - phi.eval(&xhat))).abs() < 1e-12);
    }
}
