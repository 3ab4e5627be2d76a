//! Gauss-Legendre rules on intervals and collapsed tensor rules on simplices.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_pd(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_pd(n, z);
        if d.is_finite() {
            dp = d;
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wt;
        w[n - 1 - i] = 0.5 * wt;
    }
    (x, w)
}

fn legendre_pd(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Quadrature on the reference simplex: barycentric points and weights summing to 1.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub dim: usize,
    pub bary: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Collapsed (Duffy) tensor rule with `order` points per direction; exact for total
/// degree `2 order - 1 - dim + 1` polynomials at least.
pub fn simplex_rule(dim: usize, order: usize) -> SimplexRule {
    let (x, w) = gauss_legendre(order);
    let mut bary = Vec::new();
    let mut weights = Vec::new();
    match dim {
        0 => {
            bary.push(vec![1.0]);
            weights.push(1.0);
        }
        1 => {
            for i in 0..order {
                bary.push(vec![1.0 - x[i], x[i]]);
                weights.push(w[i]);
            }
        }
        2 => {
            for i in 0..order {
                for j in 0..order {
                    let s = x[i];
                    let t = x[j] * (1.0 - s);
                    bary.push(vec![1.0 - s - t, s, t]);
                    weights.push(2.0 * w[i] * w[j] * (1.0 - s));
                }
            }
        }
        3 => {
            for i in 0..order {
                for j in 0..order {
                    for k in 0..order {
                        let s = x[i];
                        let t = x[j] * (1.0 - s);
                        let r = x[k] * (1.0 - s) * (1.0 - x[j]);
                        bary.push(vec![1.0 - s - t - r, s, t, r]);
                        weights.push(6.0 * w[i] * w[j] * w[k] * (1.0 - s) * (1.0 - s) * (1.0 - x[j]));
                    }
                }
            }
        }
        _ => panic!("simplex rules are provided for dim <= 3"),
    }
    SimplexRule { dim, bary, weights }
}

impl SimplexRule {
    /// Integrates `f` over the simplex with vertices `pts` (dim+1 points) of volume `vol`.
    pub fn integrate<F: FnMut(&[f64]) -> f64>(&self, pts: &[Vec<f64>], vol: f64, mut f: F) -> f64 {
        let n = pts[0].len();
        let mut x = vec![0.0; n];
        let mut s = 0.0;
        for (b, w) in self.bary.iter().zip(&self.weights) {
            for (c, xc) in x.iter_mut().enumerate() {
                *xc = b.iter().zip(pts).map(|(bi, p)| bi * p[c]).sum();
            }
            s += w * f(&x);
        }
        s * vol
    }
}

/// Adaptive Gauss-Kronrod-free integration on an interval by recursive Gauss-Legendre halving.
pub fn adaptive_gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (x, w) = gauss_legendre(10);
    let rule = |lo: f64, hi: f64| -> f64 {
        let h = hi - lo;
        x.iter().zip(&w).map(|(xi, wi)| wi * f(lo + h * xi)).sum::<f64>() * h
    };
    fn rec<R: Fn(f64, f64) -> f64>(rule: &R, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let l = rule(a, m);
        let r = rule(m, b);
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        rec(rule, a, m, l, 0.5 * tol, depth - 1) + rec(rule, m, b, r, 0.5 * tol, depth - 1)
    }
    let whole = rule(a, b);
    rec(&rule, a, b, whole, tol, 40)
}
