//! Closed-form integrals of `e^{⟨c,x⟩+d}` (and its first moments) over intervals,
//! triangles, strips and cones, built on divided differences of `exp`.

/// `(e^x − 1)/x`, equal to 1 at 0.
pub fn e1(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

/// `∫_0^1 s e^{xs} ds`.
pub fn e2(x: f64) -> f64 {
    if x.abs() < 0.5 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 0..40 {
            let t = term / (k as f64 + 2.0);
            sum += t;
            if t.abs() < 1e-18 * sum.abs() {
                break;
            }
            term *= x / (k as f64 + 1.0);
        }
        sum
    } else {
        (x.exp() * (x - 1.0) + 1.0) / (x * x)
    }
}

/// Divided difference `exp[x_0, …, x_k]`; repeated nodes are allowed.
///
/// Node sets with spread at most 1 use the Taylor expansion around their mean,
/// `e^m Σ_j h_j(x − m) / (j + k)!` with complete homogeneous polynomials `h_j`.
/// Wider sets use the recurrence on sorted nodes, whose cancellation is bounded there.
pub fn exp_dd(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    dd_sorted(&v)
}

pub const TAYLOR_SPREAD: f64 = 1.0;

fn dd_sorted(x: &[f64]) -> f64 {
    let k = x.len() - 1;
    if k == 0 {
        return x[0].exp();
    }
    let spread = x[k] - x[0];
    if spread <= TAYLOR_SPREAD {
        return dd_taylor(x);
    }
    if k == 1 {
        return x[1].exp() * e1(-spread);
    }
    (dd_sorted(&x[1..]) - dd_sorted(&x[..k])) / spread
}

pub fn dd_taylor(x: &[f64]) -> f64 {
    let k = x.len() - 1;
    let m = x.iter().sum::<f64>() / x.len() as f64;
    const TERMS: usize = 40;
    let mut h = [0.0f64; TERMS];
    h[0] = 1.0;
    for xi in x {
        let y = xi - m;
        for j in 1..TERMS {
            h[j] += y * h[j - 1];
        }
    }
    let mut fact = (1..=k).map(|i| i as f64).product::<f64>();
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for (j, hj) in h.iter().enumerate() {
        if j > 0 {
            fact *= (j + k) as f64;
        }
        let t = hj / fact;
        sum += t;
        if j > 4 && t.abs().max(prev) < 1e-19 * sum.abs() {
            break;
        }
        prev = t.abs();
    }
    m.exp() * sum
}

/// Divided difference by the plain recurrence, without the Taylor branch.
pub fn dd_recurrence(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    fn rec(x: &[f64]) -> f64 {
        let k = x.len() - 1;
        if k == 0 {
            return x[0].exp();
        }
        if k == 1 {
            return x[1].exp() * e1(x[0] - x[1]);
        }
        (rec(&x[1..]) - rec(&x[..k])) / (x[k] - x[0])
    }
    rec(&v)
}

pub type P2 = [f64; 2];

#[inline]
pub fn dot2(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross2(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn sub2(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// `∫_T e^{⟨c,x⟩+d} dx` over a triangle, with its first moment `∫_T x e^{⟨c,x⟩+d} dx`.
pub fn triangle(v: [P2; 3], c: P2, d: f64) -> (f64, P2) {
    let area2 = cross2(sub2(v[1], v[0]), sub2(v[2], v[0])).abs();
    if area2 == 0.0 {
        return (0.0, [0.0, 0.0]);
    }
    let f = [dot2(c, v[0]) + d, dot2(c, v[1]) + d, dot2(c, v[2]) + d];
    let i = area2 * exp_dd(&f);
    let mut m = [0.0; 2];
    for j in 0..3 {
        let w = area2 * exp_dd(&[f[0], f[1], f[2], f[j]]);
        m[0] += w * v[j][0];
        m[1] += w * v[j][1];
    }
    (i, m)
}

/// `∫ e^{⟨c,x⟩+d}` over the strip `{v + s e + t w : s ∈ [0,1], t ≥ 0}`; needs `⟨c,w⟩ < 0`.
pub fn strip(v: P2, e: P2, w: P2, c: P2, d: f64) -> (f64, P2) {
    let jac = cross2(e, w).abs();
    let alpha = dot2(c, e);
    let beta = dot2(c, w);
    if beta >= 0.0 {
        return (f64::INFINITY, [f64::INFINITY; 2]);
    }
    let f0 = (dot2(c, v) + d).exp() * jac;
    let a1 = e1(alpha);
    let a2 = e2(alpha);
    let i = f0 * a1 / (-beta);
    let mut m = [0.0; 2];
    for k in 0..2 {
        m[k] = f0 * (v[k] * a1 / (-beta) + e[k] * a2 / (-beta) + w[k] * a1 / (beta * beta));
    }
    (i, m)
}

/// `∫ e^{⟨c,x⟩+d}` over the cone `{q + s a + t b : s, t ≥ 0}`; needs `⟨c,a⟩, ⟨c,b⟩ < 0`.
pub fn cone(q: P2, a: P2, b: P2, c: P2, d: f64) -> (f64, P2) {
    let jac = cross2(a, b).abs();
    let al = dot2(c, a);
    let be = dot2(c, b);
    if al >= 0.0 || be >= 0.0 {
        return (f64::INFINITY, [f64::INFINITY; 2]);
    }
    let f0 = (dot2(c, q) + d).exp() * jac;
    let i = f0 / (al * be);
    let mut m = [0.0; 2];
    for k in 0..2 {
        m[k] = f0 * (q[k] / (al * be) - a[k] / (al * al * be) - b[k] / (al * be * be));
    }
    (i, m)
}

/// `∫_lo^hi e^{cx+d} dx` and `∫ x e^{cx+d} dx`; infinite ends are allowed when the
/// integrand decays there.
pub fn interval(lo: f64, hi: f64, c: f64, d: f64) -> (f64, f64) {
    if !(hi > lo) {
        return (0.0, 0.0);
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let len = hi - lo;
            // expand around the endpoint with the larger exponent
            if c <= 0.0 {
                let f0 = (c * lo + d).exp();
                let i = len * f0 * e1(c * len);
                (i, lo * i + len * len * f0 * e2(c * len))
            } else {
                let f1 = (c * hi + d).exp();
                let i = len * f1 * e1(-c * len);
                (i, hi * i - len * len * f1 * e2(-c * len))
            }
        }
        (true, false) => {
            if c >= 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            let f = (c * lo + d).exp();
            (f / -c, f * (lo / -c + 1.0 / (c * c)))
        }
        (false, true) => {
            if c <= 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            let f = (c * hi + d).exp();
            (f / c, f * (hi / c - 1.0 / (c * c)))
        }
        (false, false) => (f64::INFINITY, f64::INFINITY),
    }
}
