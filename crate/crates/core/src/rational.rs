//! Exact rational helpers built on `num`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;
pub type RVec = Vec<Rational>;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rvec(v: &[i64]) -> RVec {
    v.iter().map(|&x| int(x)).collect()
}

/// Parses `"n"`, `"n/d"` or a plain decimal such as `"0.95"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || !fp.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip = ip.trim_start_matches(['-', '+']);
        let ipv: BigInt = if ip.is_empty() { BigInt::zero() } else { ip.parse().map_err(|_| bad())? };
        let fpv: BigInt = fp.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), fp.len());
        let r = Rational::new(ipv * &den + fpv, den);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = t.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn to_f64_vec(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

/// Nearest rational with denominator at most `2^52`, exact for dyadic floats.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |s, (x, y)| s + x * y)
}

pub fn dot_int(l: &[BigInt], p: &[Rational]) -> Rational {
    l.iter().zip(p).fold(Rational::zero(), |s, (x, y)| s + Rational::from_integer(x.clone()) * y)
}

pub fn sub(a: &[Rational], b: &[Rational]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[Rational], b: &[Rational]) -> RVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[Rational], t: &Rational) -> RVec {
    a.iter().map(|x| x * t).collect()
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Determinant by fraction-preserving Gaussian elimination.
pub fn det(mut m: Vec<RVec>) -> Rational {
    let n = m.len();
    let mut d = Rational::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !m[r][c].is_zero()) else {
            return Rational::zero();
        };
        if piv != c {
            m.swap(piv, c);
            d = -d;
        }
        let p = m[c][c].clone();
        d *= &p;
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &p;
            for k in c..n {
                let t = &f * &m[c][k];
                m[r][k] -= t;
            }
        }
    }
    d
}

/// Solves the square system `a x = b`; `None` if singular.
pub fn solve(mut a: Vec<RVec>, mut b: RVec) -> Option<RVec> {
    let n = a.len();
    for c in 0..n {
        let piv = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(piv, c);
        b.swap(piv, c);
        let p = a[c][c].clone();
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &p;
            for k in c..n {
                let t = &f * &a[c][k];
                a[r][k] -= t;
            }
            let t = &f * &b[c];
            b[r] -= t;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Row rank of a rational matrix.
pub fn rank(rows: &[RVec]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<RVec> = rows.to_vec();
    let cols = m[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(piv, r);
        let p = m[r][c].clone();
        for i in r + 1..m.len() {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &p;
            for k in c..cols {
                let t = &f * &m[r][k];
                m[i][k] -= t;
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Affine rank (dimension of the affine hull) of a point set.
pub fn affine_rank(pts: &[RVec]) -> usize {
    if pts.len() <= 1 {
        return 0;
    }
    let rows: Vec<RVec> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    rank(&rows)
}

/// Basis of the right nullspace of `rows` (each of length `n`).
pub fn nullspace(rows: &[RVec], n: usize) -> Vec<RVec> {
    let mut m: Vec<RVec> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(piv) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(piv, r);
        let p = m[r][c].clone();
        for k in 0..n {
            m[r][k] = &m[r][k] / &p;
        }
        for i in 0..m.len() {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for k in 0..n {
                let t = &f * &m[r][k];
                m[i][k] -= t;
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); n];
            v[f] = Rational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[i][f].clone();
            }
            v
        })
        .collect()
}

pub fn gcd_all(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

/// Scales a nonzero rational vector to the primitive integer vector with the same direction.
pub fn primitive(v: &[Rational]) -> Vec<BigInt> {
    let l = v.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect();
    let g = gcd_all(&ints);
    if g.is_zero() {
        return ints;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn norm2_int(l: &[BigInt]) -> Rational {
    Rational::from_integer(l.iter().map(|x| x * x).sum())
}

pub fn int_vec_f64(l: &[BigInt]) -> Vec<f64> {
    l.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

pub fn is_positive(r: &Rational) -> bool {
    r.is_positive()
}

/// Lexicographic comparison of rational tuples.
pub fn lex_cmp(a: &[Rational], b: &[Rational]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("6/7").unwrap(), frac(6, 7));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational("0.95").unwrap(), frac(19, 20));
        assert_eq!(parse_rational("-1.5").unwrap(), frac(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&frac(4, 2)), "2");
        assert_eq!(format_rational(&frac(-1, 12)), "-1/12");
    }

    #[test]
    fn linear_algebra() {
        let m = vec![rvec(&[2, 1]), rvec(&[1, 3])];
        assert_eq!(det(m.clone()), int(5));
        assert_eq!(solve(m, rvec(&[3, 4])).unwrap(), vec![int(1), int(1)]);
        assert_eq!(rank(&[rvec(&[1, 2]), rvec(&[2, 4])]), 1);
        let ns = nullspace(&[rvec(&[1, 1, 0])], 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(dot(&v, &rvec(&[1, 1, 0])).is_zero());
        }
        assert_eq!(primitive(&[frac(2, 3), frac(4, 3)]), vec![BigInt::from(1), BigInt::from(2)]);
    }
}
