//! Functions sampled on uniform grids, for the second- and fourth-order operators of the
//! dual side: the functional `ℱ(u) = −∫ log det D²u + ℒ_σ(u)` and Abreu's `S(u)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::polytope::{boundary_functional, Measure, Polytope};
use crate::rational::to_f64;

/// Values on the grid `origin + h·i`, `0 ≤ i < counts`, stored row-major (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub counts: Vec<usize>,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(origin: Vec<f64>, spacing: f64, counts: Vec<usize>, values: Vec<f64>) -> Result<GridFn> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Invalid(format!("grid spacing must be positive, got {spacing}")));
        }
        if origin.is_empty() || origin.len() > 2 || origin.len() != counts.len() {
            return Err(Error::Invalid("grids have one or two axes, with one count per axis".into()));
        }
        if counts.iter().product::<usize>() != values.len() {
            return Err(Error::Invalid("number of values does not match the grid".into()));
        }
        if values.iter().chain(&origin).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("grid values must be finite".into()));
        }
        Ok(GridFn { origin, spacing, counts, values })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(origin: Vec<f64>, spacing: f64, counts: Vec<usize>, f: F) -> Result<GridFn> {
        let mut g = GridFn { origin, spacing, counts, values: Vec::new() };
        let total: usize = g.counts.iter().product();
        g.values = (0..total).map(|i| f(&g.point(&g.multi(i)))).collect();
        GridFn::new(g.origin, g.spacing, g.counts, g.values)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    fn multi(&self, flat: usize) -> Vec<usize> {
        match self.dim() {
            1 => vec![flat],
            _ => vec![flat / self.counts[1], flat % self.counts[1]],
        }
    }

    fn flat(&self, i: &[usize]) -> usize {
        match self.dim() {
            1 => i[0],
            _ => i[0] * self.counts[1] + i[1],
        }
    }

    pub fn point(&self, i: &[usize]) -> Vec<f64> {
        self.origin.iter().zip(i).map(|(o, k)| o + self.spacing * *k as f64).collect()
    }

    pub fn get(&self, i: &[usize]) -> f64 {
        self.values[self.flat(i)]
    }

    /// Multilinear interpolation, clamped to the grid.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let mut base = Vec::with_capacity(self.dim());
        let mut frac = Vec::with_capacity(self.dim());
        for d in 0..self.dim() {
            let s = ((x[d] - self.origin[d]) / self.spacing).clamp(0.0, (self.counts[d] - 1) as f64);
            let b = (s.floor() as usize).min(self.counts[d].saturating_sub(2));
            base.push(b);
            frac.push(s - b as f64);
        }
        let mut v = 0.0;
        for corner in 0..(1usize << self.dim()) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for d in 0..self.dim() {
                if corner >> d & 1 == 1 {
                    w *= frac[d];
                    idx[d] = (idx[d] + 1).min(self.counts[d] - 1);
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                v += w * self.get(&idx);
            }
        }
        v
    }

    /// Every other node, at spacing `2h`.
    pub fn coarsen(&self) -> Option<GridFn> {
        let counts: Vec<usize> = self.counts.iter().map(|c| c.div_ceil(2)).collect();
        if counts.iter().any(|c| *c < 5) {
            return None;
        }
        let g = GridFn { origin: self.origin.clone(), spacing: 2.0 * self.spacing, counts, values: Vec::new() };
        let total: usize = g.counts.iter().product();
        let values = (0..total)
            .map(|f| {
                let i: Vec<usize> = g.multi(f).iter().map(|k| 2 * k).collect();
                self.get(&i)
            })
            .collect();
        Some(GridFn { values, ..g })
    }

    /// CSV with header `x1,value` or `x1,x2,value`, row-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.dim() == 1 { "x1,value\n" } else { "x1,x2,value\n" });
        for f in 0..self.values.len() {
            let p = self.point(&self.multi(f));
            for x in &p {
                out.push_str(&crate::io::format_f64(*x));
                out.push(',');
            }
            out.push_str(&crate::io::format_f64(self.values[f]));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<GridFn> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let dim = match header.trim() {
            "x1,value" => 1,
            "x1,x2,value" => 2,
            h => return Err(Error::Parse(format!("unexpected grid header '{h}'"))),
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (n, line) in lines.enumerate() {
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Parse(format!("grid row {}: {e}", n + 2)))?;
            if row.len() != dim + 1 {
                return Err(Error::Parse(format!("grid row {} has {} fields", n + 2, row.len())));
            }
            rows.push(row);
        }
        let axis = |d: usize| -> Vec<f64> {
            let mut v: Vec<f64> = rows.iter().map(|r| r[d]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let axes: Vec<Vec<f64>> = (0..dim).map(axis).collect();
        if axes.iter().any(|a| a.len() < 2) {
            return Err(Error::Parse("grid needs at least two nodes per axis".into()));
        }
        let h = axes[0][1] - axes[0][0];
        for a in &axes {
            for w in a.windows(2) {
                if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
                    return Err(Error::Parse("grid is not uniform".into()));
                }
            }
        }
        let origin: Vec<f64> = axes.iter().map(|a| a[0]).collect();
        let counts: Vec<usize> = axes.iter().map(|a| a.len()).collect();
        if rows.len() != counts.iter().product::<usize>() {
            return Err(Error::Parse("grid rows do not fill a rectangle".into()));
        }
        let mut g = GridFn { origin, spacing: h, counts, values: vec![f64::NAN; rows.len()] };
        for r in &rows {
            let i: Vec<usize> = (0..dim).map(|d| ((r[d] - g.origin[d]) / h).round() as usize).collect();
            let f = g.flat(&i);
            g.values[f] = r[dim];
        }
        GridFn::new(g.origin, g.spacing, g.counts, g.values)
    }

    /// Centered second differences at an interior node: `[u11]` or `[u11, u12, u22]`.
    fn hessian(&self, i: &[usize]) -> Vec<f64> {
        let h2 = self.spacing * self.spacing;
        let at = |di: isize, dj: isize| {
            let mut k = i.to_vec();
            k[0] = (k[0] as isize + di) as usize;
            if self.dim() == 2 {
                k[1] = (k[1] as isize + dj) as usize;
            }
            self.get(&k)
        };
        let c = at(0, 0);
        let u11 = ((at(1, 0) - c) - (c - at(-1, 0))) / h2;
        if self.dim() == 1 {
            return vec![u11];
        }
        let u22 = ((at(0, 1) - c) - (c - at(0, -1))) / h2;
        let u12 = ((at(1, 1) - at(1, -1)) - (at(-1, 1) - at(-1, -1))) / (4.0 * h2);
        vec![u11, u12, u22]
    }
}

fn positive_definite(hs: &[f64]) -> bool {
    match hs.len() {
        1 => hs[0] > 0.0,
        _ => hs[0] > 0.0 && hs[0] * hs[2] - hs[1] * hs[1] > 0.0,
    }
}

fn log_det(hs: &[f64]) -> f64 {
    match hs.len() {
        1 => hs[0].ln(),
        _ => (hs[0] * hs[2] - hs[1] * hs[1]).ln(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualF {
    /// `ℱ(u) = −∫_P log det D²u dp + ℒ_σ(u)`.
    pub value: f64,
    /// `−∫_P log det D²u dp`, extrapolated over the excluded boundary strip by the mean.
    pub log_det_term: f64,
    /// `ℒ_σ(u)` on the multilinear interpolant.
    pub l_sigma: f64,
    /// Fraction of `vol(P)` not covered by evaluated cells.
    pub excluded_fraction: f64,
    /// `|ℱ_h − ℱ_{2h}|`, when the coarser grid is large enough.
    pub discretization_error: Option<f64>,
}

/// Distance from `x` to the boundary of `P` (negative outside).
fn boundary_distance(p: &Polytope, x: &[f64]) -> f64 {
    p.facets
        .iter()
        .map(|f| {
            let l = f.normal_f64();
            (l.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + to_f64(&f.a)) / f.norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn log_det_term(u: &GridFn, p: &Polytope) -> Result<(f64, f64)> {
    let h = u.spacing;
    let mut sum = 0.0;
    let mut count = 0usize;
    for f in 0..u.values.len() {
        let i = u.multi(f);
        if i.iter().zip(&u.counts).any(|(k, c)| *k == 0 || *k + 1 >= *c) {
            continue;
        }
        let x = u.point(&i);
        if boundary_distance(p, &x) < 2.0 * h {
            continue;
        }
        let hs = u.hessian(&i);
        if !positive_definite(&hs) {
            return Err(Error::NonconvexGrid(format!("{x:?}")));
        }
        sum += log_det(&hs);
        count += 1;
    }
    if count == 0 {
        return Err(Error::Invalid("grid has no nodes at distance 2h inside the polytope".into()));
    }
    let vol = to_f64(&p.volume());
    let cell = h.powi(u.dim() as i32);
    Ok((-vol * sum / count as f64, 1.0 - (count as f64 * cell / vol).min(1.0)))
}

fn dual_f_value(u: &GridFn, p: &Polytope, measure: Measure) -> Result<(f64, f64, f64)> {
    let (ld, excluded) = log_det_term(u, p)?;
    let l = boundary_functional(p, |x| u.interpolate(x), measure, 8).l_sigma;
    Ok((ld, l, excluded))
}

/// `ℱ(u)` for a grid function covering `P`. Nodes within `2h` of the boundary are excluded.
pub fn dual_f(u: &GridFn, p: &Polytope, measure: Measure) -> Result<DualF> {
    if u.dim() != p.dim {
        return Err(Error::Invalid(format!("grid has dimension {}, polytope {}", u.dim(), p.dim)));
    }
    let (log_det_term, l_sigma, excluded_fraction) = dual_f_value(u, p, measure)?;
    let value = log_det_term + l_sigma;
    let discretization_error = match u.coarsen() {
        Some(c) => dual_f_value(&c, p, measure).ok().map(|(a, b, _)| (a + b - value).abs()),
        None => None,
    };
    Ok(DualF { value, log_det_term, l_sigma, excluded_fraction, discretization_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Abreu {
    /// `S(u)` on the nodes with a two-cell margin.
    pub s: GridFn,
    /// `max |S_h − S_{2h}| / 3` over shared nodes, the `h²`-extrapolated error estimate.
    pub richardson: Option<f64>,
}

fn abreu_values(u: &GridFn) -> Result<GridFn> {
    if u.counts.iter().any(|c| *c < 5) {
        return Err(Error::Invalid("Abreu's operator needs at least five nodes per axis".into()));
    }
    let h2 = u.spacing * u.spacing;
    // inverse Hessian on nodes with a one-cell margin
    let inner: Vec<usize> = u.counts.iter().map(|c| c - 2).collect();
    let inv_grid = |i: &[usize]| -> Result<Vec<f64>> {
        let hs = u.hessian(i);
        if !positive_definite(&hs) {
            return Err(Error::NonconvexGrid(format!("{:?}", u.point(i))));
        }
        Ok(match hs.len() {
            1 => vec![1.0 / hs[0]],
            _ => {
                let det = hs[0] * hs[2] - hs[1] * hs[1];
                vec![hs[2] / det, -hs[1] / det, hs[0] / det]
            }
        })
    };
    let total: usize = inner.iter().product();
    let mut inv = Vec::with_capacity(total);
    for f in 0..total {
        let i: Vec<usize> = match u.dim() {
            1 => vec![f + 1],
            _ => vec![f / inner[1] + 1, f % inner[1] + 1],
        };
        inv.push(inv_grid(&i)?);
    }
    let w = |i: usize, j: usize, c: usize| -> f64 {
        // (i, j) in inner coordinates
        match u.dim() {
            1 => inv[i][c],
            _ => inv[i * inner[1] + j][c],
        }
    };
    let out_counts: Vec<usize> = u.counts.iter().map(|c| c - 4).collect();
    let out_total: usize = out_counts.iter().product();
    let mut s = Vec::with_capacity(out_total);
    for f in 0..out_total {
        if u.dim() == 1 {
            let i = f + 1;
            s.push(-((w(i + 1, 0, 0) - w(i, 0, 0)) - (w(i, 0, 0) - w(i - 1, 0, 0))) / h2);
        } else {
            let (i, j) = (f / out_counts[1] + 1, f % out_counts[1] + 1);
            let d11 = ((w(i + 1, j, 0) - w(i, j, 0)) - (w(i, j, 0) - w(i - 1, j, 0))) / h2;
            let d22 = ((w(i, j + 1, 2) - w(i, j, 2)) - (w(i, j, 2) - w(i, j - 1, 2))) / h2;
            let d12 =
                ((w(i + 1, j + 1, 1) - w(i + 1, j - 1, 1)) - (w(i - 1, j + 1, 1) - w(i - 1, j - 1, 1))) / (4.0 * h2);
            s.push(-(d11 + 2.0 * d12 + d22));
        }
    }
    let origin = u.origin.iter().map(|o| o + 2.0 * u.spacing).collect();
    GridFn::new(origin, u.spacing, out_counts, s)
}

/// Abreu's operator `S(u) = −Σ ∂²u^{ij}/∂x_i∂x_j` by centered differences, where `u^{ij}` is
/// the inverse Hessian.
pub fn abreu_s(u: &GridFn) -> Result<Abreu> {
    let s = abreu_values(u)?;
    let richardson = u.coarsen().and_then(|c| abreu_values(&c).ok()).map(|sc| {
        let mut worst = 0.0f64;
        for f in 0..sc.values.len() {
            let j = sc.multi(f);
            // coarse S node j sits on fine S node 2j + 2
            let i: Vec<usize> = j.iter().map(|k| 2 * k + 2).collect();
            if i.iter().zip(&s.counts).all(|(k, c)| k < c) {
                worst = worst.max((s.get(&i) - sc.values[f]).abs());
            }
        }
        worst / 3.0
    });
    Ok(Abreu { s, richardson })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::catalog;

    #[test]
    fn quadratic_has_zero_abreu_operator() {
        let u = GridFn::from_fn(vec![-1.0], 0.05, vec![41], |p| 0.5 * p[0] * p[0]).unwrap();
        let a = abreu_s(&u).unwrap();
        assert_eq!(a.s.counts, vec![37]);
        assert!(a.s.values.iter().all(|s| s.abs() < 1e-9));
        let v = GridFn::from_fn(vec![-1.0, -1.0], 0.1, vec![21, 21], |p| p[0] * p[0] + 0.5 * p[0] * p[1] + p[1] * p[1])
            .unwrap();
        assert!(abreu_s(&v).unwrap().s.values.iter().all(|s| s.abs() < 1e-8));
    }

    #[test]
    fn nonconvex_grid_is_rejected() {
        let u = GridFn::from_fn(vec![-1.0], 0.1, vec![21], |p| -p[0] * p[0]).unwrap();
        assert_eq!(abreu_s(&u).unwrap_err().code(), "NONCONVEX_GRID");
    }

    #[test]
    fn dual_f_of_half_square_norm() {
        let sq = catalog::square();
        let u = GridFn::from_fn(vec![-1.0, -1.0], 0.02, vec![101, 101], |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let f = dual_f(&u, &sq, Measure::Canonical).unwrap();
        assert!(f.log_det_term.abs() < 1e-9);
        // ℒ_σ(|p|²/2) on the square: boundary 4·∫_{-1}^{1}(1+t²)/2 dt = 16/3, minus 2·∫|p|²/2 = 8/3
        assert!((f.l_sigma - 8.0 / 3.0).abs() < 1e-3, "{}", f.l_sigma);
        assert!(f.value > 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let u = GridFn::from_fn(vec![0.0, 1.0], 0.5, vec![3, 4], |p| p[0] - 2.0 * p[1]).unwrap();
        let back = GridFn::from_csv(&u.to_csv()).unwrap();
        assert_eq!(back, u);
        assert!((u.interpolate(&[0.25, 1.75]) - (0.25 - 3.5)).abs() < 1e-15);
    }
}
