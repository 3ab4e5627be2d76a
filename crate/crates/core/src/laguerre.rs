//! Power diagrams of max-affine functions `φ(x) = max_k ⟨p_k, x⟩ − u_k` in one and two
//! dimensions. Cell `k` is the set where piece `k` attains the maximum.

use crate::error::{Error, Result};
use crate::expint::{dot2, P2};
use crate::geometry::{Line, Region2, RegionError, TaggedPolygon};

/// Cell of a one-dimensional diagram: `[lo, hi]`, possibly with infinite ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Cell of a planar diagram: the box-clipped polygon (kept for further clipping) and
/// the exact region.
#[derive(Debug, Clone)]
pub struct Cell2 {
    pub poly: TaggedPolygon,
    pub region: Region2,
}

#[derive(Debug, Clone)]
pub enum Diagram {
    One(Vec<Option<Interval>>),
    Two(Vec<Option<Cell2>>),
}

impl Diagram {
    pub fn len(&self) -> usize {
        match self {
            Diagram::One(c) => c.len(),
            Diagram::Two(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_nonempty(&self, k: usize) -> bool {
        match self {
            Diagram::One(c) => c[k].is_some(),
            Diagram::Two(c) => c[k].is_some(),
        }
    }

    /// Finite vertices of cell `k` (breakpoints in one dimension).
    pub fn cell_vertices(&self, k: usize) -> Vec<Vec<f64>> {
        match self {
            Diagram::One(c) => c[k]
                .map(|iv| [iv.lo, iv.hi].iter().filter(|x| x.is_finite()).map(|&x| vec![x]).collect())
                .unwrap_or_default(),
            Diagram::Two(c) => c[k]
                .as_ref()
                .map(|cell| cell.region.vertices().iter().map(|v| v.to_vec()).collect())
                .unwrap_or_default(),
        }
    }
}

/// Returns the first pair of pieces with numerically identical slopes, if any.
pub fn duplicate_slopes(slopes: &[Vec<f64>]) -> Option<(usize, usize)> {
    let mut idx: Vec<usize> = (0..slopes.len()).collect();
    idx.sort_by(|&a, &b| {
        slopes[a]
            .iter()
            .zip(&slopes[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in idx.windows(2) {
        let (a, b) = (&slopes[w[0]], &slopes[w[1]]);
        let scale = 1.0 + a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
        if a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-13 * scale) {
            return Some((w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    None
}

pub fn diagram(slopes: &[Vec<f64>], heights: &[f64]) -> Result<Diagram> {
    diagram_ordered(slopes, heights, None)
}

/// As [`diagram`], reusing a clipping order from [`neighbor_order`] in the planar case.
pub fn diagram_ordered(slopes: &[Vec<f64>], heights: &[f64], order: Option<&[Vec<u32>]>) -> Result<Diagram> {
    if slopes.is_empty() || slopes.len() != heights.len() {
        return Err(Error::Invalid("slopes and heights must be nonempty and of equal length".into()));
    }
    if let Some((a, b)) = duplicate_slopes(slopes) {
        return Err(Error::Degenerate(a, b));
    }
    match slopes[0].len() {
        1 => {
            let s: Vec<f64> = slopes.iter().map(|p| p[0]).collect();
            Ok(Diagram::One(diagram_1d(&s, heights)))
        }
        2 => {
            let s: Vec<P2> = slopes.iter().map(|p| [p[0], p[1]]).collect();
            Ok(Diagram::Two(match order {
                Some(o) => diagram_2d_ordered(&s, heights, o)?,
                None => diagram_2d(&s, heights)?,
            }))
        }
        d => Err(Error::Dimension(d)),
    }
}

/// Lower hull of `(p_k, u_k)`: active pieces in increasing slope order.
pub fn lower_hull_1d(slopes: &[f64], heights: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..slopes.len()).collect();
    idx.sort_by(|&a, &b| slopes[a].total_cmp(&slopes[b]));
    let mut hull: Vec<usize> = Vec::new();
    for &c in &idx {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (slopes[b] - slopes[a]) * (heights[c] - heights[a])
                - (heights[b] - heights[a]) * (slopes[c] - slopes[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    hull
}

pub fn diagram_1d(slopes: &[f64], heights: &[f64]) -> Vec<Option<Interval>> {
    let hull = lower_hull_1d(slopes, heights);
    let mut cells = vec![None; slopes.len()];
    let bp: Vec<f64> =
        hull.windows(2).map(|w| (heights[w[1]] - heights[w[0]]) / (slopes[w[1]] - slopes[w[0]])).collect();
    for (m, &k) in hull.iter().enumerate() {
        let lo = if m == 0 { f64::NEG_INFINITY } else { bp[m - 1] };
        let hi = if m + 1 == hull.len() { f64::INFINITY } else { bp[m] };
        cells[k] = Some(Interval { lo, hi });
    }
    cells
}

/// Initial half-width of the clipping square from the data scale.
fn initial_half_width(slopes: &[P2], heights: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &u in heights {
        lo = lo.min(u);
        hi = hi.max(u);
    }
    let spread = hi - lo;
    let pmax = slopes.iter().fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let mut dmin = f64::INFINITY;
    if slopes.len() <= 4000 {
        for i in 0..slopes.len() {
            for j in i + 1..slopes.len() {
                let d = (slopes[i][0] - slopes[j][0]).abs().max((slopes[i][1] - slopes[j][1]).abs());
                dmin = dmin.min(d);
            }
        }
    }
    if !dmin.is_finite() || dmin <= 0.0 {
        dmin = 1e-3 * pmax.max(1.0);
    }
    64.0 * (1.0 + spread) / dmin
}

/// Is `d` a recession direction of cell `k`, i.e. in the normal cone of the slope hull at `p_k`?
pub fn in_normal_cone(slopes: &[P2], k: usize, d: P2) -> bool {
    slopes.iter().enumerate().all(|(l, p)| {
        if l == k {
            return true;
        }
        let e = [p[0] - slopes[k][0], p[1] - slopes[k][1]];
        dot2(e, d) <= 1e-9 * (e[0].abs() + e[1].abs())
    })
}

pub fn cell_2d(slopes: &[P2], heights: &[f64], k: usize, order: &[u32], half_width: f64) -> Result<Option<Cell2>> {
    let mut l = half_width;
    for _ in 0..12 {
        let mut poly = TaggedPolygon::square(l);
        for &j in order {
            let j = j as usize;
            if j == k {
                continue;
            }
            poly.clip(Line {
                n: [slopes[j][0] - slopes[k][0], slopes[j][1] - slopes[k][1]],
                c: heights[j] - heights[k],
                id: j as u32,
            });
            if poly.is_empty() {
                return Ok(None);
            }
        }
        poly.refine_vertices();
        if poly.is_sliver() {
            return Ok(None);
        }
        match poly.to_region(|d| in_normal_cone(slopes, k, d)) {
            Ok(region) => return Ok(Some(Cell2 { poly, region })),
            Err(RegionError::BoxTooSmall) => l *= 64.0,
            Err(RegionError::NotPointed) => {
                return Err(Error::DegenerateHull(format!("cell {k} is not a pointed region")));
            }
        }
    }
    Err(Error::DegenerateHull(format!("cell {k} could not be enclosed")))
}

/// For each slope, all other slopes sorted by distance (ties by index).
pub fn neighbor_order(slopes: &[P2]) -> Vec<Vec<u32>> {
    (0..slopes.len())
        .map(|k| {
            let pk = slopes[k];
            let dist = |a: usize| (slopes[a][0] - pk[0]).powi(2) + (slopes[a][1] - pk[1]).powi(2);
            let mut order: Vec<u32> = (0..slopes.len() as u32).filter(|&j| j as usize != k).collect();
            order.sort_by(|&a, &b| dist(a as usize).total_cmp(&dist(b as usize)).then(a.cmp(&b)));
            order
        })
        .collect()
}

pub fn diagram_2d(slopes: &[P2], heights: &[f64]) -> Result<Vec<Option<Cell2>>> {
    diagram_2d_ordered(slopes, heights, &neighbor_order(slopes))
}

/// Planar diagram with a precomputed clipping order per cell (see [`neighbor_order`]).
pub fn diagram_2d_ordered(slopes: &[P2], heights: &[f64], order: &[Vec<u32>]) -> Result<Vec<Option<Cell2>>> {
    let l0 = initial_half_width(slopes, heights);
    let mut cells = Vec::with_capacity(slopes.len());
    for (k, ord) in order.iter().enumerate() {
        cells.push(cell_2d(slopes, heights, k, ord, l0)?);
    }
    Ok(cells)
}

/// Evaluates `φ(x) = max_k ⟨p_k,x⟩ − u_k` and the index attaining it.
pub fn eval_max(slopes: &[Vec<f64>], heights: &[f64], x: &[f64]) -> (f64, usize) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (k, (p, u)) in slopes.iter().zip(heights).enumerate() {
        let v = p.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - u;
        if v > best {
            best = v;
            arg = k;
        }
    }
    (best, arg)
}
