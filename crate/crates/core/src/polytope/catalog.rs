//! Standard examples: reflexive polygons of the smooth toric del Pezzo surfaces, the
//! segments `[-1, 1]` and `[-1, 2]`, and the square.

use crate::rational::int;

use super::Polytope;

fn reflexive(normals: &[&[i64]], name: &str) -> Polytope {
    let facets: Vec<(&[i64], _)> = normals.iter().map(|l| (*l, int(1))).collect();
    Polytope::from_hrep_i64(&facets).expect("catalog polytope is valid").with_name(name)
}

/// `[-1, 1]`, the polytope of the projective line.
pub fn segment() -> Polytope {
    reflexive(&[&[1], &[-1]], "segment")
}

/// `[-1, 2]`, an asymmetric segment with barycenter `1/2`.
pub fn uneven_segment() -> Polytope {
    Polytope::from_hrep_i64(&[(&[1], int(1)), (&[-1], int(2))]).expect("valid").with_name("uneven_segment")
}

/// `[-1, 1]²`, for the product of two projective lines.
pub fn square() -> Polytope {
    reflexive(&[&[1, 0], &[-1, 0], &[0, 1], &[0, -1]], "square")
}

/// Triangle with vertices `(-1,-1), (2,-1), (-1,2)`, for the projective plane.
pub fn p2() -> Polytope {
    reflexive(&[&[1, 0], &[0, 1], &[-1, -1]], "p2")
}

/// Projective plane blown up in one point.
pub fn dp1() -> Polytope {
    reflexive(&[&[1, 0], &[0, 1], &[-1, -1], &[1, 1]], "dp1")
}

/// Projective plane blown up in two points.
pub fn dp2() -> Polytope {
    reflexive(&[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[0, -1]], "dp2")
}

/// Hexagon, for the projective plane blown up in three points.
pub fn hexagon() -> Polytope {
    reflexive(&[&[1, 0], &[1, 1], &[0, 1], &[-1, 0], &[-1, -1], &[0, -1]], "hexagon")
}

pub fn all() -> Vec<Polytope> {
    vec![segment(), uneven_segment(), square(), p2(), dp1(), dp2(), hexagon()]
}

pub fn by_name(name: &str) -> Option<Polytope> {
    all().into_iter().find(|p| p.name.as_deref() == Some(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, rvec};
    use num_traits::Zero;

    #[test]
    fn barycenters() {
        for p in [segment(), square(), p2(), hexagon()] {
            assert!(p.barycenter().iter().all(|x| x.is_zero()), "{:?}", p.name);
        }
        assert_eq!(dp1().barycenter(), vec![frac(1, 12), frac(1, 12)]);
        assert_eq!(uneven_segment().barycenter(), vec![frac(1, 2)]);
        assert!(!dp2().barycenter().iter().all(|x| x.is_zero()));
        assert_eq!(hexagon().vertices.len(), 6);
        assert_eq!(dp2().vertices.len(), 5);
        assert!(p2().vertices.contains(&rvec(&[2, -1])));
    }
}
