//! File formats: polytope and test-configuration JSON, max-affine JSON, grid CSV, and a
//! JSON writer that prints every float with 17 significant digits.

use std::io::Write;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rational::{format_rational, parse_rational, RVec, Rational};

pub mod rational_str {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        value_to_rational(&v).map_err(serde::de::Error::custom)
    }
}

pub mod rvec_str {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &RVec, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Vec<String> = v.iter().map(format_rational).collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RVec, D::Error> {
        let v: Vec<serde_json::Value> = Vec::deserialize(d)?;
        v.iter().map(value_to_rational).collect::<Result<_>>().map_err(serde::de::Error::custom)
    }
}

/// Accepts rationals as strings (`"3/4"`) or JSON integers.
pub fn value_to_rational(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) if n.is_i64() || n.is_u64() => parse_rational(&n.to_string()),
        other => Err(Error::Parse(format!("expected a rational string, got {other}"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FacetJson {
    pub l: Vec<i64>,
    #[serde(with = "rational_str")]
    pub a: Rational,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeJson {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hrep: Option<Vec<FacetJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_vrep")]
    pub vrep: Option<Vec<RVec>>,
}

mod opt_vrep {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<RVec>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strs: Option<Vec<Vec<String>>> =
            v.as_ref().map(|pts| pts.iter().map(|p| p.iter().map(format_rational).collect()).collect());
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<RVec>>, D::Error> {
        let v: Option<Vec<Vec<serde_json::Value>>> = Option::deserialize(d)?;
        v.map(|pts| {
            pts.iter().map(|p| p.iter().map(value_to_rational).collect::<Result<RVec>>()).collect::<Result<Vec<RVec>>>()
        })
        .transpose()
        .map_err(serde::de::Error::custom)
    }
}

impl PolytopeJson {
    pub fn from_polytope(p: &Polytope) -> Result<PolytopeJson> {
        let hrep = p
            .facets
            .iter()
            .map(|f| {
                let l = f
                    .normal
                    .iter()
                    .map(|x| i64::try_from(x).map_err(|_| Error::Invalid("normal entry exceeds i64".into())))
                    .collect::<Result<Vec<i64>>>()?;
                Ok(FacetJson { l, a: f.a.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PolytopeJson {
            name: p.name.clone().unwrap_or_default(),
            dim: p.dim,
            hrep: Some(hrep),
            vrep: Some(p.vertices.clone()),
        })
    }

    /// Builds the polytope, preferring the H-representation and checking consistency
    /// with the V-representation when both are given.
    pub fn to_polytope(&self) -> Result<Polytope> {
        let p = match (&self.hrep, &self.vrep) {
            (Some(h), _) => {
                let f: Vec<(Vec<BigInt>, Rational)> =
                    h.iter().map(|f| (f.l.iter().map(|&x| BigInt::from(x)).collect(), f.a.clone())).collect();
                Polytope::from_hrep(&f)?
            }
            (None, Some(v)) => Polytope::from_vrep(v)?,
            (None, None) => return Err(Error::Parse("polytope needs hrep or vrep".into())),
        };
        if p.dim != self.dim {
            return Err(Error::Invalid(format!("declared dim {} but data has dim {}", self.dim, p.dim)));
        }
        if let (Some(_), Some(v)) = (&self.hrep, &self.vrep) {
            let mut given = v.clone();
            given.sort_by(|a, b| crate::rational::lex_cmp(a, b));
            if given != p.vertices {
                return Err(Error::Invalid("hrep and vrep describe different polytopes".into()));
            }
        }
        Ok(if self.name.is_empty() { p } else { p.with_name(&self.name) })
    }
}

pub fn read_polytope(text: &str) -> Result<Polytope> {
    let j: PolytopeJson = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    j.to_polytope()
}

pub fn write_polytope(p: &Polytope) -> Result<String> {
    to_json_string(&PolytopeJson::from_polytope(p)?)
}

/// Pretty JSON formatter writing floats as `d.dddddddddddddddde±x` (17 significant digits).
struct PreciseFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        if v.is_finite() {
            write!(w, "{}", format_f64(v))
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Formats a float with 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn to_json_string<T: Serialize>(v: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = PreciseFormatter { inner: serde_json::ser::PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    v.serialize(&mut ser).map_err(|e| Error::Parse(e.to_string()))?;
    let mut s = String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polytope_round_trip() {
        let text = r#"{"name":"dp1","dim":2,"hrep":[{"l":[1,0],"a":"1"},{"l":[0,1],"a":"1"},{"l":[-1,-1],"a":"1"},{"l":[1,1],"a":"1"}]}"#;
        let p = read_polytope(text).unwrap();
        assert_eq!(p.name.as_deref(), Some("dp1"));
        let out = write_polytope(&p).unwrap();
        let q = read_polytope(&out).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn vrep_only_and_mismatch() {
        let p = read_polytope(r#"{"dim":1,"vrep":[["-1"],["2"]]}"#).unwrap();
        assert_eq!(p.volume(), crate::rational::int(3));
        let e = read_polytope(r#"{"dim":1,"hrep":[{"l":[1],"a":"1"},{"l":[-1],"a":"1"}],"vrep":[["-1"],["2"]]}"#);
        assert!(e.is_err());
    }

    #[test]
    fn floats_carry_17_digits() {
        let s = to_json_string(&serde_json::json!({"x": 0.1, "n": 3})).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
    }
}
