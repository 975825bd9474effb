//! Finitely supported vectors and functionals, the duality pairing, the sup
//! norm and cone geometry.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::json;

use crate::error::{param, RenormError, Result};
use crate::norm::NormOracle;
use crate::report::{Check, Report};
use crate::rng;

/// Absolute tolerance for claims that are exact in finite arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Relative tolerance for claims that depend on a root finder.
pub const ROOT_TOL: f64 = 1e-9;

/// A finitely supported real vector indexed by non-negative integers.
///
/// No stored entry is ever exactly zero: setting a coordinate to zero removes
/// it, and arithmetic drops cancelled entries.
#[derive(Clone, Default, PartialEq, Serialize)]
pub struct SparseVector {
    entries: BTreeMap<usize, f64>,
}

#[derive(Deserialize)]
struct RawEntries {
    entries: BTreeMap<usize, f64>,
}

impl<'de> Deserialize<'de> for SparseVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawEntries::deserialize(d)?;
        if let Some((k, v)) = raw.entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(serde::de::Error::custom(format!("entry {k} is not finite: {v}")));
        }
        Ok(SparseVector::from_pairs(raw.entries))
    }
}

impl fmt::Debug for SparseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (n, (i, v)) in self.entries.iter().enumerate() {
            if n > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{i}: {v}")?;
        }
        f.write_str("]")
    }
}

impl SparseVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit vector `e_i`.
    pub fn unit(i: usize) -> Self {
        let mut v = Self::zero();
        v.set(i, 1.0);
        v
    }

    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut v = Self::zero();
        for (i, x) in pairs {
            let cur = v.get(i);
            v.set(i, cur + x);
        }
        v
    }

    /// Dense slice `values[i]` placed at coordinate `offset + i`.
    pub fn from_dense(offset: usize, values: &[f64]) -> Self {
        Self::from_pairs(values.iter().enumerate().map(|(i, &x)| (offset + i, x)))
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries.get(&i).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, i: usize, value: f64) {
        if value == 0.0 {
            self.entries.remove(&i);
        } else {
            self.entries.insert(i, value);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &v)| (i, v))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    /// Coordinate of largest magnitude; the lowest index wins ties.
    pub fn argmax_abs(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in self.iter() {
            match best {
                Some((_, b)) if v.abs() <= b.abs() => {}
                _ => best = Some((i, v)),
            }
        }
        best
    }

    pub fn scale(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero();
        }
        let mut out = Self::zero();
        for (i, v) in self.iter() {
            out.set(i, v * c);
        }
        out
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &SparseVector) -> Self {
        let mut out = self.clone();
        for (i, v) in other.iter() {
            let cur = out.get(i);
            out.set(i, cur + c * v);
        }
        out
    }

    /// Coordinatewise absolute value.
    pub fn abs(&self) -> Self {
        Self::from_pairs(self.iter().map(|(i, v)| (i, v.abs())))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("sparse vectors always serialize")
    }

    /// Parse `{"entries": {"1": 0.5}}` or the shorthand `1:0.5,3:-2`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t).map_err(|e| RenormError::Parameter(format!("bad vector JSON: {e}")));
        }
        let mut pairs = Vec::new();
        for part in t.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let parsed = part
                .split_once(':')
                .and_then(|(i, v)| Some((i.trim().parse::<usize>().ok()?, v.trim().parse::<f64>().ok()?)));
            match parsed {
                Some((i, v)) if v.is_finite() => pairs.push((i, v)),
                _ => {
                    return Err(RenormError::Parameter(format!(
                        "bad vector entry {part:?}, expected index:value"
                    )))
                }
            }
        }
        Ok(SparseVector::from_pairs(pairs))
    }
}

impl Add for &SparseVector {
    type Output = SparseVector;
    fn add(self, rhs: &SparseVector) -> SparseVector {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SparseVector {
    type Output = SparseVector;
    fn sub(self, rhs: &SparseVector) -> SparseVector {
        self.axpy(-1.0, rhs)
    }
}

impl Neg for &SparseVector {
    type Output = SparseVector;
    fn neg(self) -> SparseVector {
        self.scale(-1.0)
    }
}

/// Dual norm attached to a functional.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualNorm {
    /// Dual of the sup norm: the l1 norm of the coefficients.
    #[default]
    SupDual,
    /// Dual norm value supplied by the caller for a user-defined base norm.
    UserSupplied(f64),
}

fn is_sup_dual(d: &DualNorm) -> bool {
    *d == DualNorm::SupDual
}

/// A finitely supported bounded linear functional.
#[derive(Clone, PartialEq)]
pub struct DualFunctional {
    coefficients: SparseVector,
    dual_norm: DualNorm,
}

#[derive(Serialize, Deserialize)]
struct RawFunctional {
    entries: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "is_sup_dual")]
    dual_norm: DualNorm,
}

impl Serialize for DualFunctional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawFunctional {
            entries: self.coefficients.entries.clone(),
            dual_norm: self.dual_norm,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DualFunctional {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawFunctional::deserialize(d)?;
        if raw.entries.values().any(|v| !v.is_finite()) {
            return Err(serde::de::Error::custom("functional coefficients must be finite"));
        }
        Ok(DualFunctional {
            coefficients: SparseVector::from_pairs(raw.entries),
            dual_norm: raw.dual_norm,
        })
    }
}

impl fmt::Debug for DualFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{:?}", self.coefficients)
    }
}

impl DualFunctional {
    pub fn new(coefficients: SparseVector) -> Self {
        DualFunctional {
            coefficients,
            dual_norm: DualNorm::SupDual,
        }
    }

    pub fn with_dual_norm(coefficients: SparseVector, value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return param(format!("dual norm must be positive and finite, got {value}"));
        }
        Ok(DualFunctional {
            coefficients,
            dual_norm: DualNorm::UserSupplied(value),
        })
    }

    /// The coordinate functional `e_i^*`.
    pub fn coordinate(i: usize) -> Self {
        Self::new(SparseVector::unit(i))
    }

    pub fn coefficients(&self) -> &SparseVector {
        &self.coefficients
    }

    pub fn dual_norm_kind(&self) -> DualNorm {
        self.dual_norm
    }

    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|(_, v)| v.abs()).sum()
    }

    pub fn dual_norm(&self) -> f64 {
        match self.dual_norm {
            DualNorm::SupDual => self.l1_norm(),
            DualNorm::UserSupplied(v) => v,
        }
    }

    pub fn is_normalized(&self) -> bool {
        (self.dual_norm() - 1.0).abs() <= EXACT_TOL
    }

    pub fn apply(&self, x: &SparseVector) -> f64 {
        pairing(self, x)
    }

    pub fn scale(&self, c: f64) -> Self {
        DualFunctional {
            coefficients: self.coefficients.scale(c),
            dual_norm: match self.dual_norm {
                DualNorm::SupDual => DualNorm::SupDual,
                DualNorm::UserSupplied(v) => DualNorm::UserSupplied(v * c.abs()),
            },
        }
    }
}

/// `<f, x>`, summed over the common support in index order.
pub fn pairing(f: &DualFunctional, x: &SparseVector) -> f64 {
    let (small, large) = if f.coefficients.support_len() <= x.support_len() {
        (&f.coefficients, x)
    } else {
        (x, &f.coefficients)
    };
    small.iter().map(|(i, v)| v * large.get(i)).filter(|p| *p != 0.0).sum()
}

pub fn sup_norm(x: &SparseVector) -> f64 {
    x.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
}

/// Which closed cone a vector falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeSide {
    Plus,
    Minus,
    Outside,
}

impl ConeSide {
    pub fn in_cone(self) -> bool {
        self != ConeSide::Outside
    }

    pub fn flipped(self) -> Self {
        match self {
            ConeSide::Plus => ConeSide::Minus,
            ConeSide::Minus => ConeSide::Plus,
            ConeSide::Outside => ConeSide::Outside,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConeSide::Plus => "plus",
            ConeSide::Minus => "minus",
            ConeSide::Outside => "outside",
        }
    }
}

pub(crate) fn check_level(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        param(format!("cone level must lie in (0, 1), got {r}"))
    }
}

/// Classify `x` against the cones `{<f,y> >= r N(y)}` and `{<f,y> <= -r N(y)}`.
/// The zero vector lies in both and is reported as `Plus`.
pub fn cone_side(f: &DualFunctional, r: f64, norm: &NormOracle, x: &SparseVector) -> Result<ConeSide> {
    check_level(r)?;
    if x.is_zero() {
        return Ok(ConeSide::Plus);
    }
    let p = pairing(f, x);
    let n = norm.eval(x)?;
    Ok(classify(p, r * n))
}

pub(crate) fn classify(pair: f64, threshold: f64) -> ConeSide {
    if pair >= threshold {
        ConeSide::Plus
    } else if pair <= -threshold {
        ConeSide::Minus
    } else {
        ConeSide::Outside
    }
}

/// Samples the sup-ball `B(x, |x|/8)` restricted to the span of the supports
/// of `x` and `f0` plus one fresh coordinate, and checks that no sample lies
/// in the cone of level `1 - delta` around `f0`.
pub fn fact1_probe(f0: &DualFunctional, delta: f64, x: &SparseVector, samples: usize, seed: u64) -> Result<Report> {
    if !(delta > 0.0 && delta < 0.5) {
        return param(format!("delta must lie in (0, 1/2), got {delta}"));
    }
    let xn = sup_norm(x);
    let fx = pairing(f0, x);
    if x.is_zero() || fx.abs() >= xn / 8.0 {
        return Err(RenormError::HypothesisNotMet(format!(
            "|<f0,x>| = {} is not below |x|/8 = {}",
            fx.abs(),
            xn / 8.0
        )));
    }
    let mut coords: Vec<usize> = x.support().chain(f0.coefficients().support()).collect();
    coords.sort_unstable();
    coords.dedup();
    let fresh = coords.last().map_or(0, |m| m + 1);
    coords.push(fresh);

    let sup = NormOracle::sup();
    let radius = xn / 8.0;
    let mut r = rng::seeded(seed);
    let mut check = Check::new("outside-cone");
    for _ in 0..samples {
        let mut y = x.clone();
        for &c in &coords {
            let d = r.random_range(-radius..=radius);
            y.set(c, y.get(c) + d);
        }
        let side = cone_side(f0, 1.0 - delta, &sup, &y)?;
        check.observe_bool(side == ConeSide::Outside, || json!({ "y": y.to_json(), "side": side }));
    }
    Ok(Report::from_checks(seed, vec![check]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_both_forms() {
        let v = SparseVector::from_pairs([(1, 0.5), (3, -2.0)]);
        assert_eq!(SparseVector::parse("1:0.5, 3:-2").unwrap(), v);
        assert_eq!(SparseVector::parse(r#"{"entries": {"1": 0.5, "3": -2.0}}"#).unwrap(), v);
        assert_eq!(SparseVector::parse("").unwrap(), SparseVector::zero());
        assert!(SparseVector::parse("1=0.5").is_err());
        assert!(SparseVector::parse("x:1").is_err());
        assert!(SparseVector::parse("{\"entries\": 3}").is_err());
    }

    fn v(pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn pairing_examples() {
        let e1 = SparseVector::unit(1);
        let e2 = SparseVector::unit(2);
        assert_eq!(pairing(&DualFunctional::coordinate(1), &e1), 1.0);
        assert_eq!(pairing(&DualFunctional::coordinate(1), &e2), 0.0);
        let f = DualFunctional::new(v(&[(1, 0.5), (2, 0.5)]));
        assert_eq!(pairing(&f, &v(&[(1, 1.0), (2, 1.0)])), 1.0);
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(sup_norm(&SparseVector::zero()), 0.0);
        assert_eq!(sup_norm(&v(&[(1, 1.0), (7, -3.0)])), 3.0);
        assert_eq!(sup_norm(&v(&[(1, 0.8), (2, 0.5)])), 0.8);
    }

    #[test]
    fn cone_side_examples() {
        let f = DualFunctional::coordinate(1);
        let sup = NormOracle::sup();
        assert_eq!(
            cone_side(&f, 0.6, &sup, &SparseVector::unit(2)).unwrap(),
            ConeSide::Outside
        );
        assert_eq!(
            cone_side(&f, 0.6, &sup, &v(&[(1, 0.8), (2, 0.5)])).unwrap(),
            ConeSide::Plus
        );
        assert_eq!(cone_side(&f, 0.6, &sup, &v(&[(1, -1.0)])).unwrap(), ConeSide::Minus);
        assert_eq!(cone_side(&f, 0.6, &sup, &SparseVector::zero()).unwrap(), ConeSide::Plus);
        assert!(matches!(
            cone_side(&f, 1.0, &sup, &SparseVector::unit(1)),
            Err(RenormError::Parameter(_))
        ));
        assert!(cone_side(&f, 0.0, &sup, &SparseVector::unit(1)).is_err());
    }

    #[test]
    fn zeros_are_never_stored() {
        let a = v(&[(1, 1.0), (2, 2.0)]);
        let b = v(&[(1, 1.0)]);
        let d = &a - &b;
        assert_eq!(d.support_len(), 1);
        assert_eq!(a.scale(0.0).support_len(), 0);
        let mut c = a.clone();
        c.set(2, 0.0);
        assert_eq!(c.support().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn json_shape() {
        let x = v(&[(1, 0.5), (10, -2.0)]);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"entries":{"1":0.5,"10":-2.0}}"#);
        let back: SparseVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);
        let with_zero: SparseVector = serde_json::from_str(r#"{"entries":{"3":0.0,"4":1}}"#).unwrap();
        assert_eq!(with_zero.support_len(), 1);
        let f = DualFunctional::coordinate(2);
        assert_eq!(serde_json::to_string(&f).unwrap(), r#"{"entries":{"2":1.0}}"#);
        let g: DualFunctional = serde_json::from_str(r#"{"entries":{"2":1.0}}"#).unwrap();
        assert_eq!(g, f);
    }

    #[test]
    fn dual_norms() {
        let f = DualFunctional::new(v(&[(1, 0.5), (2, -0.5)]));
        assert!(f.is_normalized());
        let g = DualFunctional::with_dual_norm(v(&[(1, 1.0)]), 1.0).unwrap();
        assert_eq!(g.dual_norm_kind(), DualNorm::UserSupplied(1.0));
        assert!(DualFunctional::with_dual_norm(v(&[(1, 1.0)]), 0.0).is_err());
    }

    #[test]
    fn fact1_examples() {
        let f0 = DualFunctional::coordinate(1);
        let r = fact1_probe(&f0, 0.4, &SparseVector::unit(2), 1000, 3).unwrap();
        assert!(r.pass);
        assert_eq!(r.samples, 1000);
        let r = fact1_probe(&f0, 0.3, &v(&[(1, 0.1), (2, 1.0)]), 1000, 4).unwrap();
        assert!(r.pass);
        assert!(matches!(
            fact1_probe(&f0, 0.4, &SparseVector::unit(1), 10, 1),
            Err(RenormError::HypothesisNotMet(_))
        ));
        assert!(fact1_probe(&f0, 0.6, &SparseVector::unit(2), 10, 1).is_err());
    }

    fn arb_vec() -> impl Strategy<Value = SparseVector> {
        proptest::collection::vec((0usize..12, -5.0f64..5.0), 0..8).prop_map(SparseVector::from_pairs)
    }

    proptest! {
        #[test]
        fn pairing_is_bilinear(a in arb_vec(), b in arb_vec(), fc in arb_vec(), s in -3.0f64..3.0) {
            let f = DualFunctional::new(fc);
            let lhs = pairing(&f, &a.axpy(s, &b));
            let rhs = pairing(&f, &a) + s * pairing(&f, &b);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())) * 10.0);
        }

        #[test]
        fn sup_norm_is_lattice_monotone(a in arb_vec(), grow in proptest::collection::vec(0.0f64..2.0, 12)) {
            let mut b = SparseVector::zero();
            for (i, x) in a.iter() {
                b.set(i, x.signum() * (x.abs() + grow[i]));
            }
            prop_assert!(sup_norm(&a) <= sup_norm(&b));
        }

        #[test]
        fn cones_are_positively_homogeneous(x in arb_vec(), f in arb_vec(), lam in 0.01f64..100.0, r in 0.05f64..0.95) {
            let sup = NormOracle::sup();
            let f = DualFunctional::new(f);
            prop_assume!(!x.is_zero());
            let s = cone_side(&f, r, &sup, &x).unwrap();
            let sp = cone_side(&f, r, &sup, &x.scale(lam)).unwrap();
            let sn = cone_side(&f, r, &sup, &x.scale(-lam)).unwrap();
            // scaling can move a point sitting on the cone boundary by one ulp
            let p = pairing(&f, &x);
            let on_boundary = (p.abs() - r * sup_norm(&x)).abs() <= 1e-12 * sup_norm(&x) * f.l1_norm().max(1.0);
            if !on_boundary {
                prop_assert_eq!(s, sp);
                prop_assert_eq!(s.flipped(), sn);
            }
        }

        #[test]
        fn cones_are_nested(x in arb_vec(), f in arb_vec(), r1 in 0.01f64..0.99, r2 in 0.01f64..0.99) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let sup = NormOracle::sup();
            let f = DualFunctional::new(f);
            if cone_side(&f, hi, &sup, &x).unwrap().in_cone() {
                prop_assert!(cone_side(&f, lo, &sup, &x).unwrap().in_cone());
            }
        }
    }
}
