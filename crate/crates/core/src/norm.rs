//! Evaluable equivalent norms.
//!
//! A [`NormOracle`] is a cheaply clonable handle to a deterministic norm on
//! finitely supported vectors, together with declared equivalence constants
//! `c1 |x|_inf <= N(x) <= c2 |x|_inf`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{param, Result};
use crate::report::{Check, Report};
use crate::rng;
use crate::vectors::{sup_norm, SparseVector};

/// Where a norm came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sup,
    Lp,
    Scaled,
    Seed,
    Approx,
    Combined,
    Cascade,
    Custom,
}

pub trait Norm: Send + Sync {
    fn eval(&self, x: &SparseVector) -> Result<f64>;

    /// `c1` in `c1 |x|_inf <= N(x)`.
    fn lower_const(&self) -> f64;

    /// `c2` in `N(x) <= c2 |x|_inf`.
    fn upper_const(&self) -> f64;

    fn provenance(&self) -> Provenance;

    fn describe(&self) -> String {
        format!("{:?}", self.provenance())
    }
}

#[derive(Clone)]
pub struct NormOracle {
    inner: Arc<dyn Norm>,
}

impl fmt::Debug for NormOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "NormOracle({}, [{}, {}])",
            self.describe(),
            self.lower_const(),
            self.upper_const()
        )
    }
}

impl NormOracle {
    pub fn new<N: Norm + 'static>(norm: N) -> Self {
        NormOracle { inner: Arc::new(norm) }
    }

    pub fn from_arc(inner: Arc<dyn Norm>) -> Self {
        NormOracle { inner }
    }

    pub fn sup() -> Self {
        Self::new(SupNorm)
    }

    /// `c * self`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return param(format!("scale factor must be positive, got {factor}"));
        }
        Ok(Self::new(ScaledNorm {
            inner: self.clone(),
            factor,
        }))
    }

    /// The `l_p` norm on the section spanned by coordinates `0..dim`.
    pub fn section_lp(p: f64, dim: usize) -> Result<Self> {
        if !(p >= 1.0) || dim == 0 {
            return param(format!("l_p section needs p >= 1 and dim > 0, got p={p}, dim={dim}"));
        }
        Ok(Self::new(SectionLp { p, dim }))
    }

    pub fn eval(&self, x: &SparseVector) -> Result<f64> {
        self.inner.eval(x)
    }

    pub fn lower_const(&self) -> f64 {
        self.inner.lower_const()
    }

    pub fn upper_const(&self) -> f64 {
        self.inner.upper_const()
    }

    pub fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }

    pub fn describe(&self) -> String {
        self.inner.describe()
    }

    pub fn same_as(&self, other: &NormOracle) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SupNorm;

impl Norm for SupNorm {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        Ok(sup_norm(x))
    }
    fn lower_const(&self) -> f64 {
        1.0
    }
    fn upper_const(&self) -> f64 {
        1.0
    }
    fn provenance(&self) -> Provenance {
        Provenance::Sup
    }
    fn describe(&self) -> String {
        "sup".into()
    }
}

struct ScaledNorm {
    inner: NormOracle,
    factor: f64,
}

impl Norm for ScaledNorm {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        Ok(self.factor * self.inner.eval(x)?)
    }
    fn lower_const(&self) -> f64 {
        self.factor * self.inner.lower_const()
    }
    fn upper_const(&self) -> f64 {
        self.factor * self.inner.upper_const()
    }
    fn provenance(&self) -> Provenance {
        Provenance::Scaled
    }
    fn describe(&self) -> String {
        format!("{}*{}", self.factor, self.inner.describe())
    }
}

struct SectionLp {
    p: f64,
    dim: usize,
}

impl Norm for SectionLp {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        if let Some(m) = x.max_index() {
            if m >= self.dim {
                return param(format!(
                    "coordinate {m} outside the l_p section of dimension {}",
                    self.dim
                ));
            }
        }
        let m = sup_norm(x);
        if m == 0.0 {
            return Ok(0.0);
        }
        // factor out the sup to avoid overflow for large p
        let s: f64 = x.iter().map(|(_, v)| (v.abs() / m).powf(self.p)).sum();
        Ok(m * s.powf(1.0 / self.p))
    }
    fn lower_const(&self) -> f64 {
        1.0
    }
    fn upper_const(&self) -> f64 {
        (self.dim as f64).powf(1.0 / self.p)
    }
    fn provenance(&self) -> Provenance {
        Provenance::Lp
    }
    fn describe(&self) -> String {
        format!("l{}[0..{}]", self.p, self.dim)
    }
}

/// Checks `N(0) = 0`, absolute homogeneity, the triangle inequality and the
/// declared equivalence constants on seeded random vectors in `0..dim`.
pub fn norm_axiom_report(norm: &NormOracle, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut r = rng::seeded(seed);
    let mut zero = Check::new("zero");
    let z = norm.eval(&SparseVector::zero())?;
    zero.observe(z.abs(), || json!({ "value": z }));

    let mut homog = Check::new("homogeneity");
    let mut tri = Check::new("triangle");
    let mut equiv = Check::new("equivalence");
    let (lo, hi) = (norm.lower_const(), norm.upper_const());
    for _ in 0..samples {
        let x = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let y = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let lam: f64 = r.random_range(-10.0..10.0);
        let nx = norm.eval(&x)?;
        let ny = norm.eval(&y)?;
        let nl = norm.eval(&x.scale(lam))?;
        homog.observe(
            (nl - lam.abs() * nx).abs() - 1e-9 * lam.abs() * nx,
            || json!({ "x": x.to_json(), "lambda": lam, "n_lx": nl, "n_x": nx }),
        );
        let nxy = norm.eval(&(&x + &y))?;
        tri.observe(
            nxy - (nx + ny) * (1.0 + 1e-9),
            || json!({ "x": x.to_json(), "y": y.to_json(), "n_sum": nxy, "n_x": nx, "n_y": ny }),
        );
        let s = sup_norm(&x);
        let excess = (lo * s - nx).max(nx - hi * s) - 1e-9 * nx;
        equiv.observe(excess, || json!({ "x": x.to_json(), "value": nx, "sup": s }));
    }
    Ok(Report::from_checks(seed, vec![zero, homog, tri, equiv]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_and_scaled() {
        let x = SparseVector::from_pairs([(1, 1.0), (7, -3.0)]);
        assert_eq!(NormOracle::sup().eval(&x).unwrap(), 3.0);
        let two = NormOracle::sup().scaled(2.0).unwrap();
        assert_eq!(two.eval(&x).unwrap(), 6.0);
        assert_eq!(two.lower_const(), 2.0);
        assert!(NormOracle::sup().scaled(0.0).is_err());
    }

    #[test]
    fn lp_section() {
        let n = NormOracle::section_lp(2.0, 4).unwrap();
        let x = SparseVector::from_pairs([(0, 3.0), (1, 4.0)]);
        assert!((n.eval(&x).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(n.upper_const(), 2.0);
        assert!(n.eval(&SparseVector::unit(4)).is_err());
        assert!(NormOracle::section_lp(0.5, 4).is_err());
    }

    #[test]
    fn axioms_hold_for_builtin_norms() {
        for n in [
            NormOracle::sup(),
            NormOracle::sup().scaled(1.5).unwrap(),
            NormOracle::section_lp(3.0, 10).unwrap(),
        ] {
            let r = norm_axiom_report(&n, 10, 300, 5).unwrap();
            assert!(r.pass, "{:?}: {:?}", n, r.first_counterexample);
        }
    }
}
