//! Minkowski functionals of bodies given by a convex level function.

use std::sync::Arc;

use serde_json::json;

use crate::error::{param, RenormError, Result};
use crate::norm::NormOracle;
use crate::report::{Check, Report};
use crate::rng;
use crate::vectors::{sup_norm, SparseVector};

pub type LevelFn = Arc<dyn Fn(&SparseVector) -> Result<f64> + Send + Sync>;
pub type BoundHint = Arc<dyn Fn(&SparseVector) -> (f64, f64) + Send + Sync>;

/// The body `{x : level(x) <= 1}`.
#[derive(Clone)]
pub struct ImplicitBall {
    level: LevelFn,
    bound_hint: BoundHint,
}

impl ImplicitBall {
    pub fn new(level: LevelFn, bound_hint: BoundHint) -> Self {
        ImplicitBall { level, bound_hint }
    }

    /// Body whose Minkowski functional is comparable to `norm`, with the
    /// bracket `[lower_const, upper_const] * sup_norm(x)`.
    pub fn with_norm_bracket(level: LevelFn, lower: f64, upper: f64) -> Self {
        let hint: BoundHint = Arc::new(move |x: &SparseVector| {
            let s = sup_norm(x);
            (lower * s, upper * s)
        });
        ImplicitBall {
            level,
            bound_hint: hint,
        }
    }

    /// The unit ball of a norm.
    pub fn of_norm(norm: NormOracle) -> Self {
        let (lo, hi) = (norm.lower_const(), norm.upper_const());
        let level: LevelFn = Arc::new(move |x: &SparseVector| norm.eval(x));
        Self::with_norm_bracket(level, lo, hi)
    }

    pub fn level(&self, x: &SparseVector) -> Result<f64> {
        (self.level)(x)
    }

    pub fn bound_hint(&self, x: &SparseVector) -> (f64, f64) {
        (self.bound_hint)(x)
    }
}

/// Cap on bracket doublings in each direction.
const MAX_EXPANSIONS: u32 = 64;

/// Finds the `t > 0` where the non-increasing ray map `g(t) = level(x/t)`
/// crosses 1, starting from `[lo, hi]`. Bisection runs until the bracket
/// cannot shrink further, so the result is reproducible to the last bit.
pub fn solve_ray<G: FnMut(f64) -> Result<f64>>(mut g: G, lo: f64, hi: f64) -> Result<f64> {
    let mut lo = if lo > 0.0 && lo.is_finite() {
        lo
    } else if hi > 0.0 && hi.is_finite() {
        hi
    } else {
        1.0
    };
    let mut hi = if hi >= lo && hi.is_finite() { hi } else { lo };
    let mut k = 0;
    while g(lo)? < 1.0 {
        hi = lo;
        lo *= 0.5;
        k += 1;
        if k > MAX_EXPANSIONS {
            return Err(RenormError::DegenerateBody(
                "ray map stays below 1 near the origin".into(),
            ));
        }
    }
    let mut k = 0;
    while g(hi)? > 1.0 {
        lo = hi;
        hi *= 2.0;
        k += 1;
        if k > MAX_EXPANSIONS || !hi.is_finite() {
            return Err(RenormError::DegenerateBody("ray map never drops to 1".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The Minkowski functional of `ball` at `x`.
pub fn minkowski(ball: &ImplicitBall, x: &SparseVector) -> Result<f64> {
    if x.is_zero() {
        return Ok(0.0);
    }
    let (lo, hi) = ball.bound_hint(x);
    solve_ray(|t| ball.level(&x.scale(1.0 / t)), lo, hi)
}

/// Samples the stated requirements on a level function: zero at the origin,
/// evenness and a non-increasing ray map, plus homogeneity of the resulting
/// functional.
pub fn ball_property_report(ball: &ImplicitBall, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    if dim == 0 {
        return param("dimension must be positive");
    }
    let mut r = rng::seeded(seed);
    let mut zero = Check::new("level-zero-at-origin");
    let z = ball.level(&SparseVector::zero())?;
    zero.observe(z.abs(), || json!({ "level": z }));
    let mut even = Check::new("level-even");
    let mut ray = Check::new("ray-non-increasing");
    let mut homog = Check::new("minkowski-homogeneous");
    for _ in 0..samples {
        let x = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let lp = ball.level(&x)?;
        let ln = ball.level(&-&x)?;
        even.observe(
            (lp - ln).abs() - 1e-12 * lp.abs().max(1.0),
            || json!({ "x": x.to_json() }),
        );
        let mut prev = f64::INFINITY;
        for k in 1..=8 {
            let t = 0.25 * k as f64;
            let l = ball.level(&x.scale(1.0 / t))?;
            ray.observe(
                l - prev - 1e-12 * prev.abs().min(1e300),
                || json!({ "x": x.to_json(), "t": t }),
            );
            prev = l;
        }
        let m = minkowski(ball, &x)?;
        let lam = 0.1 + 9.9 * rand::Rng::random::<f64>(&mut r);
        let ml = minkowski(ball, &x.scale(lam))?;
        homog.observe(
            (ml - lam * m).abs() - 1e-9 * lam * m,
            || json!({ "x": x.to_json(), "lambda": lam, "m_x": m, "m_lx": ml }),
        );
    }
    Ok(Report::from_checks(seed, vec![zero, even, ray, homog]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::BumpProfile;

    #[test]
    fn sup_ball_gives_sup_norm() {
        let ball = ImplicitBall::of_norm(NormOracle::sup());
        let x = SparseVector::unit(1).scale(3.0);
        assert!((minkowski(&ball, &x).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(minkowski(&ball, &SparseVector::zero()).unwrap(), 0.0);
    }

    #[test]
    fn phi_of_sup_has_unit_root_at_e1() {
        let bp = BumpProfile::new(0.1).unwrap();
        let level: LevelFn = Arc::new(move |x: &SparseVector| bp.phi(sup_norm(x)));
        let ball = ImplicitBall::with_norm_bracket(level, 1.0, 1.1);
        let v = minkowski(&ball, &SparseVector::unit(1)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_hints_are_repaired_by_expansion() {
        let level: LevelFn = Arc::new(|x: &SparseVector| Ok(sup_norm(x)));
        let hint: BoundHint = Arc::new(|_| (1e3, 1e4));
        let ball = ImplicitBall::new(level, hint);
        let v = minkowski(&ball, &SparseVector::unit(0).scale(0.5)).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unbounded_body_is_reported() {
        let level: LevelFn = Arc::new(|_x: &SparseVector| Ok(0.0));
        let ball = ImplicitBall::with_norm_bracket(level, 1.0, 1.0);
        let e = minkowski(&ball, &SparseVector::unit(0)).unwrap_err();
        assert!(matches!(e, RenormError::DegenerateBody(_)));
    }

    #[test]
    fn property_report_passes_for_lp_ball() {
        let ball = ImplicitBall::of_norm(NormOracle::section_lp(3.0, 6).unwrap());
        let r = ball_property_report(&ball, 6, 100, 3).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
    }
}
