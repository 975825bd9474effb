//! Smooth combination of norms and the approximators fed into the cascade.

mod body;
mod bump;

pub use body::{ball_property_report, minkowski, solve_ray, BoundHint, ImplicitBall, LevelFn};
pub use bump::{integrate, BumpProfile, DEFAULT_QUADRATURE_TOL};

use rand::Rng;
use serde_json::json;

use crate::error::{param, Result};
use crate::norm::{Norm, NormOracle, Provenance};
use crate::report::{Check, Report};
use crate::rng;
use crate::vectors::{sup_norm, SparseVector};

/// Minkowski value of `{t : phi(u1/t) + phi(u2/t) <= 1}` for the scalars
/// `u1 = N1(x)`, `u2 = N2(x)`. Returns the larger value exactly when the
/// smaller one sits in the flat region of `phi`.
pub fn combine_values(bp: &BumpProfile, u1: f64, u2: f64) -> Result<f64> {
    let m = u1.max(u2);
    if m == 0.0 {
        return Ok(0.0);
    }
    let small = u1.min(u2);
    if bp.value(small / m) == 0.0 {
        return Ok(m);
    }
    solve_ray(|t| Ok(bp.value(u1 / t) + bp.value(u2 / t)), m, (1.0 + bp.eps()) * m)
}

/// Minkowski functional of `{x : phi(N1(x)) + phi(N2(x)) <= 1}`.
pub struct CombinedNorm {
    n1: NormOracle,
    n2: NormOracle,
    profile: BumpProfile,
}

impl CombinedNorm {
    pub fn profile(&self) -> &BumpProfile {
        &self.profile
    }

    /// The value together with the two input values.
    pub fn eval_parts(&self, x: &SparseVector) -> Result<(f64, f64, f64)> {
        let u1 = self.n1.eval(x)?;
        let u2 = self.n2.eval(x)?;
        Ok((combine_values(&self.profile, u1, u2)?, u1, u2))
    }

    /// The same functional as an explicit implicit body.
    pub fn as_ball(&self) -> ImplicitBall {
        let (n1, n2, bp) = (self.n1.clone(), self.n2.clone(), self.profile);
        let level: LevelFn =
            std::sync::Arc::new(move |x: &SparseVector| Ok(bp.value(n1.eval(x)?) + bp.value(n2.eval(x)?)));
        ImplicitBall::with_norm_bracket(level, self.lower_const(), self.upper_const())
    }
}

impl Norm for CombinedNorm {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        Ok(self.eval_parts(x)?.0)
    }

    fn lower_const(&self) -> f64 {
        self.n1.lower_const().max(self.n2.lower_const())
    }

    fn upper_const(&self) -> f64 {
        (1.0 + self.profile.eps()) * self.n1.upper_const().max(self.n2.upper_const())
    }

    fn provenance(&self) -> Provenance {
        Provenance::Combined
    }

    fn describe(&self) -> String {
        format!(
            "combine({}, {}; eps={})",
            self.n1.describe(),
            self.n2.describe(),
            self.profile.eps()
        )
    }
}

pub fn combine_norms(n1: &NormOracle, n2: &NormOracle, eps: f64) -> Result<NormOracle> {
    Ok(NormOracle::new(combined(n1, n2, eps)?))
}

pub fn combined(n1: &NormOracle, n2: &NormOracle, eps: f64) -> Result<CombinedNorm> {
    Ok(CombinedNorm {
        n1: n1.clone(),
        n2: n2.clone(),
        profile: BumpProfile::new(eps)?,
    })
}

struct RescaledNorm {
    target: NormOracle,
    divisor: f64,
    eta: f64,
}

impl Norm for RescaledNorm {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        Ok(self.target.eval(x)? / self.divisor)
    }
    fn lower_const(&self) -> f64 {
        self.target.lower_const() / self.divisor
    }
    fn upper_const(&self) -> f64 {
        self.target.upper_const() / self.divisor
    }
    fn provenance(&self) -> Provenance {
        Provenance::Approx
    }
    fn describe(&self) -> String {
        format!("rescale({}; eta={})", self.target.describe(), self.eta)
    }
}

/// A norm `N` with `N <= target <= (1 + eta) N`.
#[derive(Debug, Clone)]
pub struct ApproxNorm {
    oracle: NormOracle,
    eta: f64,
    target: NormOracle,
}

impl ApproxNorm {
    /// Wraps an existing norm claimed to satisfy the sandwich.
    pub fn new(oracle: NormOracle, eta: f64, target: NormOracle) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return param(format!("eta must be positive, got {eta}"));
        }
        Ok(ApproxNorm { oracle, eta, target })
    }

    pub fn oracle(&self) -> &NormOracle {
        &self.oracle
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn target(&self) -> &NormOracle {
        &self.target
    }

    pub fn eval(&self, x: &SparseVector) -> Result<f64> {
        self.oracle.eval(x)
    }

    /// Largest relative violation of the sandwich at `x` (non-positive when
    /// it holds).
    pub fn sandwich_excess(&self, x: &SparseVector) -> Result<f64> {
        let a = self.oracle.eval(x)?;
        let t = self.target.eval(x)?;
        let scale = t.max(1e-300);
        Ok((a - t).max(t - (1.0 + self.eta) * a) / scale)
    }
}

/// `target / sqrt(1 + eta)`.
pub fn rescale_approx(target: &NormOracle, eta: f64) -> Result<ApproxNorm> {
    if !(eta > 0.0 && eta.is_finite()) {
        return param(format!("eta must be positive, got {eta}"));
    }
    let oracle = NormOracle::new(RescaledNorm {
        target: target.clone(),
        divisor: (1.0 + eta).sqrt(),
        eta,
    });
    ApproxNorm::new(oracle, eta, target.clone())
}

/// Minkowski functional of `{x : sum_i phi(|x_i|) <= 1}`.
pub struct LfcSupNorm {
    profile: BumpProfile,
}

impl LfcSupNorm {
    fn level_at(&self, x: &SparseVector, t: f64) -> f64 {
        x.iter().map(|(_, v)| self.profile.value(v.abs() / t)).sum()
    }
}

impl Norm for LfcSupNorm {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        let m = sup_norm(x);
        if m == 0.0 {
            return Ok(0.0);
        }
        if self.level_at(x, m) == 1.0 {
            return Ok(m);
        }
        solve_ray(|t| Ok(self.level_at(x, t)), m, (1.0 + self.profile.eps()) * m)
    }
    fn lower_const(&self) -> f64 {
        1.0
    }
    fn upper_const(&self) -> f64 {
        1.0 + self.profile.eps()
    }
    fn provenance(&self) -> Provenance {
        Provenance::Approx
    }
    fn describe(&self) -> String {
        format!("lfc-sup(eta={})", self.profile.eps())
    }
}

pub fn lfc_sup_approx(eta: f64) -> Result<NormOracle> {
    Ok(NormOracle::new(LfcSupNorm {
        profile: BumpProfile::new(eta)?,
    }))
}

/// Bit-stability of `lfc_sup_approx(eta)` when coordinates whose magnitude
/// stays below `a * value` are changed or added.
pub fn lfc_probe(eta: f64, dim: usize, trials: usize, seed: u64) -> Result<Report> {
    let norm = lfc_sup_approx(eta)?;
    let a = 1.0 / (1.0 + eta);
    let mut r = rng::seeded(seed);
    let mut check = Check::new("lfc-bit-stable");
    let mut sandwich = Check::new("lfc-sandwich");
    for _ in 0..trials {
        let x = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let v = norm.eval(&x)?;
        let s = sup_norm(&x);
        sandwich.observe(
            (s - v).max(v - (1.0 + eta) * s) - 1e-12 * s,
            || json!({ "x": x.to_json(), "value": v }),
        );
        let cap = a * v * (1.0 - 1e-6);
        let mut y = x.clone();
        let mut touched = Vec::new();
        for i in 0..dim + 4 {
            if x.get(i).abs() < cap && r.random::<bool>() {
                y.set(i, r.random_range(-cap..cap));
                touched.push(i);
            }
        }
        let w = norm.eval(&y)?;
        check.observe_bool(
            w.to_bits() == v.to_bits(),
            || json!({ "x": x.to_json(), "perturbed": y.to_json(), "coords": touched, "before": v, "after": w }),
        );
    }
    Ok(Report::from_checks(seed, vec![check, sandwich]))
}

/// Central-difference slopes of `norm` along `h` at points spaced by the
/// step around `x`. For a smooth norm the jumps between neighbouring slopes
/// shrink with the step; a kink keeps them of order one.
pub fn slope_jumps(norm: &NormOracle, x: &SparseVector, h: &SparseVector, step: f64) -> Result<f64> {
    let slope = |c: f64| -> Result<f64> {
        let p = norm.eval(&x.axpy(c + step, h))?;
        let m = norm.eval(&x.axpy(c - step, h))?;
        Ok((p - m) / (2.0 * step))
    };
    let mut prev = slope(-5.0 * step)?;
    let mut worst: f64 = 0.0;
    for j in -4..=5 {
        let s = slope(j as f64 * step)?;
        worst = worst.max((s - prev).abs());
        prev = s;
    }
    Ok(worst)
}

/// Kink detector over the step grid `{1e-3, 1e-4}`.
pub fn smoothness_probe(norm: &NormOracle, points: &[(SparseVector, SparseVector)]) -> Result<Check> {
    let mut check = Check::new("no-kink");
    for (x, h) in points {
        let coarse = slope_jumps(norm, x, h, 1e-3)?;
        let fine = slope_jumps(norm, x, h, 1e-4)?;
        check.observe(
            fine - 0.2 * coarse - 1e-7,
            || json!({ "x": x.to_json(), "h": h.to_json(), "jump_1e-3": coarse, "jump_1e-4": fine }),
        );
    }
    Ok(check)
}

/// Properties (i) and (ii) of the combination on random vectors in `0..dim`,
/// relative tolerance `1e-8`.
pub fn combine_property_report(
    n1: &NormOracle,
    n2: &NormOracle,
    eps: f64,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<Report> {
    let c = combined(n1, n2, eps)?;
    let mut r = rng::seeded(seed);
    let mut coincide = Check::new("coincidence");
    let mut bracket = Check::new("max-bracket");
    for i in 0..samples {
        let mut x = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        if i % 3 == 0 {
            // sparse points exercise coordinate-dependent norms
            x = rng::random_vector(&mut r, dim, 0.3);
            if x.is_zero() {
                x = SparseVector::unit(r.random_range(0..dim));
            }
        }
        let (v, u1, u2) = c.eval_parts(&x)?;
        let m = u1.max(u2);
        bracket.observe(
            (m - v).max(v - (1.0 + eps) * m) - 1e-8 * m,
            || json!({ "x": x.to_json(), "value": v, "n1": u1, "n2": u2 }),
        );
        if u1.min(u2) <= m / (1.0 + eps) {
            coincide.observe(
                (v - m).abs() - 1e-8 * m,
                || json!({ "x": x.to_json(), "value": v, "n1": u1, "n2": u2 }),
            );
        }
    }
    Ok(Report::from_checks(seed, vec![coincide, bracket]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::SeedParams;
    use crate::seed_norm::SeedNorm;

    #[test]
    fn dominated_pair_returns_the_larger_norm_exactly() {
        let sup = NormOracle::sup();
        let two = sup.scaled(2.0).unwrap();
        let c = combine_norms(&sup, &two, 0.1).unwrap();
        let x = SparseVector::from_pairs([(0, 0.3), (4, -1.7)]);
        assert_eq!(c.eval(&x).unwrap(), 3.4);
    }

    #[test]
    fn equal_norms_solve_two_phi_equals_one() {
        // oracle: independent bisection for 2 phi(s) = 1
        let bp = BumpProfile::new(0.1).unwrap();
        let (mut lo, mut hi) = (bp.a(), 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * bp.phi(mid).unwrap() < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s_star = 0.5 * (lo + hi);
        assert!(s_star > 1.0 / 1.1 && s_star < 1.0);
        let sup = NormOracle::sup();
        let c = combine_norms(&sup, &sup, 0.1).unwrap();
        let v = c.eval(&SparseVector::unit(1)).unwrap();
        assert!((v - 1.0 / s_star).abs() < 1e-12);
        assert!((1.0..=1.1).contains(&v));
    }

    #[test]
    fn sup_with_seed_at_e2() {
        let seed = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap()).oracle();
        let c = combine_norms(&NormOracle::sup(), &seed, 0.01).unwrap();
        let v = c.eval(&SparseVector::unit(2)).unwrap();
        assert!((1.0..=1.01).contains(&v));
    }

    #[test]
    fn generic_minkowski_agrees_with_scalar_solver() {
        let seed = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap()).oracle();
        let c = combined(&NormOracle::sup().scaled(1.1).unwrap(), &seed, 0.05).unwrap();
        let ball = c.as_ball();
        for x in [
            SparseVector::from_pairs([(1, 1.0), (2, 0.3)]),
            SparseVector::from_pairs([(1, 0.9), (3, -0.95)]),
        ] {
            let a = c.eval(&x).unwrap();
            let b = minkowski(&ball, &x).unwrap();
            assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn combination_properties_hold() {
        let seed = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap()).oracle();
        let sup = NormOracle::sup();
        let r = combine_property_report(&sup, &seed, 0.1, 8, 300, 1).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
        assert!(r.check("coincidence").unwrap().samples > 0);
    }

    #[test]
    fn rescale_worked_value_and_sandwich() {
        let seed = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap()).oracle();
        let ap = rescale_approx(&seed, 0.21).unwrap();
        let v = ap.eval(&SparseVector::unit(1)).unwrap();
        assert!((v - 1.25 / 1.1).abs() < 1e-12);
        assert!(
            ap.sandwich_excess(&SparseVector::from_pairs([(1, 1.0), (2, 0.5)]))
                .unwrap()
                <= 0.0
        );
        assert!(rescale_approx(&seed, 0.0).is_err());
    }

    #[test]
    fn lfc_values() {
        let n = lfc_sup_approx(0.1).unwrap();
        assert_eq!(n.eval(&SparseVector::unit(1)).unwrap(), 1.0);
        let x = SparseVector::from_pairs([(1, 1.0), (2, 1.0 / 2.2)]);
        assert_eq!(n.eval(&x).unwrap(), 1.0);
        let both = n.eval(&SparseVector::from_pairs([(1, 1.0), (2, 1.0)])).unwrap();
        assert!(both > 1.0 && both <= 1.1);
        assert!(lfc_sup_approx(0.0).is_err());
    }

    #[test]
    fn lfc_probe_is_bit_stable() {
        let r = lfc_probe(0.1, 8, 300, 11).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
    }

    #[test]
    fn smooth_inputs_give_kink_free_combination() {
        let l2 = NormOracle::section_lp(2.0, 4).unwrap();
        let l3 = NormOracle::section_lp(3.0, 4).unwrap().scaled(1.1).unwrap();
        let c = combine_norms(&l2, &l3, 0.2).unwrap();
        let pts = vec![
            (
                SparseVector::from_pairs([(0, 1.0), (1, 0.5)]),
                SparseVector::from_pairs([(1, 1.0)]),
            ),
            (
                SparseVector::from_pairs([(0, 1.0), (1, 1.0), (2, 1.0)]),
                SparseVector::from_pairs([(0, 1.0), (3, -1.0)]),
            ),
        ];
        let ch = smoothness_probe(&c, &pts).unwrap();
        assert!(ch.pass, "{:?}", ch.first_counterexample);
        // the sup norm has a kink along e1 + t e2 at t = 1
        let ch = smoothness_probe(
            &NormOracle::sup(),
            &[(SparseVector::from_pairs([(0, 1.0), (1, 1.0)]), SparseVector::unit(1))],
        )
        .unwrap();
        assert!(!ch.pass);
    }
}
