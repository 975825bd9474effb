//! The implicit function `psi`.
//!
//! For a seed `(x0, f0, delta)` and a vector `y`, `psi(y)` is the unique
//! `t >= 0` with `t = (1 - delta) N(y + (t - <f0,y>) x0)`, where `N` is the
//! base norm. It measures how far `y` sits from the axis spanned by `x0`.

use rand::Rng;
use serde_json::json;

use crate::error::{param, RenormError, Result};
use crate::norm::NormOracle;
use crate::report::{Check, Report};
use crate::rng;
use crate::vectors::{classify, pairing, ConeSide, DualFunctional, SparseVector, ROOT_TOL};

/// Maximum bisection steps. The bracket width then sits below one ulp of
/// the upper end.
const MAX_BISECTIONS: usize = 64;

/// `(x0, f0, delta)` together with the base norm they live in.
#[derive(Debug, Clone)]
pub struct SeedParams {
    x0: SparseVector,
    f0: DualFunctional,
    delta: f64,
    base: NormOracle,
    x0_norm: f64,
}

impl SeedParams {
    /// Validates `base(x0) = 1`, `<f0,x0> = 1` and `|f0|_* = 1` to within
    /// `1e-9`, and `0 < delta < 1/2`.
    pub fn new(x0: SparseVector, f0: DualFunctional, delta: f64, base: NormOracle) -> Result<Self> {
        Self::with_unit_slack(x0, f0, delta, base, 0.0)
    }

    /// Like [`SeedParams::new`] but accepts `1 <= base(x0) <= 1 + slack`,
    /// which arises when `x0` was rescaled to make `<f0,x0> = 1` exact.
    pub fn with_unit_slack(
        x0: SparseVector,
        f0: DualFunctional,
        delta: f64,
        base: NormOracle,
        slack: f64,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return param(format!("delta must lie in (0, 1/2), got {delta}"));
        }
        if !(slack >= 0.0) {
            return param(format!("unit slack must be non-negative, got {slack}"));
        }
        let x0_norm = base.eval(&x0)?;
        if x0_norm < 1.0 - ROOT_TOL || x0_norm > 1.0 + slack + ROOT_TOL {
            return param(format!("base(x0) = {x0_norm} is not a unit (slack {slack})"));
        }
        if (1.0 - delta) * x0_norm >= 1.0 {
            return param("(1 - delta) base(x0) must stay below 1");
        }
        let p = pairing(&f0, &x0);
        if (p - 1.0).abs() > ROOT_TOL {
            return param(format!("<f0, x0> = {p}, expected 1"));
        }
        let d = f0.dual_norm();
        if (d - 1.0).abs() > ROOT_TOL {
            return param(format!("dual norm of f0 is {d}, expected 1"));
        }
        Ok(SeedParams {
            x0,
            f0,
            delta,
            base,
            x0_norm,
        })
    }

    /// The canonical pair `(e_n, e_n)` in `c_0` with the sup norm.
    pub fn coordinate(n: usize, delta: f64) -> Result<Self> {
        Self::new(
            SparseVector::unit(n),
            DualFunctional::coordinate(n),
            delta,
            NormOracle::sup(),
        )
    }

    pub fn x0(&self) -> &SparseVector {
        &self.x0
    }

    pub fn f0(&self) -> &DualFunctional {
        &self.f0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn base(&self) -> &NormOracle {
        &self.base
    }

    pub fn x0_norm(&self) -> f64 {
        self.x0_norm
    }

    /// `(1 - delta/2) x0`, the vertex of the seed ball.
    pub fn vertex(&self) -> SparseVector {
        self.x0.scale(1.0 - self.delta / 2.0)
    }

    /// Cone membership at level `1 - delta` in the base norm, using the exact
    /// comparison (no tolerance band).
    pub fn cone_side(&self, y: &SparseVector) -> Result<ConeSide> {
        if y.is_zero() {
            return Ok(ConeSide::Plus);
        }
        Ok(classify(pairing(&self.f0, y), (1.0 - self.delta) * self.base.eval(y)?))
    }
}

/// `g(t) = (1 - delta) N(y + (t - <f0,y>) x0) - t`. Positive below the fixed
/// point, negative above it.
pub fn fixed_point_gap(p: &SeedParams, y: &SparseVector, t: f64) -> Result<f64> {
    let c = pairing(&p.f0, y);
    gap_with(p, y, c, t)
}

fn gap_with(p: &SeedParams, y: &SparseVector, c: f64, t: f64) -> Result<f64> {
    Ok((1.0 - p.delta) * p.base.eval(&y.axpy(t - c, &p.x0))? - t)
}

/// Upper end of the bisection bracket. With `k = base(x0)`,
/// `T = (1-d)(|y| + k|c|) / (1 - (1-d)k)` satisfies `g(T) <= 0`; for `k = 1`
/// this is `(1-d)(|y| + |c|)/d`.
pub fn bracket_upper(p: &SeedParams, y_norm: f64, c: f64) -> f64 {
    let k = p.x0_norm;
    let d = p.delta;
    (1.0 - d) * (y_norm + k * c.abs()) / (1.0 - (1.0 - d) * k)
}

/// Residual allowed by [`psi_eval`]: `1e-10 max(1, base(y))`.
pub fn residual_tolerance(y_norm: f64) -> f64 {
    1e-10 * y_norm.max(1.0)
}

/// Evaluate `psi(y)` by bisection on `[0, T]`.
pub fn psi_eval(p: &SeedParams, y: &SparseVector) -> Result<f64> {
    let y_norm = p.base.eval(y)?;
    if y_norm == 0.0 {
        return Ok(0.0);
    }
    let c = pairing(&p.f0, y);
    let g0 = gap_with(p, y, c, 0.0)?;
    if g0 <= 0.0 {
        return Ok(0.0);
    }
    let upper = bracket_upper(p, y_norm, c);
    let g_upper = gap_with(p, y, c, upper)?;
    if g_upper > 0.0 {
        return Err(RenormError::Internal(format!(
            "psi bracket failed: g({upper}) = {g_upper} > 0; the base norm is not a norm"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, upper);
    let (mut g_lo, mut g_hi) = (g0, g_upper);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = gap_with(p, y, c, mid)?;
        if gm > 0.0 {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
            g_hi = gm;
        }
    }
    let (t, g) = if g_lo.abs() <= g_hi.abs() {
        (lo, g_lo)
    } else {
        (hi, g_hi)
    };
    if g.abs() > residual_tolerance(y_norm) {
        return Err(RenormError::Internal(format!(
            "psi residual {g} above tolerance at t = {t}"
        )));
    }
    Ok(t)
}

fn scale_of(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Property suite over seeded random vectors supported in `0..dim`:
/// fixed-point residual, subadditivity, positive homogeneity, translation
/// invariance along `x0`, the zero-set characterization, uniqueness beyond
/// the fixed point, and `psi(y) <= <f0,y>` on the positive cone.
pub fn psi_property_suite(p: &SeedParams, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut r = rng::seeded(seed);
    let mut residual = Check::new("fixed-point-residual");
    let mut subadd = Check::new("subadditivity");
    let mut homog = Check::new("positive-homogeneity");
    let mut transl = Check::new("x0-translation-invariance");
    let mut zero_set = Check::new("zero-set");
    let mut unique = Check::new("uniqueness");
    let mut below = Check::new("below-pairing-on-plus-cone");
    let d = p.delta;
    let k = p.x0_norm;

    for _ in 0..samples {
        let y = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let z = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let lam: f64 = r.random_range(0.0..10.0);
        let mu: f64 = r.random_range(-10.0..10.0);

        let ny = p.base.eval(&y)?;
        let nz = p.base.eval(&z)?;
        let py = psi_eval(p, &y)?;
        let pz = psi_eval(p, &z)?;
        let tol = 1e-8 * scale_of(&[ny, nz, ny * lam, mu]);

        let res = fixed_point_gap(p, &y, py)?;
        residual.observe(
            res.abs() - residual_tolerance(ny),
            || json!({ "y": y.to_json(), "psi": py, "residual": res }),
        );

        let pyz = psi_eval(p, &(&y + &z))?;
        subadd.observe(
            pyz - py - pz - tol,
            || json!({ "y": y.to_json(), "z": z.to_json(), "psi_sum": pyz, "psi_y": py, "psi_z": pz }),
        );

        let pl = psi_eval(p, &y.scale(lam))?;
        homog.observe(
            (pl - lam * py).abs() - tol,
            || json!({ "y": y.to_json(), "lambda": lam, "psi_ly": pl, "psi_y": py }),
        );

        let pt = psi_eval(p, &y.axpy(mu, &p.x0))?;
        transl.observe(
            (pt - py).abs() - tol,
            || json!({ "y": y.to_json(), "mu": mu, "psi_shift": pt, "psi_y": py }),
        );

        // zero set: on the axis psi vanishes, off it psi is bounded below by
        // (1-d) dist / (1 + (1-d) k)
        let c: f64 = r.random_range(-5.0..5.0);
        let on_axis = p.x0.scale(c);
        let pa = psi_eval(p, &on_axis)?;
        zero_set.observe(
            pa.abs() - 1e-8 * scale_of(&[c]),
            || json!({ "y": on_axis.to_json(), "psi": pa }),
        );
        let dist = p.base.eval(&y.axpy(-pairing(&p.f0, &y), &p.x0))?;
        let lower = (1.0 - d) * dist / (1.0 + (1.0 - d) * k);
        zero_set.observe(
            lower - py - tol,
            || json!({ "y": y.to_json(), "psi": py, "axis_distance": dist }),
        );

        for s in [0.1, 1.0] {
            let step = s * scale_of(&[ny]);
            let g = fixed_point_gap(p, &y, py + step)?;
            unique.observe_bool(g < 0.0, || json!({ "y": y.to_json(), "t": py + step, "gap": g }));
        }

        // push y into the positive cone by adding a large multiple of x0
        let w = y.axpy(r.random_range(1.0..20.0) * scale_of(&[ny]), &p.x0);
        if p.cone_side(&w)? == ConeSide::Plus {
            let pw = psi_eval(p, &w)?;
            let fw = pairing(&p.f0, &w);
            below.observe(
                pw - fw - 1e-8 * scale_of(&[fw]),
                || json!({ "y": w.to_json(), "psi": pw, "pairing": fw }),
            );
        }
    }
    Ok(Report::from_checks(
        seed,
        vec![residual, subadd, homog, transl, zero_set, unique, below],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset() -> SeedParams {
        SeedParams::coordinate(1, 0.4).unwrap()
    }

    /// psi for the (e_n, e_n) sup-norm seed: the fixed point of
    /// t = (1-d) max(t, m) with m the largest off-axis magnitude, i.e.
    /// (1-d) m.
    fn closed_form(delta: f64, n: usize, y: &SparseVector) -> f64 {
        let m = y
            .iter()
            .filter(|(i, _)| *i != n)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max);
        (1.0 - delta) * m
    }

    #[test]
    fn worked_values() {
        let p = preset();
        assert_eq!(psi_eval(&p, &SparseVector::unit(1)).unwrap(), 0.0);
        assert!((psi_eval(&p, &SparseVector::unit(2)).unwrap() - 0.6).abs() < 1e-12);
        let y = SparseVector::from_pairs([(1, 0.8), (2, 0.5)]);
        assert!((psi_eval(&p, &y).unwrap() - 0.3).abs() < 1e-12);
        assert!((psi_eval(&p, &SparseVector::unit(2).scale(2.0)).unwrap() - 1.2).abs() < 1e-12);
        let shifted = SparseVector::from_pairs([(1, 5.0), (2, 1.0)]);
        assert!((psi_eval(&p, &shifted).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(psi_eval(&p, &SparseVector::zero()).unwrap(), 0.0);
    }

    #[test]
    fn matches_closed_form_for_coordinate_seeds() {
        let mut r = rng::seeded(11);
        for delta in [0.1, 0.25, 0.4, 0.49] {
            let p = SeedParams::coordinate(3, delta).unwrap();
            for _ in 0..300 {
                let y = rng::random_scaled_vector(&mut r, 10, 2.0, 2.0);
                let got = psi_eval(&p, &y).unwrap();
                let want = closed_form(delta, 3, &y);
                assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{y:?}: {got} vs {want}");
            }
        }
    }

    /// Independent check for a non-polyhedral base norm: locate the sign
    /// change of g on a uniform grid, then refine with a secant step.
    #[test]
    fn matches_grid_scan_for_lp_base() {
        let base = NormOracle::section_lp(2.0, 6).unwrap();
        let p = SeedParams::new(SparseVector::unit(0), DualFunctional::coordinate(0), 0.3, base).unwrap();
        let mut r = rng::seeded(5);
        for _ in 0..40 {
            let y = rng::random_vector(&mut r, 6, 0.7);
            let c = pairing(p.f0(), &y);
            let g = |t: f64| fixed_point_gap(&p, &y, t).unwrap();
            let upper = bracket_upper(&p, p.base().eval(&y).unwrap(), c);
            let n = 20_000;
            let mut a = 0.0;
            for i in 1..=n {
                let t = upper * i as f64 / n as f64;
                if g(t) <= 0.0 {
                    a = upper * (i - 1) as f64 / n as f64;
                    break;
                }
            }
            let b = a + upper / n as f64;
            let (ga, gb) = (g(a), g(b));
            let secant = a - ga * (b - a) / (gb - ga);
            let got = psi_eval(&p, &y).unwrap();
            assert!((got - secant).abs() < 1e-6, "{got} vs {secant}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        let sup = NormOracle::sup();
        let e1 = SparseVector::unit(1);
        let f1 = DualFunctional::coordinate(1);
        assert!(SeedParams::new(e1.clone(), f1.clone(), 0.5, sup.clone()).is_err());
        assert!(SeedParams::new(e1.clone(), f1.clone(), 0.0, sup.clone()).is_err());
        assert!(SeedParams::new(e1.scale(2.0), f1.clone(), 0.4, sup.clone()).is_err());
        assert!(SeedParams::new(e1.clone(), f1.scale(0.5), 0.4, sup.clone()).is_err());
        let half = DualFunctional::new(SparseVector::from_pairs([(1, 0.5), (2, 0.5)]));
        assert!(SeedParams::new(e1.clone(), half.clone(), 0.4, sup.clone()).is_err());
        // near-unit x0 with exact pairing
        let x = SparseVector::from_pairs([(1, 1.02), (2, 0.98)]);
        assert!(SeedParams::new(x.clone(), half.clone(), 0.4, sup.clone()).is_err());
        assert!(SeedParams::with_unit_slack(x, half, 0.4, sup, 0.05).is_ok());
    }

    #[test]
    fn bracket_holds_for_near_unit_x0() {
        let half = DualFunctional::new(SparseVector::from_pairs([(1, 0.5), (2, 0.5)]));
        let x = SparseVector::from_pairs([(1, 1.04), (2, 0.96)]);
        let p = SeedParams::with_unit_slack(x, half, 0.45, NormOracle::sup(), 0.05).unwrap();
        let mut r = rng::seeded(2);
        for _ in 0..200 {
            let y = rng::random_scaled_vector(&mut r, 8, 1.0, 1.0);
            let t = psi_eval(&p, &y).unwrap();
            assert!(fixed_point_gap(&p, &y, t).unwrap().abs() <= residual_tolerance(p.base().eval(&y).unwrap()));
        }
    }

    #[test]
    fn property_suite_passes_on_preset() {
        let r = psi_property_suite(&preset(), 12, 300, 42).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
        assert!(r.check("below-pairing-on-plus-cone").unwrap().samples > 0);
    }

    #[test]
    fn psi_grows_with_the_base_norm() {
        let dim = 8;
        let small = SeedParams::coordinate(0, 0.25).unwrap();
        let big = SeedParams::new(
            SparseVector::unit(0),
            DualFunctional::coordinate(0),
            0.25,
            NormOracle::section_lp(3.0, dim).unwrap(),
        )
        .unwrap();
        let mut r = rng::seeded(8);
        for _ in 0..300 {
            let y = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
            let a = psi_eval(&small, &y).unwrap();
            let b = psi_eval(&big, &y).unwrap();
            assert!(a <= b + 1e-9 * b.max(1.0), "{a} > {b}");
        }
    }
}
