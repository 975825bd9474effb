//! Difference quotients, witnesses against uniform Gateaux smoothness, and
//! slice diameters.

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::cascade::CascadeNorm;
use crate::error::{param, RenormError, Result};
use crate::norm::NormOracle;
use crate::report::{Check, Report};
use crate::rng;
use crate::seed_norm::{approx_slice_bound, lemma_derivative_bound, max_pairwise, SeedNorm};
use crate::smooth::ApproxNorm;
use crate::vectors::{pairing, DualFunctional, SparseVector, ROOT_TOL};

/// `D(N, x, h, t) = (N(x + t h) + N(x - t h) - 2 N(x)) / t`.
pub fn diff_quotient(norm: &NormOracle, x: &SparseVector, h: &SparseVector, t: f64) -> Result<f64> {
    if t == 0.0 || !t.is_finite() {
        return param(format!("step must be a non-zero finite number, got {t}"));
    }
    if x.is_zero() {
        return param("the base point of a difference quotient must be non-zero");
    }
    let p = norm.eval(&x.axpy(t, h))?;
    let m = norm.eval(&x.axpy(-t, h))?;
    let c = norm.eval(x)?;
    Ok((p + m - 2.0 * c) / t)
}

/// Non-negativity for `t > 0` and invariance under `(x, t) -> (l x, l t)`.
pub fn quotient_property_report(norm: &NormOracle, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut r = rng::labeled(seed, "quotient", 0);
    let mut nonneg = Check::new("quotient-non-negative");
    let mut homog = Check::new("quotient-homogeneous");
    for _ in 0..samples {
        let x = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let h = rng::random_unit_vector(&mut r, dim);
        if x.is_zero() {
            continue;
        }
        let t = 10f64.powf(r.random_range(-4.0..0.0));
        let q = diff_quotient(norm, &x, &h, t)?;
        let scale = norm.eval(&x)?.max(1.0) / t;
        nonneg.observe(
            -q - 1e-12 * scale,
            || json!({ "x": x.to_json(), "h": h.to_json(), "t": t, "q": q }),
        );
        let lam = 10f64.powf(r.random_range(-2.0..2.0));
        let ql = diff_quotient(norm, &x.scale(lam), &h, lam * t)?;
        homog.observe(
            (ql - q).abs() - 1e-8 * scale,
            || json!({ "x": x.to_json(), "h": h.to_json(), "t": t, "lambda": lam, "q": q, "q_scaled": ql }),
        );
    }
    Ok(Report::from_checks(seed, vec![nonneg, homog]))
}

/// Outcome of one witness: the quotient at the vertex of stage `n0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub tau: f64,
    pub n0: usize,
    pub t0: f64,
    pub quotient: f64,
    /// `delta / 16`.
    pub bound: f64,
    pub pass: bool,
    /// Passed only thanks to the relative slack `1e-6`.
    pub near_miss: bool,
}

/// Picks the least stage `n0` with `|<f_n0, h>| < d/(2(4-d))` and
/// `t0 = (eta/(1+eta)) 32/d < min(tau, d/16)`, then evaluates
/// `D(|||.|||, (1-d/2) x_n0, h, t0)` against `d/16`.
pub fn ug_witness(cn: &CascadeNorm, h: &SparseVector, tau: f64) -> Result<Witness> {
    let d = cn.delta();
    let nh = cn.space_norm().eval(h)?;
    if (nh - 1.0).abs() > ROOT_TOL {
        return param(format!("direction must be a unit vector, |h| = {nh}"));
    }
    if !(tau > 0.0) {
        return param(format!("tau must be positive, got {tau}"));
    }
    let tau_eff = tau.min(d / 16.0);
    let limit = cn.stage_limit();
    let mut chosen = None;
    for n in 1..=limit {
        let eta = cn.eta(n);
        let t0 = eta / (1.0 + eta) * 32.0 / d;
        if t0 >= tau_eff {
            continue;
        }
        let (_, f) = cn.pair(n)?;
        if pairing(&f, h).abs() < d / (2.0 * (4.0 - d)) {
            chosen = Some((n, t0));
            break;
        }
    }
    let Some((n0, t0)) = chosen else {
        return Err(RenormError::InsufficientStages { tau, budget: limit });
    };
    let (x, _) = cn.pair(n0)?;
    let vertex = x.scale(1.0 - d / 2.0);
    let q = diff_quotient(&NormOracle::new(cn.clone()), &vertex, h, t0)?;
    let bound = d / 16.0;
    let pass = q > bound * (1.0 - 1e-6);
    Ok(Witness {
        tau,
        n0,
        t0,
        quotient: q,
        bound,
        pass,
        near_miss: pass && q <= bound,
    })
}

/// Witnesses for every direction and scale.
pub fn witness_sweep(cn: &CascadeNorm, directions: &[SparseVector], taus: &[f64]) -> Result<(Vec<Witness>, Report)> {
    let mut rows = Vec::new();
    let mut check = Check::new("witness-quotient");
    let mut scale = Check::new("t0-below-tau");
    for (i, h) in directions.iter().enumerate() {
        for &tau in taus {
            let w = ug_witness(cn, h, tau)?;
            check.observe(
                if w.pass { -1.0 } else { 1.0 },
                || json!({ "direction": i, "tau": tau, "n0": w.n0, "t0": w.t0, "quotient": w.quotient }),
            );
            scale.observe(w.t0 - tau, || json!({ "direction": i, "tau": tau, "t0": w.t0 }));
            rows.push(w);
        }
    }
    Ok((rows, Report::from_checks(cn.config().seed, vec![check, scale])))
}

/// A slice `{x in B_norm : <f, x> > level}` and the metric for its diameter.
#[derive(Debug, Clone)]
pub struct SliceSpec {
    pub norm: NormOracle,
    pub f: DualFunctional,
    pub level: f64,
    pub metric: NormOracle,
    /// A known point of the slice, if any.
    pub witness: Option<SparseVector>,
    /// `(x0, delta)`: sample along segments from `(1-d/2) x0`.
    pub anchor: Option<(SparseVector, f64)>,
    /// Random directions are supported in `0..dim`.
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceEstimate {
    /// Largest sampled distance; a lower bound for the diameter.
    pub lower: f64,
    pub pair: Option<(SparseVector, SparseVector)>,
    pub points: usize,
    pub witness_certified: bool,
}

/// Point of the unit sphere of `norm` in a random direction, `None` at 0.
fn sphere_point<R: Rng>(norm: &NormOracle, dim: usize, r: &mut R) -> Result<Option<SparseVector>> {
    let z = rng::random_scaled_vector(r, dim, 1.0, 1.0);
    let n = norm.eval(&z)?;
    Ok(if n > 0.0 { Some(z.scale(1.0 / n)) } else { None })
}

/// Samples slice points along segments from the vertex `(1-d/2) x0` (or the
/// witness) towards random points of the ball, together with random
/// perturbations of the vertex pushed back into the ball, and returns the
/// largest pairwise distance found.
pub fn slice_diameter_estimate(s: &SliceSpec, samples: usize, seed: u64) -> Result<SliceEstimate> {
    if s.dim == 0 {
        return param("slice sampling needs a positive dimension");
    }
    let mut r = rng::labeled(seed, "slice", 0);
    let inside =
        |x: &SparseVector| -> Result<bool> { Ok(s.norm.eval(x)? <= 1.0 + 1e-12 && pairing(&s.f, x) > s.level) };
    let mut witness_certified = false;
    let mut pts = Vec::new();
    if let Some(w) = &s.witness {
        if inside(w)? {
            witness_certified = true;
            pts.push(w.clone());
        }
    }
    let center = match (&s.anchor, &s.witness) {
        (Some((x0, d)), _) => Some(x0.scale(1.0 - d / 2.0)),
        (None, Some(w)) => Some(w.clone()),
        _ => None,
    };
    let mut attempts = 0usize;
    while pts.len() < samples && attempts < 40 * samples.max(1) {
        attempts += 1;
        let Some(z) = sphere_point(&s.norm, s.dim, &mut r)? else {
            continue;
        };
        let cand = match &center {
            Some(v) if r.random_range(0..4) != 0 => {
                let fv = pairing(&s.f, v);
                let fz = pairing(&s.f, &z);
                if s.norm.eval(v)? > 1.0 + 1e-12 || fv <= s.level {
                    continue;
                }
                // <f, v + lam (z - v)> > level for lam below lam_max
                let lam_max = if fz < fv {
                    ((fv - s.level) / (fv - fz)).min(1.0)
                } else {
                    1.0
                };
                let u: f64 = r.random();
                let lam = lam_max * (1.0 - u * u) * (1.0 - 1e-9);
                v.axpy(lam, &(&z - v))
            }
            Some(v) => {
                let rho = 10f64.powf(r.random_range(-4.0..0.0));
                let y = v.axpy(rho, &z);
                let n = s.norm.eval(&y)?;
                if n > 1.0 {
                    y.scale(1.0 / n)
                } else {
                    y
                }
            }
            None => z,
        };
        if inside(&cand)? {
            pts.push(cand);
        }
    }
    if pts.is_empty() {
        return Err(RenormError::SlicePossiblyEmpty(format!(
            "no point with <f, x> > {} found in {attempts} attempts",
            s.level
        )));
    }
    let (lower, pair) = max_pairwise(&s.metric, &pts)?;
    Ok(SliceEstimate {
        lower,
        pair,
        points: pts.len(),
        witness_certified,
    })
}

/// Quotient and slice estimates for an approximation of a seed norm:
/// `D(approx, v, h, t) >= (2/(1+eta))(rhs - eta/|t|)` at the vertex for random
/// admissible steps, and sampled slice diameters of the approximation ball
/// measured in the seed norm against `((8-2d)/d)(eps + eta(1-d/2))`.
pub fn approx_lemma_report(
    seed_norm: &SeedNorm,
    approx: &ApproxNorm,
    directions: &[SparseVector],
    eps_list: &[f64],
    dim: usize,
    points: usize,
    seed: u64,
) -> Result<Report> {
    let p = seed_norm.params();
    let d = p.delta();
    let eta = approx.eta();
    let vertex = p.vertex();
    let mut r = rng::labeled(seed, "approx-quotient", 0);
    let mut quotient = Check::new("approx-quotient");
    for h in directions {
        let (rhs, t_max) = lemma_derivative_bound(seed_norm, h)?;
        for _ in 0..8 {
            let t = t_max * r.random_range(1e-3..1.0) * if r.random::<bool>() { 1.0 } else { -1.0 };
            let q = diff_quotient(approx.oracle(), &vertex, h, t)?;
            let bound = 2.0 / (1.0 + eta) * (rhs - eta / t.abs());
            // D changes sign with t; the estimate concerns its size
            let q = q * t.signum();
            quotient.observe(
                bound - 1e-8 - q,
                || json!({ "h": h.to_json(), "t": t, "q": q, "bound": bound }),
            );
        }
    }
    let mut checks = vec![quotient];
    for (k, &eps) in eps_list.iter().enumerate() {
        let spec = SliceSpec {
            norm: approx.oracle().clone(),
            f: p.f0().clone(),
            level: 1.0 - d / 2.0 - eps,
            metric: seed_norm.oracle(),
            witness: Some(vertex.clone()),
            anchor: Some((p.x0().clone(), d)),
            dim,
        };
        let est = slice_diameter_estimate(&spec, points, rng::derive_seed(seed, "approx-slice", k as u64))?;
        let bound = approx_slice_bound(d, eps, eta);
        let mut c = Check::new(format!("approx-slice eps={eps}"));
        c.observe(
            est.lower - bound - 1e-8,
            || json!({ "eps": eps, "lower": est.lower, "bound": bound }),
        );
        c.samples = est.points;
        checks.push(c);
    }
    Ok(Report::from_checks(seed, checks))
}

/// One certified slice of the cascade ball.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DentRow {
    pub radius: f64,
    pub eps0: f64,
    pub n0: usize,
    pub eta: f64,
    /// `((8-2d)/d)(eps0 + eta_n0 (1-d/2))`, below `radius`.
    pub bound: f64,
    /// Sampled diameter in the seed norm of stage `n0`.
    pub lower: f64,
    /// Cascade norm of the witness `(1-d/2) x_n0`.
    pub witness_norm: f64,
    pub points: usize,
    pub pass: bool,
}

/// `(eps0, n0, bound)` for a target radius.
pub fn dentability_parameters(cn: &CascadeNorm, radius: f64) -> Result<(f64, usize, f64)> {
    let d = cn.delta();
    if !(radius > 0.0) {
        return param(format!("radius must be positive, got {radius}"));
    }
    let k = (8.0 - 2.0 * d) / d;
    let eps0 = (d / 4.0).min(radius / (2.0 * k));
    let limit = cn.stage_limit();
    for n in 1..=limit {
        let bound = k * (eps0 + cn.eta(n) * (1.0 - d / 2.0));
        if bound < radius {
            return Ok((eps0, n, bound));
        }
    }
    Err(RenormError::RadiusUnreachable {
        radius,
        budget: limit,
        required_eta: (radius / k - eps0) / (1.0 - d / 2.0),
    })
}

/// For each radius: stage and depth of a slice whose diameter bound is below
/// the radius, the witness that makes it non-empty and a sampled diameter.
pub fn dentability_report(
    cn: &CascadeNorm,
    radii: &[f64],
    dim: usize,
    points: usize,
    seed: u64,
) -> Result<(Vec<DentRow>, Report)> {
    let d = cn.delta();
    let norm = NormOracle::new(cn.clone());
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (k, &radius) in radii.iter().enumerate() {
        let (eps0, n0, bound) = dentability_parameters(cn, radius)?;
        let (x, f) = cn.pair(n0)?;
        let witness = x.scale(1.0 - d / 2.0);
        let witness_norm = norm.eval(&witness)?;
        let spec = SliceSpec {
            norm: norm.clone(),
            f,
            level: 1.0 - d / 2.0 - eps0,
            metric: cn.seed_norm(n0)?.oracle(),
            witness: Some(witness),
            anchor: Some((x, d)),
            dim: dim.max(n0 + 2),
        };
        let est = slice_diameter_estimate(&spec, points, rng::derive_seed(seed, "dentability", k as u64))?;
        let pass = est.witness_certified && est.lower <= bound + 1e-8 && bound < radius;
        let mut c = Check::new(format!("dentable r={radius}"));
        c.observe_bool(pass, || {
            json!({ "radius": radius, "eps0": eps0, "n0": n0, "bound": bound, "lower": est.lower,
                    "witness_norm": witness_norm })
        });
        c.samples = est.points;
        checks.push(c);
        rows.push(DentRow {
            radius,
            eps0,
            n0,
            eta: cn.eta(n0),
            bound,
            lower: est.lower,
            witness_norm,
            points: est.points,
            pass,
        });
    }
    Ok((rows, Report::from_checks(seed, checks)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{build_cascade, CascadeConfig, EtaSchedule};
    use crate::psi::SeedParams;
    use crate::seed_norm::lemma_slice_bound;
    use crate::smooth::rescale_approx;

    fn e(i: usize) -> SparseVector {
        SparseVector::unit(i)
    }

    fn c0() -> CascadeNorm {
        build_cascade(CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
        ))
        .unwrap()
    }

    #[test]
    fn quotient_examples() {
        let sup = NormOracle::sup();
        assert_eq!(diff_quotient(&sup, &e(1), &e(2), 0.5).unwrap(), 0.0);
        assert_eq!(diff_quotient(&sup, &e(1), &e(1), 0.5).unwrap(), 0.0);
        assert!(diff_quotient(&sup, &e(1), &e(1), 0.0).is_err());
        let seed = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap()).oracle();
        let q = diff_quotient(&seed, &e(1).scale(0.8), &e(2), 0.25).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quotient_properties() {
        let seed = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap()).oracle();
        for n in [NormOracle::sup(), seed] {
            let r = quotient_property_report(&n, 6, 200, 4).unwrap();
            assert!(r.pass, "{:?}", r.first_counterexample);
        }
    }

    #[test]
    fn witness_for_e2() {
        let cn = c0();
        let w = ug_witness(&cn, &e(2), 1e-3).unwrap();
        assert!(w.pass && w.t0 < 1e-3 && w.n0 != 2);
        let eta = cn.eta(w.n0);
        assert!((w.quotient - 0.5 / (1.0 + eta).sqrt()).abs() < 1e-6, "{}", w.quotient);
        let w = ug_witness(&cn, &e(1), 1e-1).unwrap();
        assert!(w.pass && w.n0 != 1);
    }

    #[test]
    fn witness_needs_enough_stages() {
        let mut cfg = CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
        );
        cfg.stage_budget = 5;
        let cn = build_cascade(cfg).unwrap();
        assert!(matches!(
            ug_witness(&cn, &e(2), 1e-5),
            Err(RenormError::InsufficientStages { .. })
        ));
    }

    #[test]
    fn seed_slice_sweep_shrinks_under_the_bound() {
        let s = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap());
        let mut last = f64::INFINITY;
        for eps in [0.05, 0.005, 0.0005] {
            let spec = SliceSpec {
                norm: s.oracle(),
                f: DualFunctional::coordinate(1),
                level: 0.8 - eps,
                metric: s.oracle(),
                witness: Some(e(1).scale(0.8)),
                anchor: Some((e(1), 0.4)),
                dim: 8,
            };
            let est = slice_diameter_estimate(&spec, 150, 3).unwrap();
            let bound = lemma_slice_bound(0.4, eps).unwrap();
            assert!(est.witness_certified);
            assert!(est.lower <= bound + 1e-8, "eps={eps}: {} > {bound}", est.lower);
            assert!(est.lower > 0.2 * bound, "eps={eps}: {} too small", est.lower);
            assert!(est.lower < last);
            last = est.lower;
        }
    }

    #[test]
    fn empty_slice_is_reported() {
        let spec = SliceSpec {
            norm: NormOracle::sup(),
            f: DualFunctional::coordinate(1),
            level: 1.5,
            metric: NormOracle::sup(),
            witness: None,
            anchor: None,
            dim: 4,
        };
        assert!(matches!(
            slice_diameter_estimate(&spec, 20, 0),
            Err(RenormError::SlicePossiblyEmpty(_))
        ));
    }

    #[test]
    fn approximation_estimates_hold() {
        let s = SeedNorm::new(SeedParams::coordinate(1, 0.4).unwrap());
        let ap = rescale_approx(&s.oracle(), 0.01).unwrap();
        let dirs: Vec<_> = (0..5).map(e).collect();
        let r = approx_lemma_report(&s, &ap, &dirs, &[0.05, 0.01], 8, 100, 7).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
    }

    #[test]
    fn dentability_parameters_examples() {
        let cn = c0();
        let (eps0, n0, _) = dentability_parameters(&cn, 10.0).unwrap();
        assert_eq!((eps0, n0), (0.1, 1));
        let (rows, rep) = dentability_report(&cn, &[0.5, 0.1], 10, 60, 1).unwrap();
        assert!(rep.pass, "{:?}", rep.first_counterexample);
        assert!(rows.iter().all(|r| r.witness_norm <= 1.0));
        let mut cfg = CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
        );
        cfg.stage_budget = 3;
        let small = build_cascade(cfg).unwrap();
        match dentability_parameters(&small, 0.001) {
            Err(RenormError::RadiusUnreachable { required_eta, .. }) => assert!(required_eta > 0.0),
            other => panic!("{other:?}"),
        }
    }
}
