//! The seed norm built from `(x0, f0, delta)` and its quantitative bounds.
//!
//! Outside the cone `C(f0, 1 - delta)` the seed norm equals the base norm.
//! Inside the positive cone it is `psi(y)/(1-d) + (<f0,y> - psi(y))/(1-d/2)`,
//! and the negative cone is handled by symmetry. Its unit ball is the base
//! ball with both cone caps cut off and the vertices `±(1-d/2) x0` added.

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{param, Result};
use crate::norm::{Norm, NormOracle, Provenance};
use crate::psi::{psi_eval, SeedParams};
use crate::report::{Check, Report};
use crate::rng;
use crate::vectors::{pairing, ConeSide, SparseVector, ROOT_TOL};

/// Relative width of the band in which a point on the cone boundary is
/// evaluated with the cone formula. Both branches agree there.
const BRANCH_BAND: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SeedNorm {
    params: SeedParams,
}

/// Value of the seed norm at a point together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedValue {
    pub value: f64,
    pub branch: ConeSide,
    /// `psi` of the cone-side representative; not computed off the cone.
    pub psi: Option<f64>,
}

impl SeedNorm {
    pub fn new(params: SeedParams) -> Self {
        SeedNorm { params }
    }

    pub fn params(&self) -> &SeedParams {
        &self.params
    }

    pub fn delta(&self) -> f64 {
        self.params.delta()
    }

    pub fn oracle(&self) -> NormOracle {
        NormOracle::new(self.clone())
    }
}

impl Norm for SeedNorm {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        Ok(seed_eval(self, x)?.value)
    }

    fn lower_const(&self) -> f64 {
        let k = self.params.x0_norm();
        let base_lo = self.params.base().lower_const();
        base_lo / (k * (1.0 - self.delta() / 2.0)).max(1.0)
    }

    fn upper_const(&self) -> f64 {
        self.params.base().upper_const() / (1.0 - self.delta())
    }

    fn provenance(&self) -> Provenance {
        Provenance::Seed
    }

    fn describe(&self) -> String {
        format!("seed(x0={:?}, delta={})", self.params.x0(), self.delta())
    }
}

/// Evaluate the seed norm by its piecewise formula.
pub fn seed_eval(s: &SeedNorm, y: &SparseVector) -> Result<SeedValue> {
    let p = &s.params;
    if y.is_zero() {
        return Ok(SeedValue {
            value: 0.0,
            branch: ConeSide::Plus,
            psi: Some(0.0),
        });
    }
    let d = p.delta();
    let c = pairing(p.f0(), y);
    let n = p.base().eval(y)?;
    let threshold = (1.0 - d) * n - BRANCH_BAND * n;
    let (branch, signed) = if c >= threshold {
        (ConeSide::Plus, None)
    } else if c <= -threshold {
        (ConeSide::Minus, Some(-y))
    } else {
        return Ok(SeedValue {
            value: n,
            branch: ConeSide::Outside,
            psi: None,
        });
    };
    let (v, c) = match &signed {
        Some(neg) => (neg, -c),
        None => (y, c),
    };
    let psi = psi_eval(p, v)?;
    let value = psi / (1.0 - d) + (c - psi) / (1.0 - d / 2.0);
    Ok(SeedValue {
        value,
        branch,
        psi: Some(psi),
    })
}

/// Right-hand side and admissible step range of the one-sided derivative
/// bound at the vertex `(1-d/2) x0` in direction `h` (unit in the base norm).
/// The bound is vacuous when `rhs` is negative.
pub fn lemma_derivative_bound(s: &SeedNorm, h: &SparseVector) -> Result<(f64, f64)> {
    let p = &s.params;
    let nh = p.base().eval(h)?;
    if (nh - 1.0).abs() > ROOT_TOL {
        return param(format!("direction must be a unit vector, base(h) = {nh}"));
    }
    Ok(derivative_bound_for(p.delta(), pairing(p.f0(), h).abs()))
}

/// `(rhs, t_max)` for a given `|<f0,h>|`.
pub fn derivative_bound_for(delta: f64, abs_pairing: f64) -> (f64, f64) {
    let d = delta;
    let a = abs_pairing;
    let rhs = (d - (4.0 - d) * a) / (2.0 * (1.0 - d / 2.0) * (2.0 - d));
    let t_max = d * (1.0 - d / 2.0) / ((1.0 - d) + a);
    (rhs, t_max)
}

/// Diameter bound `((8 - 2d)/d) eps` for slices of the seed ball by `f0` at
/// level `1 - d/2 - eps`, valid for `0 < eps < d/2`.
pub fn lemma_slice_bound(delta: f64, eps: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return param(format!("delta must lie in (0, 1/2), got {delta}"));
    }
    if !(eps > 0.0 && eps < delta / 2.0) {
        return param(format!(
            "eps must lie in (0, delta/2) = (0, {}), got {eps}",
            delta / 2.0
        ));
    }
    Ok((8.0 - 2.0 * delta) / delta * eps)
}

/// Factor `(4 - 2d)/(4 - d)` in `|x| <= factor * seed(x)` on `C(f0, 1 - d/4)`.
pub fn lemma_cone_factor(delta: f64) -> f64 {
    (4.0 - 2.0 * delta) / (4.0 - delta)
}

/// Lower bound on the symmetric difference quotient of an approximation
/// `N_eta <= seed <= (1+eta) N_eta` at the vertex.
pub fn approx_derivative_bound(rhs: f64, eta: f64, t: f64) -> f64 {
    2.0 / (1.0 + eta) * (rhs - eta / t.abs())
}

/// Diameter bound, in the seed metric, for slices of an approximation ball:
/// `((8 - 2d)/d)(eps + eta (1 - d/2))`.
pub fn approx_slice_bound(delta: f64, eps: f64, eta: f64) -> f64 {
    (8.0 - 2.0 * delta) / delta * (eps + eta * (1.0 - delta / 2.0))
}

/// Decomposition of a unit vector in the positive cone as
/// `a z1 + b (1-d/2) x0` with `<f0,z1> = (1-d) base(z1)`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub a: f64,
    pub b: f64,
    pub z1: Option<SparseVector>,
    pub reconstruction_error: f64,
}

/// Returns `None` outside the cone. Negative-cone points are decomposed
/// through `-y`.
pub fn unit_ball_decomposition(s: &SeedNorm, y: &SparseVector) -> Result<Option<Decomposition>> {
    let sv = seed_eval(s, y)?;
    let p = &s.params;
    let d = p.delta();
    let v = match sv.branch {
        ConeSide::Outside => return Ok(None),
        ConeSide::Plus => y.clone(),
        ConeSide::Minus => -y,
    };
    let c = pairing(p.f0(), &v);
    let psi = sv.psi.unwrap_or(0.0);
    let a = psi / (1.0 - d);
    let b = (c - psi) / (1.0 - d / 2.0);
    let vertex = p.vertex();
    let (z1, recon) = if psi > 0.0 {
        let z1 = v.axpy(psi - c, p.x0()).scale((1.0 - d) / psi);
        let recon = z1.scale(a).axpy(b, &vertex);
        (Some(z1), recon)
    } else {
        (None, vertex.scale(b))
    };
    let err = p.base().eval(&(&recon - &v))?;
    Ok(Some(Decomposition {
        a,
        b,
        z1,
        reconstruction_error: err,
    }))
}

/// Random point `z` of the base ball outside the cone `C(f0, 1-d)`, scaled to
/// the unit sphere with probability one half.
pub fn sample_off_cone<R: Rng>(p: &SeedParams, dim: usize, r: &mut R) -> Result<SparseVector> {
    loop {
        let w = rng::random_unit_vector(r, dim);
        let c: f64 = r.random_range(-1.0..=1.0);
        let mut z = w.axpy(c, p.x0());
        let n = p.base().eval(&z)?;
        if n == 0.0 {
            continue;
        }
        z = z.scale(1.0 / n);
        if p.cone_side(&z)? != ConeSide::Outside {
            continue;
        }
        if r.random::<bool>() {
            z = z.scale(r.random_range(0.0..=1.0));
            if z.is_zero() {
                continue;
            }
        }
        return Ok(z);
    }
}

/// Points of the slice `S(B_seed, f0, 1 - d/2 - eps)` sampled as
/// `lam z + (1 - lam)(1-d/2) x0` with `z` off the cone and `lam < 2 eps/d`.
pub fn sample_vertex_slice<R: Rng>(
    s: &SeedNorm,
    eps: f64,
    dim: usize,
    count: usize,
    r: &mut R,
) -> Result<Vec<SparseVector>> {
    let p = &s.params;
    let d = p.delta();
    let level = 1.0 - d / 2.0 - eps;
    let lam_max = 2.0 * eps / d;
    let vertex = p.vertex();
    let mut out = vec![vertex.clone()];
    let mut attempts = 0usize;
    while out.len() < count && attempts < 50 * count.max(1) {
        attempts += 1;
        let z = sample_off_cone(p, dim, r)?;
        // bias towards the far end of the admissible range
        let u: f64 = r.random();
        let lam = lam_max * (1.0 - u * u);
        let x = z.scale(lam).axpy(1.0 - lam, &vertex);
        if pairing(p.f0(), &x) > level {
            out.push(x);
        }
    }
    Ok(out)
}

/// Largest pairwise distance in `metric`, with the achieving pair.
pub fn max_pairwise(
    metric: &NormOracle,
    points: &[SparseVector],
) -> Result<(f64, Option<(SparseVector, SparseVector)>)> {
    let mut best = 0.0;
    let mut pair = None;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dist = metric.eval(&(&points[i] - &points[j]))?;
            if dist > best {
                best = dist;
                pair = Some((i, j));
            }
        }
    }
    Ok((best, pair.map(|(i, j)| (points[i].clone(), points[j].clone()))))
}

/// Equivalence `base <= seed <= base/(1-d)`, symmetry and the unit-ball
/// decomposition, on seeded random vectors in `0..dim`.
pub fn seed_invariant_suite(s: &SeedNorm, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let p = &s.params;
    let d = p.delta();
    let mut r = rng::seeded(seed);
    let mut equiv = Check::new("equivalence");
    let mut sym = Check::new("symmetry");
    let mut decomp = Check::new("unit-ball-decomposition");
    for i in 0..samples {
        let mut y = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        if i % 2 == 0 {
            // half of the samples are pushed towards the cone
            let shift = r.random_range(-3.0..3.0) * p.base().eval(&y)?;
            y = y.axpy(shift, p.x0());
        }
        if y.is_zero() {
            continue;
        }
        let b = p.base().eval(&y)?;
        let v = seed_eval(s, &y)?;
        let excess = (b - v.value).max(v.value - b / (1.0 - d)) - 1e-9 * b;
        equiv.observe(excess, || json!({ "y": y.to_json(), "seed": v.value, "base": b }));
        let vn = seed_eval(s, &-&y)?.value;
        sym.observe(
            (vn - v.value).abs() - 1e-12 * v.value,
            || json!({ "y": y.to_json(), "seed": v.value, "seed_neg": vn }),
        );
        if let Some(dc) = unit_ball_decomposition(s, &y.scale(1.0 / v.value))? {
            let mut excess = dc.reconstruction_error - 1e-6;
            excess = excess.max((dc.a + dc.b - 1.0).abs() - 1e-6);
            excess = excess.max(-dc.a - 1e-12).max(-dc.b - 1e-12);
            if let Some(z1) = &dc.z1 {
                let nz = p.base().eval(z1)?;
                excess = excess.max(nz - 1.0 - 1e-6);
                excess = excess.max((pairing(p.f0(), z1) - (1.0 - d) * nz).abs() - 1e-6);
            }
            decomp.observe(excess, || json!({ "y": y.to_json(), "a": dc.a, "b": dc.b }));
        }
    }
    Ok(Report::from_checks(seed, vec![equiv, sym, decomp]))
}

/// One-sided quotient at the vertex against the derivative bound, for each
/// direction and `t_count` equally spaced steps in `(0, t_max)`.
pub fn derivative_lemma_suite(s: &SeedNorm, directions: &[SparseVector], t_count: usize) -> Result<Report> {
    let vertex = s.params.vertex();
    let at_vertex = seed_eval(s, &vertex)?.value;
    let mut check = Check::new("one-sided-quotient");
    for h in directions {
        let (rhs, t_max) = lemma_derivative_bound(s, h)?;
        for j in 1..=t_count {
            let t = t_max * j as f64 / (t_count + 1) as f64;
            let q = (seed_eval(s, &vertex.axpy(t, h))?.value - at_vertex) / t;
            check.observe(
                rhs - 1e-8 - q,
                || json!({ "h": h.to_json(), "t": t, "quotient": q, "rhs": rhs }),
            );
        }
    }
    Ok(Report::from_checks(0, vec![check]))
}

/// Sampled slice diameters against `((8-2d)/d) eps` for each `eps`.
pub fn slice_lemma_suite(s: &SeedNorm, eps_list: &[f64], dim: usize, points: usize, seed: u64) -> Result<Report> {
    let metric = s.oracle();
    let mut checks = Vec::new();
    for (k, &eps) in eps_list.iter().enumerate() {
        let bound = lemma_slice_bound(s.delta(), eps)?;
        let mut r = rng::labeled(seed, "slice", k as u64);
        let pts = sample_vertex_slice(s, eps, dim, points, &mut r)?;
        let (diam, pair) = max_pairwise(&metric, &pts)?;
        let mut c = Check::new(format!("slice-diameter eps={eps}"));
        c.samples = pts.len().saturating_sub(1);
        c.observe(diam - bound - 1e-8, || {
            json!({ "eps": eps, "diameter": diam, "bound": bound,
                    "pair": pair.as_ref().map(|(a, b)| [a.to_json(), b.to_json()]) })
        });
        c.samples = pts.len();
        checks.push(c);
    }
    Ok(Report::from_checks(seed, checks))
}

/// `base(x) <= ((4-2d)/(4-d)) seed(x)` on samples from `C(f0, 1 - d/4)`.
pub fn cone_lemma_suite(s: &SeedNorm, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let p = &s.params;
    let d = p.delta();
    let factor = lemma_cone_factor(d);
    let level = 1.0 - d / 4.0;
    let mut r = rng::seeded(seed);
    let mut check = Check::new("cone-factor");
    let mut attempts = 0usize;
    while check.samples < samples && attempts < 200 * samples.max(1) {
        attempts += 1;
        let w = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        let nw = p.base().eval(&w)?;
        let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
        let x = w.axpy(sign * nw * r.random_range(0.5..8.0), p.x0());
        if x.is_zero() {
            continue;
        }
        let nx = p.base().eval(&x)?;
        if pairing(p.f0(), &x).abs() < level * nx {
            continue;
        }
        let v = seed_eval(s, &x)?.value;
        check.observe(
            nx - factor * v - 1e-9 * nx,
            || json!({ "x": x.to_json(), "base": nx, "seed": v }),
        );
    }
    Ok(Report::from_checks(seed, vec![check]))
}

/// Lattice monotonicity of the `(e_n, e_n)` seed norm on random dominated
/// pairs `|x_i| <= |y_i|`.
pub fn lattice_suite(s: &SeedNorm, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let p = &s.params;
    let (n, _) = p
        .x0()
        .argmax_abs()
        .ok_or_else(|| crate::error::RenormError::Parameter("empty x0".into()))?;
    if p.x0().support_len() != 1 || p.f0().coefficients() != p.x0() || p.base().provenance() != Provenance::Sup {
        return param("the lattice property is only claimed for (e_n, e_n) seeds in the sup norm");
    }
    let mut r = rng::seeded(seed);
    let mut check = Check::new("lattice-monotone");
    for i in 0..samples {
        let mut y = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0);
        if i % 2 == 0 {
            let m = crate::vectors::sup_norm(&y);
            y.set(n, m * r.random_range(-1.5..1.5));
        }
        let mut x = SparseVector::zero();
        for (k, v) in y.iter() {
            let u: f64 = match r.random_range(0..4) {
                0 => 1.0,
                1 => -1.0,
                _ => r.random_range(-1.0..=1.0),
            };
            x.set(k, v * u);
        }
        let sx = seed_eval(s, &x)?.value;
        let sy = seed_eval(s, &y)?.value;
        check.observe(
            sx - sy - 1e-9,
            || json!({ "x": x.to_json(), "y": y.to_json(), "seed_x": sx, "seed_y": sy }),
        );
    }
    Ok(Report::from_checks(seed, vec![check]))
}
