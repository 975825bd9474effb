//! Countable cascade of approximated seed norms.
//!
//! Stage 0 is a base norm `N0`. Stage `n` combines stage `n-1` with an
//! approximation of the seed norm of the `n`-th pair using the bump profile
//! with parameter `eta_n`. On a finitely supported vector only finitely many
//! stages can change the value, so the final norm (the supremum over stages)
//! is evaluated exactly by stopping at the stabilization index.

use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{param, RenormError, Result};
use crate::norm::{Norm, NormOracle, Provenance};
use crate::psi::SeedParams;
use crate::report::{Check, Report};
use crate::rng;
use crate::seed_norm::{lemma_cone_factor, SeedNorm};
use crate::smooth::{combine_values, lfc_sup_approx, rescale_approx, ApproxNorm, BumpProfile};
use crate::vectors::{pairing, DualFunctional, SparseVector};

/// A sequence of pairs `(x_n, f_n)`, `n >= 1`, with a certificate for the
/// decay of `<f_n, x>`.
#[allow(clippy::len_without_is_empty)]
pub trait PairSource: Send + Sync {
    fn pair(&self, n: usize) -> Result<(SparseVector, DualFunctional)>;

    /// Number of pairs, `None` for an infinite source.
    fn len(&self) -> Option<usize>;

    /// Least `N >= 1` with `|<f_m, x>| < threshold` for every `m >= N`.
    fn tail_index(&self, x: &SparseVector, threshold: f64) -> usize;

    /// How far `|x_n|` may exceed 1.
    fn unit_slack(&self) -> f64 {
        0.0
    }

    fn label(&self) -> String;
}

/// `(e_n, e_n)` in `c_0` with the sup norm.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoordinatePairs;

impl PairSource for CoordinatePairs {
    fn pair(&self, n: usize) -> Result<(SparseVector, DualFunctional)> {
        if n == 0 {
            return param("pairs are indexed from 1");
        }
        Ok((SparseVector::unit(n), DualFunctional::coordinate(n)))
    }

    fn len(&self) -> Option<usize> {
        None
    }

    fn tail_index(&self, x: &SparseVector, threshold: f64) -> usize {
        x.iter()
            .filter(|&(i, v)| i >= 1 && v.abs() >= threshold)
            .map(|(i, _)| i + 1)
            .max()
            .unwrap_or(1)
    }

    fn label(&self) -> String {
        "coordinate".into()
    }
}

/// An explicit finite list of pairs.
#[derive(Debug, Clone)]
pub struct FinitePairs {
    pairs: Vec<(SparseVector, DualFunctional)>,
    slack: f64,
    label: String,
}

impl FinitePairs {
    pub fn new(pairs: Vec<(SparseVector, DualFunctional)>, slack: f64, label: impl Into<String>) -> Result<Self> {
        if pairs.is_empty() {
            return param("a finite pair source needs at least one pair");
        }
        Ok(FinitePairs {
            pairs,
            slack,
            label: label.into(),
        })
    }
}

impl PairSource for FinitePairs {
    fn pair(&self, n: usize) -> Result<(SparseVector, DualFunctional)> {
        match n.checked_sub(1).and_then(|i| self.pairs.get(i)) {
            Some(p) => Ok(p.clone()),
            None => param(format!("pair {n} outside 1..={}", self.pairs.len())),
        }
    }

    fn len(&self) -> Option<usize> {
        Some(self.pairs.len())
    }

    fn tail_index(&self, x: &SparseVector, threshold: f64) -> usize {
        self.pairs
            .iter()
            .enumerate()
            .filter(|(_, (_, f))| pairing(f, x).abs() >= threshold)
            .map(|(i, _)| i + 2)
            .max()
            .unwrap_or(1)
    }

    fn unit_slack(&self) -> f64 {
        self.slack
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// `N0 = (1+eta_1)^{3/2} |.|` and `approx_n = seed_n / sqrt(1+eta_n)`.
    RescaleExact,
    /// `N0 = (1+eta_1) lfc_sup(eta_1)` with the rescaled seeds.
    LfcSup,
}

/// `eta_n = first * ratio^(n-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSchedule {
    pub first: f64,
    pub ratio: f64,
}

impl EtaSchedule {
    pub fn eta(&self, n: usize) -> f64 {
        self.first * self.ratio.powi(n as i32 - 1)
    }
}

#[derive(Clone)]
pub struct CascadeConfig {
    pub delta: f64,
    pub pairs: Arc<dyn PairSource>,
    pub etas: EtaSchedule,
    pub a_level: f64,
    pub b_level: f64,
    pub backend: Backend,
    pub stage_budget: usize,
    /// Seed for the build-time validation samples.
    pub seed: u64,
    /// Stages validated eagerly by `build_cascade`; later stages are
    /// validated when first materialized.
    pub eager_stages: usize,
    pub validation_samples: usize,
}

impl CascadeConfig {
    /// The `c_0` preset with pairs `(e_n, e_n)` and default cone levels.
    pub fn coordinate(delta: f64, etas: EtaSchedule) -> Self {
        Self::with_pairs(delta, etas, Arc::new(CoordinatePairs))
    }

    pub fn with_pairs(delta: f64, etas: EtaSchedule, pairs: Arc<dyn PairSource>) -> Self {
        CascadeConfig {
            delta,
            pairs,
            etas,
            a_level: 1.0 - delta / 4.0,
            b_level: 1.0 - delta,
            backend: Backend::RescaleExact,
            stage_budget: 128,
            seed: 0,
            eager_stages: 8,
            validation_samples: 48,
        }
    }

    /// `((4-d)/(4-2d))^{1/4} - 1`, the strict upper bound for every `eta_n`.
    pub fn eta_bound(&self) -> f64 {
        (1.0 / lemma_cone_factor(self.delta)).powf(0.25) - 1.0
    }

    /// Upper bound for `prod_n (1 + eta_n)`: the exact product over the
    /// budget times `exp` of the geometric tail.
    pub fn product_bound(&self) -> f64 {
        let b = self.stage_budget;
        let head: f64 = (1..=b).map(|n| self.etas.eta(n).ln_1p()).sum();
        let tail = self.etas.eta(b + 1) / (1.0 - self.etas.ratio);
        (head + tail).exp()
    }

    /// Every numeric constraint of the construction.
    pub fn validate(&self) -> Result<()> {
        let d = self.delta;
        let fail = |stage: usize, inequality: String| Err(RenormError::Build { stage, inequality });
        if !(d > 0.0 && d < 0.5) {
            return param(format!("delta must lie in (0, 1/2), got {d}"));
        }
        let e = self.etas;
        if !(e.first > 0.0 && e.first.is_finite()) {
            return param(format!("eta.first must be positive, got {}", e.first));
        }
        if !(e.ratio > 0.0 && e.ratio < 1.0) {
            return fail(0, format!("eta_n decreasing needs 0 < ratio < 1, got {}", e.ratio));
        }
        if self.stage_budget == 0 {
            return param("stage_budget must be positive");
        }
        if !(self.b_level > 0.0 && self.b_level < self.a_level && self.a_level <= 1.0) {
            return fail(
                0,
                format!(
                    "0 < b_level < a_level <= 1 violated: a_level = {}, b_level = {}",
                    self.a_level, self.b_level
                ),
            );
        }
        let bound = self.eta_bound();
        if !(e.first < bound) {
            return fail(
                1,
                format!(
                    "eta_1 < ((4-delta)/(4-2delta))^(1/4) - 1 violated: {} >= {bound}",
                    e.first
                ),
            );
        }
        let prod = self.product_bound();
        if !(prod <= 2.0) {
            return fail(0, format!("prod (1+eta_n) <= 2 violated: bound {prod}"));
        }
        Ok(())
    }
}

struct Stage {
    index: usize,
    eta: f64,
    seed: SeedNorm,
    approx: ApproxNorm,
    profile: BumpProfile,
}

struct Inner {
    cfg: CascadeConfig,
    space: NormOracle,
    base0: NormOracle,
    alpha: f64,
    product: f64,
    stages: RwLock<Vec<Arc<Stage>>>,
}

/// The final cascade norm. Cloning shares the stage cache.
#[derive(Clone)]
pub struct CascadeNorm {
    inner: Arc<Inner>,
}

/// Validates the configuration, computes `N0` and `alpha`, and materializes
/// the first `eager_stages` stages with their sampled preconditions.
pub fn build_cascade(cfg: CascadeConfig) -> Result<CascadeNorm> {
    cfg.validate()?;
    let space = NormOracle::sup();
    let eta1 = cfg.etas.first;
    let base0 = match cfg.backend {
        Backend::RescaleExact => space.scaled((1.0 + eta1).powf(1.5))?,
        Backend::LfcSup => lfc_sup_approx(eta1)?.scaled(1.0 + eta1)?,
    };
    let alpha = 1.0 / ((1.0 - cfg.delta) * (1.0 + eta1));
    if alpha < 1.0 {
        return Err(RenormError::Build {
            stage: 0,
            inequality: format!("alpha >= 1 violated: alpha = {alpha}"),
        });
    }
    let product = cfg.product_bound();
    let eager = cfg
        .eager_stages
        .min(cfg.stage_budget)
        .min(cfg.pairs.len().unwrap_or(usize::MAX));
    let cn = CascadeNorm {
        inner: Arc::new(Inner {
            cfg,
            space,
            base0,
            alpha,
            product,
            stages: RwLock::new(Vec::new()),
        }),
    };
    cn.stages_upto(eager)?;
    Ok(cn)
}

impl CascadeNorm {
    pub fn config(&self) -> &CascadeConfig {
        &self.inner.cfg
    }

    pub fn delta(&self) -> f64 {
        self.inner.cfg.delta
    }

    pub fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    /// Upper bound used for `prod (1 + eta_n)`.
    pub fn product(&self) -> f64 {
        self.inner.product
    }

    pub fn base0(&self) -> &NormOracle {
        &self.inner.base0
    }

    /// The norm of the underlying space.
    pub fn space_norm(&self) -> &NormOracle {
        &self.inner.space
    }

    pub fn eta(&self, n: usize) -> f64 {
        self.inner.cfg.etas.eta(n)
    }

    pub fn stage_budget(&self) -> usize {
        self.inner.cfg.stage_budget
    }

    /// Number of stages that exist at all: the budget, capped by the source.
    pub fn stage_limit(&self) -> usize {
        let b = self.inner.cfg.stage_budget;
        self.inner.cfg.pairs.len().map_or(b, |l| l.min(b))
    }

    pub fn materialized(&self) -> usize {
        self.inner.stages.read().map(|s| s.len()).unwrap_or(0)
    }

    pub fn pair(&self, n: usize) -> Result<(SparseVector, DualFunctional)> {
        self.inner.cfg.pairs.pair(n)
    }

    pub fn seed_norm(&self, n: usize) -> Result<SeedNorm> {
        Ok(self.stage(n)?.seed.clone())
    }

    pub fn approx(&self, n: usize) -> Result<ApproxNorm> {
        Ok(self.stage(n)?.approx.clone())
    }

    pub fn approx_value(&self, n: usize, x: &SparseVector) -> Result<f64> {
        self.stage(n)?.approx.eval(x)
    }

    fn stage(&self, n: usize) -> Result<Arc<Stage>> {
        if n == 0 {
            return param("stage 0 is the base norm and has no seed");
        }
        Ok(self.stages_upto(n)?[n - 1].clone())
    }

    /// Stages `1..=n`, building and validating missing ones.
    fn stages_upto(&self, n: usize) -> Result<Vec<Arc<Stage>>> {
        let limit = self.stage_limit();
        if n > limit {
            return Err(RenormError::StabilizationBeyondBudget {
                needed: n,
                budget: limit,
            });
        }
        {
            let s = self
                .inner
                .stages
                .read()
                .map_err(|_| RenormError::Internal("stage cache poisoned".into()))?;
            if s.len() >= n {
                return Ok(s[..n].to_vec());
            }
        }
        let mut s = self
            .inner
            .stages
            .write()
            .map_err(|_| RenormError::Internal("stage cache poisoned".into()))?;
        while s.len() < n {
            let stage = self.make_stage(s.len() + 1, &s)?;
            s.push(Arc::new(stage));
        }
        Ok(s[..n].to_vec())
    }

    fn make_stage(&self, n: usize, previous: &[Arc<Stage>]) -> Result<Stage> {
        let cfg = &self.inner.cfg;
        let build_err = |inequality: String| RenormError::Build { stage: n, inequality };
        let (x, f) = cfg.pairs.pair(n)?;
        let params = SeedParams::with_unit_slack(x, f, cfg.delta, self.inner.space.clone(), cfg.pairs.unit_slack())
            .map_err(|e| build_err(format!("pair is not admissible: {e}")))?;
        let eta = cfg.etas.eta(n);
        let seed = SeedNorm::new(params);
        let approx = rescale_approx(&seed.oracle(), eta)?;
        let stage = Stage {
            index: n,
            eta,
            seed,
            approx,
            profile: BumpProfile::new(eta)?,
        };
        self.validate_stage(&stage, previous)?;
        Ok(stage)
    }

    /// Sampled preconditions for one stage: the two sandwich inequalities on
    /// and around the cone boundaries, the global bound `approx <= alpha N0`
    /// and separation of the new pair from the earlier ones.
    fn validate_stage(&self, st: &Stage, previous: &[Arc<Stage>]) -> Result<()> {
        let cfg = &self.inner.cfg;
        let n = st.index;
        let fail = |inequality: String| Err(RenormError::Build { stage: n, inequality });
        let p = st.seed.params();
        let sep = cfg.delta / (2.0 * (2.0 - cfg.delta));
        for prev in previous {
            let q = prev.seed.params();
            let a = pairing(p.f0(), q.x0()).abs();
            let b = pairing(q.f0(), p.x0()).abs();
            if a.max(b) >= sep {
                return fail(format!(
                    "|<f_n, x_m>| < delta/(2(2-delta)) = {sep} violated against stage {}: {}",
                    prev.index,
                    a.max(b)
                ));
            }
        }
        let mut r = rng::labeled(cfg.seed, "cascade-validate", n as u64);
        let dim = p.x0().max_index().max(p.f0().coefficients().max_index()).unwrap_or(0) + 4;
        let base0 = &self.inner.base0;
        let tol = 1e-12;
        for k in 0..cfg.validation_samples {
            let w = orthogonal_sample(p, dim, &mut r)?;
            if w.is_zero() {
                continue;
            }
            // points on and inside the boundary of C(f_n, a)
            if let Some(c) = cone_boundary_scale(p, &w, cfg.a_level)? {
                let stretch = if k % 2 == 0 {
                    1.0
                } else {
                    1.0 + r.random_range(0.0..4.0)
                };
                let x = w.axpy(c * stretch, p.x0());
                let lhs = base0.eval(&x)?;
                let rhs = st.approx.eval(&x)? / (1.0 + st.eta);
                if lhs > rhs * (1.0 + tol) {
                    return fail(format!(
                        "N0(x) <= approx_n(x)/(1+eta_n) on C(f_n, a_level) violated at {:?}: {lhs} > {rhs}",
                        x
                    ));
                }
            }
            // points strictly outside C(f_n, b)
            if let Some(c) = cone_boundary_scale(p, &w, cfg.b_level)? {
                let shrink = if k % 2 == 0 {
                    1.0 - 1e-9
                } else {
                    r.random_range(0.0..1.0)
                };
                let x = w.axpy(c * shrink, p.x0());
                let lhs = st.approx.eval(&x)?;
                let rhs = base0.eval(&x)? / (1.0 + st.eta);
                if lhs > rhs * (1.0 + tol) {
                    return fail(format!(
                        "approx_n(x) <= N0(x)/(1+eta_n) off C(f_n, b_level) violated at {:?}: {lhs} > {rhs}",
                        x
                    ));
                }
            }
            let x = w.axpy(r.random_range(-3.0..3.0), p.x0());
            let lhs = st.approx.eval(&x)?;
            let rhs = self.inner.alpha * base0.eval(&x)?;
            if lhs > rhs * (1.0 + tol) {
                return fail(format!("approx_n <= alpha N0 violated at {:?}: {lhs} > {rhs}", x));
            }
        }
        Ok(())
    }

    /// Value of stage `n` at `x`; stage 0 is `N0`.
    pub fn stage_value(&self, n: usize, x: &SparseVector) -> Result<f64> {
        Ok(*self.stage_values(n, x)?.last().unwrap_or(&0.0))
    }

    /// Values of stages `0..=n` at `x`.
    pub fn stage_values(&self, n: usize, x: &SparseVector) -> Result<Vec<f64>> {
        let stages = self.stages_upto(n)?;
        let mut out = Vec::with_capacity(n + 1);
        let mut v = self.inner.base0.eval(x)?;
        out.push(v);
        for st in &stages {
            let u = st.approx.eval(x)?;
            v = combine_values(&st.profile, v, u)?;
            out.push(v);
        }
        Ok(out)
    }

    /// Least `n` after which no stage can change the value at `x`.
    pub fn stabilization_index(&self, x: &SparseVector) -> Result<usize> {
        if x.is_zero() {
            return Ok(0);
        }
        let norm = self.inner.space.eval(x)?;
        let threshold = norm * self.inner.cfg.b_level.min(0.125);
        let nx = self.inner.cfg.pairs.tail_index(x, threshold).max(1);
        if nx > self.inner.cfg.stage_budget {
            return Err(RenormError::StabilizationBeyondBudget {
                needed: nx,
                budget: self.inner.cfg.stage_budget,
            });
        }
        Ok(nx)
    }
}

/// `(value, stabilized_at)`; `(0, 0)` at the origin.
pub fn cascade_eval(cn: &CascadeNorm, x: &SparseVector) -> Result<(f64, usize)> {
    let nx = cn.stabilization_index(x)?;
    if nx == 0 {
        return Ok((0.0, 0));
    }
    let v = cn.stage_value(nx.min(cn.stage_limit()), x)?;
    Ok((v, nx))
}

impl Norm for CascadeNorm {
    fn eval(&self, x: &SparseVector) -> Result<f64> {
        Ok(cascade_eval(self, x)?.0)
    }

    fn lower_const(&self) -> f64 {
        self.inner.base0.lower_const()
    }

    fn upper_const(&self) -> f64 {
        self.inner.alpha * self.inner.product * self.inner.base0.upper_const()
    }

    fn provenance(&self) -> Provenance {
        Provenance::Cascade
    }

    fn describe(&self) -> String {
        let c = &self.inner.cfg;
        format!(
            "cascade({}, delta={}, eta={}*{}^(n-1), {:?})",
            c.pairs.label(),
            c.delta,
            c.etas.first,
            c.etas.ratio,
            c.backend
        )
    }
}

/// Random `w` with `<f0, w> = 0`, built as `v - <f0,v> x0`.
fn orthogonal_sample<R: Rng>(p: &SeedParams, dim: usize, r: &mut R) -> Result<SparseVector> {
    let v = rng::random_scaled_vector(r, dim, 1.0, 1.0).scale(r.random_range(0.05..1.0));
    Ok(v.axpy(-pairing(p.f0(), &v), p.x0()))
}

/// The `c > 0` with `c = level * N(c x0 + w)`, i.e. `c x0 + w` on the boundary
/// of `C(f0, level)` when `<f0, w> = 0`. `None` when the map is not increasing.
fn cone_boundary_scale(p: &SeedParams, w: &SparseVector, level: f64) -> Result<Option<f64>> {
    if level * p.x0_norm() >= 1.0 {
        return Ok(None);
    }
    let base = p.base();
    let h = |c: f64| -> Result<f64> { Ok(c - level * base.eval(&w.axpy(c, p.x0()))?) };
    let mut hi = base.eval(w)?.max(1e-300);
    let mut k = 0;
    while h(hi)? <= 0.0 {
        hi *= 2.0;
        k += 1;
        if k > 200 {
            return Ok(None);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}

/// A vector of `C(f_n, a_level)` outside `C(f_i, b_level)` for every `i != n`,
/// or `None` when the random attempt misses the region.
fn coincidence_point<R: Rng>(cn: &CascadeNorm, n: usize, r: &mut R) -> Result<Option<SparseVector>> {
    let seed = cn.seed_norm(n)?;
    let p = seed.params();
    let cfg = cn.config();
    let dim = p.x0().max_index().max(p.f0().coefficients().max_index()).unwrap_or(0) + 8;
    let w = orthogonal_sample(p, dim, r)?;
    // from the boundary of C(f_n, a_level) up to four times deeper; the
    // other cones exclude most of the boundary itself
    let c = if w.is_zero() {
        1.0
    } else {
        match cone_boundary_scale(p, &w, cfg.a_level)? {
            Some(c) => c * (1.0 + 1e-12) * 4f64.powf(r.random::<f64>()),
            None => return Ok(None),
        }
    };
    let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
    let x = w.axpy(c, p.x0()).scale(sign * r.random_range(0.5..2.0));
    if !in_region(cn, n, &x)? {
        return Ok(None);
    }
    Ok(Some(x))
}

/// `x in C(f_n, a_level)` and `x` outside `C(f_i, b_level)` for all `i != n`.
pub fn in_region(cn: &CascadeNorm, n: usize, x: &SparseVector) -> Result<bool> {
    let cfg = cn.config();
    let norm = cn.space_norm().eval(x)?;
    let (_, fn_) = cn.pair(n)?;
    if pairing(&fn_, x).abs() < cfg.a_level * norm {
        return Ok(false);
    }
    let horizon = cfg.pairs.tail_index(x, cfg.b_level * norm);
    let horizon = cfg.pairs.len().map_or(horizon, |l| horizon.min(l + 1));
    for i in 1..horizon {
        if i == n {
            continue;
        }
        let (_, fi) = cn.pair(i)?;
        if pairing(&fi, x).abs() >= cfg.b_level * norm {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `|||x||| = approx_n(x)` on sampled points of the coincidence region of
/// stage `n`, within relative `1e-8`.
pub fn coincidence_check(cn: &CascadeNorm, n: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut r = rng::labeled(seed, "coincidence", n as u64);
    let mut check = Check::new(format!("coincidence stage {n}"));
    let mut attempts = 0usize;
    while check.samples < samples && attempts < 100 * samples.max(1) {
        attempts += 1;
        let Some(x) = coincidence_point(cn, n, &mut r)? else {
            continue;
        };
        let (v, nx) = cascade_eval(cn, &x)?;
        let a = cn.approx_value(n, &x)?;
        check.observe(
            (v - a).abs() - 1e-8 * a,
            || json!({ "x": x.to_json(), "cascade": v, "approx": a, "stabilized_at": nx }),
        );
    }
    let found = check.samples;
    if found < samples {
        check.observe_bool(
            false,
            || json!({ "error": "coincidence region sampling budget exhausted", "found": found }),
        );
    }
    Ok(Report::from_checks(seed, vec![check]))
}

/// Random finitely supported test vectors with some mass near the cones.
pub fn cascade_sample<R: Rng>(cn: &CascadeNorm, dim: usize, r: &mut R) -> Result<SparseVector> {
    let mut x = rng::random_scaled_vector(r, dim, 1.0, 1.0);
    match r.random_range(0..3) {
        0 => {}
        1 => {
            let n = r.random_range(1..=cn.stage_limit().min(dim.max(2) - 1).max(1));
            let (xn, _) = cn.pair(n)?;
            let m = cn.space_norm().eval(&x)?;
            x = x
                .scale(r.random_range(0.0..0.5))
                .axpy(m * r.random_range(0.8..1.5), &xn);
        }
        _ => {
            x = rng::random_vector(r, dim, 0.25);
            if x.is_zero() {
                x = SparseVector::unit(r.random_range(0..dim.max(1)));
            }
        }
    }
    Ok(x)
}

/// Stage monotonicity, stage coincidence off the cones, the global sandwich
/// and stabilization on random vectors supported in `0..dim`.
pub fn cascade_invariant_report(cn: &CascadeNorm, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut r = rng::labeled(seed, "cascade-invariants", 0);
    let mut mono = Check::new("stage-monotone");
    let mut off = Check::new("off-cone-stage-coincidence");
    let mut sandwich = Check::new("global-sandwich");
    let mut stable = Check::new("stabilization");
    let cfg = cn.config();
    let limit = cn.stage_limit();
    for _ in 0..samples {
        let x = cascade_sample(cn, dim, &mut r)?;
        if x.is_zero() {
            continue;
        }
        let (v, nx) = cascade_eval(cn, &x)?;
        let upto = (nx + 3).min(limit);
        let vals = cn.stage_values(upto, &x)?;
        let norm = cn.space_norm().eval(&x)?;
        let ctx = |what: &str, k: usize| json!({ "x": x.to_json(), "stage": k, "values": vals, "what": what });
        let mut sup_approx: f64 = 0.0;
        for k in 1..=upto {
            mono.observe(vals[k - 1] - vals[k] - 1e-9 * vals[k], || ctx("monotone", k));
            let (_, fk) = cn.pair(k)?;
            if pairing(&fk, &x).abs() < cfg.b_level * norm {
                off.observe((vals[k] - vals[k - 1]).abs() - 1e-9 * vals[k], || ctx("off-cone", k));
            }
            sup_approx = sup_approx.max(cn.approx_value(k, &x)?);
        }
        let hi = cn.alpha() * cn.product() * cn.base0().eval(&x)?;
        sandwich.observe((sup_approx - v).max(v - hi) - 1e-8 * v, || ctx("sandwich", nx));
        stable.observe((vals[upto] - v).abs() - 1e-12, || ctx("stabilization", nx));
    }
    Ok(Report::from_checks(seed, vec![mono, off, sandwich, stable]))
}

/// `|||x||| <= bound * |x|` on random vectors.
pub fn final_bound_report(cn: &CascadeNorm, bound: f64, dim: usize, samples: usize, seed: u64) -> Result<Report> {
    let mut r = rng::labeled(seed, "final-bound", 0);
    let mut check = Check::new(format!("norm <= {bound} * sup"));
    let mut lower = Check::new("sup <= norm");
    for _ in 0..samples {
        let x = cascade_sample(cn, dim, &mut r)?;
        if x.is_zero() {
            continue;
        }
        let v = cn.eval(&x)?;
        let s = cn.space_norm().eval(&x)?;
        check.observe(v - bound * s, || json!({ "x": x.to_json(), "value": v, "sup": s }));
        lower.observe(s - v - 1e-12 * s, || json!({ "x": x.to_json(), "value": v, "sup": s }));
    }
    Ok(Report::from_checks(seed, vec![check, lower]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c0(first: f64) -> Result<CascadeNorm> {
        build_cascade(CascadeConfig::coordinate(0.4, EtaSchedule { first, ratio: 0.5 }))
    }

    #[test]
    fn eta_constraint_rejects_and_accepts() {
        let e = c0(0.05).err().unwrap();
        assert!(matches!(e, RenormError::Build { stage: 1, .. }), "{e}");
        assert!(c0(0.02).is_ok());
        let cfg = CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
        );
        assert!((cfg.eta_bound() - ((3.6f64 / 3.2).powf(0.25) - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn level_ordering_is_enforced() {
        let mut cfg = CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
        );
        cfg.b_level = cfg.a_level;
        assert!(matches!(build_cascade(cfg).err().unwrap(), RenormError::Build { .. }));
    }

    #[test]
    fn non_decreasing_etas_are_rejected() {
        let cfg = CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 1.0,
            },
        );
        assert!(build_cascade(cfg).is_err());
    }

    #[test]
    fn worked_values() {
        let cn = c0(0.02).unwrap();
        assert_eq!(cascade_eval(&cn, &SparseVector::zero()).unwrap(), (0.0, 0));
        let (v, nx) = cascade_eval(&cn, &SparseVector::unit(5)).unwrap();
        assert_eq!(nx, 6);
        let eta5 = 0.02 * 0.5f64.powi(4);
        assert!((v - 1.25 / (1.0 + eta5).sqrt()).abs() < 1e-12);
        let x = SparseVector::from_pairs([(1, 1.0), (2, 1.0)]);
        let (v, nx) = cascade_eval(&cn, &x).unwrap();
        assert_eq!(nx, 3);
        // brute-force stage 2 with the scalar combination
        let n0 = (1.02f64).powf(1.5);
        let a1 = cn.approx_value(1, &x).unwrap();
        let a2 = cn.approx_value(2, &x).unwrap();
        let s1 = combine_values(&BumpProfile::new(0.02).unwrap(), n0, a1).unwrap();
        let s2 = combine_values(&BumpProfile::new(0.01).unwrap(), s1, a2).unwrap();
        assert_eq!(v, s2);
    }

    #[test]
    fn lazy_stages_and_budget() {
        let mut cfg = CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
        );
        cfg.stage_budget = 10;
        let cn = build_cascade(cfg).unwrap();
        assert_eq!(cn.materialized(), 8);
        cn.stage_value(10, &SparseVector::unit(9)).unwrap();
        assert_eq!(cn.materialized(), 10);
        let e = cascade_eval(&cn, &SparseVector::unit(12)).unwrap_err();
        assert!(matches!(
            e,
            RenormError::StabilizationBeyondBudget { needed: 13, budget: 10 }
        ));
    }

    #[test]
    fn coincidence_and_invariants() {
        let cn = c0(0.02).unwrap();
        let r = coincidence_check(&cn, 3, 100, 1).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
        let r = coincidence_check(&cn, 12, 20, 1).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
        let r = cascade_invariant_report(&cn, 12, 200, 2).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
        let r = final_bound_report(&cn, 4.0, 12, 200, 3).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
    }

    #[test]
    fn ball_around_the_vertex_coincides() {
        let cn = c0(0.02).unwrap();
        for n in [1usize, 3, 7] {
            for t in [0.0, 0.01, -0.02, 0.024] {
                let h = if n == 2 { 3 } else { 2 };
                let x = SparseVector::unit(n).scale(0.8).axpy(t, &SparseVector::unit(h));
                assert!(in_region(&cn, n, &x).unwrap());
                let v = cn.eval(&x).unwrap();
                let a = cn.approx_value(n, &x).unwrap();
                assert!((v - a).abs() <= 1e-12 * a, "n={n} t={t}: {v} vs {a}");
            }
        }
    }

    #[test]
    fn lfc_backend_builds_and_keeps_the_bound() {
        let mut cfg = CascadeConfig::coordinate(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
        );
        cfg.backend = Backend::LfcSup;
        let cn = build_cascade(cfg).unwrap();
        let r = cascade_invariant_report(&cn, 10, 100, 5).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
        let r = coincidence_check(&cn, 2, 50, 5).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
    }

    #[test]
    fn bad_pairs_fail_validation() {
        let pairs = FinitePairs::new(
            vec![
                (SparseVector::unit(1), DualFunctional::coordinate(1)),
                (
                    SparseVector::from_pairs([(1, 0.5), (2, 1.0)]),
                    DualFunctional::coordinate(2),
                ),
            ],
            0.0,
            "overlapping",
        )
        .unwrap();
        let cfg = CascadeConfig::with_pairs(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
            Arc::new(pairs),
        );
        match build_cascade(cfg) {
            Err(RenormError::Build { stage, inequality }) => {
                assert_eq!(stage, 2);
                assert!(inequality.contains("delta/(2(2-delta))"));
            }
            other => panic!("unexpected {:?}", other.map(|_| ())),
        }
    }
}
