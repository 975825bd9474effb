//! Almost biorthogonal systems extracted from a weak*-null stream of
//! normalized functionals on `c_0`.
//!
//! The extraction keeps vectors `y_1, ..., y_k` with `<f_{n_i}, y_j> = 0` for
//! `i < j`, using the projections `P_i x = <f_{n_i},x>/<f_{n_i},y_i> y_i` and
//! `T_{i+1} = T_i + P_{i+1}(I - T_i)`. Each new `y` is `(I - T_k) x`
//! normalized, for a candidate `x` that nearly norms the next functional.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cascade::FinitePairs;
use crate::error::{param, RenormError, Result};
use crate::report::{Check, Report};
use crate::rng;
use crate::vectors::{pairing, sup_norm, DualFunctional, SparseVector, ROOT_TOL};

/// A sequence `f_1, f_2, ...` of unit functionals with a decay certificate.
#[allow(clippy::len_without_is_empty)]
pub trait FunctionalStream: Send + Sync {
    fn functional(&self, n: usize) -> Result<DualFunctional>;

    /// Least `N >= 1` with `|<f_m, x>| < threshold` for all `m >= N`.
    fn decay_index(&self, x: &SparseVector, threshold: f64) -> usize;

    /// Number of functionals, `None` if infinite.
    fn len(&self) -> Option<usize> {
        None
    }

    fn label(&self) -> String;
}

/// `f_n = e_n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoordinateStream;

impl FunctionalStream for CoordinateStream {
    fn functional(&self, n: usize) -> Result<DualFunctional> {
        if n == 0 {
            return param("functionals are indexed from 1");
        }
        Ok(DualFunctional::coordinate(n))
    }

    fn decay_index(&self, x: &SparseVector, threshold: f64) -> usize {
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

/// `f_n = (e_n + e_{n+1}) / 2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShiftedAverageStream;

impl FunctionalStream for ShiftedAverageStream {
    fn functional(&self, n: usize) -> Result<DualFunctional> {
        if n == 0 {
            return param("functionals are indexed from 1");
        }
        Ok(DualFunctional::new(SparseVector::from_pairs([(n, 0.5), (n + 1, 0.5)])))
    }

    fn decay_index(&self, x: &SparseVector, threshold: f64) -> usize {
        // only f_{i-1} and f_i touch coordinate i
        let mut worst = 0;
        for i in x.support() {
            for m in [i.saturating_sub(1), i] {
                if m >= 1 && 0.5 * (x.get(m) + x.get(m + 1)).abs() >= threshold {
                    worst = worst.max(m);
                }
            }
        }
        worst + 1
    }

    fn label(&self) -> String {
        "shifted_average".into()
    }
}

/// A finite list of functionals read from a file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListStream {
    pub functionals: Vec<DualFunctional>,
}

impl ListStream {
    pub fn new(functionals: Vec<DualFunctional>) -> Result<Self> {
        for (i, f) in functionals.iter().enumerate() {
            if (f.dual_norm() - 1.0).abs() > ROOT_TOL {
                return param(format!("functional {} has dual norm {}", i + 1, f.dual_norm()));
            }
        }
        Ok(ListStream { functionals })
    }
}

impl FunctionalStream for ListStream {
    fn functional(&self, n: usize) -> Result<DualFunctional> {
        match n.checked_sub(1).and_then(|i| self.functionals.get(i)) {
            Some(f) => Ok(f.clone()),
            None => param(format!("functional {n} outside 1..={}", self.functionals.len())),
        }
    }

    fn decay_index(&self, x: &SparseVector, threshold: f64) -> usize {
        self.functionals
            .iter()
            .enumerate()
            .filter(|(_, f)| pairing(f, x).abs() >= threshold)
            .map(|(i, _)| i + 2)
            .max()
            .unwrap_or(1)
    }

    fn len(&self) -> Option<usize> {
        Some(self.functionals.len())
    }

    fn label(&self) -> String {
        format!("list[{}]", self.functionals.len())
    }
}

/// The projections `T_1, ..., T_k` of an extraction.
#[derive(Debug, Clone, Default)]
pub struct Projector {
    ys: Vec<SparseVector>,
    fs: Vec<DualFunctional>,
    norms: Vec<f64>,
}

impl Projector {
    fn push(&mut self, y: SparseVector, f: DualFunctional) {
        self.norms.push(pairing(&f, &y));
        self.ys.push(y);
        self.fs.push(f);
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    /// `P_i x`, `i` from 1.
    pub fn p(&self, i: usize, x: &SparseVector) -> SparseVector {
        self.ys[i - 1].scale(pairing(&self.fs[i - 1], x) / self.norms[i - 1])
    }

    /// `T_k x`; `T_0 = 0`.
    pub fn t(&self, k: usize, x: &SparseVector) -> SparseVector {
        let mut tx = SparseVector::zero();
        for i in 1..=k {
            let rest = x - &tx;
            tx = &tx + &self.p(i, &rest);
        }
        tx
    }

    /// `(I - T_k) x`.
    pub fn complement(&self, k: usize, x: &SparseVector) -> SparseVector {
        x - &self.t(k, x)
    }
}

/// One extracted pair with its bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractedPair {
    /// Index `n_i` of the functional in the stream.
    pub index: usize,
    pub x: SparseVector,
    pub f: DualFunctional,
    /// The unit vector `y_i` before normalization.
    pub y: SparseVector,
    /// `<f_{n_i}, y_i>`.
    pub norming: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractedSystem {
    pub eps: f64,
    pub pairs: Vec<ExtractedPair>,
    /// Largest `|<f_{n_i}, x_j>|` over `i != j`.
    pub max_cross: f64,
    /// Largest `|<f_{n_j}, y_i>|` over `i < j`, certified below `eps/2`.
    pub max_cross_y: f64,
    pub max_norm: f64,
    pub evaluations: usize,
    #[serde(skip)]
    pub projector: Projector,
}

impl ExtractedSystem {
    /// The pairs as a cascade pair source, with `|x_i|` up to `max_norm`.
    pub fn pair_source(&self) -> Result<FinitePairs> {
        let pairs = self.pairs.iter().map(|p| (p.x.clone(), p.f.clone())).collect();
        FinitePairs::new(pairs, (self.max_norm - 1.0).max(0.0), "extracted")
    }
}

pub const DEFAULT_SEARCH_BUDGET: usize = 100_000;

/// Coordinates explored by the candidate search: the supports seen so far
/// plus four fresh coordinates past them.
fn search_coordinates(f: &DualFunctional, proj: &Projector) -> Vec<usize> {
    let mut s: BTreeSet<usize> = f.coefficients().support().collect();
    for (y, g) in proj.ys.iter().zip(&proj.fs) {
        s.extend(y.support());
        s.extend(g.coefficients().support());
    }
    let top = s.iter().next_back().copied().unwrap_or(0);
    s.extend(top + 1..=top + 4);
    s.into_iter().collect()
}

/// Best `<f, (I-T_k)x> / |(I-T_k)x|` found by coordinate search from
/// `sign(f)` over a coarse-to-fine grid, stopping at `target`.
fn search_candidate(
    f: &DualFunctional,
    proj: &Projector,
    target: f64,
    budget: &mut usize,
) -> Option<(f64, SparseVector)> {
    let k = proj.len();
    let score = |x: &SparseVector| -> Option<(f64, SparseVector)> {
        let y = proj.complement(k, x);
        let n = sup_norm(&y);
        if n == 0.0 {
            return None;
        }
        let y = y.scale(1.0 / n);
        Some((pairing(f, &y), y))
    };
    let mut x = SparseVector::from_pairs(f.coefficients().iter().map(|(i, v)| (i, v.signum())));
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    let mut best = score(&x).unwrap_or((f64::NEG_INFINITY, SparseVector::zero()));
    if best.0 >= target {
        return Some(best);
    }
    let coords = search_coordinates(f, proj);
    for level in 0..12 {
        let step = 0.5f64.powi(level);
        let mut improved = true;
        while improved {
            improved = false;
            for &j in &coords {
                for dir in [1.0, -1.0] {
                    if *budget == 0 {
                        return Some(best);
                    }
                    *budget -= 1;
                    let mut cand = x.clone();
                    cand.set(j, (x.get(j) + dir * step).clamp(-1.0, 1.0));
                    if cand == x {
                        continue;
                    }
                    if let Some(s) = score(&cand) {
                        if s.0 > best.0 + 1e-15 {
                            best = s;
                            x = cand;
                            improved = true;
                            if best.0 >= target {
                                return Some(best);
                            }
                        }
                    }
                }
            }
        }
    }
    Some(best)
}

/// Extracts `k` pairs with `<f_{n_i}, x_i> = 1` and `|<f_{n_i}, x_j>| < eps`.
pub fn extract_system(
    stream: &dyn FunctionalStream,
    eps: f64,
    k: usize,
    search_budget: usize,
) -> Result<ExtractedSystem> {
    if !(eps > 0.0 && eps < 1.0) {
        return param(format!("eps must lie in (0, 1), got {eps}"));
    }
    if k == 0 {
        return param("k must be at least 1");
    }
    let mut budget = search_budget;
    let mut proj = Projector::default();
    let mut indices: Vec<usize> = Vec::new();
    for step in 1..=k {
        let target = 1.0 - 0.5f64.powi(step as i32) * eps;
        let mut m = match indices.last() {
            None => 1,
            Some(&last) => {
                let m1 = proj
                    .ys
                    .iter()
                    .map(|y| stream.decay_index(y, eps / 2.0))
                    .max()
                    .unwrap_or(1);
                m1.max(last + 1)
            }
        };
        let mut best_seen = f64::NEG_INFINITY;
        loop {
            if let Some(len) = stream.len() {
                if m > len {
                    return Err(RenormError::NearNormingNotFound {
                        step,
                        best: best_seen,
                        required: target,
                    });
                }
            }
            let f = stream.functional(m)?;
            if (f.dual_norm() - 1.0).abs() > ROOT_TOL {
                return param(format!("functional {m} has dual norm {}", f.dual_norm()));
            }
            match search_candidate(&f, &proj, target, &mut budget) {
                Some((val, y)) if val >= target => {
                    proj.push(y, f);
                    indices.push(m);
                    break;
                }
                Some((val, _)) => best_seen = best_seen.max(val),
                None => {}
            }
            if budget == 0 {
                return Err(RenormError::NearNormingNotFound {
                    step,
                    best: best_seen,
                    required: target,
                });
            }
            m += 1;
        }
    }
    let mut pairs = Vec::with_capacity(k);
    for (i, &n) in indices.iter().enumerate() {
        let y = proj.ys[i].clone();
        let f = proj.fs[i].clone();
        let norming = proj.norms[i];
        pairs.push(ExtractedPair {
            index: n,
            x: y.scale(1.0 / norming),
            f,
            y,
            norming,
        });
    }
    let mut max_cross: f64 = 0.0;
    let mut max_cross_y: f64 = 0.0;
    for (i, pi) in pairs.iter().enumerate() {
        for (j, pj) in pairs.iter().enumerate() {
            if i != j {
                max_cross = max_cross.max(pairing(&pi.f, &pj.x).abs());
            }
            if i < j {
                max_cross_y = max_cross_y.max(pairing(&pj.f, &pi.y).abs());
            }
        }
    }
    let max_norm = pairs.iter().map(|p| sup_norm(&p.x)).fold(0.0, f64::max);
    if max_cross >= eps {
        return Err(RenormError::Internal(format!(
            "cross pairing {max_cross} not below eps = {eps}"
        )));
    }
    Ok(ExtractedSystem {
        eps,
        pairs,
        max_cross,
        max_cross_y,
        max_norm,
        evaluations: search_budget - budget,
        projector: proj,
    })
}

/// Projection identities `T_k T_k = T_k` and `<f_{n_i}, (I - T_k) x> = 0`
/// for every prefix, plus the output certificate of the system.
pub fn system_report(sys: &ExtractedSystem, samples: usize, seed: u64) -> Result<Report> {
    let proj = &sys.projector;
    let dim = sys
        .pairs
        .iter()
        .filter_map(|p| p.y.max_index().max(p.f.coefficients().max_index()))
        .max()
        .unwrap_or(0)
        + 4;
    let mut r = rng::labeled(seed, "biortho", 0);
    let mut idem = Check::new("projection-idempotent");
    let mut annihilate = Check::new("complement-annihilated");
    for _ in 0..samples {
        let x = rng::random_scaled_vector(&mut r, dim, 1.0, 1.0).scale(r.random_range(0.1..10.0));
        let s = sup_norm(&x).max(1.0);
        for k in 1..=proj.len() {
            let tx = proj.t(k, &x);
            let ttx = proj.t(k, &tx);
            idem.observe(
                sup_norm(&(&ttx - &tx)) - 1e-10 * s,
                || json!({ "x": x.to_json(), "k": k }),
            );
            let c = proj.complement(k, &x);
            for i in 1..=k {
                let v = pairing(&proj.fs[i - 1], &c).abs();
                annihilate.observe(
                    v - 1e-10 * s,
                    || json!({ "x": x.to_json(), "k": k, "i": i, "pairing": v }),
                );
            }
        }
    }
    let mut unit = Check::new("unit-pairing");
    let mut cross = Check::new("cross-pairing-below-eps");
    let mut norm = Check::new("norm-below-1/(1-eps)");
    for (i, pi) in sys.pairs.iter().enumerate() {
        let v = pairing(&pi.f, &pi.x);
        unit.observe((v - 1.0).abs() - 1e-15, || json!({ "pair": i, "pairing": v }));
        let nx = sup_norm(&pi.x);
        norm.observe(nx - 1.0 / (1.0 - sys.eps), || json!({ "pair": i, "norm": nx }));
        for (j, pj) in sys.pairs.iter().enumerate() {
            if i != j {
                let c = pairing(&pi.f, &pj.x).abs();
                cross.observe(c - sys.eps * (1.0 - 1e-12), || json!({ "f": i, "x": j, "pairing": c }));
            }
        }
    }
    Ok(Report::from_checks(seed, vec![idem, annihilate, unit, cross, norm]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{build_cascade, CascadeConfig, EtaSchedule};
    use std::sync::Arc;

    #[test]
    fn coordinate_stream_returns_the_canonical_pairs() {
        let sys = extract_system(&CoordinateStream, 0.1, 5, DEFAULT_SEARCH_BUDGET).unwrap();
        for (i, p) in sys.pairs.iter().enumerate() {
            assert_eq!(p.index, i + 1);
            assert_eq!(p.x, SparseVector::unit(i + 1));
        }
        assert_eq!(sys.max_cross, 0.0);
    }

    #[test]
    fn shifted_average_stream() {
        let sys = extract_system(&ShiftedAverageStream, 0.1, 3, DEFAULT_SEARCH_BUDGET).unwrap();
        assert!(sys.max_cross < 0.05);
        for (i, p) in sys.pairs.iter().enumerate() {
            assert!(sup_norm(&p.x) <= 1.0 / (1.0 - 0.5f64.powi(i as i32 + 1) * 0.1));
            assert_eq!(pairing(&p.f, &p.x), 1.0);
        }
        let r = system_report(&sys, 50, 1).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
    }

    #[test]
    fn brute_force_small_instance() {
        // oracle: properties (i)-(iii) checked directly on the y vectors
        let eps = 0.1;
        let sys = extract_system(&ShiftedAverageStream, eps, 4, DEFAULT_SEARCH_BUDGET).unwrap();
        for (k, p) in sys.pairs.iter().enumerate() {
            assert!((sup_norm(&p.y) - 1.0).abs() < 1e-15);
            assert!(pairing(&p.f, &p.y) >= 1.0 - 0.5f64.powi(k as i32 + 1) * eps);
            for q in &sys.pairs[k + 1..] {
                assert!(pairing(&q.f, &p.y).abs() < eps / 2.0);
                assert!(pairing(&p.f, &q.y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixing_stream_needs_the_projection() {
        // f_2 sees y_1 = e_1 + e_2 too strongly and is skipped
        let fs = vec![
            DualFunctional::new(SparseVector::from_pairs([(1, 0.5), (2, 0.5)])),
            DualFunctional::new(SparseVector::from_pairs([(1, 0.3), (3, 0.7)])),
            DualFunctional::new(SparseVector::from_pairs([(2, 0.02), (4, 0.98)])),
        ];
        let stream = ListStream::new(fs).unwrap();
        let sys = extract_system(&stream, 0.2, 2, DEFAULT_SEARCH_BUDGET).unwrap();
        assert_eq!(sys.pairs.iter().map(|p| p.index).collect::<Vec<_>>(), vec![1, 3]);
        assert!(matches!(
            extract_system(&stream, 0.2, 3, DEFAULT_SEARCH_BUDGET),
            Err(RenormError::NearNormingNotFound { step: 3, .. })
        ));
        let r = system_report(&sys, 50, 2).unwrap();
        assert!(r.pass, "{:?}", r.first_counterexample);
    }

    #[test]
    fn bad_arguments() {
        assert!(extract_system(&CoordinateStream, 1.5, 3, 100).is_err());
        assert!(extract_system(&CoordinateStream, 0.1, 0, 100).is_err());
        let e = extract_system(&ShiftedAverageStream, 0.1, 3, 1).unwrap_err();
        assert!(matches!(e, RenormError::NearNormingNotFound { .. }));
    }

    #[test]
    fn extracted_pairs_feed_the_cascade() {
        let sys = extract_system(&ShiftedAverageStream, 0.1, 5, DEFAULT_SEARCH_BUDGET).unwrap();
        let pairs = Arc::new(sys.pair_source().unwrap());
        let cfg = CascadeConfig::with_pairs(
            0.4,
            EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
            pairs,
        );
        let cn = build_cascade(cfg).unwrap();
        assert_eq!(cn.materialized(), 5);
    }
}
