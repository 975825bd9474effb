//! Convex bump profile `phi`: zero on `[0, a]`, `phi(1) = 1`, `a = 1/(1+eps)`.
//!
//! In the variable `u = (s - a)/(1 - a)` the profile is
//! `Phi(v) = int_0^min(v,1) (v - u) w(u) du / Z` with the standard mollifier
//! weight `w(u) = exp(-1/(u(1-u)))` on `(0,1)` and `Z = int_0^1 (1-u) w(u) du`.
//! Its second derivative is a positive multiple of `w`, so `phi` is convex,
//! and it grows linearly past `t = 1`.

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{param, Result};

/// Number of panels in the shared cumulative table.
const PANELS: usize = 1024;
/// Tolerance used to build the cumulative table once for all profiles.
const TABLE_TOL: f64 = 1e-15;

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpProfile {
    eps: f64,
    a: f64,
    quadrature_tol: f64,
}

struct Table {
    // cumulative int_0^{k/PANELS} w and int_0^{k/PANELS} u w
    w: Vec<f64>,
    m: Vec<f64>,
    z: f64,
}

fn weight(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / (u * (1.0 - u))).exp()
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 40)
}

fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let h = 1.0 / PANELS as f64;
        let mut w = vec![0.0; PANELS + 1];
        let mut m = vec![0.0; PANELS + 1];
        for k in 0..PANELS {
            let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
            w[k + 1] = w[k] + integrate(weight, lo, hi, TABLE_TOL * h);
            m[k + 1] = m[k] + integrate(|u| u * weight(u), lo, hi, TABLE_TOL * h);
        }
        let z = w[PANELS] - m[PANELS];
        Table { w, m, z }
    })
}

impl BumpProfile {
    pub fn new(eps: f64) -> Result<Self> {
        Self::with_tolerance(eps, DEFAULT_QUADRATURE_TOL)
    }

    pub fn with_tolerance(eps: f64, quadrature_tol: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return param(format!("bump parameter eps must be positive, got {eps}"));
        }
        if !(quadrature_tol > 0.0) {
            return param(format!("quadrature tolerance must be positive, got {quadrature_tol}"));
        }
        table();
        Ok(BumpProfile {
            eps,
            a: 1.0 / (1.0 + eps),
            quadrature_tol,
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// End of the flat region.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn quadrature_tol(&self) -> f64 {
        self.quadrature_tol
    }

    /// Normalized variable `(t - a)/(1 - a)`, written so that it stays
    /// accurate when `1 + eps` rounds to `1`.
    fn reduced(&self, t: f64) -> f64 {
        (t - 1.0) / self.eps + t
    }

    pub fn phi(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return param(format!("phi is defined on [0, inf), got {t}"));
        }
        Ok(self.value(t))
    }

    /// `phi(t)` for `t >= 0` (NaN propagates).
    pub(crate) fn value(&self, t: f64) -> f64 {
        let v = self.reduced(t);
        if v <= 0.0 {
            return 0.0;
        }
        let tb = table();
        if v >= 1.0 {
            return (v * tb.w[PANELS] - tb.m[PANELS]) / tb.z;
        }
        let (w, m) = self.cumulative(v);
        (v * w - m) / tb.z
    }

    /// `phi'(t)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let v = self.reduced(t);
        if v <= 0.0 {
            return 0.0;
        }
        let tb = table();
        let w = if v >= 1.0 { tb.w[PANELS] } else { self.cumulative(v).0 };
        w / tb.z * (1.0 + 1.0 / self.eps)
    }

    fn cumulative(&self, v: f64) -> (f64, f64) {
        let tb = table();
        let pos = v * PANELS as f64;
        let k = (pos.floor() as usize).min(PANELS - 1);
        let lo = k as f64 / PANELS as f64;
        let tol = self.quadrature_tol * tb.z;
        let w = tb.w[k] + integrate(weight, lo, v, tol);
        let m = tb.m[k] + integrate(|u| u * weight(u), lo, v, tol);
        (w, m)
    }
}
