//! Run configuration, the full verification driver and its report bundle.
//!
//! Sections run in a fixed order: psi, seed, lemmas, combine, lfc, cascade,
//! witness, dentability, biortho. Each draws its randomness from
//! `derive_seed(config.seed, section, index)` so it can be rerun alone.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{approx_lemma_report, dentability_report, witness_sweep, DentRow, Witness};
use crate::biortho::{extract_system, system_report, ShiftedAverageStream, DEFAULT_SEARCH_BUDGET};
use crate::cascade::{
    build_cascade, cascade_invariant_report, coincidence_check, final_bound_report, Backend, CascadeConfig,
    CascadeNorm, EtaSchedule,
};
use crate::directions::{direction_set, DIRECTION_SET_VERSION};
use crate::error::{RenormError, Result};
use crate::norm::NormOracle;
use crate::psi::{psi_eval, psi_property_suite, SeedParams};
use crate::report::{Check, Report};
use crate::rng::derive_seed;
use crate::seed_norm::{
    cone_lemma_suite, derivative_lemma_suite, lattice_suite, seed_eval, seed_invariant_suite, slice_lemma_suite,
    SeedNorm,
};
use crate::smooth::{combine_norms, combine_property_report, lfc_probe, rescale_approx};
use crate::vectors::SparseVector;

pub const FORMAT_VERSION: u32 = 1;
pub const SEED_ENV: &str = "RENORMLAB_SEED";

pub const SECTION_ORDER: [&str; 9] = [
    "psi",
    "seed",
    "lemmas",
    "combine",
    "lfc",
    "cascade",
    "witness",
    "dentability",
    "biortho",
];

const SLICE_EPS: [f64; 3] = [0.05, 0.01, 0.001];
const WITNESS_TAUS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
const DENT_RADII: [f64; 3] = [0.5, 0.1, 0.01];
const COMBINE_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleCounts {
    pub psi: usize,
    pub seed: usize,
    pub lemma_points: usize,
    pub derivative_steps: usize,
    pub combine: usize,
    pub lfc: usize,
    pub cascade: usize,
    pub coincidence: usize,
    pub coincidence_stages: usize,
    pub witness_directions: usize,
    pub dentability_points: usize,
    pub biortho_pairs: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        SampleCounts {
            psi: 2000,
            seed: 2000,
            lemma_points: 200,
            derivative_steps: 20,
            combine: 500,
            lfc: 500,
            cascade: 1000,
            coincidence: 100,
            coincidence_stages: 4,
            witness_directions: 32,
            dentability_points: 200,
            biortho_pairs: 5,
        }
    }
}

/// A two-coordinate section `y1 e_i + y2 e_j` over a square box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigureConfig {
    pub section: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
    pub grid: usize,
}

impl Default for FigureConfig {
    fn default() -> Self {
        FigureConfig {
            section: vec![1, 2],
            lo: -2.0,
            hi: 2.0,
            grid: 101,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    /// JSON report bundle.
    pub bundle: Option<PathBuf>,
    /// Directory for the CSV tables.
    pub csv_dir: Option<PathBuf>,
    pub figure: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub format_version: u32,
    pub delta: f64,
    pub eta: EtaSchedule,
    pub backend: Backend,
    pub stage_budget: usize,
    pub seed: u64,
    /// Support size of sampled vectors.
    pub dim: usize,
    pub samples: SampleCounts,
    pub figure: FigureConfig,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: FORMAT_VERSION,
            delta: 0.4,
            eta: EtaSchedule {
                first: 0.02,
                ratio: 0.5,
            },
            backend: Backend::RescaleExact,
            stage_budget: 128,
            seed: 42,
            dim: 16,
            samples: SampleCounts::default(),
            figure: FigureConfig::default(),
            output: OutputPaths::default(),
        }
    }
}

fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(RenormError::Config(msg.into()))
}

impl RunConfig {
    /// Parse and validate. Domain errors are `Config`; a schedule that
    /// violates the cascade inequalities is reported as `Build`.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file and apply the `RENORMLAB_SEED` override.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RenormError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        cfg.apply_env()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| RenormError::Config(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return config_err(format!(
                "format_version {} not supported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return config_err(format!("delta must lie in (0, 1/2), got {}", self.delta));
        }
        if !(self.eta.first > 0.0 && self.eta.first.is_finite()) {
            return config_err(format!("eta.first must be positive, got {}", self.eta.first));
        }
        if self.stage_budget == 0 {
            return config_err("stage_budget must be positive");
        }
        if !(4..=64).contains(&self.dim) {
            return config_err(format!("dim must lie in 4..=64, got {}", self.dim));
        }
        let s = &self.samples;
        if s.derivative_steps == 0 || s.biortho_pairs == 0 || s.coincidence_stages == 0 {
            return config_err("derivative_steps, biortho_pairs and coincidence_stages must be positive");
        }
        if s.witness_directions > 32 {
            return config_err(format!(
                "witness_directions is at most 32, got {}",
                s.witness_directions
            ));
        }
        let f = &self.figure;
        if !(f.lo < f.hi && f.lo.is_finite() && f.hi.is_finite()) || f.grid < 2 {
            return config_err("figure box needs lo < hi and grid >= 2");
        }
        self.cascade_config().validate().map_err(|e| match e {
            RenormError::Parameter(m) => RenormError::Config(m),
            other => other,
        })
    }

    pub fn cascade_config(&self) -> CascadeConfig {
        let mut c = CascadeConfig::coordinate(self.delta, self.eta);
        c.backend = self.backend;
        c.stage_budget = self.stage_budget;
        c.seed = derive_seed(self.seed, "cascade", 0);
        c
    }

    fn section_seed(&self, section: &str) -> u64 {
        derive_seed(self.seed, section, 0)
    }
}

/// One report inside a section, tagged with what it checks and how tightly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedReport {
    pub id: String,
    pub tolerance: String,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub id: String,
    pub pass: bool,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub reports: Vec<NamedReport>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub data: Value,
}

impl Section {
    fn new(id: &str, seed: u64) -> Self {
        Section {
            id: id.into(),
            pass: true,
            seed,
            error: None,
            reports: Vec::new(),
            data: Value::Null,
        }
    }

    fn push(&mut self, id: &str, tolerance: &str, report: Report) {
        self.pass &= report.pass;
        self.reports.push(NamedReport {
            id: id.into(),
            tolerance: tolerance.into(),
            report,
        });
    }

    fn fail(&mut self, e: impl std::fmt::Display) {
        self.pass = false;
        self.error = Some(e.to_string());
    }

    /// `section/report/check` of the first failure.
    pub fn first_failure(&self) -> Option<String> {
        if let Some(e) = &self.error {
            return Some(format!("{}: {e}", self.id));
        }
        self.reports.iter().find(|r| !r.report.pass).map(|r| {
            let check = r.report.first_failure().unwrap_or("?");
            format!("{}/{}/{}", self.id, r.id, check)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bundle {
    pub format_version: u32,
    pub direction_set_version: u32,
    pub config: RunConfig,
    pub pass: bool,
    pub first_failure: Option<String>,
    pub sections: Vec<Section>,
    #[serde(skip)]
    pub tables: Tables,
}

/// Rows behind the CSV files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    pub witness: Vec<WitnessRow>,
    pub dentability: Vec<DentRow>,
    pub biortho: Vec<BiorthoRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessRow {
    pub direction: usize,
    pub tau: f64,
    pub n0: usize,
    pub t0: f64,
    pub quotient: f64,
    pub bound: f64,
    pub pass: bool,
}

impl WitnessRow {
    fn new(direction: usize, w: &Witness) -> Self {
        WitnessRow {
            direction,
            tau: w.tau,
            n0: w.n0,
            t0: w.t0,
            quotient: w.quotient,
            bound: w.bound,
            pass: w.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiorthoRow {
    pub pair: usize,
    pub functional_index: usize,
    pub norming: f64,
    pub x_norm: f64,
    pub x: String,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    section: &'a str,
    report: &'a str,
    check: &'a str,
    pass: bool,
    samples: usize,
    worst_excess: f64,
    tolerance: &'a str,
}

impl Bundle {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| RenormError::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn summary_csv(&self) -> Result<String> {
        let mut rows = Vec::new();
        for s in &self.sections {
            for r in &s.reports {
                for c in &r.report.checks {
                    rows.push(SummaryRow {
                        section: &s.id,
                        report: &r.id,
                        check: &c.name,
                        pass: c.pass,
                        samples: c.samples,
                        worst_excess: c.worst_excess,
                        tolerance: &r.tolerance,
                    });
                }
            }
        }
        to_csv(&rows)
    }

    /// Write the bundle and CSV tables to the configured paths.
    pub fn write(&self, out: &OutputPaths) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        if let Some(p) = &out.bundle {
            write_file(p, &self.to_json()?)?;
            written.push(p.clone());
        }
        if let Some(dir) = &out.csv_dir {
            std::fs::create_dir_all(dir).map_err(|e| RenormError::Io(format!("{}: {e}", dir.display())))?;
            let files = [
                ("summary.csv", self.summary_csv()?),
                ("witness.csv", to_csv(&self.tables.witness)?),
                ("dentability.csv", to_csv(&self.tables.dentability)?),
                ("biortho.csv", to_csv(&self.tables.biortho)?),
            ];
            for (name, body) in files {
                let p = dir.join(name);
                write_file(&p, &body)?;
                written.push(p);
            }
        }
        Ok(written)
    }
}

pub fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| RenormError::Io(format!("{}: {e}", path.display())))
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| RenormError::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| RenormError::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| RenormError::Internal(e.to_string()))
}

fn run_section(cfg: &RunConfig, id: &str, body: impl FnOnce(&mut Section) -> Result<()>) -> Section {
    let mut s = Section::new(id, cfg.section_seed(id));
    if let Err(e) = body(&mut s) {
        s.fail(e);
    }
    s
}

/// Worked values of the seed norm at `delta = 0.4`.
fn worked_values() -> Result<Report> {
    let s = SeedNorm::new(SeedParams::coordinate(1, 0.4)?);
    let mut check = Check::new("worked-values");
    let cases = [
        (SparseVector::from_pairs([(1, 0.8)]), 1.0),
        (SparseVector::unit(1), 1.25),
        (SparseVector::from_pairs([(1, 1.0), (2, 0.5)]), 1.375),
    ];
    for (y, want) in cases {
        let v = seed_eval(&s, &y)?.value;
        check.observe(
            (v - want).abs() - 1e-9,
            || json!({ "y": y.to_json(), "value": v, "expected": want }),
        );
    }
    Ok(Report::from_checks(0, vec![check]))
}

fn combine_section(cfg: &RunConfig, s: &mut Section) -> Result<()> {
    let d = cfg.delta;
    let sup = NormOracle::sup();
    let seed1 = SeedNorm::new(SeedParams::coordinate(1, d)?).oracle();
    let seed2 = SeedNorm::new(SeedParams::coordinate(2, d)?).oracle();
    let l2 = NormOracle::section_lp(2.0, cfg.dim)?;
    let l1 = NormOracle::section_lp(1.0, cfg.dim)?.scaled(0.5)?;
    let pairs = [
        ("sup+l2", sup.clone(), l2),
        ("sup+seed", sup.clone(), seed1.clone()),
        ("seed+seed", seed1.clone(), seed2),
        ("half-l1+sup", l1, sup.clone()),
        ("seed+scaled-sup", seed1, sup.scaled(1.05)?),
    ];
    for (k, (name, n1, n2)) in pairs.iter().enumerate() {
        let r = combine_property_report(
            n1,
            n2,
            COMBINE_EPS,
            cfg.dim,
            cfg.samples.combine,
            derive_seed(s.seed, name, k as u64),
        )?;
        s.push(&format!("combine {name}"), "rel 1e-8", r);
    }
    let two = sup.scaled(2.0)?;
    let c = combine_norms(&sup, &two, COMBINE_EPS)?;
    let mut r = crate::rng::labeled(s.seed, "degenerate", 0);
    let mut check = Check::new("dominated-pair-exact");
    for _ in 0..cfg.samples.combine {
        let x = crate::rng::random_scaled_vector(&mut r, cfg.dim, 1.0, 1.0);
        let (v, w) = (c.eval(&x)?, two.eval(&x)?);
        check.observe(
            (v - w).abs() - 1e-9 * w,
            || json!({ "x": x.to_json(), "value": v, "expected": w }),
        );
    }
    s.push(
        "combine dominated pair",
        "rel 1e-9",
        Report::from_checks(s.seed, vec![check]),
    );
    Ok(())
}

fn cascade_section(cfg: &RunConfig, s: &mut Section) -> Result<CascadeNorm> {
    let cn = build_cascade(cfg.cascade_config())?;
    s.data = json!({ "alpha": cn.alpha(), "product": cn.product(), "eta_bound": cn.config().eta_bound() });
    let r = cascade_invariant_report(&cn, cfg.dim, cfg.samples.cascade, derive_seed(s.seed, "invariants", 0))?;
    s.push("cascade invariants", "rel 1e-8 (sandwich), rel 1e-9 (stages)", r);
    for n in 1..=cfg.samples.coincidence_stages {
        let r = coincidence_check(
            &cn,
            n,
            cfg.samples.coincidence,
            derive_seed(s.seed, "coincidence", n as u64),
        )?;
        s.push(&format!("coincidence stage {n}"), "rel 1e-8", r);
    }
    let r = final_bound_report(
        &cn,
        4.0,
        cfg.dim,
        cfg.samples.cascade,
        derive_seed(s.seed, "final-bound", 0),
    )?;
    s.push("final bound", "rel 1e-12", r);
    Ok(cn)
}

/// Run every section in order. Failures are recorded in the bundle, never
/// returned as errors.
pub fn run_verify_all(cfg: &RunConfig) -> Bundle {
    let d = cfg.delta;
    let mut tables = Tables::default();
    let mut sections = Vec::with_capacity(SECTION_ORDER.len());

    sections.push(run_section(cfg, "psi", |s| {
        let p = SeedParams::coordinate(1, d)?;
        s.push(
            "psi properties",
            "residual 1e-10*scale, axioms 1e-8*scale",
            psi_property_suite(&p, cfg.dim, cfg.samples.psi, s.seed)?,
        );
        Ok(())
    }));

    let seed_norm = SeedParams::coordinate(1, d).map(SeedNorm::new);
    sections.push(run_section(cfg, "seed", |s| {
        let sn = seed_norm.clone()?;
        s.push(
            "seed invariants",
            "rel 1e-9",
            seed_invariant_suite(&sn, cfg.dim, cfg.samples.seed, s.seed)?,
        );
        s.push(
            "lattice",
            "rel 1e-9",
            lattice_suite(&sn, cfg.dim, cfg.samples.seed, derive_seed(s.seed, "lattice", 0))?,
        );
        s.push("worked values", "abs 1e-9", worked_values()?);
        Ok(())
    }));

    sections.push(run_section(cfg, "lemmas", |s| {
        let sn = seed_norm.clone()?;
        let dirs = direction_set()?;
        s.push(
            "derivative bound",
            "abs 1e-8",
            derivative_lemma_suite(&sn, &dirs, cfg.samples.derivative_steps)?,
        );
        s.push(
            "slice diameter",
            "abs 1e-8",
            slice_lemma_suite(
                &sn,
                &SLICE_EPS,
                cfg.dim,
                cfg.samples.lemma_points,
                derive_seed(s.seed, "slice", 0),
            )?,
        );
        s.push(
            "cone factor",
            "rel 1e-9",
            cone_lemma_suite(&sn, cfg.dim, cfg.samples.seed, derive_seed(s.seed, "cone", 0))?,
        );
        let approx = rescale_approx(&sn.oracle(), cfg.eta.first)?;
        s.push(
            "approximation",
            "abs 1e-8",
            approx_lemma_report(
                &sn,
                &approx,
                &dirs,
                &SLICE_EPS,
                cfg.dim,
                cfg.samples.lemma_points,
                derive_seed(s.seed, "approx", 0),
            )?,
        );
        Ok(())
    }));

    sections.push(run_section(cfg, "combine", |s| combine_section(cfg, s)));

    sections.push(run_section(cfg, "lfc", |s| {
        s.push(
            "lfc probe",
            "bit-exact",
            lfc_probe(cfg.eta.first, cfg.dim, cfg.samples.lfc, s.seed)?,
        );
        Ok(())
    }));

    let mut cascade = None;
    sections.push(run_section(cfg, "cascade", |s| {
        cascade = Some(cascade_section(cfg, s)?);
        Ok(())
    }));

    let missing = || RenormError::HypothesisNotMet("cascade section failed".into());

    sections.push(run_section(cfg, "witness", |s| {
        let cn = cascade.as_ref().ok_or_else(missing)?;
        let dirs = direction_set()?;
        let dirs = &dirs[..cfg.samples.witness_directions];
        let (rows, report) = witness_sweep(cn, dirs, &WITNESS_TAUS)?;
        s.push("witness sweep", "quotient > delta/16 (1 - 1e-6)", report);
        tables.witness = rows
            .iter()
            .enumerate()
            .map(|(i, w)| WitnessRow::new(i / WITNESS_TAUS.len(), w))
            .collect();
        Ok(())
    }));

    sections.push(run_section(cfg, "dentability", |s| {
        let cn = cascade.as_ref().ok_or_else(missing)?;
        let (rows, report) = dentability_report(cn, &DENT_RADII, cfg.dim, cfg.samples.dentability_points, s.seed)?;
        s.push("dentability", "bound < radius", report);
        tables.dentability = rows;
        Ok(())
    }));

    sections.push(run_section(cfg, "biortho", |s| {
        let eps = 0.1;
        let sys = extract_system(&ShiftedAverageStream, eps, cfg.samples.biortho_pairs, DEFAULT_SEARCH_BUDGET)?;
        s.push("extraction", "abs 1e-10 (projections), exact unit pairings", system_report(&sys, 100, s.seed)?);
        let mut accept = Check::new("cascade-accepts-pairs");
        let admissible = eps <= d / (2.0 * (2.0 - d));
        if admissible {
            let mut c = CascadeConfig::with_pairs(d, cfg.eta, Arc::new(sys.pair_source()?));
            c.seed = derive_seed(s.seed, "cascade", 0);
            c.backend = cfg.backend;
            let res = build_cascade(c);
            accept.observe_bool(res.is_ok(), || json!({ "error": res.err().map(|e| e.to_string()) }));
        }
        s.push("cascade on extracted pairs", "exact", Report::from_checks(s.seed, vec![accept]));
        s.data = json!({ "eps": eps, "max_cross": sys.max_cross, "max_norm": sys.max_norm, "cascade_admissible": admissible });
        tables.biortho = sys
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| BiorthoRow {
                pair: i + 1,
                functional_index: p.index,
                norming: p.norming,
                x_norm: crate::vectors::sup_norm(&p.x),
                x: p.x.iter().map(|(j, v)| format!("{j}:{v}")).collect::<Vec<_>>().join(","),
            })
            .collect();
        Ok(())
    }));

    let pass = sections.iter().all(|s| s.pass);
    let first_failure = sections.iter().find_map(Section::first_failure);
    Bundle {
        format_version: FORMAT_VERSION,
        direction_set_version: DIRECTION_SET_VERSION,
        config: cfg.clone(),
        pass,
        first_failure,
        sections,
        tables,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureRow {
    pub y1: f64,
    pub y2: f64,
    pub psi: f64,
    pub seed_norm: f64,
    pub cone_side: &'static str,
}

/// Grid of `(y1, y2, psi, seed_norm, cone_side)` over the configured
/// section for the seed norm with `x0 = f0 = e_i`, `i` the first section
/// coordinate.
pub fn figure_rows(cfg: &RunConfig) -> Result<Vec<FigureRow>> {
    let f = &cfg.figure;
    if f.section.len() != 2 {
        return Err(RenormError::Parameter(format!(
            "figure section must have 2 coordinates, got {}",
            f.section.len()
        )));
    }
    let (i, j) = (f.section[0], f.section[1]);
    if i == j {
        return Err(RenormError::Parameter("figure section coordinates must differ".into()));
    }
    let sn = SeedNorm::new(SeedParams::coordinate(i, cfg.delta)?);
    let g = f.grid;
    let at = |k: usize| (f.lo * (g - 1 - k) as f64 + f.hi * k as f64) / (g - 1) as f64;
    let mut rows = Vec::with_capacity(g * g);
    for a in 0..g {
        for b in 0..g {
            let (y1, y2) = (at(a), at(b));
            let y = SparseVector::from_pairs([(i, y1), (j, y2)]);
            let v = seed_eval(&sn, &y)?;
            rows.push(FigureRow {
                y1,
                y2,
                psi: psi_eval(sn.params(), &y)?,
                seed_norm: v.value,
                cone_side: v.branch.as_str(),
            });
        }
    }
    Ok(rows)
}

pub fn emit_figure_data(cfg: &RunConfig) -> Result<String> {
    to_csv(&figure_rows(cfg)?)
}

/// Exit status: 0 pass, 1 verification failure, 2 usage or config error.
pub fn exit_code(e: &RenormError) -> i32 {
    match e {
        RenormError::Config(_) | RenormError::Parameter(_) | RenormError::Io(_) => 2,
        _ => 1,
    }
}
