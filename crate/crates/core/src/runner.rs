//! Scenario configs, end-to-end runs, CSV series and verification reports.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::{StateVector, C64};
use crate::metric::{quadratic_form, MetricBuilder};
use crate::oracle::{
    dyson_residual, eta_overlap_defect, hermitian_image_check, invariant_residual, propagate_quadratic,
    rayleigh_quotient, schrodinger_residual, GaussianPolynomial, MetricOperators, MetricWindow, INTERIOR_EXCLUDE,
    RICHARDSON_REACH,
};
use crate::position::{canonical_invariant_with, orthonormality_matrix, GaussianShape, PositionGrid, Regime, Weight};
use crate::swanson::{invariant_ph, relation_residuals, InvariantCoefficients, MetricState};
use crate::trajectory::{
    assemble_solution, CheckProfiles, GeneratorProfiles, GuardPolicy, MetricTrajectory, Profile, Superposition,
    TimeGrid,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_T_MAX: f64 = 5.0;
pub const DEFAULT_DT: f64 = 1e-3;
pub const MIN_DIM: usize = 8;
pub const MAX_DIM: usize = 256;
/// Top Fock components left out of the Schrödinger residual.
pub const SCHRODINGER_EXCLUDE: usize = 2;
/// Tail support above this is logged as a warning.
pub const TAIL_WARNING: f64 = 1e-8;
const POSITIVITY_PROBES: usize = 8;
const GRAM_LEVELS: usize = 5;
const SAMPLED_CHECKS: usize = 100;

/// Check names and their default tolerances.
pub const TOLERANCE_DEFAULTS: [(&str, f64); 17] = [
    ("schrodinger", 1e-6),
    ("invariant", 5e-6),
    ("dyson", 5e-6),
    ("eigenvalue", 1e-8),
    ("hermitian_image", 1e-9),
    ("normalization", 1e-12),
    ("relations", 1e-12),
    ("uv", 1e-10),
    ("im_w", 1e-10),
    ("eta_drift", 1e-7),
    ("oracle_overlap", 1e-6),
    ("tail", 1e-6),
    ("integration", 1e-8),
    ("phase_quadrature", 1e-10),
    ("gram", 1e-6),
    ("canonical", 1e-9),
    ("metric_positivity", 0.0),
];

pub const CSV_FIXED_COLUMNS: [&str; 12] =
    ["t", "Phi", "vtheta0", "chi", "re_omega", "im_omega", "re_alpha", "im_alpha", "re_beta", "im_beta", "W_re", "W_im"];
pub const CSV_METER_COLUMNS: [&str; 5] =
    ["eta_norm", "schrodinger_residual", "invariant_residual", "dyson_residual", "tail_support"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Generator,
    Check,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioProfiles {
    Generator(GeneratorProfiles),
    Check(CheckProfiles),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMetric {
    pub phi: f64,
    pub vtheta_zero: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionTerm {
    pub n: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Per-check tolerances, always holding every known name.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Tolerances(BTreeMap<String, f64>);

impl Default for Tolerances {
    fn default() -> Self {
        Self(TOLERANCE_DEFAULTS.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl Tolerances {
    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let field = format!("tolerances.{name}");
        if !self.0.contains_key(name) {
            return Err(Error::Validation { field, message: "unknown tolerance name".into() });
        }
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::Validation { field, message: format!("must be finite and non-negative, got {value}") });
        }
        self.0.insert(name.to_string(), value);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Parses `NAME=VALUE`.
pub fn parse_tolerance_override(s: &str) -> Result<(String, f64)> {
    let (name, value) = s.split_once('=').ok_or_else(|| Error::Validation {
        field: "tolerance".into(),
        message: format!("expected NAME=VALUE, got '{s}'"),
    })?;
    let v: f64 = value.trim().parse().map_err(|_| Error::Validation {
        field: format!("tolerances.{}", name.trim()),
        message: format!("'{value}' is not a number"),
    })?;
    Ok((name.trim().to_string(), v))
}

/// Validated scenario with defaults applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub dim: usize,
    pub t_max: f64,
    pub dt: f64,
    pub mode: Mode,
    pub profiles: ScenarioProfiles,
    pub initial_metric: Option<InitialMetric>,
    pub quantum_numbers: Vec<usize>,
    pub superposition: Vec<SuperpositionTerm>,
    pub tolerances: Tolerances,
    pub seed: u64,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation { field: field.into(), message: message.into() }
}

fn take<T: DeserializeOwned>(obj: &mut Map<String, Value>, key: &str, path: &str) -> Result<Option<T>> {
    let field = if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
    match obj.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| invalid(&field, e.to_string())),
    }
}

fn require<T: DeserializeOwned>(obj: &mut Map<String, Value>, key: &str, path: &str) -> Result<T> {
    let field = if path.is_empty() { key.to_string() } else { format!("{path}.{key}") };
    take(obj, key, path)?.ok_or_else(|| invalid(&field, "required field is missing"))
}

fn no_leftovers(obj: &Map<String, Value>, path: &str) -> Result<()> {
    match obj.keys().next() {
        None => Ok(()),
        Some(k) => {
            let field = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            Err(invalid(&field, "unknown field"))
        }
    }
}

fn object(v: Value, field: &str) -> Result<Map<String, Value>> {
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(invalid(field, "expected an object")),
    }
}

fn check_profile(p: &Profile, field: &str) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "profile parameters must be finite"))
    }
}

/// Parses and validates a JSON scenario.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
    let mut obj = object(root, "$")?;

    let dim: usize = take(&mut obj, "dim", "")?.unwrap_or(DEFAULT_DIM);
    let t_max: f64 = take(&mut obj, "t_max", "")?.unwrap_or(DEFAULT_T_MAX);
    let dt: f64 = take(&mut obj, "dt", "")?.unwrap_or(DEFAULT_DT);
    let mode: Mode = take(&mut obj, "mode", "")?.unwrap_or(Mode::Generator);
    let profiles_value: Value = require(&mut obj, "profiles", "")?;
    let initial_value: Option<Value> = take(&mut obj, "initial_metric", "")?;
    let quantum_numbers: Vec<usize> = take(&mut obj, "quantum_numbers", "")?.unwrap_or_else(|| vec![0, 1]);
    let superposition: Vec<SuperpositionTerm> = take(&mut obj, "superposition", "")?.unwrap_or_else(|| {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        vec![SuperpositionTerm { n: 0, re: c, im: 0.0 }, SuperpositionTerm { n: 1, re: c, im: 0.0 }]
    });
    let tolerance_overrides: BTreeMap<String, f64> = take(&mut obj, "tolerances", "")?.unwrap_or_default();
    let seed: u64 = take(&mut obj, "seed", "")?.unwrap_or(0);
    no_leftovers(&obj, "")?;

    if !(MIN_DIM..=MAX_DIM).contains(&dim) {
        return Err(invalid("dim", format!("must lie in [{MIN_DIM}, {MAX_DIM}], got {dim}")));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t_max >= 10.0 * dt) || !t_max.is_finite() {
        return Err(invalid("t_max", format!("must be at least 10 dt = {}, got {t_max}", 10.0 * dt)));
    }
    TimeGrid::new(t_max, dt).map_err(|e| invalid("t_max", e.to_string()))?;

    let mut profiles_obj = object(profiles_value, "profiles")?;
    let profiles = match mode {
        Mode::Generator => {
            let p = GeneratorProfiles {
                re_omega: require(&mut profiles_obj, "re_omega", "profiles")?,
                im_omega: require(&mut profiles_obj, "im_omega", "profiles")?,
                im_beta: require(&mut profiles_obj, "im_beta", "profiles")?,
            };
            for (name, prof) in [("re_omega", &p.re_omega), ("im_omega", &p.im_omega), ("im_beta", &p.im_beta)] {
                check_profile(prof, &format!("profiles.{name}"))?;
            }
            ScenarioProfiles::Generator(p)
        }
        Mode::Check => {
            let p = CheckProfiles {
                omega: require(&mut profiles_obj, "omega", "profiles")?,
                alpha: require(&mut profiles_obj, "alpha", "profiles")?,
                beta: require(&mut profiles_obj, "beta", "profiles")?,
                phi: require(&mut profiles_obj, "phi", "profiles")?,
                vtheta_zero: require(&mut profiles_obj, "vtheta_zero", "profiles")?,
            };
            for (name, c) in [("omega", &p.omega), ("alpha", &p.alpha), ("beta", &p.beta)] {
                check_profile(&c.re, &format!("profiles.{name}.re"))?;
                check_profile(&c.im, &format!("profiles.{name}.im"))?;
            }
            check_profile(&p.phi, "profiles.phi")?;
            check_profile(&p.vtheta_zero, "profiles.vtheta_zero")?;
            ScenarioProfiles::Check(p)
        }
    };
    no_leftovers(&profiles_obj, "profiles")?;

    let initial_metric = match initial_value {
        None if mode == Mode::Generator => {
            return Err(invalid("initial_metric.vtheta_zero", "required field is missing"));
        }
        None => None,
        Some(v) => {
            let mut m = object(v, "initial_metric")?;
            let vtheta_zero: f64 = require(&mut m, "vtheta_zero", "initial_metric")?;
            let phi: f64 = require(&mut m, "phi", "initial_metric")?;
            no_leftovers(&m, "initial_metric")?;
            if !(vtheta_zero > 0.0) || !vtheta_zero.is_finite() {
                return Err(invalid("initial_metric.vtheta_zero", format!("must be positive, got {vtheta_zero}")));
            }
            if !phi.is_finite() {
                return Err(invalid("initial_metric.phi", "must be finite"));
            }
            if let ScenarioProfiles::Check(p) = &profiles {
                if (p.phi.value(0.0) - phi).abs() > 1e-12 {
                    return Err(invalid("initial_metric.phi", "disagrees with profiles.phi at t = 0"));
                }
                if (p.vtheta_zero.value(0.0) - vtheta_zero).abs() > 1e-12 {
                    return Err(invalid("initial_metric.vtheta_zero", "disagrees with profiles.vtheta_zero at t = 0"));
                }
            }
            Some(InitialMetric { phi, vtheta_zero })
        }
    };

    let max_level = dim / 4;
    if quantum_numbers.is_empty() {
        return Err(invalid("quantum_numbers", "must not be empty"));
    }
    if let Some(&n) = quantum_numbers.iter().find(|&&n| n > max_level) {
        return Err(invalid("quantum_numbers", format!("{n} exceeds dim/4 = {max_level}")));
    }
    if quantum_numbers.iter().collect::<BTreeSet<_>>().len() != quantum_numbers.len() {
        return Err(invalid("quantum_numbers", "entries must be distinct"));
    }
    if let Some(t) = superposition.iter().find(|t| t.n > max_level) {
        return Err(invalid("superposition", format!("level {} exceeds dim/4 = {max_level}", t.n)));
    }
    Superposition::new(superposition.iter().map(|t| (t.n, C64::new(t.re, t.im))).collect())
        .map_err(|e| invalid("superposition", e.to_string()))?;

    let mut tolerances = Tolerances::default();
    for (k, v) in &tolerance_overrides {
        tolerances.set(k, *v)?;
    }

    Ok(ScenarioConfig {
        dim,
        t_max,
        dt,
        mode,
        profiles,
        initial_metric,
        quantum_numbers,
        superposition,
        tolerances,
        seed,
    })
}

impl ScenarioConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t_max, self.dt)
    }

    pub fn superposition(&self) -> Result<Superposition> {
        Superposition::new(self.superposition.iter().map(|t| (t.n, C64::new(t.re, t.im))).collect())
    }

    /// Canonical JSON of the effective config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// `None` when the meter produced a non-finite value or could not run.
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub t_worst: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub max_squeeze_ratio: f64,
    pub min_vtheta_zero: f64,
    pub regimes: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub csv_sha256: String,
    pub version: String,
    /// Effective config, defaults included.
    pub config: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub overall_pass: bool,
    pub diagnostics: Diagnostics,
    pub provenance: Provenance,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Running maximum with the time it was attained.
#[derive(Clone, Debug)]
struct Meter {
    max: f64,
    t_worst: Option<f64>,
    broken: bool,
}

impl Meter {
    fn new() -> Self {
        Self { max: 0.0, t_worst: None, broken: false }
    }

    fn update(&mut self, r: f64, t: f64) {
        if !r.is_finite() {
            if !self.broken {
                self.t_worst = Some(t);
            }
            self.broken = true;
        } else if !self.broken && (self.t_worst.is_none() || r > self.max) {
            self.max = r;
            self.t_worst = Some(t);
        }
    }

    fn fail(&mut self, t: f64) {
        self.update(f64::NAN, t);
    }

    fn record(&self, name: &str, tolerance: f64) -> CheckRecord {
        let max_residual = if self.broken || self.t_worst.is_none() { None } else { Some(self.max) };
        CheckRecord {
            name: name.into(),
            max_residual,
            tolerance,
            pass: max_residual.is_some_and(|m| m <= tolerance),
            t_worst: self.t_worst,
        }
    }
}

/// CSV series and report of one run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub csv: String,
    pub report: VerificationReport,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn build_trajectory(cfg: &ScenarioConfig, grid: TimeGrid) -> Result<MetricTrajectory> {
    let policy = GuardPolicy::default();
    match &cfg.profiles {
        ScenarioProfiles::Generator(p) => {
            let init = cfg.initial_metric.expect("validated generator config has an initial metric");
            let s = MetricState::new(init.phi, init.vtheta_zero)?;
            MetricTrajectory::integrate(s, p, grid, &policy)
        }
        ScenarioProfiles::Check(p) => MetricTrajectory::from_profiles(p, grid, &policy),
    }
}

/// Stride of the sampled (per-time expensive) checks.
fn sample_times(len: usize) -> Vec<usize> {
    let stride = (len / SAMPLED_CHECKS).max(1);
    let mut ks: Vec<usize> = (0..len).step_by(stride).collect();
    if *ks.last().unwrap() != len - 1 {
        ks.push(len - 1);
    }
    ks
}

/// Runs a scenario end to end. Guard trips come back as errors.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let grid = cfg.grid()?;
    let traj = build_trajectory(cfg, grid)?;
    let builder = MetricBuilder::new(cfg.dim)?;
    let ops = builder.ops().clone();
    let sup = cfg.superposition()?;
    let len = traj.len();
    let tol = &cfg.tolerances;
    let coeffs = |k: usize| traj.sample(k).coeffs;

    let names = TOLERANCE_DEFAULTS.map(|(n, _)| n);
    let mut meters: BTreeMap<&str, Meter> = names.iter().map(|n| (*n, Meter::new())).collect();
    let mut notes = Vec::new();
    let mut regimes = BTreeSet::new();
    let (mut max_squeeze, mut min_vtheta) = (0.0f64, f64::INFINITY);

    let mut states: Vec<StateVector> = Vec::with_capacity(len);
    let mut eta_norms = vec![0.0; len];
    let mut tails = vec![0.0; len];
    let mut schrodinger = vec![None; len];
    let mut invariant = vec![None; len];
    let mut dyson = vec![None; len];

    let sampled: BTreeSet<usize> = sample_times(len).into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probe_levels = cfg.dim / 4;
    let probes: Vec<StateVector> = (0..POSITIVITY_PROBES)
        .map(|_| {
            let v = (0..cfg.dim)
                .map(|i| {
                    if i < probe_levels {
                        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            StateVector::from_vec(v)
        })
        .collect::<Result<_>>()?;

    let mut window = MetricWindow::new(&traj, builder.clone());
    for k in 0..len {
        let sample = traj.sample(k);
        let t = sample.t;
        let s = sample.state;
        let m = window.at(k)?;

        let psi = assemble_solution(&m.rho_inverse, &sup, traj.phase_integral(k))?;
        eta_norms[k] = m.eta_norm(&psi)?;
        tails[k] = psi.tail_support();
        states.push(psi);

        max_squeeze = max_squeeze.max(s.squeeze_ratio());
        min_vtheta = min_vtheta.min(s.vtheta_zero);
        regimes.insert(Regime::of(&s).name());

        let rel = relation_residuals(&s, &sample.coeffs);
        meters.get_mut("relations").unwrap().update(rel.iter().map(|r| r.abs()).fold(0.0, f64::max), t);
        let tr = sample.transformed;
        meters.get_mut("uv").unwrap().update(tr.u.norm().max(tr.v.norm()), t);
        meters.get_mut("im_w").unwrap().update(tr.w.im.abs(), t);
        let norm_id = InvariantCoefficients::from_state(&s).normalization(&s);
        meters.get_mut("normalization").unwrap().update((norm_id - 1.0).abs(), t);

        let inv = invariant_ph(&s, &ops);
        let mut worst: f64 = 0.0;
        for &n in &cfg.quantum_numbers {
            let q = rayleigh_quotient(&m, &inv, n)?;
            worst = worst.max((q - C64::new(n as f64 + 0.5, 0.0)).norm());
        }
        meters.get_mut("eigenvalue").unwrap().update(worst, t);
        meters.get_mut("hermitian_image").unwrap().update(hermitian_image_check(&m, &s, &ops, INTERIOR_EXCLUDE)?, t);

        if sampled.contains(&k) {
            let c = canonical_invariant_with(&s, &ops);
            let d = crate::fock::frobenius_distance(&c, &inv, INTERIOR_EXCLUDE)? / inv.frobenius_norm(INTERIOR_EXCLUDE).max(1.0);
            meters.get_mut("canonical").unwrap().update(d, t);
            let gram = GaussianShape::from_state(&s)
                .and_then(|shape| PositionGrid::for_shape(&shape, GRAM_LEVELS))
                .and_then(|grid| orthonormality_matrix(GRAM_LEVELS, &s, &grid, Weight::Eta));
            match gram {
                Ok(g) => meters.get_mut("gram").unwrap().update(g.max_deviation(), t),
                Err(e) => {
                    if !meters["gram"].broken {
                        notes.push(format!("position representation unavailable at t = {t}: {e}"));
                    }
                    meters.get_mut("gram").unwrap().fail(t);
                }
            }
            let mut negative: f64 = 0.0;
            for v in &probes {
                let q = quadratic_form(&m.eta, &v.amplitudes()).re / v.norm().powi(2);
                negative = negative.max(-q);
            }
            meters.get_mut("metric_positivity").unwrap().update(negative.max(0.0), t);
        }

        // Lagging meters: the newest index k completes the stencils below.
        if k >= 2 * SCHRODINGER_EXCLUDE {
            let j = k - 2;
            let h = crate::swanson::hamiltonian_matrix(&coeffs(j), &ops);
            let r = schrodinger_residual(&states, &h, j, grid.dt, SCHRODINGER_EXCLUDE)?;
            schrodinger[j] = Some(r);
            meters.get_mut("schrodinger").unwrap().update(r, traj.sample(j).t);
        }
        if k >= 2 * RICHARDSON_REACH {
            let j = k - RICHARDSON_REACH;
            let tj = traj.sample(j).t;
            let r = invariant_residual(&traj, &coeffs, &ops, j, INTERIOR_EXCLUDE)?;
            invariant[j] = Some(r);
            meters.get_mut("invariant").unwrap().update(r, tj);
            let r = dyson_residual(&coeffs, &mut window, j, INTERIOR_EXCLUDE)?;
            dyson[j] = Some(r);
            meters.get_mut("dyson").unwrap().update(r, tj);
        }
    }

    let n0 = eta_norms[0];
    for k in 0..len {
        let t = traj.sample(k).t;
        meters.get_mut("eta_drift").unwrap().update((eta_norms[k] - n0).abs() / n0.abs(), t);
        meters.get_mut("tail").unwrap().update(tails[k], t);
    }
    let max_tail = tails.iter().cloned().fold(0.0, f64::max);
    if max_tail > TAIL_WARNING {
        log::warn!("tail support reaches {max_tail:e}, above {TAIL_WARNING:e}");
        notes.push(format!("tail support reaches {max_tail:e}"));
    }
    let t_end = traj.sample(len - 1).t;
    meters.get_mut("integration").unwrap().update(traj.max_step_error(), t_end);
    meters.get_mut("phase_quadrature").unwrap().update(traj.phase_quadrature_error(), t_end);

    // Independent propagation of the initial state.
    let s0 = traj.sample(0).state;
    let zeta0 = C64::new(-s0.phi_cap / s0.chi(), 0.0);
    let overlap = GaussianPolynomial::from_fock(&states[0], zeta0, sup.max_level()).and_then(|(g0, _)| {
        let fine = |j: usize| traj.fine_sample(j).coeffs;
        let run = propagate_quadratic(&fine, g0, grid)?;
        let last = run.fock_state(len - 1, cfg.dim)?;
        let m = MetricOperators::build(&builder, &traj.sample(len - 1).state)?;
        eta_overlap_defect(&m, &last, &states[len - 1])
    });
    match overlap {
        Ok(d) => meters.get_mut("oracle_overlap").unwrap().update(d, t_end),
        Err(e) => {
            notes.push(format!("oracle propagation failed: {e}"));
            meters.get_mut("oracle_overlap").unwrap().fail(t_end);
        }
    }

    let mut csv = String::new();
    let mut header: Vec<String> = CSV_FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(cfg.quantum_numbers.iter().map(|n| format!("gamma_{n}")));
    header.extend(CSV_METER_COLUMNS.iter().map(|s| s.to_string()));
    csv.push_str(&header.join(","));
    csv.push('\n');
    for k in 0..len {
        let smp = traj.sample(k);
        let c = smp.coeffs;
        let mut row = vec![
            fmt(smp.t),
            fmt(smp.state.phi_cap),
            fmt(smp.state.vtheta_zero),
            fmt(smp.state.chi()),
            fmt(c.omega.re),
            fmt(c.omega.im),
            fmt(c.alpha.re),
            fmt(c.alpha.im),
            fmt(c.beta.re),
            fmt(c.beta.im),
            fmt(smp.w().re),
            fmt(smp.w().im),
        ];
        row.extend(cfg.quantum_numbers.iter().map(|&n| fmt(traj.phase(n, k))));
        row.push(fmt(eta_norms[k]));
        row.push(fmt_opt(schrodinger[k]));
        row.push(fmt_opt(invariant[k]));
        row.push(fmt_opt(dyson[k]));
        row.push(fmt(tails[k]));
        csv.push_str(&row.join(","));
        csv.push('\n');
    }

    let checks: Vec<CheckRecord> = names.iter().map(|n| meters[n].record(n, tol.get(n))).collect();
    let overall_pass = checks.iter().all(|c| c.pass);
    let report = VerificationReport {
        checks,
        overall_pass,
        diagnostics: Diagnostics {
            max_squeeze_ratio: max_squeeze,
            min_vtheta_zero: min_vtheta,
            regimes: regimes.into_iter().map(String::from).collect(),
            notes,
        },
        provenance: Provenance {
            config_sha256: cfg.sha256(),
            csv_sha256: sha256_hex(csv.as_bytes()),
            version: VERSION.into(),
            config: serde_json::to_value(cfg).expect("config serializes"),
        },
    };
    Ok(RunOutput { csv, report })
}

/// Parsed CSV series.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Series {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("empty series".into()))?
            .split(',')
            .map(String::from)
            .collect();
        for col in CSV_FIXED_COLUMNS.iter().chain(CSV_METER_COLUMNS.iter()) {
            if !header.iter().any(|h| h == col) {
                return Err(Error::Format(format!("missing column '{col}'")));
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(Error::Format(format!(
                    "row {} has {} fields, expected {}",
                    i + 1,
                    fields.len(),
                    header.len()
                )));
            }
            let row = fields
                .iter()
                .map(|f| {
                    if f.is_empty() {
                        Ok(None)
                    } else {
                        f.parse::<f64>().map(Some).map_err(|_| Error::Format(format!("row {}: bad number '{f}'", i + 1)))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format("series has no rows".into()));
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Outcome of [`verify`].
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOutcome {
    pub checks: Vec<CheckRecord>,
    pub overall_pass: bool,
}

fn column_max(series: &Series, name: &str) -> Result<(Option<f64>, Option<f64>)> {
    let t = series.column("t")?;
    let v = series.column(name)?;
    let mut best: Option<(f64, f64)> = None;
    for (ti, vi) in t.iter().zip(&v) {
        if let (Some(ti), Some(vi)) = (ti, vi) {
            if best.is_none_or(|(b, _)| *vi > b) {
                best = Some((*vi, *ti));
            }
        }
    }
    Ok((best.map(|b| b.0), best.map(|b| b.1)))
}

/// Re-evaluates a report against its series, optionally with different
/// tolerances and an expected config.
pub fn verify(
    csv: &str,
    report_json: &str,
    overrides: &BTreeMap<String, f64>,
    config: Option<&ScenarioConfig>,
) -> Result<VerifyOutcome> {
    let report: VerificationReport =
        serde_json::from_str(report_json).map_err(|e| Error::Format(format!("unreadable report: {e}")))?;
    if sha256_hex(csv.as_bytes()) != report.provenance.csv_sha256 {
        return Err(Error::Format("series does not match the report's csv_sha256".into()));
    }
    if let Some(cfg) = config {
        if cfg.sha256() != report.provenance.config_sha256 {
            return Err(Error::Format("config does not match the report's config_sha256".into()));
        }
    }
    let series = Series::parse(csv)?;
    if let Some(steps) = report.provenance.config.get("t_max").and_then(Value::as_f64).zip(
        report.provenance.config.get("dt").and_then(Value::as_f64),
    ) {
        let grid = TimeGrid::new(steps.0, steps.1).map_err(|e| Error::Format(e.to_string()))?;
        if series.rows.len() != grid.len() {
            return Err(Error::Format(format!("series has {} rows, expected {}", series.rows.len(), grid.len())));
        }
    }

    // Quantities the series carries must agree with the report.
    let mut from_series: BTreeMap<&str, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for (check, col) in
        [("schrodinger", "schrodinger_residual"), ("invariant", "invariant_residual"), ("dyson", "dyson_residual"), ("tail", "tail_support")]
    {
        from_series.insert(check, column_max(&series, col)?);
    }
    let eta = series.column("eta_norm")?;
    let t = series.column("t")?;
    if let Some(Some(n0)) = eta.first() {
        let mut best: Option<(f64, f64)> = None;
        for (e, ti) in eta.iter().zip(&t) {
            if let (Some(e), Some(ti)) = (e, ti) {
                let d = (e - n0).abs() / n0.abs();
                if best.is_none_or(|(b, _)| d > b) {
                    best = Some((d, *ti));
                }
            }
        }
        from_series.insert("eta_drift", (best.map(|b| b.0), best.map(|b| b.1)));
    }
    for (name, (max, _)) in &from_series {
        let rec = report.check(name).ok_or_else(|| Error::Format(format!("report lacks check '{name}'")))?;
        let agree = match (rec.max_residual, *max) {
            (Some(a), Some(b)) => a == b || (a - b).abs() <= 1e-15 * a.abs().max(b.abs()),
            (None, _) => true,
            (Some(_), None) => false,
        };
        if !agree {
            return Err(Error::Format(format!("report value for '{name}' does not match the series")));
        }
    }

    for name in overrides.keys() {
        if report.check(name).is_none() {
            return Err(invalid(&format!("tolerances.{name}"), "unknown tolerance name"));
        }
    }
    let checks: Vec<CheckRecord> = report
        .checks
        .iter()
        .map(|c| {
            let tolerance = overrides.get(&c.name).copied().unwrap_or(c.tolerance);
            CheckRecord { pass: c.max_residual.is_some_and(|m| m <= tolerance), tolerance, ..c.clone() }
        })
        .collect();
    let overall_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyOutcome { checks, overall_pass })
}

/// The built-in demo scenarios: the harmonic limit and a time-dependent
/// non-Hermitian run.
pub fn demo_scenarios() -> Vec<(&'static str, ScenarioConfig)> {
    let harmonic = r#"{
        "dim": 64, "t_max": 5.0, "dt": 0.001, "mode": "generator",
        "profiles": {
            "re_omega": {"kind": "constant", "value": 1.0},
            "im_omega": {"kind": "constant", "value": 0.0},
            "im_beta": {"kind": "constant", "value": 0.0}
        },
        "initial_metric": {"phi": 0.0, "vtheta_zero": 1.0},
        "quantum_numbers": [0, 1, 2, 3, 4, 5, 6]
    }"#;
    let td = r#"{
        "dim": 64, "t_max": 5.0, "dt": 0.001, "mode": "generator",
        "profiles": {
            "re_omega": {"kind": "constant", "value": 1.0},
            "im_omega": {"kind": "sinusoid", "offset": 0.0, "amplitude": 0.1, "frequency": 1.0, "phase": 0.0},
            "im_beta": {"kind": "constant", "value": 0.05}
        },
        "initial_metric": {"phi": -0.2, "vtheta_zero": 1.0},
        "quantum_numbers": [0, 1, 2, 3, 4, 5, 6]
    }"#;
    vec![
        ("harmonic", parse_scenario(harmonic).expect("built-in scenario is valid")),
        ("td", parse_scenario(td).expect("built-in scenario is valid")),
    ]
}

/// `1 − |⟨a|b⟩|/(‖a‖‖b‖)` in the Euclidean product.
pub fn euclidean_overlap_defect(a: &StateVector, b: &StateVector) -> f64 {
    (1.0 - a.inner(b).norm() / (a.norm() * b.norm())).abs()
}
