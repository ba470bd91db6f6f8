//! Metric trajectories, Lewis–Riesenfeld phases and solution assembly.
//!
//! Coefficient profiles are analytic in `t`. The metric ODE is stepped on the
//! half-step lattice `t = j·dt/2`; a parallel full-step RK4 gives the local
//! error estimate. Output quantities live on the coarse grid `t = k·dt`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Operator, StateVector, C64, I};
use crate::swanson::{
    derive_constrained_coeffs, metric_rhs, wuv_coefficients, FreeParameters, HamiltonianCoefficients,
    MetricState, TransformedCoefficients,
};

/// A real scalar function of time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    Linear { offset: f64, slope: f64 },
    /// `offset + amplitude·sin(frequency·t + phase)`
    Sinusoid { offset: f64, amplitude: f64, frequency: f64, phase: f64 },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Profile::Sinusoid { offset: 0.0, amplitude, frequency, phase: 0.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Linear { offset, slope } => offset + slope * t,
            Profile::Sinusoid { offset, amplitude, frequency, phase } => {
                offset + amplitude * (frequency * t + phase).sin()
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant { .. } => 0.0,
            Profile::Linear { slope, .. } => slope,
            Profile::Sinusoid { amplitude, frequency, phase, .. } => {
                amplitude * frequency * (frequency * t + phase).cos()
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            Profile::Constant { value } => value.is_finite(),
            Profile::Linear { offset, slope } => offset.is_finite() && slope.is_finite(),
            Profile::Sinusoid { offset, amplitude, frequency, phase } => {
                [offset, amplitude, frequency, phase].iter().all(|x| x.is_finite())
            }
        }
    }
}

/// The free data of generator mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorProfiles {
    pub re_omega: Profile,
    pub im_omega: Profile,
    pub im_beta: Profile,
}

impl GeneratorProfiles {
    pub fn at(&self, t: f64) -> FreeParameters {
        FreeParameters {
            re_omega: self.re_omega.value(t),
            im_omega: self.im_omega.value(t),
            im_beta: self.im_beta.value(t),
        }
    }
}

/// A complex coefficient given by separate real and imaginary profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexProfile {
    pub re: Profile,
    pub im: Profile,
}

impl ComplexProfile {
    pub fn value(&self, t: f64) -> C64 {
        C64::new(self.re.value(t), self.im.value(t))
    }
}

/// User-supplied coefficients and metric trajectory for check mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckProfiles {
    pub omega: ComplexProfile,
    pub alpha: ComplexProfile,
    pub beta: ComplexProfile,
    pub phi: Profile,
    pub vtheta_zero: Profile,
}

impl CheckProfiles {
    pub fn coefficients(&self, t: f64) -> HamiltonianCoefficients {
        HamiltonianCoefficients::new(self.omega.value(t), self.alpha.value(t), self.beta.value(t))
    }
}

/// Uniform grid `t_k = k·dt`, `k = 0 … steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!("need t_max > 0 and dt > 0, got ({t_max}, {dt})")));
        }
        let steps = (t_max / dt).round() as usize;
        if steps == 0 || ((steps as f64) * dt - t_max).abs() > 1e-9 * t_max {
            return Err(Error::Domain(format!("t_max = {t_max} is not a multiple of dt = {dt}")));
        }
        Ok(Self { dt, steps })
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn fine_time(&self, j: usize) -> f64 {
        j as f64 * 0.5 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.time(self.steps)
    }
}

/// Thresholds that stop a generator-mode integration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardPolicy {
    pub vtheta_floor: f64,
    pub constraint_floor: f64,
    pub step_error: f64,
    pub im_w: f64,
    pub require_normalizable: bool,
}

impl Default for GuardPolicy {
    fn default() -> Self {
        Self {
            vtheta_floor: 1e-8,
            constraint_floor: 1e-8,
            step_error: 1e-8,
            im_w: 1e-10,
            require_normalizable: true,
        }
    }
}

impl GuardPolicy {
    fn check_state(&self, s: &MetricState, t: f64) -> Result<()> {
        if !s.phi_cap.is_finite() || !s.vtheta_zero.is_finite() {
            return Err(Error::Instability { t });
        }
        if s.vtheta_zero <= self.vtheta_floor {
            return Err(guard("vtheta_floor", t, format!("vtheta0 = {:e}", s.vtheta_zero)));
        }
        let d = s.constraint_denominator();
        if d.abs() <= self.constraint_floor {
            return Err(guard("constraint_singularity", t, format!("2 Phi^2 - vtheta0 = {d:e}")));
        }
        self.check_normalizable(s, t)
    }

    /// Guards that apply when no constraint is solved (check mode).
    fn check_metric(&self, s: &MetricState, t: f64) -> Result<()> {
        if !s.phi_cap.is_finite() || !s.vtheta_zero.is_finite() {
            return Err(Error::Instability { t });
        }
        if s.vtheta_zero <= self.vtheta_floor {
            return Err(guard("vtheta_floor", t, format!("vtheta0 = {:e}", s.vtheta_zero)));
        }
        self.check_normalizable(s, t)
    }

    fn check_normalizable(&self, s: &MetricState, t: f64) -> Result<()> {
        if self.require_normalizable && !s.is_normalizable() {
            return Err(guard(
                "normalizability",
                t,
                format!("|Phi/chi| = {} with (Phi, vtheta0) = ({}, {})", s.squeeze_ratio(), s.phi_cap, s.vtheta_zero),
            ));
        }
        Ok(())
    }
}

fn guard(name: &str, t: f64, detail: String) -> Error {
    Error::Guard { guard: name.into(), t, detail }
}

/// Metric data at one lattice time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSample {
    pub t: f64,
    pub state: MetricState,
    pub coeffs: HamiltonianCoefficients,
    pub dphi: f64,
    pub dvtheta_zero: f64,
    pub transformed: TransformedCoefficients,
}

impl MetricSample {
    pub fn w(&self) -> C64 {
        self.transformed.w
    }
}

/// Metric trajectory sampled on the half-step lattice, with the phase
/// integral `G(t) = ∫₀ᵗ Re W` on the coarse grid.
#[derive(Clone, Debug)]
pub struct MetricTrajectory {
    grid: TimeGrid,
    fine: Vec<MetricSample>,
    phase_integral: Vec<f64>,
    phase_integral_trapezoid: Vec<f64>,
    max_step_error: f64,
}

fn rk4(y: [f64; 2], t: f64, h: f64, f: &impl Fn(f64, [f64; 2]) -> [f64; 2]) -> [f64; 2] {
    let add = |y: [f64; 2], k: [f64; 2], c: f64| [y[0] + c * k[0], y[1] + c * k[1]];
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = f(t + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

impl MetricTrajectory {
    /// Integrates the reduced metric ODE from `initial` and completes the
    /// Hamiltonian from the constraints at every lattice time.
    pub fn integrate(
        initial: MetricState,
        profiles: &GeneratorProfiles,
        grid: TimeGrid,
        policy: &GuardPolicy,
    ) -> Result<Self> {
        let rhs = |t: f64, y: [f64; 2]| {
            let s = MetricState { phi_cap: y[0], vtheta_zero: y[1] };
            let (a, b) = metric_rhs(&s, profiles.im_omega.value(t), profiles.im_beta.value(t));
            [a, b]
        };
        let sample = |t: f64, s: MetricState| -> Result<MetricSample> {
            policy.check_state(&s, t)?;
            let p = profiles.at(t);
            let coeffs = derive_constrained_coeffs(&s, &p)?;
            let (dphi, dvtheta_zero) = metric_rhs(&s, p.im_omega, p.im_beta);
            let transformed = wuv_coefficients(&s, &coeffs, dphi, dvtheta_zero);
            if transformed.w.im.abs() > policy.im_w {
                return Err(Error::NonRealPhase { im_w: transformed.w.im.abs(), t });
            }
            Ok(MetricSample { t, state: s, coeffs, dphi, dvtheta_zero, transformed })
        };

        let h = 0.5 * grid.dt;
        let mut fine = Vec::with_capacity(2 * grid.steps + 1);
        fine.push(sample(0.0, initial)?);
        let mut max_step_error = 0.0f64;
        let mut y = [initial.phi_cap, initial.vtheta_zero];
        for k in 0..grid.steps {
            let t = grid.time(k);
            let coarse = rk4(y, t, grid.dt, &rhs);
            let mid = rk4(y, t, h, &rhs);
            let end = rk4(mid, t + h, h, &rhs);
            let err = (end[0] - coarse[0]).abs().max((end[1] - coarse[1]).abs()) / 15.0;
            if !err.is_finite() {
                return Err(Error::Instability { t: grid.time(k + 1) });
            }
            max_step_error = max_step_error.max(err);
            if err > policy.step_error {
                return Err(guard("step_error", grid.time(k + 1), format!("local error estimate {err:e}")));
            }
            for (j, z) in [(2 * k + 1, mid), (2 * k + 2, end)] {
                let s = MetricState { phi_cap: z[0], vtheta_zero: z[1] };
                let t = grid.fine_time(j);
                let prev = fine.last().map_or(0.0, |p: &MetricSample| p.state.constraint_denominator());
                if prev * s.constraint_denominator() < 0.0 {
                    return Err(guard("constraint_singularity", t, "2 Phi^2 - vtheta0 changed sign".into()));
                }
                fine.push(sample(t, s)?);
            }
            y = end;
        }
        Ok(Self::finish(grid, fine, max_step_error))
    }

    /// Samples a user-supplied metric trajectory and coefficient set. No
    /// constraint is enforced; `W` may be complex.
    pub fn from_profiles(profiles: &CheckProfiles, grid: TimeGrid, policy: &GuardPolicy) -> Result<Self> {
        let mut fine = Vec::with_capacity(2 * grid.steps + 1);
        for j in 0..=2 * grid.steps {
            let t = grid.fine_time(j);
            let state = MetricState { phi_cap: profiles.phi.value(t), vtheta_zero: profiles.vtheta_zero.value(t) };
            policy.check_metric(&state, t)?;
            let coeffs = profiles.coefficients(t);
            let dphi = profiles.phi.derivative(t);
            let dvtheta_zero = profiles.vtheta_zero.derivative(t);
            let transformed = wuv_coefficients(&state, &coeffs, dphi, dvtheta_zero);
            fine.push(MetricSample { t, state, coeffs, dphi, dvtheta_zero, transformed });
        }
        Ok(Self::finish(grid, fine, 0.0))
    }

    fn finish(grid: TimeGrid, fine: Vec<MetricSample>, max_step_error: f64) -> Self {
        let mut simpson = vec![0.0; grid.len()];
        let mut trapezoid = vec![0.0; grid.len()];
        for k in 0..grid.steps {
            let (a, m, b) = (fine[2 * k].w().re, fine[2 * k + 1].w().re, fine[2 * k + 2].w().re);
            simpson[k + 1] = simpson[k] + grid.dt / 6.0 * (a + 4.0 * m + b);
            trapezoid[k + 1] = trapezoid[k] + grid.dt / 4.0 * (a + 2.0 * m + b);
        }
        Self { grid, fine, phase_integral: simpson, phase_integral_trapezoid: trapezoid, max_step_error }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coarse-grid sample `k`.
    pub fn sample(&self, k: usize) -> &MetricSample {
        &self.fine[2 * k]
    }

    /// Half-step lattice sample `j`.
    pub fn fine_sample(&self, j: usize) -> &MetricSample {
        &self.fine[j]
    }

    pub fn fine_len(&self) -> usize {
        self.fine.len()
    }

    /// `∫₀^{t_k} Re W dt` (composite Simpson).
    pub fn phase_integral(&self, k: usize) -> f64 {
        self.phase_integral[k]
    }

    /// Same integral by the trapezoid rule on the half-step lattice.
    pub fn phase_integral_trapezoid(&self, k: usize) -> f64 {
        self.phase_integral_trapezoid[k]
    }

    /// `γₙ(t_k) = (n + 1/2)·∫ Re W`.
    pub fn phase(&self, n: usize, k: usize) -> f64 {
        (n as f64 + 0.5) * self.phase_integral[k]
    }

    pub fn max_step_error(&self) -> f64 {
        self.max_step_error
    }

    /// `|S_{dt/2} − S_{dt}| / 15` at the last even grid index, where `S_h` is
    /// composite Simpson with spacing `h`.
    pub fn phase_quadrature_error(&self) -> f64 {
        let k = self.grid.steps - self.grid.steps % 2;
        let mut coarse = 0.0;
        for i in (0..k).step_by(2) {
            let (a, m, b) = (self.sample(i).w().re, self.sample(i + 1).w().re, self.sample(i + 2).w().re);
            coarse += self.grid.dt / 3.0 * (a + 4.0 * m + b);
        }
        (self.phase_integral[k] - coarse).abs() / 15.0
    }
}

/// Superposition coefficients `Cₙ` over quantum numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct Superposition {
    terms: Vec<(usize, C64)>,
}

impl Superposition {
    pub fn new(terms: Vec<(usize, C64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("superposition needs at least one term".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(n, c) in &terms {
            if !seen.insert(n) {
                return Err(Error::Domain(format!("quantum number {n} appears twice")));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::Domain("superposition coefficients must be finite".into()));
            }
        }
        Ok(Self { terms })
    }

    pub fn single(n: usize) -> Self {
        Self { terms: vec![(n, C64::new(1.0, 0.0))] }
    }

    pub fn terms(&self) -> &[(usize, C64)] {
        &self.terms
    }

    pub fn max_level(&self) -> usize {
        self.terms.iter().map(|t| t.0).max().unwrap_or(0)
    }

    /// `Σ|Cₙ|²`, the conserved η-norm squared of the assembled state.
    pub fn weight(&self) -> f64 {
        self.terms.iter().map(|t| t.1.norm_sqr()).sum()
    }
}

/// `Σ Cₙ e^{i(n+1/2)G} ρ⁻¹|n⟩` for a phase integral `G`.
pub fn assemble_solution(rho_inverse: &Operator, sup: &Superposition, phase_integral: f64) -> Result<StateVector> {
    let dim = rho_inverse.dim();
    if sup.max_level() >= dim {
        return Err(Error::Shape { left: sup.max_level(), right: dim });
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for &(n, c) in sup.terms() {
        let amp = c * (I * ((n as f64 + 0.5) * phase_integral)).exp();
        for (i, o) in out.iter_mut().enumerate() {
            *o += amp * rho_inverse.get(i, n);
        }
    }
    StateVector::from_vec(out)
}
