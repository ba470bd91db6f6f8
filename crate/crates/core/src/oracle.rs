//! Brute-force propagation and residual meters.
//!
//! Two independent propagators:
//! - [`propagate`]: classical RK4 on the truncated Fock matrix. Stable for
//!   Hermitian and diagonal generators. For a non-Hermitian quadratic `H` the
//!   truncated matrix carries spurious complex eigenvalues near the cut-off and
//!   the integration blows up; use [`propagate_quadratic`] there.
//! - [`propagate_quadratic`]: exact reduction for quadratic `H`. A state
//!   `e^{ζK₊}q` with `q` a finite vector stays of that form, with `ζ` obeying a
//!   Riccati equation and `q` a small linear system.
//!
//! Time derivatives of operators use 4th-order central differences plus one
//! Richardson step, so meters need four grid points on each side.

use std::collections::BTreeMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::fock::{apply, commutator, frobenius_distance, Operator, OperatorSet, StateVector, C64, I};
use crate::metric::MetricBuilder;
use crate::swanson::{hamiltonian_matrix, HamiltonianCoefficients, InvariantCoefficients, MetricState};
use crate::trajectory::{MetricTrajectory, TimeGrid};

/// Default number of top Fock levels left out of interior-block norms.
pub const INTERIOR_EXCLUDE: usize = 4;

/// Meters that difference over `t ± 4dt` need this many points per side.
pub const RICHARDSON_REACH: usize = 4;

/// Norm growth (relative to the initial norm) treated as a blow-up.
pub const BLOWUP_FACTOR: f64 = 1e8;

/// Operators sampled on the half-step lattice `t = j·dt/2`.
pub trait HamiltonianSource {
    fn dim(&self) -> usize;
    fn hamiltonian(&self, j: usize) -> Result<Operator>;
}

/// Time-independent `H`.
pub struct StaticHamiltonian(pub Operator);

impl HamiltonianSource for StaticHamiltonian {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn hamiltonian(&self, _j: usize) -> Result<Operator> {
        Ok(self.0.clone())
    }
}

/// `H` from a closure over the lattice index.
pub struct FnHamiltonian<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(usize) -> Result<Operator>> HamiltonianSource for FnHamiltonian<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn hamiltonian(&self, j: usize) -> Result<Operator> {
        (self.f)(j)
    }
}

/// Swanson Hamiltonian along a metric trajectory.
pub struct SwansonSource<'a> {
    pub trajectory: &'a MetricTrajectory,
    pub ops: &'a OperatorSet,
}

impl HamiltonianSource for SwansonSource<'_> {
    fn dim(&self) -> usize {
        self.ops.dim()
    }
    fn hamiltonian(&self, j: usize) -> Result<Operator> {
        Ok(hamiltonian_matrix(&self.trajectory.fine_sample(j).coeffs, self.ops))
    }
}

/// Step-halving error estimate from runs at `dt`, `2dt` and `4dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    /// `‖ψ_dt − ψ_2dt‖ / 15` at the final time.
    pub error_estimate: f64,
    /// `log₂(‖ψ_2dt − ψ_4dt‖ / ‖ψ_dt − ψ_2dt‖)`; `None` when both differences
    /// are at rounding level.
    pub observed_order: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub grid: TimeGrid,
    pub states: Vec<StateVector>,
    /// `⟨ψ|η|ψ⟩`; Euclidean until [`PropagationResult::apply_metric`] is called.
    pub eta_norms: Vec<f64>,
    pub tail_support: Vec<f64>,
    pub convergence: Option<Convergence>,
}

impl PropagationResult {
    pub fn times(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.grid.time(k)).collect()
    }

    /// Replaces the Euclidean norms by `⟨ψ|η(t_k)|ψ⟩`.
    pub fn apply_metric(&mut self, eta_norm: impl Fn(usize, &StateVector) -> Result<f64>) -> Result<()> {
        for (k, s) in self.states.iter().enumerate() {
            self.eta_norms[k] = eta_norm(k, s)?;
        }
        Ok(())
    }

    /// `max_k |N_k − N_0|`.
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.eta_norms[0];
        self.eta_norms.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max)
    }
}

fn rk4_vector(
    h: &dyn HamiltonianSource,
    psi: &StateVector,
    lattice: [usize; 3],
    dt: f64,
    cache: &mut Option<(usize, Operator)>,
) -> Result<StateVector> {
    let op_at = |j: usize| -> Result<Operator> {
        if let Some((cj, op)) = cache.as_ref() {
            if *cj == j {
                return Ok(op.clone());
            }
        }
        h.hamiltonian(j)
    };
    let h0 = op_at(lattice[0])?;
    let hm = h.hamiltonian(lattice[1])?;
    let h1 = h.hamiltonian(lattice[2])?;
    if h0.dim() != psi.dim() || hm.dim() != psi.dim() || h1.dim() != psi.dim() {
        return Err(Error::Shape { left: h0.dim(), right: psi.dim() });
    }
    let f = |op: &Operator, v: &StateVector| -> Result<StateVector> { Ok(apply(op, v)?.scale(-I)) };
    let k1 = f(&h0, psi)?;
    let mut y = psi.clone();
    y.add_scaled(C64::new(0.5 * dt, 0.0), &k1);
    let k2 = f(&hm, &y)?;
    let mut y = psi.clone();
    y.add_scaled(C64::new(0.5 * dt, 0.0), &k2);
    let k3 = f(&hm, &y)?;
    let mut y = psi.clone();
    y.add_scaled(C64::new(dt, 0.0), &k3);
    let k4 = f(&h1, &y)?;
    let mut out = psi.clone();
    out.add_scaled(C64::new(dt / 6.0, 0.0), &k1);
    out.add_scaled(C64::new(dt / 3.0, 0.0), &k2);
    out.add_scaled(C64::new(dt / 3.0, 0.0), &k3);
    out.add_scaled(C64::new(dt / 6.0, 0.0), &k4);
    *cache = Some((lattice[2], h1));
    Ok(out)
}

/// RK4 with step `stride·dt`; returns every state.
fn run_rk4(h: &dyn HamiltonianSource, psi0: &StateVector, grid: TimeGrid, stride: usize) -> Result<Vec<StateVector>> {
    let n0 = psi0.norm().max(f64::MIN_POSITIVE);
    let steps = grid.steps / stride;
    let dt = grid.dt * stride as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(psi0.clone());
    let mut cache = None;
    let mut psi = psi0.clone();
    for k in 0..steps {
        let j = 2 * k * stride;
        psi = rk4_vector(h, &psi, [j, j + stride, j + 2 * stride], dt, &mut cache)?;
        let n = psi.norm();
        if !psi.is_finite() || n > BLOWUP_FACTOR * n0 {
            return Err(Error::Instability { t: (k + 1) as f64 * dt });
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// RK4 integration of `iψ̇ = H(t)ψ` over `grid`. With `estimate_convergence`
/// the run is repeated at `2dt` and `4dt` (needs `steps` divisible by 4).
pub fn propagate(
    h: &dyn HamiltonianSource,
    psi0: &StateVector,
    grid: TimeGrid,
    estimate_convergence: bool,
) -> Result<PropagationResult> {
    if h.dim() != psi0.dim() {
        return Err(Error::Shape { left: h.dim(), right: psi0.dim() });
    }
    let states = run_rk4(h, psi0, grid, 1)?;
    let convergence = if estimate_convergence {
        if !grid.steps.is_multiple_of(4) {
            return Err(Error::Domain(format!("convergence estimate needs steps divisible by 4, got {}", grid.steps)));
        }
        let s2 = run_rk4(h, psi0, grid, 2)?;
        let s4 = run_rk4(h, psi0, grid, 4)?;
        let e1 = states.last().unwrap().sub(s2.last().unwrap()).norm();
        let e2 = s2.last().unwrap().sub(s4.last().unwrap()).norm();
        let floor = 1e-13 * psi0.norm().max(1.0);
        let observed_order = if e1 > floor && e2 > floor { Some((e2 / e1).log2()) } else { None };
        Some(Convergence { error_estimate: e1 / 15.0, observed_order })
    } else {
        None
    };
    let eta_norms = states.iter().map(|s| s.norm().powi(2)).collect();
    let tail_support = states.iter().map(|s| s.tail_support()).collect();
    Ok(PropagationResult { grid, states, eta_norms, tail_support, convergence })
}

/// State `e^{ζK₊}·q` with `q` supported on the lowest few Fock levels.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolynomial {
    pub zeta: C64,
    pub q: Vec<C64>,
}

/// `e^{zK₊}` applied to a vector, written into `dim` levels.
fn exp_k_plus(z: C64, v: &[C64], dim: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); dim];
    let half = z * 0.5;
    for (m, &vm) in v.iter().enumerate() {
        if m >= dim || vm == C64::new(0.0, 0.0) {
            continue;
        }
        // coefficient of |m+2j⟩: (z/2)^j / j! · √((m+2j)!/m!)
        let mut c = vm;
        let mut level = m;
        out[level] += c;
        let mut j = 0usize;
        while level + 2 < dim {
            j += 1;
            level += 2;
            c *= half / j as f64 * (((level - 1) * level) as f64).sqrt();
            out[level] += c;
        }
    }
    out
}

impl GaussianPolynomial {
    /// Splits `ψ = e^{ζK₊}q`; `q` keeps levels `0..=degree`. Also returns the
    /// relative weight of the discarded levels of `e^{−ζK₊}ψ`.
    pub fn from_fock(psi: &StateVector, zeta: C64, degree: usize) -> Result<(Self, f64)> {
        if degree >= psi.dim() {
            return Err(Error::Shape { left: degree, right: psi.dim() });
        }
        let full = exp_k_plus(-zeta, &psi.amplitudes(), psi.dim());
        let total: f64 = full.iter().map(|z| z.norm_sqr()).sum();
        let dropped: f64 = full[degree + 1..].iter().map(|z| z.norm_sqr()).sum();
        let rel = if total > 0.0 { (dropped / total).sqrt() } else { 0.0 };
        Ok((Self { zeta, q: full[..=degree].to_vec() }, rel))
    }

    pub fn to_fock(&self, dim: usize) -> Result<StateVector> {
        StateVector::from_vec(exp_k_plus(self.zeta, &self.q, dim))
    }

    fn rate(&self, c: &HamiltonianCoefficients) -> (C64, Vec<C64>) {
        let (om, al, be) = (c.omega, c.alpha, c.beta);
        let z = self.zeta;
        let dz = -I * 2.0 * (be + om * z + al * z * z);
        let diag = om + al * z * 2.0;
        let d = self.q.len();
        let mut dq = vec![C64::new(0.0, 0.0); d];
        for m in 0..d {
            let mut s = diag * (m as f64 + 0.5) * self.q[m];
            if m + 2 < d {
                s += al * (((m + 1) * (m + 2)) as f64).sqrt() * self.q[m + 2];
            }
            dq[m] = -I * s;
        }
        (dz, dq)
    }

    fn axpy(&self, h: f64, dz: C64, dq: &[C64]) -> Self {
        Self {
            zeta: self.zeta + dz * h,
            q: self.q.iter().zip(dq).map(|(a, b)| a + b * h).collect(),
        }
    }

    fn is_finite(&self) -> bool {
        self.zeta.is_finite() && self.q.iter().all(|z| z.is_finite())
    }
}

/// Trajectory of a [`GaussianPolynomial`] under a quadratic Hamiltonian.
#[derive(Clone, Debug)]
pub struct QuadraticPropagation {
    pub grid: TimeGrid,
    pub states: Vec<GaussianPolynomial>,
}

impl QuadraticPropagation {
    pub fn fock_state(&self, k: usize, dim: usize) -> Result<StateVector> {
        self.states[k].to_fock(dim)
    }
}

/// RK4 for `ζ̇ = −2i(β + ωζ + αζ²)`, `iq̇ = (ω + 2αζ)(N + 1/2)q + αa²q`.
/// `coeffs(j)` is sampled on the half-step lattice.
pub fn propagate_quadratic(
    coeffs: &dyn Fn(usize) -> HamiltonianCoefficients,
    init: GaussianPolynomial,
    grid: TimeGrid,
) -> Result<QuadraticPropagation> {
    let mut states = Vec::with_capacity(grid.len());
    let mut y = init;
    states.push(y.clone());
    let dt = grid.dt;
    for k in 0..grid.steps {
        let (c0, cm, c1) = (coeffs(2 * k), coeffs(2 * k + 1), coeffs(2 * k + 2));
        let (z1, q1) = y.rate(&c0);
        let (z2, q2) = y.axpy(0.5 * dt, z1, &q1).rate(&cm);
        let (z3, q3) = y.axpy(0.5 * dt, z2, &q2).rate(&cm);
        let (z4, q4) = y.axpy(dt, z3, &q3).rate(&c1);
        let dz = (z1 + z2 * 2.0 + z3 * 2.0 + z4) / 6.0;
        let dq: Vec<C64> = (0..y.q.len()).map(|m| (q1[m] + q2[m] * 2.0 + q3[m] * 2.0 + q4[m]) / 6.0).collect();
        y = y.axpy(dt, dz, &dq);
        if !y.is_finite() {
            return Err(Error::Instability { t: grid.time(k + 1) });
        }
        if y.zeta.norm() >= 1.0 {
            return Err(Error::NonNormalizable(format!(
                "|zeta| = {} at t = {}",
                y.zeta.norm(),
                grid.time(k + 1)
            )));
        }
        states.push(y.clone());
    }
    Ok(QuadraticPropagation { grid, states })
}

/// 4th-order central difference `(−f₊₂ + 8f₊₁ − 8f₋₁ + f₋₂)/(12h)`.
pub fn central_difference<T>(f: [&T; 4], h: f64, combine: impl Fn(&[(f64, &T)]) -> T) -> T {
    let s = 1.0 / (12.0 * h);
    combine(&[(-s, f[3]), (8.0 * s, f[2]), (-8.0 * s, f[1]), (s, f[0])])
}

fn stencil_ok(k: usize, reach: usize, len: usize) -> Result<()> {
    if k < reach || k + reach >= len {
        Err(Error::Stencil { index: k })
    } else {
        Ok(())
    }
}

/// `‖i·D_tψ − Hψ‖ / max(1, ‖Hψ‖)` at grid index `k` of `states`, over all
/// but the top `exclude_top` components.
pub fn schrodinger_residual(states: &[StateVector], h: &Operator, k: usize, dt: f64, exclude_top: usize) -> Result<f64> {
    stencil_ok(k, 2, states.len())?;
    let s = 1.0 / (12.0 * dt);
    let mut d = states[k - 2].scale(C64::new(s, 0.0));
    d.add_scaled(C64::new(-8.0 * s, 0.0), &states[k - 1]);
    d.add_scaled(C64::new(8.0 * s, 0.0), &states[k + 1]);
    d.add_scaled(C64::new(-s, 0.0), &states[k + 2]);
    let hpsi = apply(h, &states[k])?;
    let r = d.scale(I).sub(&hpsi);
    let keep = r.dim().saturating_sub(exclude_top);
    let head = |v: &StateVector| v.amplitudes()[..keep].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(head(&r) / head(&hpsi).max(1.0))
}

/// `ρ`, `ρ⁻¹` and `η` at one grid time, each holding the matrix elements of
/// the untruncated operator. Products of two full matrices are never formed.
#[derive(Clone, Debug)]
pub struct MetricOperators {
    pub rho: Operator,
    pub rho_inverse: Operator,
    pub eta: Operator,
}

impl MetricOperators {
    pub fn build(builder: &MetricBuilder, s: &MetricState) -> Result<Self> {
        let g = s.gauss()?;
        Ok(Self {
            rho: builder.rho(&g)?,
            rho_inverse: builder.rho_inverse_projected(&g)?,
            eta: builder.eta_projected(&g)?,
        })
    }

    /// `⟨ψ|η|ψ⟩`.
    pub fn eta_norm(&self, psi: &StateVector) -> Result<f64> {
        Ok(self.eta_inner(psi, psi)?.re)
    }

    /// `⟨a|η|b⟩`.
    pub fn eta_inner(&self, a: &StateVector, b: &StateVector) -> Result<C64> {
        Ok(a.inner(&apply(&self.eta, b)?))
    }
}

/// Sliding cache of metric operators along a coarse grid.
pub struct MetricWindow<'a> {
    trajectory: &'a MetricTrajectory,
    builder: MetricBuilder,
    cache: BTreeMap<usize, Rc<MetricOperators>>,
}

impl<'a> MetricWindow<'a> {
    pub fn new(trajectory: &'a MetricTrajectory, builder: MetricBuilder) -> Self {
        Self { trajectory, builder, cache: BTreeMap::new() }
    }

    pub fn trajectory(&self) -> &'a MetricTrajectory {
        self.trajectory
    }

    pub fn ops(&self) -> &OperatorSet {
        self.builder.ops()
    }

    pub fn builder(&self) -> &MetricBuilder {
        &self.builder
    }

    /// Operators at coarse index `k`; entries more than `2·RICHARDSON_REACH`
    /// behind `k` are evicted.
    pub fn at(&mut self, k: usize) -> Result<Rc<MetricOperators>> {
        if let Some(m) = self.cache.get(&k) {
            return Ok(m.clone());
        }
        let m = Rc::new(MetricOperators::build(&self.builder, &self.trajectory.sample(k).state)?);
        self.cache.insert(k, m.clone());
        let keep = k.saturating_sub(2 * RICHARDSON_REACH);
        self.cache = self.cache.split_off(&keep);
        Ok(m)
    }
}

fn weighted_sum(terms: &[(f64, &Operator)]) -> Operator {
    let mut acc = terms[0].1 * terms[0].0;
    for (c, op) in &terms[1..] {
        acc = &acc + &(*op * *c);
    }
    acc
}

/// `η̇` at coarse index `k`: 4th-order difference at `dt` and `2dt`,
/// combined by Richardson extrapolation.
pub fn eta_rate(window: &mut MetricWindow, k: usize) -> Result<Operator> {
    stencil_ok(k, RICHARDSON_REACH, window.trajectory().len())?;
    let dt = window.trajectory().grid().dt;
    let e: Vec<Rc<MetricOperators>> =
        [k - 4, k - 2, k - 1, k + 1, k + 2, k + 4].iter().map(|&i| window.at(i)).collect::<Result<_>>()?;
    let d_h = central_difference([&e[1].eta, &e[2].eta, &e[3].eta, &e[4].eta], dt, weighted_sum);
    let d_2h = central_difference([&e[0].eta, &e[1].eta, &e[4].eta, &e[5].eta], 2.0 * dt, weighted_sum);
    Ok(weighted_sum(&[(16.0 / 15.0, &d_h), (-1.0 / 15.0, &d_2h)]))
}

/// Interior-block norm of `H†η − ηH − iη̇`, over `max(1, ‖ηH‖)`. This is
/// `H† − ηHη⁻¹ − iη̇η⁻¹` multiplied through by `η`; `H` is banded, so every
/// interior entry is exact.
pub fn dyson_residual(
    coeffs: &dyn Fn(usize) -> HamiltonianCoefficients,
    window: &mut MetricWindow,
    k: usize,
    exclude_top: usize,
) -> Result<f64> {
    let eta_dot = eta_rate(window, k)?;
    let m = window.at(k)?;
    let h = hamiltonian_matrix(&coeffs(k), window.ops());
    let left = &h.adjoint() * &m.eta;
    let right = &m.eta * &h;
    let r = &(&left - &right) - &(&eta_dot * I);
    Ok(r.frobenius_norm(exclude_top) / right.frobenius_norm(exclude_top).max(1.0))
}

/// Interior-block norm of `∂ₜI^PH − i[I^PH, H]`, over `max(1, ‖i[I, H]‖)`.
/// `∂ₜI^PH` differences the invariant coefficients the same way as `η̇`.
pub fn invariant_residual(
    trajectory: &MetricTrajectory,
    coeffs: &dyn Fn(usize) -> HamiltonianCoefficients,
    ops: &OperatorSet,
    k: usize,
    exclude_top: usize,
) -> Result<f64> {
    stencil_ok(k, RICHARDSON_REACH, trajectory.len())?;
    let dt = trajectory.grid().dt;
    let d = |i: usize| {
        let c = InvariantCoefficients::from_state(&trajectory.sample(i).state);
        [c.delta1, c.delta2, c.delta3]
    };
    let p = [d(k - 4), d(k - 2), d(k - 1), d(k + 1), d(k + 2), d(k + 4)];
    let mut rate = [0.0; 3];
    for (c, r) in rate.iter_mut().enumerate() {
        let dh = (-p[4][c] + 8.0 * p[3][c] - 8.0 * p[2][c] + p[1][c]) / (12.0 * dt);
        let d2h = (-p[5][c] + 8.0 * p[4][c] - 8.0 * p[1][c] + p[0][c]) / (24.0 * dt);
        *r = (16.0 * dh - d2h) / 15.0;
    }
    let i_dot = InvariantCoefficients { delta1: rate[0], delta2: rate[1], delta3: rate[2] }.operator(ops);
    let inv = InvariantCoefficients::from_state(&trajectory.sample(k).state).operator(ops);
    let h = hamiltonian_matrix(&coeffs(k), ops);
    let flow = &commutator(&inv, &h)? * I;
    let r = &i_dot - &flow;
    Ok(r.frobenius_norm(exclude_top) / flow.frobenius_norm(exclude_top).max(1.0))
}

/// Hermitian image of `I^PH` with `ρ⁻¹` multiplied out: the larger of
/// `‖ρI − 2K₀ρ‖ / max(1, ‖2K₀ρ‖)` (image equals `2K₀`) and
/// `‖ηI − I†η‖ / max(1, ‖ηI‖)` (image is Hermitian), on the interior block.
pub fn hermitian_image_check(m: &MetricOperators, s: &MetricState, ops: &OperatorSet, exclude_top: usize) -> Result<f64> {
    let inv = InvariantCoefficients::from_state(s).operator(ops);
    let target = &(&ops.k_zero * 2.0) * &m.rho;
    let dist = frobenius_distance(&(&m.rho * &inv), &target, exclude_top)?
        / target.frobenius_norm(exclude_top).max(1.0);
    let ei = &m.eta * &inv;
    let anti = frobenius_distance(&ei, &(&inv.adjoint() * &m.eta), exclude_top)? / ei.frobenius_norm(exclude_top).max(1.0);
    Ok(dist.max(anti))
}

/// `φₙ = ρ⁻¹|n⟩` on the truncated basis.
pub fn eigenstate(m: &MetricOperators, n: usize) -> Result<StateVector> {
    StateVector::basis(m.rho.dim(), n).and_then(|e| apply(&m.rho_inverse, &e))
}

/// `⟨φₙ|I^PH|φₙ⟩ / ⟨φₙ|φₙ⟩`. `φₙ` is an eigenvector of `I^PH`, so any inner
/// product gives the eigenvalue; the Euclidean one is well conditioned.
pub fn rayleigh_quotient(m: &MetricOperators, invariant: &Operator, n: usize) -> Result<C64> {
    let phi = eigenstate(m, n)?;
    Ok(phi.inner(&apply(invariant, &phi)?) / phi.inner(&phi))
}

/// `⟨φₙ|ηI^PH|φₙ⟩ / ⟨φₙ|η|φₙ⟩`.
pub fn eta_rayleigh_quotient(m: &MetricOperators, invariant: &Operator, n: usize) -> Result<C64> {
    let phi = eigenstate(m, n)?;
    Ok(m.eta_inner(&phi, &apply(invariant, &phi)?)? / m.eta_inner(&phi, &phi)?)
}

/// `1 − |⟨a|η|b⟩| / (‖a‖_η‖b‖_η)`.
pub fn eta_overlap_defect(m: &MetricOperators, a: &StateVector, b: &StateVector) -> Result<f64> {
    let ab = m.eta_inner(a, b)?.norm();
    let na = m.eta_norm(a)?.sqrt();
    let nb = m.eta_norm(b)?.sqrt();
    Ok((1.0 - ab / (na * nb)).abs())
}

/// `‖a − b‖_η / ‖b‖_η`.
pub fn eta_relative_distance(m: &MetricOperators, a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok((m.eta_norm(&a.sub(b))? / m.eta_norm(b)?).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::build_operator_set;

    #[test]
    fn zero_hamiltonian_is_identity() {
        let psi = StateVector::from_vec(vec![C64::new(0.3, 0.1); 6]).unwrap();
        let grid = TimeGrid::new(0.1, 1e-3).unwrap();
        let r = propagate(&StaticHamiltonian(Operator::zeros(6)), &psi, grid, true).unwrap();
        assert_eq!(r.states.last().unwrap(), &psi);
        assert_eq!(r.convergence.unwrap().observed_order, None);
    }

    #[test]
    fn diagonal_evolution() {
        let ops = build_operator_set(8).unwrap();
        let h = &ops.k_zero * 2.0;
        let psi = StateVector::from_vec(vec![C64::new(1.0, 0.0); 8]).unwrap();
        let grid = TimeGrid::new(1.0, 1e-3).unwrap();
        let r = propagate(&StaticHamiltonian(h), &psi, grid, false).unwrap();
        let last = r.states.last().unwrap();
        for n in 0..8 {
            let expected = (-I * (n as f64 + 0.5)).exp();
            assert!((last.get(n) - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let h = Operator::from_diagonal(&[C64::new(0.0, 50.0); 4]);
        let psi = StateVector::basis(4, 0).unwrap();
        let err = propagate(&StaticHamiltonian(h), &psi, TimeGrid::new(1.0, 1e-3).unwrap(), false).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }));
    }

    #[test]
    fn gaussian_polynomial_round_trip() {
        let g = GaussianPolynomial { zeta: C64::new(0.3, -0.2), q: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.5)] };
        let psi = g.to_fock(32).unwrap();
        let (back, dropped) = GaussianPolynomial::from_fock(&psi, g.zeta, 1).unwrap();
        assert!(dropped < 1e-14);
        for (a, b) in back.q.iter().zip(&g.q) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn stencil_errors() {
        let states = vec![StateVector::zeros(4); 5];
        let h = Operator::zeros(4);
        assert!(matches!(schrodinger_residual(&states, &h, 1, 0.1, 0), Err(Error::Stencil { index: 1 })));
        assert!(schrodinger_residual(&states, &h, 2, 0.1, 2).is_ok());
    }
}
