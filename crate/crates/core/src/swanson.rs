//! The time-dependent Swanson Hamiltonian
//! `H = 2ωK₀ + 2αK₋ + 2βK₊` and the quasi-Hermiticity algebra of its
//! Lewis–Riesenfeld invariant under the Gauss-factorized Dyson map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Operator, OperatorSet, C64, I};
use crate::metric::GaussParams;

/// `|Φ² + χ|` below this is treated as the constraint singularity.
pub const CONSTRAINT_FLOOR: f64 = 1e-12;

/// Complex Hamiltonian coefficients at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianCoefficients {
    pub omega: C64,
    pub alpha: C64,
    pub beta: C64,
}

impl HamiltonianCoefficients {
    pub fn new(omega: C64, alpha: C64, beta: C64) -> Self {
        Self { omega, alpha, beta }
    }

    /// Hermitian oscillator `ω(a†a + 1/2)`.
    pub fn harmonic(omega: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self { omega: C64::new(omega, 0.0), alpha: z, beta: z }
    }

    /// `H` is Hermitian iff `ω` is real and `α = β*`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.omega.im.abs() <= tol && (self.alpha - self.beta.conj()).norm() <= tol
    }

    pub fn is_finite(&self) -> bool {
        [self.omega, self.alpha, self.beta].iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Metric state `(Φ, ϑ₀)`; `χ = Φ² − ϑ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricState {
    pub phi_cap: f64,
    pub vtheta_zero: f64,
}

impl MetricState {
    pub fn new(phi_cap: f64, vtheta_zero: f64) -> Result<Self> {
        if !phi_cap.is_finite() || !vtheta_zero.is_finite() || vtheta_zero <= 0.0 {
            return Err(Error::MetricDomain(format!(
                "need finite Phi and vtheta0 > 0, got ({phi_cap}, {vtheta_zero})"
            )));
        }
        Ok(Self { phi_cap, vtheta_zero })
    }

    pub fn chi(&self) -> f64 {
        self.phi_cap * self.phi_cap - self.vtheta_zero
    }

    pub fn gauss(&self) -> Result<GaussParams> {
        GaussParams::from_metric(self.phi_cap, self.vtheta_zero)
    }

    /// `Φ² + χ = 2Φ² − ϑ₀`, the denominator of the constraints.
    pub fn constraint_denominator(&self) -> f64 {
        2.0 * self.phi_cap * self.phi_cap - self.vtheta_zero
    }

    /// `|Φ/χ|`. The states `ρ⁻¹|n⟩` are square-integrable iff this is below 1.
    pub fn squeeze_ratio(&self) -> f64 {
        (self.phi_cap / self.chi()).abs()
    }

    pub fn is_normalizable(&self) -> bool {
        self.squeeze_ratio() < 1.0
    }
}

/// Real-part profiles plus the free imaginary parts in generator mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeParameters {
    pub re_omega: f64,
    pub im_omega: f64,
    pub im_beta: f64,
}

/// `I = δ₁(a†a + 1/2) + δ₂a² + δ₃a†² = 2δ₁K₀ + 2δ₂K₋ + 2δ₃K₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantCoefficients {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl InvariantCoefficients {
    /// The pseudo-Hermitian invariant of a metric state.
    pub fn from_state(s: &MetricState) -> Self {
        let (phi, t0, chi) = (s.phi_cap, s.vtheta_zero, s.chi());
        Self {
            delta1: -(phi * phi + chi) / t0,
            delta2: -chi * phi / t0,
            delta3: -phi / t0,
        }
    }

    pub fn operator(&self, ops: &OperatorSet) -> Operator {
        let z = &(&ops.k_zero * (2.0 * self.delta1)) + &(&ops.k_minus * (2.0 * self.delta2));
        &z + &(&ops.k_plus * (2.0 * self.delta3))
    }

    /// `−[δ₁(Φ² + χ) − 4δ₃χΦ]/ϑ₀`; equals 1 for the invariant of `s`.
    pub fn normalization(&self, s: &MetricState) -> f64 {
        let (phi, t0, chi) = (s.phi_cap, s.vtheta_zero, s.chi());
        -(self.delta1 * (phi * phi + chi) - 4.0 * self.delta3 * chi * phi) / t0
    }
}

/// `iρ̇ρ⁻¹ − ρHρ⁻¹ = 2WK₀ + 2UK₋ + 2VK₊`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformedCoefficients {
    pub w: C64,
    pub u: C64,
    pub v: C64,
}

pub fn hamiltonian_matrix(c: &HamiltonianCoefficients, ops: &OperatorSet) -> Operator {
    let h = &(&ops.k_zero * (c.omega * 2.0)) + &(&ops.k_minus * (c.alpha * 2.0));
    &h + &(&ops.k_plus * (c.beta * 2.0))
}

/// Completes `(Reω, Imω, Imβ)` to full coefficients satisfying the
/// quasi-Hermiticity constraints for the metric state `s`.
pub fn derive_constrained_coeffs(s: &MetricState, p: &FreeParameters) -> Result<HamiltonianCoefficients> {
    let denom = s.constraint_denominator();
    if denom.abs() <= CONSTRAINT_FLOOR || !denom.is_finite() {
        return Err(Error::ConstraintSingularity { value: denom });
    }
    let (phi, chi) = (s.phi_cap, s.chi());
    let re_beta = phi * p.re_omega / denom;
    let re_alpha = chi * re_beta;
    let im_alpha = phi * p.im_omega - chi * p.im_beta;
    Ok(HamiltonianCoefficients {
        omega: C64::new(p.re_omega, p.im_omega),
        alpha: C64::new(re_alpha, im_alpha),
        beta: C64::new(re_beta, p.im_beta),
    })
}

/// Residuals of the three real-part relations (zero when the constraints hold):
/// `χReβ − Reα`, `(Φ² + χ)Reα − χΦReω`, `ΦReω − (Φ² + χ)Reβ`.
pub fn relation_residuals(s: &MetricState, c: &HamiltonianCoefficients) -> [f64; 3] {
    let (phi, chi) = (s.phi_cap, s.chi());
    let d = phi * phi + chi;
    [
        chi * c.beta.re - c.alpha.re,
        d * c.alpha.re - chi * phi * c.omega.re,
        phi * c.omega.re - d * c.beta.re,
    ]
}

/// Reduced metric evolution `(Φ̇, ϑ̇₀) = (2ϑ₀Imβ, 2ϑ₀(2ΦImβ − Imω))`.
pub fn metric_rhs(s: &MetricState, im_omega: f64, im_beta: f64) -> (f64, f64) {
    let t0 = s.vtheta_zero;
    (2.0 * t0 * im_beta, 2.0 * t0 * (2.0 * s.phi_cap * im_beta - im_omega))
}

/// Metric derivatives demanded by `U = V = 0` for arbitrary coefficients,
/// before the constraint on `Imα` is substituted:
/// `Φ̇ = 2(Imα + Φ²Imβ − ΦImω)`,
/// `ϑ̇₀ = (2ϑ₀/Φ)[Imα + (2Φ² + χ)Imβ − 2ΦImω]`.
///
/// The second form needs `Φ ≠ 0`.
pub fn invariance_rates(s: &MetricState, c: &HamiltonianCoefficients) -> Result<(f64, f64)> {
    let (phi, t0, chi) = (s.phi_cap, s.vtheta_zero, s.chi());
    if phi == 0.0 {
        return Err(Error::Domain("the raw vtheta0 rate divides by Phi = 0".into()));
    }
    let (ia, ib, iw) = (c.alpha.im, c.beta.im, c.omega.im);
    let dphi = 2.0 * (ia + phi * phi * ib - phi * iw);
    let dt0 = 2.0 * t0 / phi * (ia + (2.0 * phi * phi + chi) * ib - 2.0 * phi * iw);
    Ok((dphi, dt0))
}

/// `W, U, V` from the unsimplified expressions, given metric derivatives.
pub fn wuv_coefficients(
    s: &MetricState,
    c: &HamiltonianCoefficients,
    dphi: f64,
    dvtheta_zero: f64,
) -> TransformedCoefficients {
    let (phi, t0, chi) = (s.phi_cap, s.vtheta_zero, s.chi());
    let (om, al, be) = (c.omega, c.alpha, c.beta);
    let half_i = I * 0.5;
    let w = (om * (phi * phi + chi) - (al + be * chi) * (2.0 * phi)
        - half_i * (dvtheta_zero - 2.0 * phi * dphi))
        / t0;
    let u = (om * phi - al - be * (phi * phi) + half_i * dphi) / t0;
    let v = (om * (chi * phi) - al * (phi * phi) - be * (chi * chi)
        + half_i * (t0 * dphi + phi * phi * dphi - phi * dvtheta_zero))
        / t0;
    TransformedCoefficients { w, u, v }
}

/// `W` after the constraints and the invariance rates are substituted:
/// `(1/ϑ₀)[Reω(Φ² + χ) − 4ΦReα] − (i/Φ)[Imα + χImβ − ΦImω]`.
pub fn simplified_w(s: &MetricState, c: &HamiltonianCoefficients) -> Result<C64> {
    let (phi, t0, chi) = (s.phi_cap, s.vtheta_zero, s.chi());
    if phi == 0.0 {
        return Err(Error::Domain("simplified W divides by Phi = 0".into()));
    }
    let re = (c.omega.re * (phi * phi + chi) - 4.0 * phi * c.alpha.re) / t0;
    let im = -(c.alpha.im + chi * c.beta.im - phi * c.omega.im) / phi;
    Ok(C64::new(re, im))
}

/// `I^PH = −(2/ϑ₀)[(Φ² + χ)K₀ + χΦK₋ + ΦK₊]`.
pub fn invariant_ph(s: &MetricState, ops: &OperatorSet) -> Operator {
    InvariantCoefficients::from_state(s).operator(ops)
}

/// Time derivative of `I^PH` along a metric trajectory.
pub fn invariant_ph_rate(s: &MetricState, dphi: f64, dvtheta_zero: f64, ops: &OperatorSet) -> Operator {
    let (phi, t0) = (s.phi_cap, s.vtheta_zero);
    let chi = s.chi();
    let dchi = 2.0 * phi * dphi - dvtheta_zero;
    // δ = f/ϑ₀ ⇒ δ̇ = (ḟ − f ϑ̇₀/ϑ₀)/ϑ₀
    let rate = |f: f64, df: f64| (df - f * dvtheta_zero / t0) / t0;
    let d1 = rate(-(phi * phi + chi), -(2.0 * phi * dphi + dchi));
    let d2 = rate(-chi * phi, -(dchi * phi + chi * dphi));
    let d3 = rate(-phi, -dphi);
    InvariantCoefficients { delta1: d1, delta2: d2, delta3: d3 }.operator(ops)
}
