//! Position-space eigenfunctions of the invariant, their weighted Gram
//! matrix, and the canonical `(x, p)` form of `I^PH`.

use crate::error::{Error, Result};
use crate::fock::{Operator, OperatorSet, StateVector, C64, I};
use crate::swanson::MetricState;

pub const MAX_HERMITE_ORDER: usize = 30;
pub const DEFAULT_POINTS: usize = 2001;
/// Eigenfunctions must fall below this at the grid edges.
pub const EDGE_DECAY: f64 = 1e-12;
const WIDTHS_COVERED: f64 = 8.0;
const POINTS_PER_WIDTH: f64 = 20.0;

/// Physicists' Hermite polynomial.
pub fn hermite(n: usize, y: f64) -> Result<f64> {
    if n > MAX_HERMITE_ORDER {
        return Err(Error::Domain(format!("Hermite order {n} exceeds {MAX_HERMITE_ORDER}")));
    }
    let (mut prev, mut cur) = (1.0, 2.0 * y);
    if n == 0 {
        return Ok(prev);
    }
    for k in 1..n {
        let next = 2.0 * y * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Sign pattern of `(Φ − χ, 1 − Φ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    BothPositive,
    BothNegative,
    Mixed,
    Degenerate,
}

impl Regime {
    pub fn of(s: &MetricState) -> Self {
        let a = s.phi_cap - s.chi();
        let b = 1.0 - s.phi_cap;
        if a == 0.0 || b == 0.0 {
            Regime::Degenerate
        } else if a > 0.0 && b > 0.0 {
            Regime::BothPositive
        } else if a < 0.0 && b < 0.0 {
            Regime::BothNegative
        } else {
            Regime::Mixed
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::BothPositive => "both_positive",
            Regime::BothNegative => "both_negative",
            Regime::Mixed => "mixed",
            Regime::Degenerate => "degenerate",
        }
    }
}

/// Gaussian data of `φₙ^H`: `φₙ ∝ exp(−exp_coeff·x²/2)·Hₙ(√width_coeff·x)`
/// with weight `exp(weight_coeff·x²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianShape {
    pub width_coeff: f64,
    pub exp_coeff: f64,
    pub weight_coeff: f64,
}

impl GaussianShape {
    pub fn from_state(s: &MetricState) -> Result<Self> {
        let (phi, vt, chi) = (s.phi_cap, s.vtheta_zero, s.chi());
        let d = (phi - chi) * (1.0 - phi);
        let width_coeff = vt / d;
        if !(width_coeff > 0.0) || !width_coeff.is_finite() {
            return Err(Error::NonNormalizable(format!(
                "width coefficient {width_coeff} at (Phi, vtheta0) = ({phi}, {vt}), regime {}",
                Regime::of(s).name()
            )));
        }
        Ok(Self {
            width_coeff,
            exp_coeff: (vt + phi * (chi - 1.0)) / d,
            weight_coeff: phi * (chi - 1.0) / d,
        })
    }

    /// `exp_coeff − weight_coeff − width_coeff`; zero up to rounding.
    pub fn consistency_residual(&self) -> f64 {
        self.exp_coeff - self.weight_coeff - self.width_coeff
    }

    fn normalization(&self, n: usize) -> f64 {
        let mut norm = self.width_coeff.sqrt() / std::f64::consts::PI.sqrt();
        for k in 1..=n {
            norm /= 2.0 * k as f64;
        }
        norm.sqrt()
    }
}

/// `φₙ^H(x)`.
pub fn eigenfunction(n: usize, x: f64, s: &MetricState) -> Result<C64> {
    let shape = GaussianShape::from_state(s)?;
    eigenfunction_with(&shape, n, x)
}

pub fn eigenfunction_with(shape: &GaussianShape, n: usize, x: f64) -> Result<C64> {
    let h = hermite(n, shape.width_coeff.sqrt() * x)?;
    Ok(C64::new(shape.normalization(n) * (-0.5 * shape.exp_coeff * x * x).exp() * h, 0.0))
}

/// Uniform grid symmetric about zero with an odd number of points.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionGrid {
    points: Vec<f64>,
    spacing: f64,
}

impl PositionGrid {
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        if !(extent > 0.0) || !extent.is_finite() || points < 3 || points.is_multiple_of(2) {
            return Err(Error::QuadratureDomain(format!(
                "grid needs a positive extent and an odd point count >= 3, got ({extent}, {points})"
            )));
        }
        let spacing = 2.0 * extent / (points - 1) as f64;
        let half = (points - 1) / 2;
        let points = (0..points).map(|i| (i as f64 - half as f64) * spacing).collect();
        Ok(Self { points, spacing })
    }

    /// Covers `8/√width_coeff`, extends until every `φₙ` with `n ≤ n_max`
    /// drops below [`EDGE_DECAY`], and keeps 20 points per narrowest width.
    pub fn for_shape(shape: &GaussianShape, n_max: usize) -> Result<Self> {
        if n_max > MAX_HERMITE_ORDER {
            return Err(Error::Domain(format!("n_max {n_max} exceeds {MAX_HERMITE_ORDER}")));
        }
        let mut extent = WIDTHS_COVERED / shape.width_coeff.sqrt();
        if shape.exp_coeff <= 0.0 {
            return Err(Error::NonNormalizable(format!(
                "eigenfunctions do not decay: exp coefficient {}",
                shape.exp_coeff
            )));
        }
        let edge = |x: f64| -> Result<f64> {
            let mut worst = 0.0f64;
            for n in 0..=n_max {
                worst = worst.max(eigenfunction_with(shape, n, x)?.norm());
            }
            Ok(worst)
        };
        while edge(extent)? >= EDGE_DECAY {
            extent *= 1.1;
        }
        // Oscillation scale of Hₙ(√w x) is about 1/√(w(2n+1)); the envelope's is 1/√exp.
        let fine = (shape.width_coeff * (2 * n_max + 1) as f64).max(shape.exp_coeff).sqrt();
        let needed = (2.0 * extent * fine * POINTS_PER_WIDTH).ceil() as usize + 1;
        let mut points = needed.max(DEFAULT_POINTS);
        if points.is_multiple_of(2) {
            points += 1;
        }
        Self::new(extent, points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn extent(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Composite Simpson weights.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * self.spacing / 3.0
            })
            .collect()
    }
}

/// Weight used in the Gram matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    /// `exp(weight_coeff·x²)`.
    Eta,
    /// Plain `L²` product.
    Dropped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramReport {
    pub matrix: Vec<Vec<f64>>,
    pub max_off_diagonal: f64,
    pub max_diagonal_defect: f64,
}

impl GramReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_off_diagonal.max(self.max_diagonal_defect)
    }
}

/// `∫φₘ* w φₙ dx` for `m, n ≤ n_max` by composite Simpson.
pub fn orthonormality_matrix(n_max: usize, s: &MetricState, grid: &PositionGrid, weight: Weight) -> Result<GramReport> {
    let shape = GaussianShape::from_state(s)?;
    let w = |x: f64| match weight {
        Weight::Eta => (shape.weight_coeff * x * x).exp(),
        Weight::Dropped => 1.0,
    };
    let xs = grid.points();
    let values: Vec<Vec<f64>> = (0..=n_max)
        .map(|n| xs.iter().map(|&x| eigenfunction_with(&shape, n, x).map(|z| z.re)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    // Coverage: the integrand must have died out at both edges.
    let last = xs.len() - 1;
    for (n, v) in values.iter().enumerate() {
        let peak = v.iter().zip(xs).map(|(f, &x)| f * f * w(x)).fold(0.0, f64::max);
        for i in [0, last] {
            let edge = v[i] * v[i] * w(xs[i]);
            if !(edge <= EDGE_DECAY * peak.max(1.0)) {
                return Err(Error::QuadratureDomain(format!(
                    "integrand for n = {n} is {edge:e} at the grid edge x = {}",
                    xs[i]
                )));
            }
        }
    }
    let weights = grid.simpson_weights();
    let wx: Vec<f64> = xs.iter().zip(&weights).map(|(&x, q)| q * w(x)).collect();
    let mut matrix = vec![vec![0.0; n_max + 1]; n_max + 1];
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for m in 0..=n_max {
        for n in 0..=m {
            let g: f64 = (0..xs.len()).map(|i| values[m][i] * values[n][i] * wx[i]).sum();
            matrix[m][n] = g;
            matrix[n][m] = g;
            if m == n {
                diag = diag.max((g - 1.0).abs());
            } else {
                off = off.max(g.abs());
            }
        }
    }
    Ok(GramReport { matrix, max_off_diagonal: off, max_diagonal_defect: diag })
}

/// `(1/2ϑ₀){(Φ−χ)(1−Φ)p² − iΦ(χ−1)(px+xp) − (Φ+χ)(1+Φ)x²}`.
pub fn canonical_invariant(s: &MetricState, dim: usize) -> Result<Operator> {
    Ok(canonical_invariant_with(s, &crate::fock::build_operator_set(dim)?))
}

pub fn canonical_invariant_with(s: &MetricState, ops: &OperatorSet) -> Operator {
    let (phi, vt, chi) = (s.phi_cap, s.vtheta_zero, s.chi());
    let (x, p) = (&ops.x, &ops.p);
    let p2 = p * p;
    let x2 = x * x;
    let sym = &(p * x) + &(x * p);
    let scale = 1.0 / (2.0 * vt);
    let a = &p2 * ((phi - chi) * (1.0 - phi) * scale);
    let b = &sym * (-I * (phi * (chi - 1.0) * scale));
    let c = &x2 * (-(phi + chi) * (1.0 + phi) * scale);
    &(&a + &b) + &c
}

/// Oscillator eigenfunctions `ψ₀..ψ_{count−1}` at `x`.
pub fn oscillator_functions(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if count > 1 {
        out.push(std::f64::consts::SQRT_2 * x * out[0]);
    }
    for k in 1..count.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// `Σₖ ψₖ(x)·vₖ`.
pub fn to_position(v: &StateVector, xs: &[f64]) -> Vec<C64> {
    let amps = v.amplitudes();
    xs.iter()
        .map(|&x| oscillator_functions(amps.len(), x).iter().zip(&amps).map(|(f, a)| a * *f).sum())
        .collect()
}

/// Comparison of a Fock-basis state with `φₙ^H` on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossRepresentation {
    /// Least-squares factor `c` in `state ≈ c·φₙ^H`.
    pub factor: C64,
    /// `max |state − c·φₙ^H|` with the fitted `c`.
    pub fitted_residual: f64,
    /// Same with `c` replaced by `c/|c|`.
    pub unit_modulus_residual: f64,
}

pub fn cross_representation(state: &StateVector, n: usize, s: &MetricState, xs: &[f64]) -> Result<CrossRepresentation> {
    let shape = GaussianShape::from_state(s)?;
    let f = to_position(state, xs);
    let g: Vec<C64> = xs.iter().map(|&x| eigenfunction_with(&shape, n, x)).collect::<Result<_>>()?;
    let gg: f64 = g.iter().map(|z| z.norm_sqr()).sum();
    if gg == 0.0 {
        return Err(Error::QuadratureDomain("eigenfunction vanishes on the sample points".into()));
    }
    let gf: C64 = g.iter().zip(&f).map(|(a, b)| a.conj() * b).sum();
    let factor = gf / gg;
    let resid = |c: C64| f.iter().zip(&g).map(|(a, b)| (a - c * b).norm()).fold(0.0, f64::max);
    let unit = if factor.norm() > 0.0 { factor / factor.norm() } else { C64::new(1.0, 0.0) };
    Ok(CrossRepresentation { factor, fitted_residual: resid(factor), unit_modulus_residual: resid(unit) })
}

/// `|c|` relating `ρ⁻¹|n⟩` to `φₙ^H`: `((1−Φ)/(Φ−χ))^{(2n+1)/4}`.
pub fn cross_representation_modulus(n: usize, s: &MetricState) -> f64 {
    ((1.0 - s.phi_cap) / (s.phi_cap - s.chi())).powf((2 * n + 1) as f64 / 4.0)
}
