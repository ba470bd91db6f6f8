//! Time-dependent Dyson map `ρ` and metric `η = ρ†ρ` built from SU(1,1)
//! Gauss-factorization parameters.
//!
//! The metric is the exponential of `2εK₀ + 2μK₋ + 2μK₊` (real `μ`), held in
//! normal-ordered form `exp[ϑ₊K₊]·exp[ln ϑ₀ K₀]·exp[ϑ₋K₋]`. The factored form
//! is the only one built here; it has an exact analytic inverse with the
//! factors reversed and the parameters negated.

use crate::error::{Error, Result};
use crate::fock::{build_operator_set, diagonal_power, nilpotent_exp, Operator, OperatorSet, C64};

/// Below this `|θ²|` the even functions of `θ` are summed as series.
const SERIES_CUTOFF: f64 = 1e-6;
const SERIES_TERMS: usize = 8;
const DENOMINATOR_FLOOR: f64 = 1e-14;

/// Unfactored generator data `(ε, μ, θ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Generator {
    pub epsilon: f64,
    pub mu: f64,
    pub theta_sq: f64,
}

/// Normal-ordered factorization data of the metric.
///
/// `ϑ₊ = ϑ₋ = −Φ` and `ϑ₀ = Φ² − χ` always hold; `generator` is present when
/// the parameters were built from (or inverted to) `(ε, μ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussParams {
    pub vtheta_plus: f64,
    pub vtheta_zero: f64,
    pub vtheta_minus: f64,
    pub chi: f64,
    pub phi_cap: f64,
    pub generator: Option<Generator>,
}

/// `(cosh θ, sinh θ / θ)` as even analytic functions of `θ²`.
pub fn even_cosh_sinhc(theta_sq: f64) -> (f64, f64) {
    if theta_sq.abs() < SERIES_CUTOFF {
        let mut c = 0.0;
        let mut s = 0.0;
        let mut pow = 1.0;
        let mut fact_even = 1.0; // (2k)!
        for k in 0..SERIES_TERMS {
            if k > 0 {
                pow *= theta_sq;
                fact_even *= (2 * k - 1) as f64 * (2 * k) as f64;
            }
            c += pow / fact_even;
            s += pow / (fact_even * (2 * k + 1) as f64);
        }
        (c, s)
    } else if theta_sq > 0.0 {
        let t = theta_sq.sqrt();
        (t.cosh(), t.sinh() / t)
    } else {
        let t = (-theta_sq).sqrt();
        (t.cos(), t.sin() / t)
    }
}

impl GaussParams {
    /// Parameters for a metric state `(Φ, ϑ₀)`, without a generator preimage.
    pub fn from_metric(phi_cap: f64, vtheta_zero: f64) -> Result<Self> {
        if !(vtheta_zero > 0.0) || !vtheta_zero.is_finite() || !phi_cap.is_finite() {
            return Err(Error::MetricDomain(format!(
                "need finite Phi and vtheta0 > 0, got ({phi_cap}, {vtheta_zero})"
            )));
        }
        Ok(Self {
            vtheta_plus: -phi_cap,
            vtheta_zero,
            vtheta_minus: -phi_cap,
            chi: phi_cap * phi_cap - vtheta_zero,
            phi_cap,
            generator: None,
        })
    }

    pub fn identity() -> Self {
        Self {
            vtheta_plus: 0.0,
            vtheta_zero: 1.0,
            vtheta_minus: 0.0,
            chi: -1.0,
            phi_cap: 0.0,
            generator: Some(Generator { epsilon: 0.0, mu: 0.0, theta_sq: 0.0 }),
        }
    }

    /// `ϑ₀ − (Φ² − χ)`; zero up to rounding by construction.
    pub fn gauss_identity_residual(&self) -> f64 {
        self.vtheta_zero - (self.phi_cap * self.phi_cap - self.chi)
    }

    /// `(Φ² + χ)² − 4χΦ² − ϑ₀²`.
    pub fn normalization_residual(&self) -> f64 {
        let p2 = self.phi_cap * self.phi_cap;
        (p2 + self.chi).powi(2) - 4.0 * self.chi * p2 - self.vtheta_zero.powi(2)
    }
}

pub fn gauss_params(epsilon: f64, mu: f64) -> Result<GaussParams> {
    let theta_sq = epsilon * epsilon - 4.0 * mu * mu;
    let (c, s) = even_cosh_sinhc(theta_sq);
    let denom = c - epsilon * s;
    if !denom.is_finite() || denom.abs() < DENOMINATOR_FLOOR {
        return Err(Error::SingularMetric(format!(
            "theta*cosh(theta) - eps*sinh(theta) vanishes at (eps, mu) = ({epsilon}, {mu})"
        )));
    }
    let vtheta = 2.0 * mu * s / denom;
    let vtheta_zero = 1.0 / (denom * denom);
    if !(vtheta_zero > 0.0) || !vtheta_zero.is_finite() {
        return Err(Error::MetricDomain(format!("vtheta0 = {vtheta_zero} is not positive")));
    }
    let chi = -(c + epsilon * s) / denom;
    Ok(GaussParams {
        vtheta_plus: vtheta,
        vtheta_zero,
        vtheta_minus: vtheta,
        chi,
        phi_cap: -vtheta,
        generator: Some(Generator { epsilon, mu, theta_sq }),
    })
}

/// Principal-branch `(ε, μ)` read off `ρ` in the 2×2 representation, where
/// the generator `G` obeys `G² = θ²`, so `tr ρ = 2cosh θ` and
/// `G = (ρ − cosh θ)/(sinh θ/θ)`.
fn principal_generator(phi_cap: f64, vtheta_zero: f64) -> Option<[f64; 2]> {
    let m = NormalOrder::rho(&GaussParams::from_metric(phi_cap, vtheta_zero).ok()?).matrix();
    let half = 0.5 * (m[0][0] + m[1][1]);
    let theta_sq = if half >= 1.0 {
        half.acosh().powi(2)
    } else if half > -1.0 {
        -half.acos().powi(2)
    } else {
        return None;
    };
    let (c, s) = even_cosh_sinhc(theta_sq);
    if !(s > 0.0) {
        return None;
    }
    Some([(m[0][0] - c) / s, m[0][1] / (2.0 * s)])
}

/// Newton inversion of `(ε, μ) ↦ (Φ, ϑ₀)`, started from the principal branch.
pub fn invert_gauss_params(phi_cap: f64, vtheta_zero: f64) -> Result<(f64, f64)> {
    if !(vtheta_zero > 0.0) {
        return Err(Error::MetricDomain(format!("vtheta0 = {vtheta_zero} is not positive")));
    }
    let target = [phi_cap, vtheta_zero.ln()];
    // Work with ln ϑ₀, which is close to linear in ε.
    let eval = |e: f64, m: f64| -> Option<[f64; 2]> {
        let g = gauss_params(e, m).ok()?;
        Some([g.phi_cap - target[0], g.vtheta_zero.ln() - target[1]])
    };
    let start = principal_generator(phi_cap, vtheta_zero)
        .filter(|x| eval(x[0], x[1]).is_some())
        .unwrap_or([0.5 * vtheta_zero.ln(), -0.5 * phi_cap]);
    let mut x = start;
    let mut f = eval(x[0], x[1]).ok_or_else(|| Error::NoPreimage("bad initial guess".into()))?;
    for _ in 0..100 {
        let res = f[0].hypot(f[1]);
        if res <= 1e-12 {
            return Ok((x[0], x[1]));
        }
        let h = 1e-6;
        let fe_p = eval(x[0] + h, x[1]);
        let fe_m = eval(x[0] - h, x[1]);
        let fm_p = eval(x[0], x[1] + h);
        let fm_m = eval(x[0], x[1] - h);
        let (Some(fe_p), Some(fe_m), Some(fm_p), Some(fm_m)) = (fe_p, fe_m, fm_p, fm_m) else {
            break;
        };
        let j = [
            [(fe_p[0] - fe_m[0]) / (2.0 * h), (fm_p[0] - fm_m[0]) / (2.0 * h)],
            [(fe_p[1] - fe_m[1]) / (2.0 * h), (fm_p[1] - fm_m[1]) / (2.0 * h)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let dx = [
            (j[1][1] * f[0] - j[0][1] * f[1]) / det,
            (-j[1][0] * f[0] + j[0][0] * f[1]) / det,
        ];
        // Backtrack until the residual decreases.
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = [x[0] - step * dx[0], x[1] - step * dx[1]];
            if let Some(fc) = eval(cand[0], cand[1]) {
                if fc[0].hypot(fc[1]) < res {
                    x = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = gauss_params(x[0], x[1]).ok();
    match g {
        Some(g) if (g.phi_cap - phi_cap).hypot(g.vtheta_zero - vtheta_zero) <= 1e-10 => Ok((x[0], x[1])),
        _ => Err(Error::NoPreimage(format!(
            "Newton did not reach (Phi, vtheta0) = ({phi_cap}, {vtheta_zero})"
        ))),
    }
}

/// Which su(1,1) generator to conjugate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KComponent {
    Plus,
    Zero,
    Minus,
}

/// Builds `ρ`, `ρ⁻¹` and `η` for one truncation dimension, reusing the
/// generator matrices across calls.
#[derive(Clone, Debug)]
pub struct MetricBuilder {
    ops: OperatorSet,
}

impl MetricBuilder {
    pub fn new(dim: usize) -> Result<Self> {
        Ok(Self { ops: build_operator_set(dim)? })
    }

    pub fn from_ops(ops: OperatorSet) -> Self {
        Self { ops }
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn check(g: &GaussParams) -> Result<()> {
        if !(g.vtheta_zero > 0.0) || !g.vtheta_zero.is_finite() {
            return Err(Error::MetricDomain(format!("vtheta0 = {} is not positive", g.vtheta_zero)));
        }
        if !g.vtheta_plus.is_finite() || !g.vtheta_minus.is_finite() {
            return Err(Error::MetricDomain("non-finite Gauss parameters".into()));
        }
        Ok(())
    }

    pub fn rho(&self, g: &GaussParams) -> Result<Operator> {
        Self::check(g)?;
        let lower = nilpotent_exp(&(&self.ops.k_plus * g.vtheta_plus), 2)?;
        let middle = diagonal_power(g.vtheta_zero, &self.ops.k_zero)?;
        let upper = nilpotent_exp(&(&self.ops.k_minus * g.vtheta_minus), 2)?;
        Ok(&lower * &scale_rows(&upper, &middle))
    }

    pub fn rho_inverse(&self, g: &GaussParams) -> Result<Operator> {
        Self::check(g)?;
        let upper = nilpotent_exp(&(&self.ops.k_minus * -g.vtheta_minus), 2)?;
        let middle = diagonal_power(1.0 / g.vtheta_zero, &self.ops.k_zero)?;
        let lower = nilpotent_exp(&(&self.ops.k_plus * -g.vtheta_plus), 2)?;
        Ok(&upper * &scale_rows(&lower, &middle))
    }

    pub fn eta(&self, g: &GaussParams) -> Result<Operator> {
        let rho = self.rho(g)?;
        Ok(&rho.adjoint() * &rho)
    }

    /// `exp[aK₊]·b^{K₀}·exp[cK₋]`. Lower-diagonal-upper, so every entry is
    /// the exact matrix element of the untruncated operator.
    pub fn normal_ordered(&self, n: &NormalOrder) -> Result<Operator> {
        if !(n.b > 0.0) || !n.b.is_finite() || !n.a.is_finite() || !n.c.is_finite() {
            return Err(Error::MetricDomain(format!("invalid normal-ordered triple {n:?}")));
        }
        let lower = nilpotent_exp(&(&self.ops.k_plus * n.a), 2)?;
        let middle = diagonal_power(n.b, &self.ops.k_zero)?;
        let upper = nilpotent_exp(&(&self.ops.k_minus * n.c), 2)?;
        Ok(&lower * &scale_rows(&upper, &middle))
    }

    /// Matrix elements of the untruncated `ρ⁻¹` on the first `dim` levels.
    pub fn rho_inverse_projected(&self, g: &GaussParams) -> Result<Operator> {
        Self::check(g)?;
        self.normal_ordered(&NormalOrder::from_matrix(&invert2(&NormalOrder::rho(g).matrix()))?)
    }

    /// Matrix elements of the untruncated `η = ρ²`.
    pub fn eta_projected(&self, g: &GaussParams) -> Result<Operator> {
        Self::check(g)?;
        let m = NormalOrder::rho(g).matrix();
        self.normal_ordered(&NormalOrder::from_matrix(&mul2(&m, &m))?)
    }

    /// Matrix elements of the untruncated `η⁻¹ = ρ⁻²`.
    pub fn eta_inverse_projected(&self, g: &GaussParams) -> Result<Operator> {
        Self::check(g)?;
        let m = invert2(&NormalOrder::rho(g).matrix());
        self.normal_ordered(&NormalOrder::from_matrix(&mul2(&m, &m))?)
    }

    /// Closed-form `ρ K ρ⁻¹` as a combination of `K₊, K₀, K₋`.
    pub fn conjugate_k(&self, g: &GaussParams, which: KComponent) -> Result<Operator> {
        Self::check(g)?;
        let (c_zero, c_minus, c_plus) = conjugation_coefficients(g, which);
        let o = &self.ops;
        let sum = &(&(&o.k_zero * c_zero) + &(&o.k_minus * c_minus)) + &(&o.k_plus * c_plus);
        Ok(sum)
    }
}

/// Group element `exp[aK₊]·b^{K₀}·exp[cK₋]`.
///
/// Products and inverses are taken in the two-dimensional representation
/// `K₊ = [[0,1],[0,0]]`, `K₋ = [[0,0],[−1,0]]`, `K₀ = diag(½,−½)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalOrder {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub type Matrix2 = [[f64; 2]; 2];

impl NormalOrder {
    pub fn rho(g: &GaussParams) -> Self {
        Self { a: g.vtheta_plus, b: g.vtheta_zero, c: g.vtheta_minus }
    }

    pub fn matrix(&self) -> Matrix2 {
        let r = self.b.sqrt();
        [[r - self.a * self.c / r, self.a / r], [-self.c / r, 1.0 / r]]
    }

    /// Needs a positive lower-right entry; otherwise the element has no
    /// normal-ordered form with `b > 0`.
    pub fn from_matrix(m: &Matrix2) -> Result<Self> {
        let s = m[1][1];
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::MetricDomain(format!(
                "no normal-ordered form: lower-right entry {s} is not positive"
            )));
        }
        Ok(Self { a: m[0][1] / s, b: 1.0 / (s * s), c: -m[1][0] / s })
    }
}

pub fn mul2(x: &Matrix2, y: &Matrix2) -> Matrix2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

/// Inverse of a determinant-one matrix.
pub fn invert2(m: &Matrix2) -> Matrix2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

/// Scaled interior residual of `ρK = (ρKρ⁻¹)ρ`, which avoids the
/// truncated inverse entirely.
pub fn conjugation_residual(builder: &MetricBuilder, g: &GaussParams, which: KComponent, exclude_top: usize) -> Result<f64> {
    let rho = builder.rho(g)?;
    let k = match which {
        KComponent::Plus => &builder.ops.k_plus,
        KComponent::Zero => &builder.ops.k_zero,
        KComponent::Minus => &builder.ops.k_minus,
    };
    let closed = builder.conjugate_k(g, which)?;
    let left = &rho * k;
    let right = &closed * &rho;
    let scale = left.frobenius_norm(exclude_top).max(right.frobenius_norm(exclude_top)).max(1.0);
    Ok(crate::fock::frobenius_distance(&left, &right, exclude_top)? / scale)
}

/// Coefficients `(K₀, K₋, K₊)` of `ρ K ρ⁻¹`.
pub fn conjugation_coefficients(g: &GaussParams, which: KComponent) -> (f64, f64, f64) {
    let (tp, t0, tm, chi) = (g.vtheta_plus, g.vtheta_zero, g.vtheta_minus, g.chi);
    let (a, b, c) = match which {
        KComponent::Plus => (-2.0 * tm * chi, tm * tm, chi * chi),
        KComponent::Zero => (-(tm * tp + chi), tm, chi * tp),
        KComponent::Minus => (-2.0 * tp, 1.0, tp * tp),
    };
    (a / t0, b / t0, c / t0)
}

/// `diag(d) · m`.
fn scale_rows(m: &Operator, d: &Operator) -> Operator {
    let diag = d.diagonal();
    Operator::from_fn(m.dim(), |i, j| diag[i] * m.get(i, j))
}

pub fn build_rho(g: &GaussParams, dim: usize) -> Result<Operator> {
    MetricBuilder::new(dim)?.rho(g)
}

pub fn build_rho_inverse(g: &GaussParams, dim: usize) -> Result<Operator> {
    MetricBuilder::new(dim)?.rho_inverse(g)
}

pub fn build_eta(g: &GaussParams, dim: usize) -> Result<Operator> {
    MetricBuilder::new(dim)?.eta(g)
}

pub fn conjugate_k(g: &GaussParams, which: KComponent, dim: usize) -> Result<Operator> {
    MetricBuilder::new(dim)?.conjugate_k(g, which)
}

/// `⟨v|A|v⟩` for the Rayleigh-quotient style checks.
pub fn quadratic_form(a: &Operator, v: &[C64]) -> C64 {
    let n = a.dim();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..n {
            row += a.get(i, j) * v[j];
        }
        s += v[i].conj() * row;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::frobenius_distance;
    use std::f64::consts::E;

    #[test]
    fn identity_params() {
        let g = gauss_params(0.0, 0.0).unwrap();
        assert_eq!((g.vtheta_plus, g.vtheta_minus, g.vtheta_zero, g.chi, g.phi_cap), (0.0, 0.0, 1.0, -1.0, -0.0));
    }

    #[test]
    fn diagonal_family() {
        let g = gauss_params(1.0, 0.0).unwrap();
        assert_eq!(g.phi_cap, 0.0);
        assert!((g.vtheta_zero - E * E).abs() < 1e-12);
        assert!((g.chi + E * E).abs() < 1e-12);
    }

    #[test]
    fn imaginary_theta_branch() {
        // θ² = −0.36: sinh θ/θ → sin 0.6/0.6, cosh θ → cos 0.6.
        let g = gauss_params(0.0, 0.3).unwrap();
        assert!((g.vtheta_plus - 0.6f64.tan()).abs() < 1e-14);
        assert!((g.vtheta_plus - 0.684136808341692).abs() < 1e-12);
        assert!((g.chi + 1.0).abs() < 1e-14);
        assert!((g.vtheta_zero - 1.0 / 0.6f64.cos().powi(2)).abs() < 1e-13);
        assert!((g.vtheta_zero - 1.4680428).abs() < 1e-6);
        assert!(g.gauss_identity_residual().abs() < 1e-12);
        assert!(g.normalization_residual().abs() < 1e-12);
    }

    #[test]
    fn continuity_across_theta_sq_zero() {
        let mu = 0.2;
        for eps in [0.4, -0.4] {
            let lo = gauss_params((eps * eps - 1e-6f64).sqrt().copysign(eps), mu).unwrap();
            let hi = gauss_params((eps * eps + 1e-6f64).sqrt().copysign(eps), mu).unwrap();
            assert!((lo.vtheta_zero - hi.vtheta_zero).abs() <= 1e-4);
            assert!((lo.phi_cap - hi.phi_cap).abs() <= 1e-4);
            assert!((lo.chi - hi.chi).abs() <= 1e-4);
        }
    }

    #[test]
    fn singular_denominator() {
        // μ = 0, ε with cosh ε − sinh ε = e^{−ε} never vanishes; use the
        // trig branch instead: ε = 0, |2μ| = π/2 gives cos(π/2) = 0.
        let err = gauss_params(0.0, std::f64::consts::FRAC_PI_4).unwrap_err();
        assert!(matches!(err, Error::SingularMetric(_)));
    }

    #[test]
    fn rho_of_identity_params() {
        let rho = build_rho(&GaussParams::identity(), 8).unwrap();
        assert!(frobenius_distance(&rho, &Operator::identity(8), 0).unwrap() < 1e-15);
        let inv = build_rho_inverse(&GaussParams::identity(), 8).unwrap();
        assert!(frobenius_distance(&inv, &Operator::identity(8), 0).unwrap() < 1e-15);
        let eta = build_eta(&GaussParams::identity(), 8).unwrap();
        assert!(frobenius_distance(&eta, &Operator::identity(8), 0).unwrap() < 1e-15);
    }

    #[test]
    fn rho_diagonal_case_dim3() {
        // build_operator_set needs dim ≥ 4; the leading 3×3 block is the dim-3 answer.
        let g = gauss_params(1.0, 0.0).unwrap();
        let rho = build_rho(&g, 4).unwrap();
        for (n, e) in [0.5f64, 1.5, 2.5].iter().enumerate() {
            assert!((rho.get(n, n).re - e.exp()).abs() < 1e-12 * e.exp());
        }
        assert!(rho.is_diagonal());
    }

    #[test]
    fn conjugation_unchanged_for_k_zero_cases() {
        let ops = build_operator_set(16).unwrap();
        for g in [GaussParams::identity(), gauss_params(1.0, 0.0).unwrap()] {
            let k0 = conjugate_k(&g, KComponent::Zero, 16).unwrap();
            assert!(frobenius_distance(&k0, &ops.k_zero, 0).unwrap() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_round_trip() {
        let n = NormalOrder { a: 0.3, b: 1.7, c: -0.4 };
        let back = NormalOrder::from_matrix(&n.matrix()).unwrap();
        assert!((back.a - n.a).abs() < 1e-14 && (back.b - n.b).abs() < 1e-14 && (back.c - n.c).abs() < 1e-14);
        let m = n.matrix();
        assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projected_inverse_is_exact_on_low_block() {
        // ρ·P·ρ⁻¹ over a large truncation reproduces the identity on the
        // levels whose ρ⁻¹ columns have decayed.
        let g = GaussParams::from_metric(-0.2, 1.0).unwrap();
        let big = MetricBuilder::new(96).unwrap();
        let rho = big.rho(&g).unwrap();
        let inv = big.rho_inverse_projected(&g).unwrap();
        let prod = &rho * &inv;
        for i in 0..16 {
            for j in 0..16 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - C64::new(e, 0.0)).norm() < 1e-12, "({i},{j})");
            }
        }
        // The small projected inverse agrees entrywise with the large one.
        let small = MetricBuilder::new(16).unwrap().rho_inverse_projected(&g).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert!((small.get(i, j) - inv.get(i, j)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn projected_eta_matches_square_on_low_block() {
        let g = GaussParams::from_metric(0.15, 0.8).unwrap();
        let big = MetricBuilder::new(96).unwrap();
        let rho = big.rho(&g).unwrap();
        let sq = &rho * &rho;
        let eta = MetricBuilder::new(12).unwrap().eta_projected(&g).unwrap();
        let eta_inv = MetricBuilder::new(12).unwrap().eta_inverse_projected(&g).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                assert!((sq.get(i, j) - eta.get(i, j)).norm() < 1e-12 * sq.get(i, j).norm().max(1.0));
            }
        }
        let big_eta = big.eta_projected(&g).unwrap();
        let big_inv = big.eta_inverse_projected(&g).unwrap();
        let id = &big_eta * &big_inv;
        for i in 0..12 {
            assert!((id.get(i, i).re - 1.0).abs() < 1e-12);
            assert!((eta_inv.get(i, i) - big_inv.get(i, i)).norm() < 1e-13);
        }
    }

    #[test]
    fn positive_chi_has_no_projected_inverse() {
        let g = GaussParams::from_metric(1.2, 0.5).unwrap();
        assert!(g.chi > 0.0);
        assert!(MetricBuilder::new(8).unwrap().rho_inverse_projected(&g).is_err());
    }

    #[test]
    fn conjugation_residual_small_for_strong_squeeze() {
        let g = gauss_params(0.0, 0.3).unwrap();
        let b = MetricBuilder::new(64).unwrap();
        for which in [KComponent::Plus, KComponent::Zero, KComponent::Minus] {
            assert!(conjugation_residual(&b, &g, which, 3).unwrap() < 1e-13);
        }
    }

    #[test]
    fn invert_trivial_points() {
        let (e, m) = invert_gauss_params(0.0, 1.0).unwrap();
        assert!(e.abs() < 1e-12 && m.abs() < 1e-12);
        let (e, m) = invert_gauss_params(0.0, E * E).unwrap();
        assert!((e - 1.0).abs() < 1e-10 && m.abs() < 1e-12);
    }

    #[test]
    fn invert_round_trip() {
        let g = gauss_params(0.4, 0.15).unwrap();
        let (e, m) = invert_gauss_params(g.phi_cap, g.vtheta_zero).unwrap();
        assert!((e - 0.4).abs() < 1e-9 && (m - 0.15).abs() < 1e-9);
    }

    #[test]
    fn metric_domain_errors() {
        assert!(matches!(GaussParams::from_metric(0.1, -1.0), Err(Error::MetricDomain(_))));
        assert!(matches!(invert_gauss_params(0.1, 0.0), Err(Error::MetricDomain(_))));
    }
}
