//! Truncated Fock-space operators.
//!
//! Every operator is a dense `dim × dim` complex matrix over the number basis
//! `|0⟩ … |dim−1⟩`. Truncation breaks the canonical commutation relation at
//! the top of the ladder, so identities are compared on an interior block that
//! drops the highest few levels.

use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Smallest dimension accepted by [`build_operator_set`].
pub const MIN_DIM: usize = 4;

/// Levels counted by [`StateVector::tail_support`].
pub const TAIL_LEVELS: usize = 4;

/// Dense complex square matrix in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    m: Array2<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { m: Array2::zeros((dim, dim)) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: Array2::eye(dim) }
    }

    pub fn from_diagonal(values: &[C64]) -> Self {
        Self { m: Array2::from_diag(&Array1::from(values.to_vec())) }
    }

    /// Wraps a matrix after checking it is square and finite.
    pub fn from_array(m: Array2<C64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::Shape { left: r, right: c });
        }
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain("operator entries must be finite".into()));
        }
        Ok(Self { m })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        Self { m: Array2::from_shape_fn((dim, dim), |(i, j)| f(i, j)) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn into_array(self) -> Array2<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[[i, j]]
    }

    pub fn adjoint(&self) -> Operator {
        Self { m: self.m.t().mapv(|z| z.conj()) }
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_diagonal(&self) -> bool {
        self.m.indexed_iter().all(|((i, j), z)| i == j || *z == C64::new(0.0, 0.0))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.m.diag().to_vec()
    }

    pub fn scale(&self, c: C64) -> Operator {
        Self { m: &self.m * c }
    }

    /// Frobenius norm of the leading `dim − exclude_top` block.
    pub fn frobenius_norm(&self, exclude_top: usize) -> f64 {
        let k = self.dim().saturating_sub(exclude_top);
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                s += self.m[[i, j]].norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self { m: product(&self.m, &other.m) })
    }

    pub fn trace(&self) -> C64 {
        self.m.diag().sum()
    }
}

fn nonzeros(m: &Array2<C64>) -> Vec<(usize, usize, C64)> {
    let zero = C64::new(0.0, 0.0);
    m.indexed_iter().filter(|(_, z)| **z != zero).map(|((i, j), z)| (i, j, *z)).collect()
}

/// Matrix product; skips zeros when either factor is sparse (ladder
/// operators, Hamiltonians, invariants).
fn product(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let sparse = |m: &Array2<C64>| m.iter().filter(|z| **z != C64::new(0.0, 0.0)).count() * 3 < n * n;
    let mut out = Array2::zeros((n, b.ncols()));
    if sparse(a) {
        for (i, k, v) in nonzeros(a) {
            out.row_mut(i).scaled_add(v, &b.row(k));
        }
    } else if sparse(b) {
        for (k, j, v) in nonzeros(b) {
            out.column_mut(j).scaled_add(v, &a.column(k));
        }
    } else {
        out = a.dot(b);
    }
    out
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::Shape { left: a, right: b })
    } else {
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { m: &self.m + &rhs.m }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { m: &self.m - &rhs.m }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { m: product(&self.m, &rhs.m) }
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        Operator { m: &self.m * C64::new(rhs, 0.0) }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: self.m.mapv(|z| -z) }
    }
}

/// Complex amplitude vector in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    v: Array1<C64>,
}

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        Self { v: Array1::zeros(dim) }
    }

    /// Number state `|n⟩`.
    pub fn basis(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Shape { left: n, right: dim });
        }
        let mut v = Array1::zeros(dim);
        v[n] = C64::new(1.0, 0.0);
        Ok(Self { v })
    }

    pub fn from_vec(amps: Vec<C64>) -> Result<Self> {
        if !amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain("state amplitudes must be finite".into()));
        }
        Ok(Self { v: Array1::from(amps) })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn as_array(&self) -> &Array1<C64> {
        &self.v
    }

    pub fn amplitudes(&self) -> Vec<C64> {
        self.v.to_vec()
    }

    pub fn get(&self, n: usize) -> C64 {
        self.v[n]
    }

    pub fn norm(&self) -> f64 {
        self.v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.v.iter().zip(other.v.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, c: C64) -> StateVector {
        Self { v: &self.v * c }
    }

    pub fn add_scaled(&mut self, c: C64, other: &StateVector) {
        self.v.scaled_add(c, &other.v);
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        Self { v: &self.v - &other.v }
    }

    /// Fraction of the squared norm carried by the top [`TAIL_LEVELS`] levels.
    pub fn tail_support(&self) -> f64 {
        let total: f64 = self.v.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let start = self.dim().saturating_sub(TAIL_LEVELS);
        self.v.iter().skip(start).map(|z| z.norm_sqr()).sum::<f64>() / total
    }
}

/// Ladder and su(1,1) generators for one truncation dimension.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub a: Operator,
    pub a_dag: Operator,
    pub k_plus: Operator,
    pub k_minus: Operator,
    pub k_zero: Operator,
    pub x: Operator,
    pub p: Operator,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

pub fn build_operator_set(dim: usize) -> Result<OperatorSet> {
    if dim < MIN_DIM {
        return Err(Error::InvalidDimension { dim, min: MIN_DIM });
    }
    let a = Operator::from_fn(dim, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let a_dag = a.adjoint();
    let k_plus = &(&a_dag * &a_dag) * 0.5;
    let k_minus = &(&a * &a) * 0.5;
    let k_zero = Operator::from_fn(dim, |i, j| {
        if i == j {
            C64::new(i as f64 / 2.0 + 0.25, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = &(&a + &a_dag) * s;
    let p = &(&a_dag - &a) * (I * s);
    Ok(OperatorSet { a, a_dag, k_plus, k_minus, k_zero, x, p })
}

pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    check_dims(a.dim(), b.dim())?;
    let ab = product(a.as_array(), b.as_array());
    let ba = product(b.as_array(), a.as_array());
    Ok(Operator { m: ab - ba })
}

pub fn apply(a: &Operator, v: &StateVector) -> Result<StateVector> {
    check_dims(a.dim(), v.dim())?;
    Ok(StateVector { v: a.as_array().dot(&v.v) })
}

pub fn adjoint(a: &Operator) -> Operator {
    a.adjoint()
}

/// Frobenius distance on the leading block that omits the top `exclude_top`
/// levels (`0` compares the full matrices).
pub fn frobenius_distance(a: &Operator, b: &Operator, exclude_top: usize) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let k = a.dim().saturating_sub(exclude_top);
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            s += (a.m[[i, j]] - b.m[[i, j]]).norm_sqr();
        }
    }
    Ok(s.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Band {
    Upper,
    Lower,
}

/// `exp(A)` for a strictly banded nilpotent `A`.
///
/// `A` must vanish except where `j − i ≥ bandwidth` (upper) or
/// `i − j ≥ bandwidth` (lower). Then `A^k = 0` once `k·bandwidth ≥ dim` and
/// the Taylor series terminates after `⌈dim / bandwidth⌉` terms. Products
/// only visit the nonzero entries of `A`.
pub fn nilpotent_exp(a: &Operator, bandwidth: usize) -> Result<Operator> {
    if bandwidth == 0 {
        return Err(Error::Structure("bandwidth must be positive".into()));
    }
    let n = a.dim();
    let zero = C64::new(0.0, 0.0);
    let mut nonzeros = Vec::new();
    let mut band = None;
    for ((i, j), &z) in a.m.indexed_iter() {
        if z == zero {
            continue;
        }
        let side = if j >= i + bandwidth {
            Band::Upper
        } else if i >= j + bandwidth {
            Band::Lower
        } else {
            return Err(Error::Structure(format!(
                "entry ({i}, {j}) lies inside the declared bandwidth {bandwidth}"
            )));
        };
        match band {
            None => band = Some(side),
            Some(b) if b != side => {
                return Err(Error::Structure(
                    "matrix has entries on both sides of the diagonal".into(),
                ))
            }
            _ => {}
        }
        nonzeros.push((i, j, z));
    }

    let mut result = Array2::<C64>::eye(n);
    if nonzeros.is_empty() {
        return Ok(Operator { m: result });
    }
    // Column-major copies: term column i feeds next column j. `rows[c]` is
    // the nonzero row range of term column c.
    let terms = n.div_ceil(bandwidth);
    let mut term = vec![zero; n * n];
    let mut rows: Vec<Option<(usize, usize)>> = (0..n).map(|d| Some((d, d + 1))).collect();
    for d in 0..n {
        term[d * n + d] = C64::new(1.0, 0.0);
    }
    let mut next = vec![zero; n * n];
    let mut stale: Vec<Option<(usize, usize)>> = vec![None; n];
    for k in 1..terms {
        for (j, range) in stale.iter().enumerate() {
            if let Some((lo, hi)) = *range {
                next[j * n + lo..j * n + hi].fill(zero);
            }
        }
        let mut next_rows: Vec<Option<(usize, usize)>> = vec![None; n];
        for &(i, j, z) in &nonzeros {
            let Some((lo, hi)) = rows[i] else { continue };
            let w = z / k as f64;
            let dst = j * n;
            for r in lo..hi {
                next[dst + r] += term[i * n + r] * w;
            }
            next_rows[j] = Some(match next_rows[j] {
                None => (lo, hi),
                Some((a, b)) => (a.min(lo), b.max(hi)),
            });
        }
        std::mem::swap(&mut term, &mut next);
        stale = std::mem::replace(&mut rows, next_rows);
        if rows.iter().all(Option::is_none) {
            break;
        }
        for (j, range) in rows.iter().enumerate() {
            if let Some((lo, hi)) = *range {
                for r in lo..hi {
                    result[[r, j]] += term[j * n + r];
                }
            }
        }
    }
    Ok(Operator { m: result })
}

/// Diagonal matrix with entries `base^{D[n,n]}`.
pub fn diagonal_power(base: f64, d: &Operator) -> Result<Operator> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::Domain(format!("diagonal_power needs a positive base, got {base}")));
    }
    if !d.is_diagonal() {
        return Err(Error::Structure("diagonal_power needs a diagonal exponent".into()));
    }
    let ln = base.ln();
    let entries: Vec<C64> = d.diagonal().iter().map(|e| (e * ln).exp()).collect();
    Ok(Operator::from_diagonal(&entries))
}
