//! Dense reference routines used only as test oracles.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use tdph::fock::Operator;

fn one_norm(m: &[Vec<C64>]) -> f64 {
    let n = m.len();
    (0..n).map(|j| (0..n).map(|i| m[i][j].norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn to_rows(a: &Operator) -> Vec<Vec<C64>> {
    let n = a.dim();
    (0..n).map(|i| (0..n).map(|j| a.get(i, j)).collect()).collect()
}

fn from_rows(m: Vec<Vec<C64>>) -> Operator {
    Operator::from_fn(m.len(), |i, j| m[i][j])
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn reference_expm(a: &Operator) -> Operator {
    let norm = one_norm(&to_rows(a));
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let m = a * 0.5f64.powi(squarings);
    let mut sum = Operator::identity(a.dim());
    let mut term = sum.clone();
    for k in 1..=30 {
        term = &(&term * &m) * (1.0 / k as f64);
        sum = &sum + &term;
        if term.frobenius_norm(0) <= 1e-18 * sum.frobenius_norm(0) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn dense_inverse(a: &Operator) -> Operator {
    let n = a.dim();
    let mut m = to_rows(a);
    let mut inv: Vec<Vec<C64>> =
        (0..n).map(|i| (0..n).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm())).unwrap();
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        assert!(p.norm() > 0.0, "singular matrix");
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[i][col];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let (mc, ic) = (m[col][j], inv[col][j]);
                m[i][j] -= f * mc;
                inv[i][j] -= f * ic;
            }
        }
    }
    from_rows(inv)
}

/// Relative interior-block distance `‖a − b‖ / max(1, ‖b‖)`.
pub fn relative_distance(a: &Operator, b: &Operator, exclude_top: usize) -> f64 {
    tdph::fock::frobenius_distance(a, b, exclude_top).unwrap() / b.frobenius_norm(exclude_top).max(1.0)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
