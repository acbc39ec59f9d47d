//! Dense kernels behind the reference exponential: blocked LU with partial
//! pivoting and a degree-6 diagonal Padé approximant with scaling and squaring.
//! Generic over `f64` and `Complex64` so real inputs run on real arithmetic.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayViewMut2, Axis, LinalgScalar, ScalarOperand};
use std::ops::Neg;

use crate::C64;

pub(crate) trait Scalar: LinalgScalar + ScalarOperand + Neg<Output = Self> + Send + Sync {
    fn modulus(self) -> f64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for C64 {
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn from_real(x: f64) -> Self {
        C64::new(x, 0.0)
    }
}

const BLOCK: usize = 64;

pub(crate) fn norm_inf<T: Scalar>(a: &Array2<T>) -> f64 {
    a.rows()
        .into_iter()
        .map(|row| row.iter().map(|v| v.modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// In-place LU factorization `P A = L U`; returns the row interchanges or
/// `None` when a zero pivot is met.
fn lu_in_place<T: Scalar>(a: &mut Array2<T>) -> Option<Vec<usize>> {
    let n = a.nrows();
    let mut piv = vec![0usize; n];
    for k0 in (0..n).step_by(BLOCK) {
        let k1 = (k0 + BLOCK).min(n);
        for k in k0..k1 {
            let mut p = k;
            let mut best = a[[k, k]].modulus();
            for i in k + 1..n {
                let m = a[[i, k]].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            piv[k] = p;
            if p != k {
                swap_rows(a.view_mut(), k, p);
            }
            let inv = T::one() / a[[k, k]];
            let (top, mut bottom) = a.view_mut().split_at(Axis(0), k + 1);
            let pivot_row = top.row(k);
            for mut row in bottom.rows_mut() {
                let l = row[k] * inv;
                row[k] = l;
                if l.modulus() != 0.0 {
                    for j in k + 1..k1 {
                        row[j] = row[j] - l * pivot_row[j];
                    }
                }
            }
        }
        if k1 < n {
            // U12 <- L11^{-1} A12
            for k in k0..k1 {
                let (top, mut bottom) = a.view_mut().split_at(Axis(0), k + 1);
                let src = top.row(k);
                for i in k + 1..k1 {
                    let mut row = bottom.row_mut(i - k - 1);
                    let l = row[k];
                    if l.modulus() != 0.0 {
                        for j in k1..n {
                            row[j] = row[j] - l * src[j];
                        }
                    }
                }
            }
            // A22 <- A22 - L21 U12
            let l21 = a.slice(s![k1.., k0..k1]).to_owned();
            let u12 = a.slice(s![k0..k1, k1..]).to_owned();
            let mut a22 = a.slice_mut(s![k1.., k1..]);
            general_mat_mul(-T::one(), &l21, &u12, T::one(), &mut a22);
        }
    }
    Some(piv)
}

fn swap_rows<T: Scalar>(mut a: ArrayViewMut2<T>, i: usize, j: usize) {
    let cols = a.ncols();
    for c in 0..cols {
        a.swap([i, c], [j, c]);
    }
}

/// Solves `A X = B`; `None` if `A` is singular.
pub(crate) fn solve<T: Scalar>(mut a: Array2<T>, mut b: Array2<T>) -> Option<Array2<T>> {
    let n = a.nrows();
    let piv = lu_in_place(&mut a)?;
    for (k, &p) in piv.iter().enumerate() {
        if p != k {
            swap_rows(b.view_mut(), k, p);
        }
    }
    // forward substitution with unit lower L
    for k0 in (0..n).step_by(BLOCK) {
        let k1 = (k0 + BLOCK).min(n);
        if k0 > 0 {
            let (done, mut rest) = b.view_mut().split_at(Axis(0), k0);
            let mut target = rest.slice_mut(s![..k1 - k0, ..]);
            general_mat_mul(-T::one(), &a.slice(s![k0..k1, ..k0]), &done, T::one(), &mut target);
        }
        for i in k0..k1 {
            let (done, mut rest) = b.view_mut().split_at(Axis(0), i);
            let mut row = rest.row_mut(0);
            for k in k0..i {
                let l = a[[i, k]];
                if l.modulus() != 0.0 {
                    row.scaled_add(-l, &done.row(k));
                }
            }
        }
    }
    // back substitution with U
    let blocks: Vec<usize> = (0..n).step_by(BLOCK).collect();
    for &k0 in blocks.iter().rev() {
        let k1 = (k0 + BLOCK).min(n);
        if k1 < n {
            let (mut head, done) = b.view_mut().split_at(Axis(0), k1);
            let mut target = head.slice_mut(s![k0..k1, ..]);
            general_mat_mul(-T::one(), &a.slice(s![k0..k1, k1..]), &done, T::one(), &mut target);
        }
        for i in (k0..k1).rev() {
            let (mut head, done) = b.view_mut().split_at(Axis(0), i + 1);
            let mut row = head.row_mut(i);
            for k in i + 1..k1 {
                let u = a[[i, k]];
                if u.modulus() != 0.0 {
                    row.scaled_add(-u, &done.row(k - i - 1));
                }
            }
            let inv = T::one() / a[[i, i]];
            row.mapv_inplace(|v| v * inv);
        }
    }
    Some(b)
}

/// Coefficients of the (6,6) Padé approximant to `exp`.
fn pade6_coefficients() -> [f64; 7] {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mut c = [0.0; 7];
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = fact(12 - k) * fact(6) / (fact(12) * fact(k) * fact(6 - k));
    }
    c
}

/// Squarings needed so that `||A||_inf / 2^s <= 0.5`.
pub(crate) fn squarings_for(norm: f64) -> u32 {
    let mut s = 0u32;
    let mut scaled = norm;
    while scaled > 0.5 {
        scaled *= 0.5;
        s += 1;
    }
    s
}

/// `exp(A)` by scaling and squaring with the (6,6) diagonal Padé approximant.
/// `None` if the denominator is singular (only possible for non-finite input).
pub(crate) fn expm_pade6<T: Scalar>(a: &Array2<T>) -> Option<Array2<T>> {
    let n = a.nrows();
    let s = squarings_for(norm_inf(a));
    let scale = T::from_real(0.5f64.powi(s as i32));
    let a = a.mapv(|v| v * scale);
    let c = pade6_coefficients().map(T::from_real);
    let eye = Array2::<T>::eye(n);

    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let even = &eye * c[0] + &a2 * c[2] + &a4 * c[4] + &a6 * c[6];
    let odd_inner = &eye * c[1] + &a2 * c[3] + &a4 * c[5];
    let odd = a.dot(&odd_inner);

    let numer = &even + &odd;
    let denom = &even - &odd;
    let mut r = solve(denom, numer)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Some(r)
}
