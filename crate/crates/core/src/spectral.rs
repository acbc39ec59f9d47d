//! Reference exponentials.
//!
//! `tridiag(z, b, z)` is diagonalized by the discrete sine basis, so its
//! exponential is an explicit finite sum; the general `tridiag(a, b, c)` is
//! diagonally similar to a symmetric one. A dense Padé exponential covers
//! everything else.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::dense;
use crate::error::{Error, Result};
use crate::matrices::{DenseMatrix, TridiagSpec};
use crate::C64;

/// Eigenvalues `b + 2z cos(kπ/(n+1))`, `k = 1..=n`, of `tridiag(z, b, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub lambdas: Vec<C64>,
    pub n: usize,
    pub z: C64,
    pub b: C64,
}

impl SpectralDecomposition {
    /// Normalized eigenvector entry `sqrt(2/(n+1)) sin((j+1)(k+1)π/(n+1))`
    /// for row `j` of the eigenvector belonging to `lambdas[k]`.
    pub fn eigenvector_entry(&self, j: usize, k: usize) -> f64 {
        (2.0 / (self.n + 1) as f64).sqrt() * sine(j + 1, k + 1, self.n)
    }

    /// Orthogonal matrix whose column `k` is the eigenvector of `lambdas[k]`.
    pub fn eigenvector_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.n, self.n), |(j, k)| self.eigenvector_entry(j, k))
    }
}

/// `sin(i k π / (n + 1))` with the product reduced modulo `2(n + 1)` so the
/// argument stays in `[0, 2π)`.
pub fn sine(i: usize, k: usize, n: usize) -> f64 {
    let period = 2 * (n + 1);
    let m = (i * k) % period;
    // fold into [0, π/2] by symmetry for best accuracy
    let (m, sign) = if m > n + 1 { (period - m, -1.0) } else { (m, 1.0) };
    let m = if 2 * m > n + 1 { n + 1 - m } else { m };
    sign * (PI * m as f64 / (n + 1) as f64).sin()
}

pub fn eigen_sym_tridiag(z: C64, b: C64, n: usize) -> Result<SpectralDecomposition> {
    if n == 0 {
        return Err(Error::invalid("dimension n must be at least 1"));
    }
    let lambdas = (1..=n)
        .map(|k| b + z * 2.0 * (PI * k as f64 / (n + 1) as f64).cos())
        .collect();
    Ok(SpectralDecomposition { lambdas, n, z, b })
}

/// Exact `exp(tridiag(z, b, z))` from the sine-basis diagonalization.
pub fn expm_sym_tridiag_exact(z: C64, b: C64, n: usize) -> Result<DenseMatrix> {
    let eig = eigen_sym_tridiag(z, b, n)?;
    let s = eig.eigenvector_matrix();
    let w: Vec<C64> = eig.lambdas.iter().map(|l| l.exp()).collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::overflow(format!(
            "exp of eigenvalues overflows (Re b = {}, z = {z})",
            b.re
        )));
    }
    // S diag(w) Sᵀ
    let sc = s.mapv(|x| C64::new(x, 0.0));
    let mut sw = sc.clone();
    for (mut col, wk) in sw.columns_mut().into_iter().zip(&w) {
        col.mapv_inplace(|v| v * wk);
    }
    let e = sw.dot(&sc.t());
    let m = DenseMatrix::from_array(e);
    if !m.is_finite() {
        return Err(Error::overflow("non-finite entries in spectral exponential"));
    }
    Ok(m)
}

/// Dense exponential by scaling and squaring with a (6,6) Padé approximant.
/// Real matrices are handled in real arithmetic.
pub fn expm_dense_small(m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::invalid("exponential needs a square matrix"));
    }
    if !m.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let a = m.as_array();
    let out = if a.iter().all(|v| v.im == 0.0) {
        dense::expm_pade6(&a.mapv(|v| v.re)).map(|r| r.mapv(|x| C64::new(x, 0.0)))
    } else {
        dense::expm_pade6(a)
    };
    let out = out.ok_or_else(|| Error::invalid("singular Padé denominator"))?;
    let out = DenseMatrix::from_array(out);
    if !out.is_finite() {
        return Err(Error::overflow("dense exponential overflowed"));
    }
    Ok(out)
}

/// Exact `exp(tridiag(a, b, c))`.
///
/// With `a c != 0` this is `D exp(tridiag(z, b, z)) D⁻¹`, `D = diag(r^k)`,
/// `r = sqrt(a/c)`, `z = c r`. One-sided zero couplings use the closed form of
/// a bidiagonal Toeplitz exponential.
pub fn expm_tridiag_exact(spec: &TridiagSpec) -> Result<DenseMatrix> {
    match spec.ratio() {
        Some(r) => similarity_exp(spec, r),
        None => bidiagonal_exp(spec),
    }
}

fn similarity_exp(spec: &TridiagSpec, r: C64) -> Result<DenseMatrix> {
    let n = spec.n;
    let sym = expm_sym_tridiag_exact(spec.c * r, spec.b, n)?;
    if r == C64::new(1.0, 0.0) {
        return Ok(sym);
    }
    let lr = r.ln();
    let out = DenseMatrix::from_fn(n, n, |i, j| {
        let e = sym.get(i, j);
        let k = i as f64 - j as f64;
        let p = r.powi(k as i32);
        if p.is_finite() && p.norm() > 0.0 {
            p * e
        } else if e.norm() == 0.0 {
            e
        } else {
            (lr * k + e.ln()).exp()
        }
    });
    if !out.is_finite() {
        return Err(Error::overflow(format!("similarity scaling sqrt(a/c)^{} overflows", n - 1)));
    }
    Ok(out)
}

fn bidiagonal_exp(spec: &TridiagSpec) -> Result<DenseMatrix> {
    let n = spec.n;
    let eb = spec.b.exp();
    if !eb.is_finite() {
        return Err(Error::overflow("exp(b) overflows"));
    }
    // the single nonzero off-diagonal and whether it lies below the diagonal
    let (w, lower) = if spec.a != C64::new(0.0, 0.0) { (spec.a, true) } else { (spec.c, false) };
    // w^k / k!
    let mut terms = vec![C64::new(1.0, 0.0); n];
    for k in 1..n {
        terms[k] = terms[k - 1] * w / k as f64;
    }
    let out = DenseMatrix::from_fn(n, n, |i, j| {
        let below = i >= j;
        if below == lower || i == j {
            eb * terms[i.abs_diff(j)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    if !out.is_finite() {
        return Err(Error::overflow("bidiagonal exponential overflows"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn small_eigenvalues() {
        let e = eigen_sym_tridiag(c64(1.0, 0.0), c64(0.0, 0.0), 2).unwrap();
        assert!(close(e.lambdas[0], c64(1.0, 0.0), 1e-15));
        assert!(close(e.lambdas[1], c64(-1.0, 0.0), 1e-15));
        let e = eigen_sym_tridiag(c64(1.0, 0.0), c64(-2.0, 0.0), 3).unwrap();
        let s2 = 2f64.sqrt();
        for (got, want) in e.lambdas.iter().zip([-2.0 + s2, -2.0, -2.0 - s2]) {
            assert!(close(*got, c64(want, 0.0), 1e-15));
        }
        assert!(eigen_sym_tridiag(c64(1.0, 0.0), c64(0.0, 0.0), 0).is_err());
    }

    #[test]
    fn eigenpairs_have_small_residual() {
        for (z, b) in [(c64(1.0, 0.0), c64(-2.0, 0.0)), (c64(0.5, -1.5), c64(0.25, 2.0))] {
            for n in 1..=8 {
                let e = eigen_sym_tridiag(z, b, n).unwrap();
                let t = TridiagSpec::symmetric(z, b, n).unwrap().to_dense();
                for k in 0..n {
                    let v: Vec<C64> = (0..n).map(|j| c64(e.eigenvector_entry(j, k), 0.0)).collect();
                    let tv = t.matvec(&v).unwrap();
                    for j in 0..n {
                        assert!(close(tv[j], e.lambdas[k] * v[j], 1e-12));
                    }
                }
            }
        }
    }

    #[test]
    fn real_spectrum_symmetric_about_diagonal() {
        let e = eigen_sym_tridiag(c64(0.7, 0.0), c64(1.3, 0.0), 11).unwrap();
        for k in 0..11 {
            assert!(close(e.lambdas[k] + e.lambdas[10 - k], c64(2.6, 0.0), 1e-14));
        }
    }

    #[test]
    fn sine_reduction_matches_direct_evaluation() {
        for n in [1usize, 4, 9, 40] {
            for i in 0..3 * n {
                for k in 0..2 * n {
                    let direct = (PI * (i * k) as f64 / (n + 1) as f64).sin();
                    assert!((sine(i, k, n) - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let (ch, sh) = (1f64.cosh(), 1f64.sinh());
        let m = expm_sym_tridiag_exact(c64(1.0, 0.0), c64(0.0, 0.0), 2).unwrap();
        for (i, j, want) in [(0, 0, ch), (0, 1, sh), (1, 0, sh), (1, 1, ch)] {
            assert!(close(m.get(i, j), c64(want, 0.0), 1e-15));
        }
        let spec = TridiagSpec::new(c64(1.0, 0.0), c64(-2.0, 0.0), c64(1.0, 0.0), 2).unwrap();
        let m = expm_tridiag_exact(&spec).unwrap();
        let s = (-2f64).exp();
        assert!(close(m.get(0, 1), c64(s * sh, 0.0), 1e-15));
        assert!(close(m.get(1, 1), c64(s * ch, 0.0), 1e-15));
    }

    #[test]
    fn zero_coupling_gives_identity() {
        for n in [1, 3, 10] {
            let m = expm_sym_tridiag_exact(c64(0.0, 0.0), c64(0.0, 0.0), n).unwrap();
            assert!(m.diff_norm_inf(&DenseMatrix::identity(n)).unwrap() < 1e-15);
        }
    }

    #[test]
    fn example_matrix_is_positive_above_roundoff() {
        // far entries are ~1e-70, below what a sum of O(1) terms can resolve
        let m = expm_sym_tridiag_exact(c64(1.0, 0.0), c64(-2.0, 0.0), 50).unwrap();
        for i in 0..50 {
            for j in 0..50 {
                let v = m.get(i, j).re;
                if i.abs_diff(j) <= 12 {
                    assert!(v > 0.0);
                } else {
                    assert!(v > -1e-15);
                }
            }
        }
    }

    #[test]
    fn spectral_exponential_is_symmetric_and_persymmetric() {
        let n = 13;
        let m = expm_sym_tridiag_exact(c64(0.9, 0.4), c64(-1.0, 0.2), n).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!(close(m.get(i, j), m.get(j, i), 1e-12));
                assert!(close(m.get(i, j), m.get(n - 1 - i, n - 1 - j), 1e-12));
            }
        }
    }

    #[test]
    fn overflow_reported() {
        let r = expm_sym_tridiag_exact(c64(1.0, 0.0), c64(800.0, 0.0), 4);
        assert!(matches!(r, Err(Error::Overflow(_))));
    }

    #[test]
    fn dense_small_examples() {
        assert_eq!(expm_dense_small(&DenseMatrix::zeros(3, 3)).unwrap(), DenseMatrix::identity(3));
        let d = DenseMatrix::from_fn(2, 2, |i, j| if i == j { c64((i + 1) as f64, 0.0) } else { c64(0.0, 0.0) });
        let e = expm_dense_small(&d).unwrap();
        assert!(close(e.get(0, 0), c64(1f64.exp(), 0.0), 1e-14));
        assert!(close(e.get(1, 1), c64(2f64.exp(), 0.0), 1e-13));
        let nil = DenseMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let e = expm_dense_small(&nil).unwrap();
        assert!(e.diff_norm_inf(&DenseMatrix::from_fn(2, 2, |i, j| c64(if i <= j { 1.0 } else { 0.0 }, 0.0))).unwrap() < 1e-15);
        assert!(expm_dense_small(&DenseMatrix::zeros(2, 3)).is_err());
        let mut bad = DenseMatrix::zeros(2, 2);
        bad.set(0, 1, c64(f64::NAN, 0.0));
        assert!(expm_dense_small(&bad).is_err());
    }

    #[test]
    fn dense_small_matches_series() {
        // 4x4 complex matrices with inf-norm <= 2; series to 40 terms
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..20 {
            let mut m = DenseMatrix::from_fn(4, 4, |_, _| c64(next(), next()));
            let s = 2.0 / m.norm_inf() * next().abs();
            m = m.scale(c64(s, 0.0));
            let mut term = DenseMatrix::identity(4);
            let mut sum = DenseMatrix::identity(4);
            for k in 1..40 {
                term = term.matmul(&m).unwrap().scale(c64(1.0 / k as f64, 0.0));
                sum = sum.add(&term).unwrap();
            }
            let e = expm_dense_small(&m).unwrap();
            assert!(e.diff_norm_inf(&sum).unwrap() <= 1e-11 * sum.norm_inf());
        }
    }

    #[test]
    fn diagonal_and_bidiagonal_cases() {
        let b = c64(0.3, -0.4);
        let spec = TridiagSpec::new(c64(0.0, 0.0), b, c64(0.0, 0.0), 4).unwrap();
        let m = expm_tridiag_exact(&spec).unwrap();
        assert!(m.diff_norm_inf(&DenseMatrix::identity(4).scale(b.exp())).unwrap() < 1e-15);
        for (a, c) in [(c64(0.0, 0.0), c64(1.5, 0.5)), (c64(-0.7, 1.0), c64(0.0, 0.0))] {
            let spec = TridiagSpec::new(a, b, c, 6).unwrap();
            let exact = expm_tridiag_exact(&spec).unwrap();
            let pade = expm_dense_small(&spec.to_dense()).unwrap();
            assert!(exact.diff_norm_inf(&pade).unwrap() < 1e-12 * pade.norm_inf());
        }
    }

    #[test]
    fn similarity_case_against_pade() {
        let spec = TridiagSpec::new(c64(4.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0), 3).unwrap();
        let exact = expm_tridiag_exact(&spec).unwrap();
        let pade = expm_dense_small(&spec.to_dense()).unwrap();
        assert!(exact.diff_norm_inf(&pade).unwrap() < 1e-12 * pade.norm_inf());
        // the symmetric partner tridiag(2, 0, 2) conjugated by diag(1, 2, 4)
        let sym = expm_sym_tridiag_exact(c64(2.0, 0.0), c64(0.0, 0.0), 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = sym.get(i, j) * 2f64.powi(i as i32 - j as i32);
                assert!(close(exact.get(i, j), want, 1e-12 * want.norm().max(1.0)));
            }
        }
    }

    #[test]
    fn either_square_root_branch_gives_same_exponential() {
        let spec = TridiagSpec::new(c64(1.0, 2.0), c64(-0.5, 0.1), c64(-1.5, 0.5), 7).unwrap();
        let r = spec.ratio().unwrap();
        let principal = similarity_exp(&spec, r).unwrap();
        let other = similarity_exp(&spec, -r).unwrap();
        assert!(principal.diff_norm_inf(&other).unwrap() < 1e-12 * principal.norm_inf());
    }
}
