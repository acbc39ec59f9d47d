//! Bessel-based exponential of `tridiag(a, b, c)`.
//!
//! With `r = sqrt(a/c)` and `z = c r` the exponential is approximated by
//! `e^b r^{i−j} (I_{|i−j|}(2z) − I_{i+j}(2z))` (1-based indices, the Hankel
//! order reflected past `n + 1`). Only `I_0 .. I_{n+1}` are evaluated.

use crate::bessel::bessel_sequence;
use crate::error::{Error, Result};
use crate::matrices::{DenseMatrix, ToeHankExp, TridiagSpec};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Error bounds behind a band truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    /// Bound on `‖exp(T) − G‖∞` for the untruncated approximation.
    pub approx_bound: f64,
    /// Band truncation bound at `selected_d`.
    pub band_bound: f64,
    pub requested_tol: f64,
    pub selected_d: usize,
    /// False when even `d = n − 1` misses `requested_tol`.
    pub satisfiable: bool,
}

/// Compact approximation of `exp(tridiag(a, b, c))`; needs `a c != 0`.
pub fn expm_toeplitz_bessel(spec: &TridiagSpec) -> Result<ToeHankExp> {
    let ratio = spec.ratio().ok_or_else(|| {
        Error::invalid("a * c = 0: use spectral::expm_tridiag_exact for the bidiagonal closed form")
    })?;
    build(spec.c * ratio, spec.b, spec.n, ratio)
}

/// Compact approximation of `exp(tridiag(z, b, z))`; `z = 0` is allowed.
pub fn expm_sym_bessel(z: C64, b: C64, n: usize) -> Result<ToeHankExp> {
    if n == 0 {
        return Err(Error::invalid("dimension n must be at least 1"));
    }
    build(z, b, n, ONE)
}

fn build(z: C64, b: C64, n: usize, ratio: C64) -> Result<ToeHankExp> {
    let diag = b.exp();
    if !diag.is_finite() {
        return Err(Error::overflow(format!("exp(b) overflows for b = {b}")));
    }
    if n == 1 {
        // a 1x1 matrix has no coupling
        return ToeHankExp::new(vec![ONE], vec![ZERO], diag, ratio);
    }
    let seq = bessel_sequence(n + 1, z * 2.0)?.into_values();
    ToeHankExp::new(seq[..n].to_vec(), seq[2..].to_vec(), diag, ratio)
}

/// Approximations of `exp(T)` and `exp(−T)` sharing one Bessel sequence,
/// through `I_k(−x) = (−1)^k I_k(x)`.
pub fn expm_pm_bessel(spec: &TridiagSpec) -> Result<(ToeHankExp, ToeHankExp)> {
    let plus = expm_toeplitz_bessel(spec)?;
    let minus_diag = (-spec.b).exp();
    if !minus_diag.is_finite() {
        return Err(Error::overflow(format!("exp(-b) overflows for b = {}", spec.b)));
    }
    let alt = |k: usize, x: C64| if k % 2 == 0 { x } else { -x };
    let u = plus.u.iter().enumerate().map(|(k, &x)| alt(k, x)).collect();
    let v = plus.v.iter().enumerate().map(|(t, &x)| alt(t, x)).collect();
    let minus = ToeHankExp::new(u, v, minus_diag, plus.ratio)?;
    Ok((plus, minus))
}

/// `0.5 e^{Re b} (e^{2 Re z} / (2n + 2))^{n+1}`, evaluated in log space and
/// saturating at `+inf`.
pub fn approx_error_bound(b: C64, z: C64, n: usize) -> f64 {
    let n1 = (n + 1) as f64;
    let log = 0.5f64.ln() + b.re + n1 * (2.0 * z.re - (2.0 * n1).ln());
    log.exp()
}

/// `2 |z|^d δ^n / d! · e^{Re b + 3|z|}` with `δ = max(|r|, 1/|r|)` and the
/// convention `|z|^0 = 1`.
///
/// For `a c = 0` the coupling ratio is degenerate: `δ = 1, z = 0` when both
/// vanish, otherwise the bound is `+inf`.
pub fn band_error_bound(spec: &TridiagSpec, d: usize) -> Result<f64> {
    if d >= spec.n {
        return Err(Error::invalid(format!("bandwidth d = {d} must be <= n - 1 = {}", spec.n - 1)));
    }
    let (zabs, delta) = match spec.ratio() {
        Some(r) => {
            let m = r.norm();
            ((spec.c * r).norm(), m.max(1.0 / m))
        }
        None if spec.a == ZERO && spec.c == ZERO => (0.0, 1.0),
        None => return Ok(f64::INFINITY),
    };
    Ok(band_bound_raw(zabs, delta, spec.b.re, spec.n, d))
}

fn band_bound_raw(zabs: f64, delta: f64, re_b: f64, n: usize, d: usize) -> f64 {
    let pow_z = if d == 0 { 0.0 } else if zabs == 0.0 { f64::NEG_INFINITY } else { d as f64 * zabs.ln() };
    let log_fact: f64 = (2..=d).map(|k| (k as f64).ln()).sum();
    let log = 2f64.ln() + pow_z + n as f64 * delta.ln() - log_fact + re_b + 3.0 * zabs;
    log.exp()
}

/// Smallest half-bandwidth whose truncation bound meets `tol`.
pub fn select_bandwidth(spec: &TridiagSpec, tol: f64) -> ErrorBudget {
    let approx = match spec.coupling() {
        Some(z) => approx_error_bound(spec.b, z, spec.n),
        None => 0.0,
    };
    let bound = |d| band_error_bound(spec, d).expect("d < n");
    let mut d = 0;
    let mut b = bound(0);
    while b > tol && d + 1 < spec.n {
        d += 1;
        b = bound(d);
    }
    ErrorBudget { approx_bound: approx, band_bound: b, requested_tol: tol, selected_d: d, satisfiable: b <= tol }
}

/// `‖E − E_d‖∞` for the dense materialization `E` of `rep`, computed
/// directly from the entries dropped by the truncation.
pub fn band_truncation_error(rep: &ToeHankExp, d: usize) -> f64 {
    let n = rep.n;
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| i.abs_diff(j) > d)
                .map(|j| rep.entry(i, j).norm())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// `exp` of the anti-tridiagonal `Z = J·tridiag(a, b, a)`, i.e. `b` on the
/// anti-diagonal and `a` beside it:
/// `exp(Z) = J (e^T − e^{−T}) / 2 + (e^T + e^{−T}) / 2`.
pub fn expm_anti_tridiag(a: C64, b: C64, n: usize) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::invalid("dimension n must be at least 1"));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("entries must be finite"));
    }
    if n == 1 {
        return Ok(DenseMatrix::from_fn(1, 1, |_, _| b.exp()));
    }
    let (plus, minus) = if a == ZERO {
        let p = ToeHankExp::new(unit(n), vec![ZERO; n], b.exp(), ONE)?;
        let m = ToeHankExp::new(unit(n), vec![ZERO; n], (-b).exp(), ONE)?;
        (p, m)
    } else {
        expm_pm_bessel(&TridiagSpec::symmetric(a, b, n)?)?
    };
    let ep = plus.materialize_dense();
    let em = minus.materialize_dense();
    let out = DenseMatrix::from_fn(n, n, |i, j| {
        let cosh = (ep.get(i, j) + em.get(i, j)) * 0.5;
        let sinh = (ep.get(n - 1 - i, j) - em.get(n - 1 - i, j)) * 0.5;
        cosh + sinh
    });
    if !out.is_finite() {
        return Err(Error::overflow("anti-tridiagonal exponential overflows"));
    }
    Ok(out)
}

fn unit(n: usize) -> Vec<C64> {
    let mut u = vec![ZERO; n];
    u[0] = ONE;
    u
}

/// Dense anti-tridiagonal matrix `J·tridiag(a, b, a)`.
pub fn anti_tridiag_dense(a: C64, b: C64, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        let k = (i + j + 1) as isize - n as isize;
        match k {
            0 => b,
            -1 | 1 => a,
            _ => ZERO,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i;
    use crate::c64;
    use crate::spectral::{expm_dense_small, expm_sym_tridiag_exact, expm_tridiag_exact};

    #[test]
    fn generators_for_unit_coupling() {
        let spec = TridiagSpec::new(ONE, ZERO, ONE, 4).unwrap();
        let rep = expm_toeplitz_bessel(&spec).unwrap();
        assert_eq!(rep.ratio, ONE);
        for k in 0..4 {
            let want = bessel_i(k, c64(2.0, 0.0)).unwrap();
            assert!((rep.u[k] - want).norm() <= 1e-15 * want.norm());
        }
        assert_eq!(rep.v.len(), 4);
        assert!((rep.v[0] - bessel_i(2, c64(2.0, 0.0)).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn zero_coupling_rejected() {
        let spec = TridiagSpec::new(ZERO, ONE, ONE, 4).unwrap();
        assert!(matches!(expm_toeplitz_bessel(&spec), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn matches_spectral_oracle_at_large_n() {
        let spec = TridiagSpec::new(ONE, c64(-2.0, 0.0), ONE, 200).unwrap();
        let approx = expm_toeplitz_bessel(&spec).unwrap().materialize_dense();
        let exact = expm_sym_tridiag_exact(ONE, c64(-2.0, 0.0), 200).unwrap();
        assert!(approx.diff_norm_inf(&exact).unwrap() <= 1e-13);
    }

    #[test]
    fn two_by_two_within_bound() {
        let rep = expm_sym_bessel(ONE, ZERO, 2).unwrap();
        let m = rep.materialize_dense();
        let (ch, sh) = (1f64.cosh(), 1f64.sinh());
        let exact = DenseMatrix::from_fn(2, 2, |i, j| c64(if i == j { ch } else { sh }, 0.0));
        let err = m.diff_norm_inf(&exact).unwrap();
        assert!(err <= approx_error_bound(ZERO, ONE, 2), "err = {err}");
    }

    #[test]
    fn single_entry_is_exact() {
        let spec = TridiagSpec::new(c64(3.0, 0.0), c64(0.5, 0.5), c64(-1.0, 2.0), 1).unwrap();
        let m = expm_toeplitz_bessel(&spec).unwrap().materialize_dense();
        assert_eq!(m.get(0, 0), c64(0.5, 0.5).exp());
    }

    #[test]
    fn approx_bound_values() {
        assert!((approx_error_bound(ZERO, ZERO, 1) - 0.03125).abs() < 1e-17);
        let v = approx_error_bound(c64(-2.0, 0.0), ONE, 10);
        let want = 0.5 * (-2f64).exp() * (1f64.exp().powi(2) / 22.0).powi(11);
        assert!((v - want).abs() < 1e-12 * want);
        assert!((4.1e-7..4.2e-7).contains(&v));
        let mut prev = approx_error_bound(c64(0.3, 0.0), c64(2.0, 0.0), 10);
        for n in [20, 40, 80, 160] {
            let b = approx_error_bound(c64(0.3, 0.0), c64(2.0, 0.0), n);
            assert!(b < prev);
            prev = b;
        }
        assert_eq!(approx_error_bound(c64(1e6, 0.0), c64(1e6, 0.0), 2), f64::INFINITY);
    }

    #[test]
    fn band_bound_values() {
        let mu: f64 = 1.7;
        let spec = TridiagSpec::symmetric(c64(mu, 0.0), c64(-0.4, 0.0), 30).unwrap();
        for d in [0usize, 1, 5, 12] {
            let fact: f64 = (1..=d).map(|k| k as f64).product();
            let want = 2.0 * mu.powi(d as i32) / fact * (-0.4 + 3.0 * mu).exp();
            let got = band_error_bound(&spec, d).unwrap();
            assert!((got - want).abs() < 1e-12 * want);
        }
        let zero = TridiagSpec::new(ZERO, c64(0.5, 0.0), ZERO, 1).unwrap();
        assert!((band_error_bound(&zero, 0).unwrap() - 2.0 * 0.5f64.exp()).abs() < 1e-15);
        assert!(band_error_bound(&spec, 30).is_err());
        // independent of n when symmetric
        let big = TridiagSpec::symmetric(c64(mu, 0.0), c64(-0.4, 0.0), 300).unwrap();
        assert_eq!(band_error_bound(&spec, 7).unwrap(), band_error_bound(&big, 7).unwrap());
    }

    #[test]
    fn bandwidth_selection() {
        let spec = TridiagSpec::symmetric(ONE, c64(-2.0, 0.0), 50).unwrap();
        let b = select_bandwidth(&spec, 1e-8);
        assert_eq!(b.selected_d, 13);
        assert!(b.satisfiable && b.band_bound <= 1e-8);
        assert!(band_error_bound(&spec, 12).unwrap() > 1e-8);
        assert_eq!(select_bandwidth(&spec, 1e3).selected_d, 0);

        // delta = 10, |z| = 10: delta^n outgrows 1/d! for every d < n
        let skew = TridiagSpec::new(c64(100.0, 0.0), ZERO, ONE, 50).unwrap();
        let b = select_bandwidth(&skew, 1e-8);
        assert!(!b.satisfiable);
        assert_eq!(b.selected_d, 49);
        assert!(b.band_bound > 1e-8);
    }

    #[test]
    fn measured_truncation_below_bound() {
        let spec = TridiagSpec::symmetric(ONE, c64(-2.0, 0.0), 60).unwrap();
        let rep = expm_toeplitz_bessel(&spec).unwrap();
        let mut prev = f64::INFINITY;
        for d in 0..12 {
            let err = band_truncation_error(&rep, d);
            let dense = rep.materialize_dense();
            let band = rep.materialize_band(d).unwrap().to_dense();
            assert!((dense.diff_norm_inf(&band).unwrap() - err).abs() <= 1e-15);
            assert!(err <= band_error_bound(&spec, d).unwrap());
            assert!(err <= prev);
            prev = err;
        }
    }

    #[test]
    fn positive_entries() {
        let rep = expm_toeplitz_bessel(&TridiagSpec::symmetric(ONE, c64(-2.0, 0.0), 100).unwrap()).unwrap();
        assert!(rep.materialize_dense().as_array().iter().all(|v| v.re > 0.0 && v.im == 0.0));
    }

    #[test]
    fn nonsymmetric_matches_oracle_in_symmetric_frame() {
        // tridiag(4, 0, 1): z = 2, ratio = 2
        let spec = TridiagSpec::new(c64(4.0, 0.0), ZERO, ONE, 40).unwrap();
        let rep = expm_toeplitz_bessel(&spec).unwrap();
        assert_eq!(rep.ratio, c64(2.0, 0.0));
        let sym = ToeHankExp { ratio: ONE, ..rep.clone() }.materialize_dense();
        let exact = expm_sym_tridiag_exact(c64(2.0, 0.0), ZERO, 40).unwrap();
        assert!(sym.diff_norm_inf(&exact).unwrap() <= 64.0 * f64::EPSILON * exact.norm_inf());
        // and in the original frame against the similarity oracle, entrywise
        let full = rep.materialize_dense();
        let oracle = expm_tridiag_exact(&spec).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let scale = 2f64.powi(i as i32 - j as i32) * exact.norm_inf();
                assert!((full.get(i, j) - oracle.get(i, j)).norm() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn pm_pair_reuses_sequence() {
        let spec = TridiagSpec::new(c64(0.6, 0.2), c64(0.1, -0.3), c64(0.9, 0.0), 12).unwrap();
        let (_, minus) = expm_pm_bessel(&spec).unwrap();
        let neg = TridiagSpec::new(-spec.a, -spec.b, -spec.c, 12).unwrap();
        let direct = expm_toeplitz_bessel(&neg).unwrap().materialize_dense();
        let m = minus.materialize_dense();
        assert!(m.diff_norm_inf(&direct).unwrap() < 1e-14 * direct.norm_inf());
    }

    #[test]
    fn anti_tridiag_closed_forms() {
        let b = c64(0.7, -0.2);
        let e = expm_anti_tridiag(ZERO, b, 5).unwrap();
        let want = DenseMatrix::from_fn(5, 5, |i, j| {
            let mut v = ZERO;
            if i == j {
                v += b.cosh();
            }
            if i + j == 4 {
                v += b.sinh();
            }
            v
        });
        assert!(e.diff_norm_inf(&want).unwrap() < 1e-15);
        let one = expm_anti_tridiag(c64(5.0, 0.0), b, 1).unwrap();
        assert_eq!(one.get(0, 0), b.exp());
    }

    #[test]
    fn anti_tridiag_against_pade() {
        // accuracy follows the approximation bound at z = a
        for n in [12usize, 20, 30] {
            let a = c64(0.5, 0.0);
            let e = expm_anti_tridiag(a, c64(-0.3, 0.0), n).unwrap();
            let dense = expm_dense_small(&anti_tridiag_dense(a, c64(-0.3, 0.0), n)).unwrap();
            assert!(e.diff_norm_inf(&dense).unwrap() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn anti_dense_layout() {
        let z = anti_tridiag_dense(c64(1.0, 0.0), c64(2.0, 0.0), 3);
        let want = [[0.0, 1.0, 2.0], [1.0, 2.0, 1.0], [2.0, 1.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(z.get(i, j).re, want[i][j]);
            }
        }
    }
}
