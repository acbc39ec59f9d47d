//! Block tridiagonal Toeplitz exponentials.
//!
//! For `Q = tridiag(z, 0, z) ⊗ N + I ⊗ M` the scalar Bessel values generalize
//! to the matrix-valued cosine coefficients
//! `Φ_k = (1/π) ∫₀^π exp(M + 2zN cos θ) cos kθ dθ`,
//! computed by the trapezoidal rule on one grid shared by every `k`.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::expm::expm_toeplitz_bessel;
use crate::matrices::{DenseMatrix, TridiagSpec};
use crate::spectral::{expm_dense_small, expm_tridiag_exact};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Compact block exponential: block `(i, j)` is
/// `ratio^{i−j} (Φ_{|i−j|} − Φ_h)` with the Hankel order `h` reflected past
/// `n + 1` and orders above `t2` mapped by `Φ_k = Φ_{k−2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeHankExp {
    pub m: usize,
    pub n: usize,
    /// `Φ_0 ..= Φ_kmax` with `kmax = min(t2, n + 1)`.
    pub phis: Vec<DenseMatrix>,
    pub t1: usize,
    pub t2: usize,
    pub ratio: C64,
}

impl BlockToeHankExp {
    /// Order actually read for `Φ_k`.
    pub fn effective_order(&self, k: usize) -> usize {
        if k <= self.t2 {
            k
        } else if (k - self.t2) % 2 == 1 {
            self.t2 - 1
        } else {
            self.t2
        }
    }

    pub fn phi(&self, k: usize) -> &DenseMatrix {
        &self.phis[self.effective_order(k)]
    }

    pub fn block(&self, i: usize, j: usize) -> DenseMatrix {
        let k = i.abs_diff(j);
        let s = i + j + 2;
        let h = s.min(2 * self.n + 2 - s);
        let scale = self.ratio.powi(i as i32 - j as i32);
        let diff = self.phi(k).sub(self.phi(h)).expect("equal block sizes");
        diff.scale(scale)
    }

    /// Dense `nm × nm` matrix, row index `i·m + r` for block row `i`.
    pub fn materialize(&self) -> DenseMatrix {
        let (m, n) = (self.m, self.n);
        let mut out = Array2::zeros((n * m, n * m));
        for i in 0..n {
            for j in 0..n {
                let b = self.block(i, j);
                out.slice_mut(ndarray::s![i * m..(i + 1) * m, j * m..(j + 1) * m]).assign(b.as_array());
            }
        }
        DenseMatrix::from_array(out)
    }
}

/// Node count for the quadrature of the `Φ_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    /// `t1` intervals on `[0, π]`.
    Fixed(usize),
    /// Doubling from 16 intervals until successive coefficient sets differ
    /// by less than `tol · max(1, ‖Φ_0‖∞)`, up to `max`.
    Adaptive { tol: f64, max: usize },
}

/// Order above which `Φ_k := Φ_{k−2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stabilization {
    Fixed(usize),
    /// Smallest `k >= 2` with `‖Φ_k − Φ_{k−2}‖∞ < tol`, else `n + 1`.
    Adaptive { tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOptions {
    pub quadrature: Quadrature,
    pub stabilization: Stabilization,
}

impl Default for BlockOptions {
    fn default() -> Self {
        Self {
            quadrature: Quadrature::Adaptive { tol: 1e-12, max: 4096 },
            stabilization: Stabilization::Adaptive { tol: 1e-12 },
        }
    }
}

fn check_blocks(m: &DenseMatrix, nmat: &DenseMatrix) -> Result<()> {
    if !m.is_square() || !nmat.is_square() || m.rows() != nmat.rows() {
        return Err(Error::invalid("M and N must be square of equal size"));
    }
    Ok(())
}

/// Integrand `exp(M + 2zN cos θ_j)` at `θ_j = jπ/t1` for the listed `j`.
fn integrand(m: &DenseMatrix, nmat: &DenseMatrix, z: C64, t1: usize, nodes: impl Iterator<Item = usize>) -> Result<Vec<DenseMatrix>> {
    nodes
        .map(|j| {
            let w = z * 2.0 * (PI * j as f64 / t1 as f64).cos();
            expm_dense_small(&m.add(&nmat.scale(w))?)
        })
        .collect()
}

/// Trapezoidal `Φ_0 ..= Φ_kmax` from integrand values at all `t1 + 1` nodes.
fn project(values: &[DenseMatrix], t1: usize, kmax: usize) -> Vec<DenseMatrix> {
    let msize = values[0].rows();
    (0..=kmax)
        .map(|k| {
            let mut acc = Array2::<C64>::zeros((msize, msize));
            for (j, v) in values.iter().enumerate() {
                let w = if j == 0 || j == t1 { 0.5 } else { 1.0 };
                let c = w * (PI * ((k * j) % (2 * t1)) as f64 / t1 as f64).cos();
                acc.scaled_add(C64::new(c, 0.0), v.as_array());
            }
            DenseMatrix::from_array(acc.mapv(|x| x / t1 as f64))
        })
        .collect()
}

/// `Φ_0 ..= Φ_kmax` with a fixed trapezoidal grid of `t1` intervals.
pub fn phi_sequence(m: &DenseMatrix, nmat: &DenseMatrix, z: C64, kmax: usize, t1: usize) -> Result<Vec<DenseMatrix>> {
    check_blocks(m, nmat)?;
    if t1 < 4 {
        return Err(Error::invalid("t1 must be at least 4"));
    }
    let values = integrand(m, nmat, z, t1, 0..=t1)?;
    Ok(project(&values, t1, kmax))
}

/// Adaptive version of [`phi_sequence`]; also returns the final `t1`.
/// Each doubling reuses the integrand at the previous nodes.
pub fn phi_sequence_adaptive(
    m: &DenseMatrix,
    nmat: &DenseMatrix,
    z: C64,
    kmax: usize,
    tol: f64,
    max_t1: usize,
) -> Result<(Vec<DenseMatrix>, usize)> {
    check_blocks(m, nmat)?;
    let mut t1 = 16;
    let mut values = integrand(m, nmat, z, t1, 0..=t1)?;
    let mut phis = project(&values, t1, kmax);
    while 2 * t1 <= max_t1 {
        let odd = integrand(m, nmat, z, 2 * t1, (1..2 * t1).step_by(2))?;
        let mut merged = Vec::with_capacity(2 * t1 + 1);
        let mut odd_iter = odd.into_iter();
        for (j, v) in values.into_iter().enumerate() {
            if j > 0 {
                merged.push(odd_iter.next().expect("one odd node per interval"));
            }
            merged.push(v);
        }
        values = merged;
        t1 *= 2;
        let next = project(&values, t1, kmax);
        let scale = next[0].norm_inf().max(1.0);
        let diff = next
            .iter()
            .zip(&phis)
            .map(|(a, b)| a.diff_norm_inf(b).expect("same shape"))
            .fold(0.0, f64::max);
        phis = next;
        if diff < tol * scale {
            break;
        }
    }
    Ok((phis, t1))
}

/// Single coefficient `Φ_k` with `t1` intervals.
pub fn phi_k(m: &DenseMatrix, nmat: &DenseMatrix, z: C64, k: usize, t1: usize) -> Result<DenseMatrix> {
    let mut all = phi_sequence(m, nmat, z, k, t1)?;
    Ok(all.pop().expect("kmax + 1 entries"))
}

/// Approximates `exp(tridiag(z, 0, z) ⊗ N + I_n ⊗ M)` with fixed `t1`, `t2`.
pub fn expm_block_tridiag(m: &DenseMatrix, nmat: &DenseMatrix, z: C64, n: usize, t1: usize, t2: usize) -> Result<BlockToeHankExp> {
    let opts = BlockOptions { quadrature: Quadrature::Fixed(t1), stabilization: Stabilization::Fixed(t2) };
    expm_block_tridiag_with(m, nmat, z, n, &opts)
}

pub fn expm_block_tridiag_with(m: &DenseMatrix, nmat: &DenseMatrix, z: C64, n: usize, opts: &BlockOptions) -> Result<BlockToeHankExp> {
    assemble_rep(m, nmat, z, ONE, n, opts)
}

/// Approximates `exp(I_n ⊗ M + tridiag(a, 0, c) ⊗ N)`; needs `a c != 0`.
pub fn expm_block_nonsym(m: &DenseMatrix, nmat: &DenseMatrix, a: C64, c: C64, n: usize, t1: usize, t2: usize) -> Result<BlockToeHankExp> {
    let opts = BlockOptions { quadrature: Quadrature::Fixed(t1), stabilization: Stabilization::Fixed(t2) };
    expm_block_nonsym_with(m, nmat, a, c, n, &opts)
}

pub fn expm_block_nonsym_with(m: &DenseMatrix, nmat: &DenseMatrix, a: C64, c: C64, n: usize, opts: &BlockOptions) -> Result<BlockToeHankExp> {
    let spec = TridiagSpec::new(a, ZERO, c, n.max(1))?;
    let ratio = spec.ratio().ok_or_else(|| Error::invalid("a * c = 0 has no block Bessel form"))?;
    assemble_rep(m, nmat, c * ratio, ratio, n, opts)
}

fn assemble_rep(m: &DenseMatrix, nmat: &DenseMatrix, z: C64, ratio: C64, n: usize, opts: &BlockOptions) -> Result<BlockToeHankExp> {
    check_blocks(m, nmat)?;
    if n == 0 {
        return Err(Error::invalid("block count n must be at least 1"));
    }
    if n == 1 {
        // no coupling inside a single block
        return Ok(BlockToeHankExp { m: m.rows(), n, phis: vec![expm_dense_small(m)?, DenseMatrix::zeros(m.rows(), m.rows())], t1: 0, t2: 1, ratio });
    }
    let kmax = match opts.stabilization {
        Stabilization::Fixed(t2) => {
            if t2 == 0 || t2 > n + 1 {
                return Err(Error::invalid(format!("t2 = {t2} must satisfy 1 <= t2 <= n + 1 = {}", n + 1)));
            }
            t2
        }
        Stabilization::Adaptive { .. } => n + 1,
    };
    let (mut phis, t1) = match opts.quadrature {
        Quadrature::Fixed(t1) => (phi_sequence(m, nmat, z, kmax, t1)?, t1),
        Quadrature::Adaptive { tol, max } => phi_sequence_adaptive(m, nmat, z, kmax, tol, max)?,
    };
    let t2 = match opts.stabilization {
        Stabilization::Fixed(t2) => t2,
        Stabilization::Adaptive { tol } => {
            let t2 = (2..=n + 1)
                .find(|&k| phis[k].diff_norm_inf(&phis[k - 2]).expect("same shape") < tol)
                .unwrap_or(n + 1);
            phis.truncate(t2 + 1);
            t2
        }
    };
    if phis.iter().any(|p| !p.is_finite()) {
        return Err(Error::overflow("non-finite block coefficient"));
    }
    Ok(BlockToeHankExp { m: m.rows(), n, phis, t1, t2, ratio })
}

/// Dense `tridiag(z, 0, z) ⊗ N + I_n ⊗ M`.
pub fn assemble_block_tridiag(m: &DenseMatrix, nmat: &DenseMatrix, z: C64, n: usize) -> Result<DenseMatrix> {
    assemble_block_nonsym(m, nmat, z, z, n)
}

/// Dense `I_n ⊗ M + tridiag(a, 0, c) ⊗ N`.
pub fn assemble_block_nonsym(m: &DenseMatrix, nmat: &DenseMatrix, a: C64, c: C64, n: usize) -> Result<DenseMatrix> {
    check_blocks(m, nmat)?;
    let outer = TridiagSpec::new(a, ZERO, c, n)?.to_dense();
    outer.kron(nmat).add(&DenseMatrix::identity(n).kron(m))
}

/// Factors of `exp(tridiag(z, 0, z)_n ⊕ A) = exp(H_n) ⊗ exp(A)` with `A`
/// given by `spec`. Apply through [`crate::matrices::kron_matvec`].
pub fn expm_kronecker_sum(z: C64, n: usize, spec: &TridiagSpec) -> Result<(DenseMatrix, DenseMatrix)> {
    let left = crate::expm::expm_sym_bessel(z, ZERO, n)?.materialize_dense();
    let right = match spec.ratio() {
        Some(_) => expm_toeplitz_bessel(spec)?.materialize_dense(),
        None => expm_tridiag_exact(spec)?,
    };
    Ok((left, right))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::bessel_i;
    use crate::c64;

    fn example_blocks() -> (DenseMatrix, DenseMatrix) {
        let r = |rows: [[f64; 3]; 3]| DenseMatrix::from_fn(3, 3, |i, j| c64(rows[i][j], 0.0));
        (
            r([[1.0, -2.0, 3.0], [0.0, -4.0, 3.0], [-1.0, 0.0, 5.0]]),
            r([[-1.0, -1.0, 2.0], [-1.0, -1.0, 1.0], [1.0, -1.0, -2.0]]),
        )
    }

    #[test]
    fn zero_coupling_block() {
        let (m, _) = example_blocks();
        let zero = DenseMatrix::zeros(3, 3);
        let e = expm_dense_small(&m).unwrap();
        let p0 = phi_k(&m, &zero, ONE, 0, 16).unwrap();
        assert!(p0.diff_norm_inf(&e).unwrap() < 1e-12 * e.norm_inf());
        let p2 = phi_k(&m, &zero, ONE, 2, 16).unwrap();
        assert!(p2.norm_inf() < 1e-12 * e.norm_inf());
        let rep = expm_block_tridiag(&m, &zero, ONE, 4, 16, 5).unwrap();
        let dense = rep.materialize();
        for i in 0..4 {
            for j in 0..4 {
                let b = rep.block(i, j);
                if i == j {
                    assert!(b.diff_norm_inf(&e).unwrap() < 1e-12 * e.norm_inf());
                } else {
                    assert!(b.norm_inf() < 1e-12 * e.norm_inf());
                }
            }
        }
        assert_eq!(dense.rows(), 12);
    }

    #[test]
    fn scalar_phi_is_bessel() {
        let m = DenseMatrix::zeros(1, 1);
        let nm = DenseMatrix::identity(1);
        let p = phi_k(&m, &nm, ONE, 3, 32).unwrap();
        let want = bessel_i(3, c64(2.0, 0.0)).unwrap();
        assert!((p.get(0, 0) - want).norm() < 1e-14);
    }

    #[test]
    fn effective_order_rule() {
        let rep = BlockToeHankExp { m: 1, n: 10, phis: vec![DenseMatrix::zeros(1, 1); 5], t1: 4, t2: 4, ratio: ONE };
        let got: Vec<usize> = (0..10).map(|k| rep.effective_order(k)).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 3, 4, 3, 4, 3]);
    }

    #[test]
    fn adaptive_quadrature_converges_and_reuses_nodes() {
        let (m, nm) = example_blocks();
        let (phis, t1) = phi_sequence_adaptive(&m, &nm, c64(0.5, 0.0), 6, 1e-12, 512).unwrap();
        assert!(t1 <= 512);
        let fixed = phi_sequence(&m, &nm, c64(0.5, 0.0), 6, t1).unwrap();
        for (a, b) in phis.iter().zip(&fixed) {
            assert!(a.diff_norm_inf(b).unwrap() < 1e-12 * a.norm_inf().max(1.0));
        }
    }

    #[test]
    fn diagonal_blocks_reduce_per_channel() {
        // commuting diagonal M, N: channel r is the scalar problem tridiag(z n_r, m_r, z n_r)
        let md = [0.3, -0.5];
        let nd = [1.0, 0.4];
        let m = DenseMatrix::from_fn(2, 2, |i, j| if i == j { c64(md[i], 0.0) } else { ZERO });
        let nm = DenseMatrix::from_fn(2, 2, |i, j| if i == j { c64(nd[i], 0.0) } else { ZERO });
        let n = 8;
        let rep = expm_block_tridiag(&m, &nm, ONE, n, 64, n + 1).unwrap();
        for r in 0..2 {
            let scalar = crate::expm::expm_sym_bessel(c64(nd[r], 0.0), c64(md[r], 0.0), n).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let got = rep.block(i, j).get(r, r);
                    assert!((got - scalar.entry(i, j)).norm() < 1e-12);
                    assert!(rep.block(i, j).get(r, 1 - r).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn kronecker_sum_factors() {
        let spec = TridiagSpec::new(c64(0.4, 0.0), c64(-0.2, 0.0), c64(0.9, 0.0), 2).unwrap();
        let (left, _) = expm_kronecker_sum(ZERO, 3, &spec).unwrap();
        assert_eq!(left, DenseMatrix::identity(3));

        // the Kronecker-sum identity itself, with exact factors
        let z = c64(0.3, 0.0);
        let h = TridiagSpec::symmetric(z, ZERO, 3).unwrap();
        let s = h.to_dense().kron(&DenseMatrix::identity(2)).add(&DenseMatrix::identity(3).kron(&spec.to_dense())).unwrap();
        let oracle = expm_dense_small(&s).unwrap();
        let exact = expm_tridiag_exact(&h).unwrap().kron(&expm_tridiag_exact(&spec).unwrap());
        assert!(exact.diff_norm_inf(&oracle).unwrap() < 1e-10);

        // the Bessel factors are each within their approximation bound
        let (left, right) = expm_kronecker_sum(z, 3, &spec).unwrap();
        let el = left.diff_norm_inf(&expm_tridiag_exact(&h).unwrap()).unwrap();
        assert!(el <= crate::expm::approx_error_bound(ZERO, z, 3));
        let er = right.diff_norm_inf(&expm_tridiag_exact(&spec).unwrap()).unwrap();
        let ratio = spec.ratio().unwrap().norm();
        assert!(er <= ratio.max(1.0 / ratio) * crate::expm::approx_error_bound(spec.b, spec.coupling().unwrap(), 2));
    }

    #[test]
    fn block_errors() {
        let m = DenseMatrix::zeros(2, 2);
        let nm = DenseMatrix::zeros(3, 3);
        assert!(phi_k(&m, &nm, ONE, 0, 8).is_err());
        assert!(phi_k(&m, &m, ONE, 0, 3).is_err());
        assert!(expm_block_tridiag(&m, &m, ONE, 4, 16, 6).is_err());
        assert!(expm_block_nonsym(&m, &m, ZERO, ONE, 4, 16, 4).is_err());
    }
}
