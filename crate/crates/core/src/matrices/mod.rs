//! Structured matrix storage.
//!
//! Indices are 0-based everywhere in the API. Dense matrices are row-major.
//! For 2D problems a vector of length `p * q` is read as `p` contiguous blocks
//! of length `q`; the fast (within-block) index is the x direction.

pub mod io;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `tridiag(a, b, c)` of order `n`: `a` on the subdiagonal, `b` on the
/// diagonal, `c` on the superdiagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TridiagSpec {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub n: usize,
}

impl TridiagSpec {
    pub fn new(a: C64, b: C64, c: C64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dimension n must be at least 1"));
        }
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::invalid("tridiagonal entries must be finite"));
        }
        Ok(Self { a, b, c, n })
    }

    /// Real symmetric `tridiag(z, b, z)`.
    pub fn symmetric(z: C64, b: C64, n: usize) -> Result<Self> {
        Self::new(z, b, z, n)
    }

    pub fn is_symmetric(&self) -> bool {
        self.a == self.c
    }

    /// `sqrt(a / c)` on the principal branch, `None` when `a * c == 0`.
    pub fn ratio(&self) -> Option<C64> {
        if self.a == ZERO || self.c == ZERO {
            None
        } else if self.a == self.c {
            Some(ONE)
        } else {
            Some((self.a / self.c).sqrt())
        }
    }

    /// Off-diagonal of the similar symmetric matrix, `c * sqrt(a / c)`.
    pub fn coupling(&self) -> Option<C64> {
        self.ratio().map(|r| self.c * r)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.b
            } else if i == j + 1 {
                self.a
            } else if j == i + 1 {
                self.c
            } else {
                ZERO
            }
        })
    }
}

/// Dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: Array2<C64>,
}

impl DenseMatrix {
    pub fn from_array(data: Array2<C64>) -> Self {
        Self { data }
    }

    pub fn from_real(data: &Array2<f64>) -> Self {
        Self { data: data.mapv(|x| C64::new(x, 0.0)) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { data: Array2::zeros((rows, cols)) }
    }

    pub fn identity(n: usize) -> Self {
        Self { data: Array2::eye(n) }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { data: Array2::from_shape_fn((rows, cols), |(i, j)| f(i, j)) }
    }

    /// Builds from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        let flat: Vec<C64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((r, c), flat).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self { data })
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[[i, j]]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[[i, j]] = v;
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn as_array_mut(&mut self) -> &mut Array2<C64> {
        &mut self.data
    }

    pub fn into_array(self) -> Array2<C64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn norm_inf(&self) -> f64 {
        self.data
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::invalid("matmul: inner dimensions differ"));
        }
        Ok(Self { data: self.data.dot(&other.data) })
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols() {
            return Err(Error::invalid("matvec: length mismatch"));
        }
        let x = Array1::from(x.to_vec());
        Ok(self.data.dot(&x).to_vec())
    }

    /// Explicit Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let (p, q) = (self.rows(), self.cols());
        let (r, s) = (other.rows(), other.cols());
        Self::from_fn(p * r, q * s, |i, j| self.data[[i / r, j / s]] * other.data[[i % r, j % s]])
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self { data: self.data.t().to_owned() }
    }

    pub fn scale(&self, s: C64) -> DenseMatrix {
        Self { data: self.data.mapv(|v| v * s) }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        Ok(Self { data: &self.data + &other.data })
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_same_shape(other)?;
        Ok(Self { data: &self.data - &other.data })
    }

    /// `‖self − other‖∞`.
    pub fn diff_norm_inf(&self, other: &DenseMatrix) -> Result<f64> {
        Ok(self.sub(other)?.norm_inf())
    }

    fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.data.dim() != other.data.dim() {
            return Err(Error::invalid("shape mismatch"));
        }
        Ok(())
    }
}

/// Square band matrix with half-bandwidth `d`, stored row by row: row `i`
/// holds columns `i − d ..= i + d`, positions outside `0..n` kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    d: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d >= n {
            return Err(Error::invalid(format!("bandwidth d = {d} must satisfy 0 <= d <= n - 1 (n = {n})")));
        }
        Ok(Self { n, d, data: vec![ZERO; n * (2 * d + 1)] })
    }

    /// Keeps the entries of `m` with `|i − j| <= d`.
    pub fn from_dense(m: &DenseMatrix, d: usize) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("band storage needs a square matrix"));
        }
        let mut band = Self::zeros(m.rows(), d)?;
        for i in 0..band.n {
            for j in band.row_range(i) {
                band.set(i, j, m.get(i, j));
            }
        }
        Ok(band)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.d
    }

    /// Columns stored for row `i` that lie inside the matrix.
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.d)..(i + self.d + 1).min(self.n)
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * (2 * self.d + 1) + (j + self.d - i)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i.abs_diff(j) > self.d || i >= self.n || j >= self.n {
            ZERO
        } else {
            self.data[self.slot(i, j)]
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(i.abs_diff(j) <= self.d && i < self.n && j < self.n, "({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    /// Diagonal at `offset` (`j − i`), of length `n − |offset|`.
    pub fn diagonal(&self, offset: isize) -> Vec<C64> {
        let k = offset.unsigned_abs();
        if k > self.d {
            return vec![ZERO; self.n.saturating_sub(k)];
        }
        (0..self.n - k)
            .map(|t| if offset >= 0 { self.get(t, t + k) } else { self.get(t + k, t) })
            .collect()
    }

    /// Raw row-wise storage, `n * (2d + 1)` entries.
    pub fn raw(&self) -> &[C64] {
        &self.data
    }

    pub fn from_raw(n: usize, d: usize, data: Vec<C64>) -> Result<Self> {
        let mut band = Self::zeros(n, d)?;
        if data.len() != band.data.len() {
            return Err(Error::invalid("band storage length mismatch"));
        }
        band.data = data;
        for i in 0..n {
            for j in (i as isize - d as isize)..=(i + d) as isize {
                if j < 0 || j >= n as isize {
                    let s = i * (2 * d + 1) + (j + d as isize - i as isize) as usize;
                    band.data[s] = ZERO;
                }
            }
        }
        Ok(band)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.row_range(i) {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.n {
            return Err(Error::invalid("band matvec: length mismatch"));
        }
        Ok((0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect())
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Compact exponential `diag_factor · ratio^{i−j} · (u[|i−j|] − h(i+j))`.
///
/// `u[k] = I_k(2z)` for `k < n`; `v[t] = I_{t+2}(2z)` for `t < n`. The
/// Hankel lookup `h` uses the 1-based index sum `s = i + j + 2` and reads
/// `I_s` for `s <= n + 1`, `I_{2n+2−s}` beyond, so every materialization is
/// persymmetric by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeHankExp {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub diag_factor: C64,
    pub ratio: C64,
    pub n: usize,
}

/// Materialization target for [`ToeHankExp::materialize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dense,
    Band(usize),
}

/// Result of [`ToeHankExp::materialize`].
#[derive(Debug, Clone, PartialEq)]
pub enum Materialized {
    Dense(DenseMatrix),
    Band(BandMatrix),
}

impl Materialized {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Materialized::Dense(m) => m.clone(),
            Materialized::Band(b) => b.to_dense(),
        }
    }
}

impl ToeHankExp {
    pub fn new(u: Vec<C64>, v: Vec<C64>, diag_factor: C64, ratio: C64) -> Result<Self> {
        let n = u.len();
        if n == 0 || v.len() != n {
            return Err(Error::invalid("u and v must be nonempty and of equal length"));
        }
        if ratio == ZERO || !ratio.is_finite() {
            return Err(Error::invalid("ratio must be finite and nonzero"));
        }
        let (mut u, mut v) = (u, v);
        flush_negligible(&mut u, diag_factor, ratio);
        flush_negligible(&mut v, diag_factor, ratio);
        Ok(Self { u, v, diag_factor, ratio, n })
    }

    /// Hankel term for the 1-based index sum `s` in `2..=2n`.
    pub fn hankel(&self, s: usize) -> C64 {
        let m = s.min(2 * self.n + 2 - s);
        self.v[m - 2]
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        let k = i.abs_diff(j);
        let base = self.ratio_base(i >= j);
        let t = self.u[k] - self.hankel(i + j + 2);
        let p = base.powu(k as u32);
        scaled_product(self.diag_factor, p, scale(self.diag_factor, p), base, k, t)
    }

    fn ratio_base(&self, lower: bool) -> C64 {
        if lower {
            self.ratio
        } else {
            self.ratio.inv()
        }
    }

    /// Entries of row `i` for columns `cols`.
    fn fill_row(&self, i: usize, cols: std::ops::Range<usize>, lower: &PowerTable, upper: &PowerTable, out: &mut [C64]) {
        let split = i.clamp(cols.start, cols.end) - cols.start;
        let (left, right) = out.split_at_mut(split);
        for (slot, j) in left.iter_mut().zip(cols.start..) {
            let k = i - j;
            *slot = lower.times(k, self.u[k] - self.hankel(i + j + 2));
        }
        for (slot, j) in right.iter_mut().zip(cols.start + split..) {
            let k = j - i;
            *slot = upper.times(k, self.u[k] - self.hankel(i + j + 2));
        }
    }

    pub fn materialize_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n, self.n);
        self.materialize_dense_into(&mut out).expect("shape matches");
        out
    }

    /// Dense materialization into an existing `n × n` buffer, so repeated
    /// evaluations reuse one allocation.
    pub fn materialize_dense_into(&self, out: &mut DenseMatrix) -> Result<()> {
        let n = self.n;
        if out.rows() != n || out.cols() != n {
            return Err(Error::invalid(format!("output must be {n}x{n}, got {}x{}", out.rows(), out.cols())));
        }
        let lower = PowerTable::new(self.ratio, n - 1, self.diag_factor);
        let upper = PowerTable::new(self.ratio.inv(), n - 1, self.diag_factor);
        for (i, mut row) in out.as_array_mut().rows_mut().into_iter().enumerate() {
            let slice = row.as_slice_mut().expect("standard layout");
            self.fill_row(i, 0..n, &lower, &upper, slice);
        }
        Ok(())
    }

    pub fn materialize_band(&self, d: usize) -> Result<BandMatrix> {
        let mut band = BandMatrix::zeros(self.n, d)?;
        let lower = PowerTable::new(self.ratio, d, self.diag_factor);
        let upper = PowerTable::new(self.ratio.inv(), d, self.diag_factor);
        let w = 2 * d + 1;
        for i in 0..self.n {
            let cols = band.row_range(i);
            let start = i * w + (cols.start + d - i);
            let len = cols.len();
            let mut row = vec![ZERO; len];
            self.fill_row(i, cols, &lower, &upper, &mut row);
            band.data[start..start + len].copy_from_slice(&row);
        }
        Ok(band)
    }

    pub fn materialize(&self, mode: Mode) -> Result<Materialized> {
        match mode {
            Mode::Dense => Ok(Materialized::Dense(self.materialize_dense())),
            Mode::Band(d) => self.materialize_band(d).map(Materialized::Band),
        }
    }

    /// `‖·‖∞` of the dense materialization, computed row by row.
    pub fn norm_inf(&self) -> f64 {
        let n = self.n;
        let lower = PowerTable::new(self.ratio, n - 1, self.diag_factor);
        let upper = PowerTable::new(self.ratio.inv(), n - 1, self.diag_factor);
        let mut row = vec![ZERO; n];
        (0..n)
            .map(|i| {
                self.fill_row(i, 0..n, &lower, &upper, &mut row);
                row.iter().map(|v| v.norm()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// `base^k · x`, falling back to logarithms when the power alone overflows
/// or underflows but the product is representable.
/// Zeroes generator values whose every contribution `f·r^{±k}·x` stays
/// below the smallest normal double. Such values only reach the output as
/// subnormals, and subnormal arithmetic is two orders of magnitude slower.
fn flush_negligible(values: &mut [C64], diag_factor: C64, ratio: C64) {
    let delta = ratio.norm().max(1.0 / ratio.norm());
    let log_gain = diag_factor.norm().ln() + (values.len().saturating_sub(1)) as f64 * delta.ln();
    let log_floor = f64::MIN_POSITIVE.ln();
    for x in values.iter_mut() {
        if x.norm() < f64::MIN_POSITIVE && x.norm().ln() + log_gain < log_floor {
            *x = ZERO;
        }
    }
}

/// `factor·p` when both it and `p` are finite and nonzero.
fn scale(factor: C64, p: C64) -> Option<C64> {
    let s = factor * p;
    (p.is_finite() && p != ZERO && s.is_finite() && s != ZERO).then_some(s)
}

/// `factor·base^k·x` with `p = base^k` and `scaled = scale(factor, p)`,
/// falling back to log space when the plain product over- or underflows.
fn scaled_product(factor: C64, p: C64, scaled: Option<C64>, base: C64, k: usize, x: C64) -> C64 {
    if let Some(s) = scaled {
        let y = s * x;
        if y.is_finite() {
            return y;
        }
    }
    if x == ZERO {
        ZERO
    } else {
        factor * combine(p, base, k, x)
    }
}

fn combine(p: C64, base: C64, k: usize, x: C64) -> C64 {
    let y = p * x;
    if p.is_finite() && p != ZERO && y.is_finite() {
        y
    } else {
        (base.ln() * k as f64 + x.ln()).exp()
    }
}

struct PowerTable {
    base: C64,
    factor: C64,
    pows: Vec<C64>,
    /// `factor·base^k` where it is finite and nonzero.
    scaled: Vec<Option<C64>>,
}

impl PowerTable {
    fn new(base: C64, kmax: usize, factor: C64) -> Self {
        let pows: Vec<C64> = (0..=kmax).map(|k| base.powu(k as u32)).collect();
        let scaled = pows.iter().map(|&p| scale(factor, p)).collect();
        Self { base, factor, pows, scaled }
    }

    fn times(&self, k: usize, x: C64) -> C64 {
        scaled_product(self.factor, self.pows[k], self.scaled[k], self.base, k, x)
    }
}

/// Side on which the backward identity `J` acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `J·M` (rows reversed) or `M·J` (columns reversed).
pub fn backward_identity_apply(side: Side, m: &DenseMatrix) -> Result<DenseMatrix> {
    if !m.is_square() {
        return Err(Error::invalid("backward identity needs a square matrix"));
    }
    let n = m.rows();
    Ok(match side {
        Side::Left => DenseMatrix::from_fn(n, n, |i, j| m.get(n - 1 - i, j)),
        Side::Right => DenseMatrix::from_fn(n, n, |i, j| m.get(i, n - 1 - j)),
    })
}

/// `(K ⊗ G)·u` without forming the Kronecker product.
///
/// `u` is read as `p` blocks of length `q` (rows of a `p × q` matrix `X`);
/// the result is `K·X·Gᵀ` flattened the same way.
pub fn kron_matvec(k: &DenseMatrix, g: &DenseMatrix, u: &[C64]) -> Result<Vec<C64>> {
    if !k.is_square() || !g.is_square() {
        return Err(Error::invalid("kron_matvec factors must be square"));
    }
    let (p, q) = (k.rows(), g.rows());
    if u.len() != p * q {
        return Err(Error::invalid(format!("vector length {} != {p} * {q}", u.len())));
    }
    let x = Array2::from_shape_vec((p, q), u.to_vec()).expect("length checked");
    let y = k.as_array().dot(&x).dot(&g.as_array().t());
    Ok(y.into_iter().collect())
}
