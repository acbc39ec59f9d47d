//! Wall-clock comparison of the Bessel construction against dense Padé.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use toepexp::block::{assemble_block_tridiag, expm_block_tridiag};
use toepexp::expm::{expm_toeplitz_bessel, select_bandwidth};
use toepexp::matrices::{DenseMatrix, TridiagSpec};
use toepexp::spectral::expm_dense_small;
use toepexp::{c64, Result, C64};

/// Work charged to the structured method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Materialize {
    /// Every entry, the same output the dense oracle produces.
    #[default]
    Dense,
    /// Entries within the half-bandwidth selected at the run tolerance.
    Band,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub t_method: f64,
    pub t_oracle: f64,
}

impl BenchRow {
    /// Oracle time over method time.
    pub fn ratio(&self) -> f64 {
        self.t_oracle / self.t_method
    }
}

/// Bytes the dense Padé oracle keeps live for an `n × n` complex problem.
pub fn oracle_bytes(n: usize) -> u64 {
    const LIVE_MATRICES: u64 = 8;
    LIVE_MATRICES * (n as u64).pow(2) * std::mem::size_of::<C64>() as u64
}

fn mean_seconds(trials: usize, mut run: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..trials {
        let t0 = Instant::now();
        run()?;
        total += t0.elapsed().as_secs_f64();
    }
    Ok(total / trials.max(1) as f64)
}

/// Times Bessel evaluation plus materialization. The dense output buffer is
/// allocated once up front, so samples measure the construction rather than
/// page faults on a fresh allocation.
pub struct MethodTimer<'a> {
    spec: &'a TridiagSpec,
    tol: f64,
    out: Option<DenseMatrix>,
}

impl<'a> MethodTimer<'a> {
    pub fn new(spec: &'a TridiagSpec, materialize: Materialize, tol: f64) -> Self {
        let out = (materialize == Materialize::Dense).then(|| DenseMatrix::zeros(spec.n, spec.n));
        Self { spec, tol, out }
    }

    /// One timed run, in seconds.
    pub fn sample(&mut self) -> Result<f64> {
        let t0 = Instant::now();
        let rep = expm_toeplitz_bessel(self.spec)?;
        match &mut self.out {
            Some(out) => {
                rep.materialize_dense_into(out)?;
                black_box(&*out);
            }
            None => {
                let d = select_bandwidth(self.spec, self.tol).selected_d;
                black_box(rep.materialize_band(d)?);
            }
        }
        Ok(t0.elapsed().as_secs_f64())
    }
}

/// Mean of `trials` timed runs after one warm-up.
pub fn time_method(spec: &TridiagSpec, materialize: Materialize, tol: f64, trials: usize) -> Result<f64> {
    let mut timer = MethodTimer::new(spec, materialize, tol);
    timer.sample()?;
    let mut total = 0.0;
    for _ in 0..trials {
        total += timer.sample()?;
    }
    Ok(total / trials.max(1) as f64)
}

/// Mean time of dense Padé on the materialized tridiagonal matrix.
pub fn time_oracle(spec: &TridiagSpec, trials: usize) -> Result<f64> {
    let dense = spec.to_dense();
    mean_seconds(trials, || {
        black_box(expm_dense_small(&dense)?);
        Ok(())
    })
}

pub fn bench_tridiag(spec: &TridiagSpec, materialize: Materialize, tol: f64, trials: usize) -> Result<BenchRow> {
    Ok(BenchRow {
        n: spec.n,
        t_method: time_method(spec, materialize, tol, trials)?,
        t_oracle: time_oracle(spec, trials)?,
    })
}

/// The 3 × 3 block pair used by default for the block family.
pub fn demo_blocks() -> (DenseMatrix, DenseMatrix) {
    let real = |rows: [[f64; 3]; 3]| DenseMatrix::from_fn(3, 3, |i, j| c64(rows[i][j], 0.0));
    (
        real([[1.0, -2.0, 3.0], [0.0, -4.0, 3.0], [-1.0, 0.0, 5.0]]),
        real([[-1.0, -1.0, 2.0], [-1.0, -1.0, 1.0], [1.0, -1.0, -2.0]]),
    )
}

/// Blocks with entries uniform on `[-1, 1]`.
pub fn random_blocks(m: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || DenseMatrix::from_fn(m, m, |_, _| c64(rng.gen_range(-1.0..=1.0), 0.0));
    let first = draw();
    (first, draw())
}

/// Block family: `nblocks` blocks, `z = 1`, `t1 = 30`, `t2 = min(30, nblocks + 1)`.
pub fn bench_block(m: &DenseMatrix, nmat: &DenseMatrix, nblocks: usize, trials: usize) -> Result<BenchRow> {
    let z = c64(1.0, 0.0);
    let method = || -> Result<()> {
        black_box(expm_block_tridiag(m, nmat, z, nblocks, 30, 30.min(nblocks + 1))?.materialize());
        Ok(())
    };
    let t_method = mean_seconds(trials, method)?;
    let q = assemble_block_tridiag(m, nmat, z, nblocks)?;
    let t_oracle = mean_seconds(trials, || {
        black_box(expm_dense_small(&q)?);
        Ok(())
    })?;
    Ok(BenchRow { n: nblocks * m.rows(), t_method, t_oracle })
}
