//! Exponential time stepping for `u_t = a Δu` with zero Dirichlet data.
//!
//! In 1D the semi-discrete system is `U' = (a/Δx²) tridiag(1, −2, 1) U`, so
//! one step of length `Δt` is multiplication by `exp(tridiag(μ, −2μ, μ))`,
//! `μ = aΔt/Δx²`. The propagator is built once from Bessel values and kept
//! as a band. In 2D the step splits into `K ⊗ G` with
//! `G = exp(tridiag(μx, −2μx − 2μy, μx))` and `K = exp(tridiag(μy, 0, μy))`.

mod config;
mod trajectory;

pub use config::{HeatConfig, Initial};
pub use trajectory::{StepStats, Trajectory};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::expm::{expm_toeplitz_bessel, select_bandwidth};
use crate::matrices::{BandMatrix, ToeHankExp, TridiagSpec};
use crate::spectral::expm_tridiag_exact;
use crate::C64;

/// Rounding allowance on `‖G‖∞ < 1`. Wide bands have row sums within
/// `1e-16` of one, which floating point cannot separate from one.
const NORM_SLACK: f64 = 1e-13;

/// How the propagator factors are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorSource {
    /// Bessel approximation, materialized straight into the band.
    Bessel,
    /// Exact sine-basis exponential, then truncated to the same band.
    Exact,
}

/// Anything with an exact `‖·‖∞`.
pub trait InfNorm {
    fn inf_norm(&self) -> f64;
}

impl InfNorm for ToeHankExp {
    fn inf_norm(&self) -> f64 {
        self.norm_inf()
    }
}

impl InfNorm for BandMatrix {
    fn inf_norm(&self) -> f64 {
        self.norm_inf()
    }
}

/// `‖G‖∞` of a propagator in compact or band form.
pub fn propagator_norm<P: InfNorm + ?Sized>(p: &P) -> f64 {
    p.inf_norm()
}

/// Real band matrix used for the time stepping.
#[derive(Debug, Clone)]
struct RealBand {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl RealBand {
    fn from_complex(b: &BandMatrix) -> Self {
        Self { n: b.n(), d: b.bandwidth(), data: b.raw().iter().map(|z| z.re).collect() }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let w = 2 * self.d + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.d);
            let hi = (i + self.d + 1).min(self.n);
            let row = &self.data[i * w + (lo + self.d - i)..i * w + (hi + self.d - i)];
            y[i] = row.iter().zip(&x[lo..hi]).map(|(a, b)| a * b).sum();
        }
    }
}

/// Band propagator for `exp(spec)` truncated at `d`.
fn band_factor(spec: &TridiagSpec, d: usize, source: FactorSource) -> Result<BandMatrix> {
    if d >= spec.n {
        return Err(Error::invalid(format!("band {d} exceeds n - 1 = {}", spec.n - 1)));
    }
    match source {
        FactorSource::Bessel => expm_toeplitz_bessel(spec)?.materialize_band(d),
        FactorSource::Exact => BandMatrix::from_dense(&expm_tridiag_exact(spec)?, d),
    }
}

fn heat_spec(mu: f64, diag: f64, n: usize) -> Result<TridiagSpec> {
    let m = C64::new(mu, 0.0);
    TridiagSpec::new(m, C64::new(diag, 0.0), m, n)
}

/// Band for `spec`: the requested one, or the smallest meeting `tol`.
fn choose_band(spec: &TridiagSpec, requested: Option<usize>, tol: f64) -> usize {
    requested.unwrap_or_else(|| select_bandwidth(spec, tol).selected_d)
}

/// The 1D propagator `G_{J−1,d}` used by [`heat1d_solve`].
pub fn heat1d_propagator(cfg: &HeatConfig, source: FactorSource) -> Result<BandMatrix> {
    cfg.validate()?;
    let mu = cfg.mu_x();
    let spec = heat_spec(mu, -2.0 * mu, cfg.jx - 1)?;
    let d = choose_band(&spec, cfg.band, cfg.dx().powi(2));
    let g = band_factor(&spec, d, source)?;
    let norm = g.norm_inf();
    if !(norm < 1.0 + NORM_SLACK) {
        return Err(Error::Unstable(format!("‖G‖∞ = {norm} >= 1 (mu = {mu}, d = {d})")));
    }
    Ok(g)
}

pub fn heat1d_solve(cfg: &HeatConfig) -> Result<Trajectory> {
    heat1d_solve_with(cfg, FactorSource::Bessel)
}

pub fn heat1d_solve_with(cfg: &HeatConfig, source: FactorSource) -> Result<Trajectory> {
    if cfg.dims != 1 {
        return Err(Error::invalid("heat1d_solve needs dims = 1"));
    }
    let g = RealBand::from_complex(&heat1d_propagator(cfg, source)?);
    let dt = cfg.time_step();
    let mut traj = Trajectory::new(cfg.nodes_x(), None, cfg.initial_state());
    let mut next = vec![0.0; g.n];
    for step in 1..=cfg.steps {
        g.apply(traj.last(), &mut next);
        traj.push(step as f64 * dt, next.clone());
    }
    Ok(traj)
}

/// The factors `(K, G)` of the 2D step `K ⊗ G`.
pub fn heat2d_factors(cfg: &HeatConfig, source: FactorSource) -> Result<(BandMatrix, BandMatrix)> {
    cfg.validate()?;
    if cfg.dims != 2 {
        return Err(Error::invalid("2D factors need dims = 2"));
    }
    let (mx, my) = (cfg.mu_x(), cfg.mu_y());
    let gspec = heat_spec(mx, -2.0 * mx - 2.0 * my, cfg.jx - 1)?;
    let kspec = heat_spec(my, 0.0, cfg.jy.expect("validated") - 1)?;
    let d1 = choose_band(&gspec, cfg.band, cfg.dx().powi(2));
    let d2 = choose_band(&kspec, cfg.band_y.or(cfg.band), cfg.dy().powi(2));
    let g = band_factor(&gspec, d1.min(gspec.n - 1), source)?;
    let k = band_factor(&kspec, d2.min(kspec.n - 1), source)?;
    let norm = k.norm_inf() * g.norm_inf();
    if !(norm < 1.0 + NORM_SLACK) {
        return Err(Error::Unstable(format!("‖K ⊗ G‖∞ = {norm} >= 1")));
    }
    Ok((k, g))
}

pub fn heat2d_solve(cfg: &HeatConfig) -> Result<Trajectory> {
    heat2d_solve_with(cfg, FactorSource::Bessel)
}

pub fn heat2d_solve_with(cfg: &HeatConfig, source: FactorSource) -> Result<Trajectory> {
    let (k, g) = heat2d_factors(cfg, source)?;
    let (k, g) = (RealBand::from_complex(&k), RealBand::from_complex(&g));
    let (p, q) = (k.n, g.n);
    let dt = cfg.time_step();
    let mut traj = Trajectory::new(cfg.nodes_x(), cfg.nodes_y(), cfg.initial_state());
    let mut within = vec![0.0; p * q];
    for step in 1..=cfg.steps {
        // G on every x-line, then K across the lines
        let u = traj.last();
        for (src, dst) in u.chunks(q).zip(within.chunks_mut(q)) {
            g.apply(src, dst);
        }
        let mut next = vec![0.0; p * q];
        let w = 2 * k.d + 1;
        for i in 0..p {
            let out = &mut next[i * q..(i + 1) * q];
            for j in i.saturating_sub(k.d)..(i + k.d + 1).min(p) {
                let kij = k.data[i * w + (j + k.d - i)];
                for (o, v) in out.iter_mut().zip(&within[j * q..(j + 1) * q]) {
                    *o += kij * v;
                }
            }
        }
        traj.push(step as f64 * dt, next);
    }
    Ok(traj)
}

/// Crank–Nicolson reference: `(I − μ/2 Δ) U⁺ = (I + μ/2 Δ) U`.
pub fn crank_nicolson_1d(cfg: &HeatConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.dims != 1 {
        return Err(Error::invalid("crank_nicolson_1d needs dims = 1"));
    }
    let mu = cfg.mu_x();
    let n = cfg.jx - 1;
    let dt = cfg.time_step();
    let mut traj = Trajectory::new(cfg.nodes_x(), None, cfg.initial_state());
    let mut rhs = vec![0.0; n];
    for step in 1..=cfg.steps {
        let u = traj.last();
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            rhs[i] = (1.0 - mu) * u[i] + 0.5 * mu * (left + right);
        }
        let next = thomas(-0.5 * mu, 1.0 + mu, -0.5 * mu, &rhs);
        traj.push(step as f64 * dt, next);
    }
    Ok(traj)
}

/// Solves the constant tridiagonal system `tridiag(lo, diag, up) x = rhs`.
fn thomas(lo: f64, diag: f64, up: f64, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = up / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let m = diag - lo * c[i - 1];
        c[i] = up / m;
        d[i] = (rhs[i] - lo * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Exact solution for sine initial data on the configured domain.
pub fn exact_sine_solution(cfg: &HeatConfig, t: f64) -> Result<Vec<f64>> {
    if cfg.initial != Initial::Sine {
        return Err(Error::invalid("closed-form solution only for sine initial data"));
    }
    let lx = cfg.x_range[1] - cfg.x_range[0];
    let mut rate = (PI / lx).powi(2);
    if let Some([lo, hi]) = cfg.y_range.filter(|_| cfg.dims == 2) {
        rate += (PI / (hi - lo)).powi(2);
    }
    let decay = (-cfg.diffusivity * rate * t).exp();
    Ok(cfg.initial_state().into_iter().map(|v| v * decay).collect())
}

/// `‖U^n − u(t_n)‖∞` per step for sine initial data.
pub fn sine_errors(cfg: &HeatConfig, traj: &Trajectory) -> Result<Vec<f64>> {
    exact_sine_solution(cfg, 0.0)?;
    Ok(traj.errors_against(|t| exact_sine_solution(cfg, t).expect("checked")))
}
