use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial profile sampled on the interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Initial {
    /// `sin(π(x − x0)/Lx)`, times the same factor in y for 2D.
    Sine,
    /// Value 1 at the node nearest `(x, y)`, 0 elsewhere; ties go to the
    /// lower index.
    Spike {
        x: f64,
        #[serde(default)]
        y: Option<f64>,
    },
    /// Explicit interior samples, x fastest.
    Custom { values: Vec<f64> },
}

/// Discretization of `u_t = a Δu` with homogeneous Dirichlet data.
///
/// Exactly one of `dt` and `mu` must be given; `mu` fixes
/// `dt = mu Δx² / a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatConfig {
    pub dims: u8,
    #[serde(default = "unit_interval")]
    pub x_range: [f64; 2],
    #[serde(default)]
    pub y_range: Option<[f64; 2]>,
    #[serde(default = "unit")]
    pub diffusivity: f64,
    pub jx: usize,
    #[serde(default)]
    pub jy: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    pub steps: usize,
    /// Half-bandwidth of the x propagator; selected from `tol = Δx²` when absent.
    #[serde(default)]
    pub band: Option<usize>,
    #[serde(default)]
    pub band_y: Option<usize>,
    #[serde(default = "sine")]
    pub initial: Initial,
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

fn unit() -> f64 {
    1.0
}

fn sine() -> Initial {
    Initial::Sine
}

impl HeatConfig {
    /// 1D problem on `(0, 1)` with `a = 1`, sine data, `dt` unset.
    pub fn new_1d(jx: usize, steps: usize) -> Self {
        Self {
            dims: 1,
            x_range: [0.0, 1.0],
            y_range: None,
            diffusivity: 1.0,
            jx,
            jy: None,
            dt: None,
            mu: None,
            steps,
            band: None,
            band_y: None,
            initial: Initial::Sine,
        }
    }

    /// 2D problem on the unit square with `a = 1`, sine data, `dt` unset.
    pub fn new_2d(jx: usize, jy: usize, steps: usize) -> Self {
        Self { dims: 2, y_range: Some([0.0, 1.0]), jy: Some(jy), ..Self::new_1d(jx, steps) }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self.mu = None;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self.dt = None;
        self
    }

    pub fn with_band(mut self, d: usize) -> Self {
        self.band = Some(d);
        self
    }

    pub fn with_band_y(mut self, d: usize) -> Self {
        self.band_y = Some(d);
        self
    }

    pub fn with_initial(mut self, initial: Initial) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_diffusivity(mut self, a: f64) -> Self {
        self.diffusivity = a;
        self
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML for a `.toml` extension, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml_str(&text),
            _ => Self::from_json_str(&text),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m));
        if self.dims != 1 && self.dims != 2 {
            return bad("dims must be 1 or 2");
        }
        if !(self.x_range[1] > self.x_range[0]) {
            return bad("x_range must be increasing");
        }
        if !(self.diffusivity > 0.0 && self.diffusivity.is_finite()) {
            return bad("diffusivity must be positive");
        }
        if self.jx < 2 {
            return bad("jx must be at least 2");
        }
        match (self.dt, self.mu) {
            (Some(dt), None) if dt > 0.0 && dt.is_finite() => {}
            (None, Some(mu)) if mu > 0.0 && mu.is_finite() => {}
            (Some(_), Some(_)) => return bad("give either dt or mu, not both"),
            (None, None) => return bad("one of dt or mu is required"),
            _ => return bad("dt and mu must be positive"),
        }
        if self.dims == 2 {
            match (self.y_range, self.jy) {
                (Some(r), Some(jy)) if r[1] > r[0] && jy >= 2 => {}
                _ => return bad("2D problems need an increasing y_range and jy >= 2"),
            }
        }
        if let Initial::Custom { values } = &self.initial {
            if values.len() != self.interior_len() {
                return bad("custom initial data must have one value per interior node");
            }
        }
        if let Initial::Spike { y: None, .. } = self.initial {
            if self.dims == 2 {
                return bad("2D spike needs a y coordinate");
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_range[1] - self.x_range[0]) / self.jx as f64
    }

    pub fn dy(&self) -> f64 {
        let [lo, hi] = self.y_range.unwrap_or([0.0, 1.0]);
        (hi - lo) / self.jy.unwrap_or(1) as f64
    }

    pub fn time_step(&self) -> f64 {
        match (self.dt, self.mu) {
            (Some(dt), _) => dt,
            (None, Some(mu)) => mu * self.dx().powi(2) / self.diffusivity,
            (None, None) => f64::NAN,
        }
    }

    pub fn mu_x(&self) -> f64 {
        self.diffusivity * self.time_step() / self.dx().powi(2)
    }

    pub fn mu_y(&self) -> f64 {
        self.diffusivity * self.time_step() / self.dy().powi(2)
    }

    /// Interior x nodes `x0 + jΔx`, `j = 1..jx`.
    pub fn nodes_x(&self) -> Vec<f64> {
        (1..self.jx).map(|j| self.x_range[0] + j as f64 * self.dx()).collect()
    }

    pub fn nodes_y(&self) -> Option<Vec<f64>> {
        if self.dims != 2 {
            return None;
        }
        let lo = self.y_range?[0];
        Some((1..self.jy?).map(|j| lo + j as f64 * self.dy()).collect())
    }

    pub fn interior_len(&self) -> usize {
        let nx = self.jx.saturating_sub(1);
        if self.dims == 2 {
            nx * self.jy.unwrap_or(1).saturating_sub(1)
        } else {
            nx
        }
    }

    /// Initial state on the interior grid, x fastest.
    pub fn initial_state(&self) -> Vec<f64> {
        let xs = self.nodes_x();
        let ys = self.nodes_y();
        let lx = self.x_range[1] - self.x_range[0];
        match &self.initial {
            Initial::Custom { values } => values.clone(),
            Initial::Sine => {
                let fx: Vec<f64> = xs.iter().map(|x| (std::f64::consts::PI * (x - self.x_range[0]) / lx).sin()).collect();
                match (ys, self.y_range) {
                    (Some(ys), Some([lo, hi])) => ys
                        .iter()
                        .flat_map(|y| {
                            let fy = (std::f64::consts::PI * (y - lo) / (hi - lo)).sin();
                            fx.iter().map(move |f| f * fy)
                        })
                        .collect(),
                    _ => fx,
                }
            }
            Initial::Spike { x, y } => {
                let mut u = vec![0.0; self.interior_len()];
                let ix = nearest(&xs, *x);
                let iy = match (&ys, y) {
                    (Some(ys), Some(y)) => nearest(ys, *y),
                    _ => 0,
                };
                u[iy * xs.len() + ix] = 1.0;
                u
            }
        }
    }
}

/// Index of the node closest to `p`; the first one wins ties.
fn nearest(nodes: &[f64], p: f64) -> usize {
    let mut best = 0;
    for (k, &x) in nodes.iter().enumerate() {
        if (x - p).abs() < (nodes[best] - p).abs() {
            best = k;
        }
    }
    best
}
