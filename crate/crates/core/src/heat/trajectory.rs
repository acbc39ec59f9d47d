use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-step summary of a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub norm_inf: f64,
    pub min: f64,
}

impl StepStats {
    pub fn of(u: &[f64]) -> Self {
        Self {
            norm_inf: u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            min: u.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

/// States at `times`, with `states[0]` the initial data. 2D states are
/// x fastest over the grid `x × y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub diagnostics: Vec<StepStats>,
    pub x: Vec<f64>,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn new(x: Vec<f64>, y: Option<Vec<f64>>, initial: Vec<f64>) -> Self {
        let stats = StepStats::of(&initial);
        Self { times: vec![0.0], states: vec![initial], diagnostics: vec![stats], x, y }
    }

    pub fn push(&mut self, t: f64, u: Vec<f64>) {
        self.diagnostics.push(StepStats::of(&u));
        self.times.push(t);
        self.states.push(u);
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// `‖states[k] − exact(times[k])‖∞` for every stored step.
    pub fn errors_against(&self, exact: impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.states)
            .map(|(&t, u)| {
                let e = exact(t);
                u.iter().zip(&e).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .collect()
    }

    /// Largest pointwise gap between two trajectories over all steps.
    pub fn max_difference(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()))
            .fold(0.0, f64::max)
    }

    /// Writes `t,x,u` (1D) or `t,x,y,u` (2D) rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        match &self.y {
            None => wr.write_record(["t", "x", "u"])?,
            Some(_) => wr.write_record(["t", "x", "y", "u"])?,
        }
        for (t, u) in self.times.iter().zip(&self.states) {
            match &self.y {
                None => {
                    for (x, v) in self.x.iter().zip(u) {
                        wr.write_record([t.to_string(), x.to_string(), v.to_string()])?;
                    }
                }
                Some(ys) => {
                    let nx = self.x.len();
                    for (iy, y) in ys.iter().enumerate() {
                        for (ix, x) in self.x.iter().enumerate() {
                            let v = u[iy * nx + ix];
                            wr.write_record([t.to_string(), x.to_string(), y.to_string(), v.to_string()])?;
                        }
                    }
                }
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let two_d = match rd.headers()?.len() {
            3 => false,
            4 => true,
            k => return Err(Error::Parse(format!("trajectory CSV needs 3 or 4 columns, found {k}"))),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let mut times: Vec<f64> = Vec::new();
        let mut states: Vec<Vec<f64>> = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let t = num(&rec[0])?;
            if times.last() != Some(&t) {
                times.push(t);
                states.push(Vec::new());
            }
            let first = times.len() == 1;
            let x = num(&rec[1])?;
            let u = if two_d {
                let y = num(&rec[2])?;
                if first {
                    if ys.last() != Some(&y) {
                        ys.push(y);
                    }
                    if ys.len() == 1 {
                        xs.push(x);
                    }
                }
                num(&rec[3])?
            } else {
                if first {
                    xs.push(x);
                }
                num(&rec[2])?
            };
            states.last_mut().expect("pushed above").push(u);
        }
        let len = states.first().map_or(0, Vec::len);
        if states.iter().any(|s| s.len() != len) {
            return Err(Error::Parse("trajectory steps have different lengths".into()));
        }
        let diagnostics = states.iter().map(|s| StepStats::of(s)).collect();
        Ok(Self { times, states, diagnostics, x: xs, y: two_d.then_some(ys) })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
