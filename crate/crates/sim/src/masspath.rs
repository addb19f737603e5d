use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Right-continuous step function of total mass on `[start, end]`:
/// `masses[k]` holds on `[times[k], times[k+1])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PathData", into = "PathData")]
pub struct MassPath {
    times: Vec<f64>,
    masses: Vec<f64>,
    end: f64,
    /// `clock[k]` is the integral of `1/m` (0 where `m = 0`) up to `times[k]`.
    clock: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct PathData {
    times: Vec<f64>,
    masses: Vec<f64>,
    end: f64,
}

impl TryFrom<PathData> for MassPath {
    type Error = SimError;

    fn try_from(d: PathData) -> Result<Self> {
        MassPath::new(d.times, d.masses, d.end)
    }
}

impl From<MassPath> for PathData {
    fn from(p: MassPath) -> Self {
        PathData {
            times: p.times,
            masses: p.masses,
            end: p.end,
        }
    }
}

fn inverse(m: f64) -> f64 {
    if m > 0.0 {
        1.0 / m
    } else {
        0.0
    }
}

impl MassPath {
    pub fn new(times: Vec<f64>, masses: Vec<f64>, end: f64) -> Result<Self> {
        if times.is_empty() || times.len() != masses.len() {
            return Err(SimError::InvalidConfig(
                "mass path needs matching, nonempty times and masses".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[0] <= w[1])) || !(end >= *times.last().unwrap()) {
            return Err(SimError::InvalidConfig(
                "mass path times must be nondecreasing and end last".into(),
            ));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(SimError::InvalidConfig(
                "mass path values must be finite and >= 0".into(),
            ));
        }
        let mut clock = Vec::with_capacity(times.len());
        clock.push(0.0);
        for k in 1..times.len() {
            clock.push(clock[k - 1] + (times[k] - times[k - 1]) * inverse(masses[k - 1]));
        }
        Ok(MassPath {
            times,
            masses,
            end,
            clock,
        })
    }

    pub fn constant(mass: f64, end: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![mass], end)
    }

    pub(crate) fn starting(mass: f64) -> Self {
        MassPath {
            times: vec![0.0],
            masses: vec![mass],
            end: 0.0,
            clock: vec![0.0],
        }
    }

    pub(crate) fn record(&mut self, t: f64, mass: f64) {
        let k = self.times.len() - 1;
        self.clock
            .push(self.clock[k] + (t - self.times[k]) * inverse(self.masses[k]));
        self.times.push(t);
        self.masses.push(mass);
        self.end = t;
    }

    pub(crate) fn close(&mut self, end: f64) {
        self.end = self.end.max(end);
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mass at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        self.masses[k.saturating_sub(1)]
    }

    pub fn final_mass(&self) -> f64 {
        *self.masses.last().unwrap()
    }

    /// `int_start^t dt / m(t)`, with zero-mass stretches contributing 0.
    pub fn inverse_mass_integral(&self, t: f64) -> f64 {
        let t = t.clamp(self.start(), self.end);
        let k = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        self.clock[k] + (t - self.times[k]) * inverse(self.masses[k])
    }

    /// The latest `s <= t` with `int_s^t dt / m = amount`, if `s` is not
    /// before the start of the path.
    pub fn inverse_mass_solve_back(&self, t: f64, amount: f64) -> Option<f64> {
        let y = self.inverse_mass_integral(t) - amount;
        if y < 0.0 {
            return None;
        }
        let k = self.clock.partition_point(|&c| c <= y).saturating_sub(1);
        let g = inverse(self.masses[k]);
        let s = if g > 0.0 {
            self.times[k] + (y - self.clock[k]) / g
        } else {
            self.times[k]
        };
        Some(s.min(t))
    }

    /// Checks that the path is defined on `[0, horizon]`.
    pub fn covers(&self, horizon: f64) -> Result<()> {
        if self.start() > 0.0 || self.end < horizon {
            return Err(SimError::MassPathGap {
                start: self.start(),
                end: self.end,
                horizon,
            });
        }
        Ok(())
    }

    /// CSV `time,total_mass`, one row per step plus a closing row at the
    /// end time.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,total_mass\n");
        for (t, m) in self.times.iter().zip(&self.masses) {
            let _ = writeln!(out, "{t},{m}");
        }
        let _ = writeln!(out, "{},{}", self.end, self.final_mass());
        out
    }

    /// Reads [`MassPath::to_csv`] output; the last row's time is the end
    /// of the path.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        let mut masses = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with("time")) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|x| x.trim().parse().ok()).ok_or_else(|| {
                    SimError::Parse(format!("line {}: expected time,total_mass", i + 1))
                })
            };
            times.push(parse(parts.next())?);
            masses.push(parse(parts.next())?);
        }
        let end = *times
            .last()
            .ok_or_else(|| SimError::Parse("empty mass path".into()))?;
        if times.len() > 1 {
            times.pop();
            masses.pop();
        }
        Self::new(times, masses, end)
    }
}
