//! Lumped cell heat generation from a power profile.
//!
//! A zero-order equivalent circuit (open-circuit voltage behind a series
//! resistance) plus an entropic term. Ohmic and reaction losses are lumped
//! into `I²·R0`; the reversible part is `I·T·dU/dT` with discharge current
//! positive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RegionMap;

/// Piecewise-linear table, held constant outside its abscissa range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Table {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Precondition("table needs matching, nonempty columns".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("table abscissae must be strictly increasing".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("table entries must be finite".into()));
        }
        Ok(Self { x, y })
    }

    pub fn constant(v: f64) -> Self {
        Self { x: vec![0.0], y: vec![v] }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.y.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn eval(&self, t: f64) -> f64 {
        interpolate(&self.x, &self.y, t)
    }
}

/// Linear interpolation on sorted `xs`, clamped to the end values.
fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = xs.len();
    if t <= xs[0] {
        return ys[0];
    }
    if t >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&x| x <= t);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (t - x0) / (x1 - x0);
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

/// Named time window of a mission.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

/// Per-cell electrical power demand, W, sampled in time, s.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerProfile {
    times: Vec<f64>,
    powers: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl PowerProfile {
    pub fn new(times: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != powers.len() {
            return Err(Error::Precondition("power profile needs matching, nonempty columns".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("power profile times must be strictly increasing".into()));
        }
        if times.iter().chain(&powers).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("power profile entries must be finite".into()));
        }
        Ok(Self {
            times,
            powers,
            segments: Vec::new(),
        })
    }

    pub fn constant(power: f64, duration: f64) -> Result<Self> {
        Self::new(vec![0.0, duration], vec![power, power])
    }

    /// Take-off, cruise and landing with short ramps between them.
    pub fn synthetic(takeoff: f64, cruise: f64, landing: f64) -> Self {
        let times = vec![0.0, 60.0, 75.0, 675.0, 690.0, 780.0];
        let powers = vec![takeoff, takeoff, cruise, cruise, landing, landing];
        let mut p = Self::new(times, powers).expect("synthetic profile is well formed");
        p.segments = vec![
            Segment {
                label: "takeoff".into(),
                start: 0.0,
                end: 60.0,
            },
            Segment {
                label: "cruise".into(),
                start: 75.0,
                end: 675.0,
            },
            Segment {
                label: "landing".into(),
                start: 690.0,
                end: 780.0,
            },
        ];
        p
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.powers.iter().copied())
    }

    pub fn power_at(&self, t: f64) -> f64 {
        interpolate(&self.times, &self.powers, t)
    }

    pub fn segment(&self, label: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.label == label)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellModel {
    /// Ah
    pub capacity: f64,
    /// Series resistance, Ω.
    pub resistance: f64,
    /// Open-circuit voltage against state of charge, V.
    pub ocv: Table,
    /// Entropic coefficient dU/dT against state of charge, V/K.
    pub entropic: Table,
    /// m³
    pub volume: f64,
    pub initial_soc: f64,
    /// Wh
    pub energy: f64,
}

impl CellModel {
    /// 21700 cell with a flat 3.6 V curve and no entropic heat.
    pub fn flat_21700() -> Self {
        let energy = 17.8;
        Self {
            capacity: energy / 3.6,
            resistance: 0.02,
            ocv: Table::constant(3.6),
            entropic: Table::constant(0.0),
            volume: std::f64::consts::PI * 0.0105 * 0.0105 * 0.070,
            initial_soc: 1.0,
            energy,
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        for (name, v) in [
            ("capacity", self.capacity),
            ("resistance", self.resistance),
            ("volume", self.volume),
            ("energy", self.energy),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{key}.{name}"), format!("must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::config(
                format!("{key}.initial_soc"),
                format!("must lie in [0, 1], got {}", self.initial_soc),
            ));
        }
        if !self.ocv.is_nondecreasing() {
            return Err(Error::config(format!("{key}.ocv"), "open-circuit voltage must be nondecreasing in SOC"));
        }
        Ok(())
    }

    /// Highest power the circuit can deliver at open-circuit voltage `u`.
    pub fn peak_power(&self, u: f64) -> f64 {
        u * u / (4.0 * self.resistance)
    }
}

/// Current drawing `power` from a source `u` behind `r0`: the root of
/// `r0·I² − u·I + P = 0` below the power peak. `None` past the peak.
pub fn solve_current(u: f64, r0: f64, power: f64) -> Option<f64> {
    let disc = u * u - 4.0 * r0 * power;
    if disc < 0.0 {
        return None;
    }
    // Rationalized small root; no cancellation as P → 0.
    let denom = u + disc.sqrt();
    Some(if denom == 0.0 { 0.0 } else { 2.0 * power / denom })
}

/// SOC after drawing `current` for `dt` seconds from `capacity` Ah.
pub fn coulomb_count(soc: f64, current: f64, dt: f64, capacity: f64) -> f64 {
    soc - current * dt / (3600.0 * capacity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Electrical {
    pub current: f64,
    pub voltage: f64,
    pub soc: f64,
    pub open_circuit: f64,
    /// Electrical demand, W.
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatSample {
    pub t: f64,
    /// Volumetric heat rate, W/m³.
    pub q: f64,
    /// Irreversible part, W/m³.
    pub q_irr: f64,
    /// Absent for series read directly from a heat file.
    pub electrical: Option<Electrical>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatGenerationSeries {
    pub samples: Vec<HeatSample>,
    /// Largest non-negative volumetric rate over the series, W/m³.
    pub worst: f64,
    /// Times at which the state of charge had to be clamped.
    pub soc_clamps: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl HeatGenerationSeries {
    pub fn from_samples(samples: Vec<HeatSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Precondition("heat series is empty".into()));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Precondition("heat series times must be strictly increasing".into()));
        }
        let worst = samples.iter().map(|s| s.q.max(0.0)).fold(0.0, f64::max);
        Ok(Self {
            samples,
            worst,
            soc_clamps: Vec::new(),
            segments: Vec::new(),
        })
    }

    /// Series of bare `(t, Q)` pairs.
    pub fn from_rates(times: &[f64], rates: &[f64]) -> Result<Self> {
        if times.len() != rates.len() {
            return Err(Error::Precondition("heat series columns differ in length".into()));
        }
        let samples = times
            .iter()
            .zip(rates)
            .map(|(&t, &q)| HeatSample {
                t,
                q,
                q_irr: q.max(0.0),
                electrical: None,
            })
            .collect();
        Self::from_samples(samples)
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Rate at `t`, linear between samples and held beyond the ends.
    pub fn rate_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        if t <= s[0].t {
            return s[0].q;
        }
        let last = s[s.len() - 1];
        if t >= last.t {
            return last.q;
        }
        let i = s.partition_point(|x| x.t <= t);
        let (a, b) = (s[i - 1], s[i]);
        a.q + (t - a.t) / (b.t - a.t) * (b.q - a.q)
    }
}

/// Steps the circuit through `profile` with a fixed step `dt`.
///
/// Each sample records the state at the start of its step; the current
/// found there discharges the cell over the step.
pub fn simulate_heat(profile: &PowerProfile, cell: &CellModel, t_cell: f64, dt: f64) -> Result<HeatGenerationSeries> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("heatgen.dt", format!("must be positive, got {dt}")));
    }
    cell.validate("heatgen.cell")?;
    let t0 = profile.start();
    let steps = ((profile.end() - t0) / dt + 1e-9).floor() as usize;
    let mut soc = cell.initial_soc;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut clamps = Vec::new();
    for n in 0..=steps {
        let t = t0 + n as f64 * dt;
        let power = profile.power_at(t);
        let u = cell.ocv.eval(soc);
        let current = solve_current(u, cell.resistance, power).ok_or(Error::InfeasiblePower {
            time: t,
            power,
            peak: cell.peak_power(u),
        })?;
        let voltage = u - current * cell.resistance;
        let q_irr = current * current * cell.resistance;
        let q_rev = current * t_cell * cell.entropic.eval(soc);
        samples.push(HeatSample {
            t,
            q: (q_irr + q_rev) / cell.volume,
            q_irr: q_irr / cell.volume,
            electrical: Some(Electrical {
                current,
                voltage,
                soc,
                open_circuit: u,
                power,
            }),
        });
        let next = coulomb_count(soc, current, dt, cell.capacity);
        soc = next.clamp(0.0, 1.0);
        if soc != next && n < steps {
            log::warn!("state of charge {next:.4} clamped to {soc} at t = {} s", t + dt);
            clamps.push(t + dt);
        }
    }
    let mut series = HeatGenerationSeries::from_samples(samples)?;
    series.soc_clamps = clamps;
    series.segments = profile.segments.clone();
    Ok(series)
}

/// Worst-case rate on every CELL element, zero elsewhere.
pub fn worst_case_source(series: &HeatGenerationSeries, regions: &RegionMap) -> Vec<f64> {
    crate::analysis::cell_source(regions, series.worst)
}
