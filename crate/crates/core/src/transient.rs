//! Transient conduction by implicit Euler with a lumped heat-capacity matrix.

use crate::error::{Error, Result};
use crate::fem::cg::{self, CgOptions};
use crate::fem::sparse::{dot, norm};
use crate::fem::{CsrMatrix, Discretization};
use crate::heatgen::HeatGenerationSeries;
use crate::materials::ElementProperties;
use crate::thermal::{assemble_conduction, source_load};

#[derive(Debug, Clone, PartialEq)]
pub struct TransientConfig {
    /// Time step, s.
    pub dt: f64,
    /// Simulated time, s.
    pub duration: f64,
    /// Uniform initial temperature, K.
    pub initial_temperature: f64,
    /// Times at which full nodal fields are kept.
    pub snapshot_times: Vec<f64>,
    pub solver: CgOptions,
}

impl TransientConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config("transient.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::config(
                "transient.duration",
                format!("must be non-negative, got {}", self.duration),
            ));
        }
        if !self.initial_temperature.is_finite() {
            return Err(Error::config("transient.initial_temperature", "must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Row-sum heat capacity per node, J/K.
pub fn lumped_capacity(disc: &Discretization, props: &ElementProperties) -> Vec<f64> {
    let grid = disc.grid();
    let share = grid.element_volume() / 8.0;
    let mut m = vec![0.0; grid.node_count()];
    for e in 0..grid.element_count() {
        for n in grid.element_nodes(e) {
            m[n] += props.heat_capacity[e] * share;
        }
    }
    m
}

/// Implicit Euler for `M dT/dt + K T = F(t)` with fixed nodal temperatures.
#[derive(Debug, Clone)]
pub struct ImplicitEuler {
    stiffness: CsrMatrix,
    capacity: Vec<f64>,
    fixed: Vec<Option<f64>>,
    /// `M/dt + K` with constrained rows eliminated, and the lift of the
    /// prescribed values.
    system: Option<(f64, CsrMatrix, Vec<f64>)>,
    solver: CgOptions,
}

impl ImplicitEuler {
    pub fn new(stiffness: CsrMatrix, capacity: Vec<f64>, fixed: Vec<Option<f64>>, solver: CgOptions) -> Result<Self> {
        let n = stiffness.dim();
        if capacity.len() != n || fixed.len() != n {
            return Err(Error::Precondition("capacity and constraint lengths must match the system".into()));
        }
        if let Some(i) = capacity.iter().position(|&m| !(m > 0.0)) {
            return Err(Error::Precondition(format!("non-positive heat capacity at node {i}")));
        }
        Ok(Self {
            stiffness,
            capacity,
            fixed,
            system: None,
            solver,
        })
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn fixed(&self) -> &[Option<f64>] {
        &self.fixed
    }

    fn prepare(&mut self, dt: f64) {
        if matches!(&self.system, Some((d, _, _)) if *d == dt) {
            return;
        }
        let mut a = self.stiffness.clone();
        let inv: Vec<f64> = self.capacity.iter().map(|m| m / dt).collect();
        a.add_diagonal(&inv, 1.0);
        let mut lift = vec![0.0; a.dim()];
        a.eliminate(&self.fixed, &mut lift);
        self.system = Some((dt, a, lift));
    }

    /// Advances `t` by one step of length `dt` under the nodal load `load`
    /// evaluated at the end of the step.
    pub fn step(&mut self, t: &mut [f64], load: &[f64], dt: f64) -> Result<()> {
        self.prepare(dt);
        let (_, a, lift) = self.system.as_ref().expect("system prepared");
        let mut rhs: Vec<f64> = (0..t.len())
            .map(|i| match self.fixed[i] {
                Some(_) => lift[i],
                None => self.capacity[i] / dt * t[i] + load[i] + lift[i],
            })
            .collect();
        for (r, f) in rhs.iter_mut().zip(&self.fixed) {
            if let Some(g) = f {
                *r = *g;
            }
        }
        cg::solve(a, &rhs, t, &self.solver, "transient")?;
        Ok(())
    }

    /// Largest stable explicit Euler step, `2 / λmax(M⁻¹K)` on the free nodes.
    pub fn explicit_limit(&self) -> f64 {
        let n = self.capacity.len();
        let free: Vec<bool> = self.fixed.iter().map(|f| f.is_none()).collect();
        // Power iteration on the symmetric form M^-1/2 K M^-1/2.
        let s: Vec<f64> = self.capacity.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut v: Vec<f64> = (0..n)
            .map(|i| if free[i] { 1.0 + ((i * 7919) % 13) as f64 / 13.0 } else { 0.0 })
            .collect();
        let mut w = vec![0.0; n];
        let mut lambda = 0.0;
        for _ in 0..500 {
            let vn = norm(&v);
            if vn == 0.0 {
                return f64::INFINITY;
            }
            v.iter_mut().for_each(|x| *x /= vn);
            let x: Vec<f64> = v.iter().zip(&s).map(|(a, b)| a * b).collect();
            self.stiffness.mul_vec(&x, &mut w);
            for i in 0..n {
                w[i] = if free[i] { w[i] * s[i] } else { 0.0 };
            }
            let next = dot(&v, &w);
            std::mem::swap(&mut v, &mut w);
            if (next - lambda).abs() <= 1e-10 * next.abs() {
                lambda = next;
                break;
            }
            lambda = next;
        }
        if lambda > 0.0 {
            2.0 / lambda
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistorySample {
    pub t: f64,
    pub max_temperature: f64,
    pub mean_temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureHistory {
    pub samples: Vec<HistorySample>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub final_field: Vec<f64>,
}

impl TemperatureHistory {
    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|s| s.max_temperature).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest max temperature sampled within `[start, end]`.
    pub fn peak_between(&self, start: f64, end: f64) -> Option<f64> {
        self.samples
            .iter()
            .filter(|s| s.t >= start && s.t <= end)
            .map(|s| s.max_temperature)
            .reduce(f64::max)
    }
}

fn summarize(t: f64, field: &[f64]) -> HistorySample {
    HistorySample {
        t,
        max_temperature: field.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_temperature: field.iter().sum::<f64>() / field.len() as f64,
    }
}

/// Transient model of one design: capacities, conductivities, sinks and the
/// spatial shape of the heat source.
#[derive(Debug, Clone)]
pub struct TransientModel {
    integrator: ImplicitEuler,
    /// Nodal load per unit volumetric rate, m³.
    unit_load: Vec<f64>,
}

impl TransientModel {
    /// `source_shape` scales the mission rate per element (1 on heated cells).
    pub fn new(
        disc: &Discretization,
        props: &ElementProperties,
        source_shape: &[f64],
        dirichlet: &[(usize, f64)],
        solver: CgOptions,
    ) -> Result<Self> {
        let grid = disc.grid();
        if source_shape.len() != grid.element_count() {
            return Err(Error::Precondition("source shape length does not match element count".into()));
        }
        let mut fixed = vec![None; grid.node_count()];
        for &(n, t) in dirichlet {
            fixed[n] = Some(t);
        }
        let integrator = ImplicitEuler::new(
            assemble_conduction(disc, props),
            lumped_capacity(disc, props),
            fixed,
            solver,
        )?;
        Ok(Self {
            integrator,
            unit_load: source_load(disc, source_shape),
        })
    }

    pub fn integrator(&self) -> &ImplicitEuler {
        &self.integrator
    }

    pub fn integrator_mut(&mut self) -> &mut ImplicitEuler {
        &mut self.integrator
    }

    pub fn unit_load(&self) -> &[f64] {
        &self.unit_load
    }

    pub fn explicit_limit(&self) -> f64 {
        self.integrator.explicit_limit()
    }

    /// Initial field: uniform, with sink nodes at their prescribed values.
    pub fn initial_field(&self, t0: f64) -> Vec<f64> {
        self.integrator.fixed.iter().map(|f| f.unwrap_or(t0)).collect()
    }

    /// Steps through `config.duration` with the rate interpolated from `series`.
    pub fn run(&mut self, series: &HeatGenerationSeries, config: &TransientConfig) -> Result<TemperatureHistory> {
        config.validate()?;
        let start = series.start();
        if start + config.duration > series.end() {
            log::warn!(
                "heat series ends at {} s before the {} s mission; holding the last rate",
                series.end(),
                start + config.duration
            );
        }
        self.run_with(|t| series.rate_at(start + t), config)
    }

    pub fn run_with(&mut self, rate: impl Fn(f64) -> f64, config: &TransientConfig) -> Result<TemperatureHistory> {
        config.validate()?;
        let steps = config.steps();
        let mut field = self.initial_field(config.initial_temperature);
        let mut samples = Vec::with_capacity(steps + 1);
        let mut snapshots = Vec::new();
        let mut pending: Vec<f64> = config.snapshot_times.clone();
        pending.sort_by(f64::total_cmp);
        let mut pending = pending.into_iter().peekable();
        samples.push(summarize(0.0, &field));
        while pending.next_if(|&s| s <= 0.0).is_some() {
            snapshots.push((0.0, field.clone()));
        }
        let mut load = vec![0.0; field.len()];
        for n in 1..=steps {
            let t_prev = (n - 1) as f64 * config.dt;
            let t = (n as f64 * config.dt).min(config.duration);
            let dt = t - t_prev;
            let q = rate(t);
            for (l, u) in load.iter_mut().zip(&self.unit_load) {
                *l = q * u;
            }
            self.integrator.step(&mut field, &load, dt)?;
            samples.push(summarize(t, &field));
            while pending.next_if(|&s| s <= t + 1e-9 * config.dt).is_some() {
                snapshots.push((t, field.clone()));
            }
        }
        Ok(TemperatureHistory {
            samples,
            snapshots,
            final_field: field,
        })
    }
}
