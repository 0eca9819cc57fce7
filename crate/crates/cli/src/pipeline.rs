//! End-to-end steps shared by the subcommands and the acceptance suite.

use std::fs;
use std::path::{Path, PathBuf};

use packtopo::analysis::{cell_source, Analysis, Physics};
use packtopo::config::RunConfig;
use packtopo::error::{Error, Result};
use packtopo::fem::CgOptions;
use packtopo::grid::{BoundaryTags, RegionMap, StructuredGrid};
use packtopo::heatgen::{simulate_heat, CellModel, HeatGenerationSeries, PowerProfile, Table};
use packtopo::io::{self, FieldData, FieldSnapshot, ParetoRow};
use packtopo::levelset::{compute_volume_fractions, initialize_design, DesignState, LevelSetField};
use packtopo::optimizer::{run_optimization, ConvergenceRecord, Outcome};
use packtopo::transient::{TemperatureHistory, TransientConfig, TransientModel};

/// Weights of the default sweep.
pub const DEFAULT_WEIGHTS: [f64; 5] = [1.0, 0.9, 0.7, 0.5, 0.3];

/// Geometry, labels and boundary data of a configuration.
pub struct Problem {
    pub config: RunConfig,
    pub grid: StructuredGrid,
    pub regions: RegionMap,
    pub tags: BoundaryTags,
}

impl Problem {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let grid = StructuredGrid::new(&config.grid)?;
        let regions = RegionMap::label(&grid, &config.layout)?;
        let tags = BoundaryTags::tag(&grid, &config.bc)?;
        Ok(Self {
            config,
            grid,
            regions,
            tags,
        })
    }

    pub fn cell_model(&self) -> Result<CellModel> {
        let h = &self.config.heatgen;
        let ocv = match &h.ocv {
            Some(p) => io::read_table(p, "ocv")?,
            None => Table::constant(3.6),
        };
        let entropic = match &h.entropic {
            Some(p) => io::read_table(p, "dudt")?,
            None => Table::constant(0.0),
        };
        let cell = CellModel {
            capacity: h.capacity,
            resistance: h.resistance,
            ocv,
            entropic,
            volume: self.config.cell_volume(),
            initial_soc: h.initial_soc,
            energy: h.energy,
        };
        cell.validate("heatgen")?;
        Ok(cell)
    }

    pub fn power_profile(&self) -> Result<PowerProfile> {
        let h = &self.config.heatgen;
        match &h.profile {
            Some(p) => io::read_power_profile(p),
            None => Ok(PowerProfile::synthetic(h.synthetic.takeoff, h.synthetic.cruise, h.synthetic.landing)),
        }
    }

    /// Heat series from the direct file when configured, else from the cell model.
    pub fn heat_series(&self) -> Result<HeatGenerationSeries> {
        let h = &self.config.heatgen;
        match &h.heat {
            Some(p) => io::read_any_heat(p),
            None => simulate_heat(&self.power_profile()?, &self.cell_model()?, h.cell_temperature, h.dt),
        }
    }

    /// Steady physics loaded by the worst-case rate of `series`.
    pub fn physics(&self, series: &HeatGenerationSeries) -> Physics {
        let source = cell_source(&self.regions, series.worst);
        let mut physics = Physics::new(
            &self.grid,
            self.regions.clone(),
            self.config.materials,
            self.tags.clone(),
            source,
            self.config.bc.sink_temperature,
        );
        physics.configure(&self.config.optimizer);
        physics
    }

    pub fn initial_design(&self) -> Result<LevelSetField> {
        initialize_design(&self.grid, &self.regions, &self.config.optimizer.seed)
    }

    pub fn design_state(&self, phi: &LevelSetField) -> DesignState {
        let o = &self.config.optimizer;
        compute_volume_fractions(&self.grid, phi, &self.regions, o.subsamples, o.gamma_min)
    }

    /// Reads the `phi` array of a field file written for this grid.
    pub fn read_design(&self, path: &Path) -> Result<LevelSetField> {
        LevelSetField::new(&self.grid, io::read_vtk_point_scalars(path, &self.grid, "phi")?)
    }

    fn transient_config(&self, series: &HeatGenerationSeries) -> TransientConfig {
        let t = &self.config.transient;
        let duration = t.duration.unwrap_or(series.end() - series.start());
        TransientConfig {
            dt: t.dt.unwrap_or(if duration > 0.0 { duration / 500.0 } else { 1.0 }),
            duration,
            initial_temperature: t.initial_temperature.unwrap_or(self.config.bc.sink_temperature),
            snapshot_times: t.snapshot_times.clone(),
            solver: CgOptions::with_tolerance(self.config.optimizer.cg_tolerance),
        }
    }

    /// Transient response of `state` to the time-varying rate of `series`.
    pub fn transient(&self, state: &DesignState, series: &HeatGenerationSeries) -> Result<TemperatureHistory> {
        let props = packtopo::levelset::interpolate_properties(state, &self.regions, &self.config.materials);
        let disc = packtopo::fem::Discretization::new(&self.grid, &self.config.materials);
        let shape = cell_source(&self.regions, 1.0);
        let config = self.transient_config(series);
        let mut model = TransientModel::new(&disc, &props, &shape, &self.tags.thermal, config.solver)?;
        model.run(series, &config)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Field file of one design and, when available, its analysis.
pub fn design_snapshot<'a>(
    grid: &'a StructuredGrid,
    phi: &LevelSetField,
    state: &DesignState,
    analysis: Option<&Analysis>,
) -> Result<FieldSnapshot<'a>> {
    let mut snap = FieldSnapshot::new(grid).with_point("phi", FieldData::Scalars(phi.values().to_vec()))?;
    if let Some(a) = analysis {
        snap = snap
            .with_point("T", FieldData::Scalars(a.temperature.temperatures()))?
            .with_point("u_mag", FieldData::Scalars(a.displacement.magnitudes()))?
            .with_point("u", FieldData::vectors_from(&a.displacement.u))?;
    }
    snap.with_cell("gamma", FieldData::Scalars(state.gamma().to_vec()))
}

/// Result of one optimization run.
pub struct RunSummary {
    pub outcome: Outcome,
    pub final_state: DesignState,
}

/// Runs the loop, streaming the convergence file and field dumps into `out`.
pub fn optimize(problem: &Problem, series: &HeatGenerationSeries, out: &Path) -> Result<RunSummary> {
    ensure_dir(out)?;
    let physics = problem.physics(series);
    let initial = problem.initial_design()?;
    let mut log = io::ConvergenceLog::create(&out.join("convergence.csv"))?;
    let every = problem.config.output.dump_every;
    let outcome = run_optimization(&problem.config.optimizer, &physics, &initial, |view| {
        log.push(view.record)?;
        if every > 0 && view.record.iter % every == 0 {
            let snap = design_snapshot(&problem.grid, view.phi, view.state, Some(view.analysis))?;
            io::write_vtk(&snap, &out.join(format!("design_{:04}.vtk", view.record.iter)))?;
        }
        Ok(())
    })?;
    let final_state = match &outcome.state {
        Some(s) => s.clone(),
        None => problem.design_state(&outcome.phi),
    };
    let snap = design_snapshot(&problem.grid, &outcome.phi, &final_state, outcome.analysis.as_ref())?;
    io::write_vtk(&snap, &out.join("design.vtk"))?;
    Ok(RunSummary { outcome, final_state })
}

/// Directory name of one sweep member.
pub fn sweep_dir(out: &Path, k: f64) -> PathBuf {
    out.join(format!("k_{k:.3}"))
}

/// Pareto rows in descending k, normalized by the k = 1 run when present.
pub fn pareto_rows(runs: &[(f64, Vec<ConvergenceRecord>)], sink: f64) -> Vec<ParetoRow> {
    let mut runs: Vec<&(f64, Vec<ConvergenceRecord>)> = runs.iter().filter(|r| !r.1.is_empty()).collect();
    runs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let reference = runs.iter().find(|r| r.0 == 1.0).map(|r| *r.1.last().expect("nonempty"));
    let ratio = |a: f64, b: f64| if b != 0.0 { a / b } else { f64::NAN };
    runs.iter()
        .map(|(k, records)| {
            let first = records[0];
            let last = *records.last().expect("nonempty");
            ParetoRow {
                k: *k,
                c_s: last.c_s,
                c_t: last.c_t,
                max_disp: last.max_disp,
                max_temp: last.max_temp,
                max_disp_rel_k1: reference.map(|r| ratio(last.max_disp, r.max_disp)),
                max_temp_rel_k1: reference.map(|r| ratio(last.max_temp - sink, r.max_temp - sink)),
                max_disp_rel_initial: ratio(last.max_disp, first.max_disp),
                max_temp_rel_initial: ratio(last.max_temp - sink, first.max_temp - sink),
            }
        })
        .collect()
}

/// Optimizes every weight in `weights` into sibling directories and writes
/// `pareto.csv`.
pub fn sweep(problem: &Problem, series: &HeatGenerationSeries, weights: &[f64], out: &Path) -> Result<Vec<ParetoRow>> {
    ensure_dir(out)?;
    let mut runs = Vec::with_capacity(weights.len());
    for &k in weights {
        let mut config = problem.config.clone();
        config.optimizer.k = k;
        let member = Problem::new(config)?;
        let summary = optimize(&member, series, &sweep_dir(out, k))?;
        runs.push((k, summary.outcome.records));
    }
    let rows = pareto_rows(&runs, problem.config.bc.sink_temperature);
    io::write_pareto(&out.join("pareto.csv"), &rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(c_s: f64, max_temp: f64) -> ConvergenceRecord {
        ConvergenceRecord {
            iter: 0,
            c_s,
            c_t: 1.0,
            j: 1.0,
            volfrac: 0.3,
            max_disp: c_s,
            max_temp,
            lambda: 0.0,
        }
    }

    #[test]
    fn pareto_rows_sorted_and_normalized() {
        let runs = vec![
            (0.5, vec![record(4.0, 310.0), record(2.0, 302.0)]),
            (1.0, vec![record(4.0, 310.0), record(1.0, 304.0)]),
        ];
        let rows = pareto_rows(&runs, 300.0);
        assert_eq!(rows.iter().map(|r| r.k).collect::<Vec<_>>(), vec![1.0, 0.5]);
        assert_eq!(rows[1].max_disp_rel_k1, Some(2.0));
        assert_eq!(rows[1].max_temp_rel_k1, Some(0.5));
        assert_eq!(rows[1].max_disp_rel_initial, 0.5);
        assert_eq!(rows[0].max_temp_rel_initial, 0.4);
        let without = pareto_rows(&runs[..1], 300.0);
        assert_eq!(without[0].max_disp_rel_k1, None);
    }
}
