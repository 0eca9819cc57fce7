//! Outer optimization loop: analysis, normalized objective, linearized
//! boundary-movement step under the volume constraint, advection and
//! reinitialization.

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::analysis::{Analysis, Physics};
use crate::error::{Error, Result};
use crate::levelset::{
    advect, compute_volume_fractions, extract_boundary, reinitialize, BandExtension, BoundaryPointSet,
    DesignState, LevelSetField, SeedSpec, DEFAULT_GAMMA_MIN,
};
use crate::sensitivity::{objective_sensitivity, structural_sensitivity, thermal_sensitivity};

/// Upper end of the multiplier bracket.
pub const LAMBDA_MAX: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    /// Weight of the structural term, in [0, 1].
    pub k: f64,
    /// Allowed solid fraction of the design region.
    pub volume_fraction: f64,
    pub max_iterations: usize,
    /// (first iteration, move limit as a fraction of the smallest spacing).
    pub move_limits: Vec<(usize, f64)>,
    pub normalization_period: usize,
    /// Share of the volume excess removed per iteration while infeasible.
    pub approach_fraction: f64,
    pub convergence_window: usize,
    pub convergence_tolerance: f64,
    /// Allowed |volume fraction - target| at convergence.
    pub volume_tolerance: f64,
    /// Sub-cell samples per axis for volume fractions.
    pub subsamples: usize,
    pub gamma_min: f64,
    pub cfl: f64,
    /// Shrink the move limit after a feasible step that raised J and let it
    /// recover after steps that lowered it.
    pub adaptive_move: bool,
    /// Drop the temperature-coupling term of the structural sensitivity.
    pub uncoupled_sensitivity: bool,
    /// Count the work of the thermal-strain load in the structural compliance.
    pub include_thermal_work: bool,
    pub cg_tolerance: f64,
    pub seed: SeedSpec,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            k: 0.5,
            volume_fraction: 0.3,
            max_iterations: 200,
            move_limits: vec![(0, 0.5), (100, 0.25)],
            normalization_period: 5,
            approach_fraction: 0.25,
            convergence_window: 10,
            convergence_tolerance: 1e-4,
            volume_tolerance: 0.005,
            subsamples: 4,
            gamma_min: DEFAULT_GAMMA_MIN,
            cfl: 0.5,
            adaptive_move: true,
            uncoupled_sensitivity: false,
            include_thermal_work: false,
            cg_tolerance: 1e-8,
            seed: SeedSpec::default(),
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: String| if ok { Ok(()) } else { Err(Error::config(key, msg)) };
        check((0.0..=1.0).contains(&self.k), "optimizer.k", format!("must lie in [0, 1], got {}", self.k))?;
        check(
            self.volume_fraction > 0.0 && self.volume_fraction <= 1.0,
            "optimizer.volume_fraction",
            format!("must lie in (0, 1], got {}", self.volume_fraction),
        )?;
        check(!self.move_limits.is_empty(), "optimizer.move_limits", "schedule is empty".into())?;
        check(
            self.move_limits.windows(2).all(|w| w[0].0 < w[1].0),
            "optimizer.move_limits",
            "iterations must be strictly increasing".into(),
        )?;
        check(
            self.move_limits.iter().all(|&(_, f)| f > 0.0 && f <= 1.0),
            "optimizer.move_limits",
            "fractions must lie in (0, 1]".into(),
        )?;
        check(
            self.normalization_period > 0,
            "optimizer.normalization_period",
            "must be positive".into(),
        )?;
        check(
            self.approach_fraction > 0.0 && self.approach_fraction <= 1.0,
            "optimizer.approach_fraction",
            format!("must lie in (0, 1], got {}", self.approach_fraction),
        )?;
        check(self.convergence_window > 0, "optimizer.convergence_window", "must be positive".into())?;
        check(
            self.convergence_tolerance >= 0.0,
            "optimizer.convergence_tolerance",
            "must be nonnegative".into(),
        )?;
        check(self.volume_tolerance >= 0.0, "optimizer.volume_tolerance", "must be nonnegative".into())?;
        check(self.subsamples > 0, "optimizer.subsamples", "must be positive".into())?;
        check(
            self.gamma_min > 0.0 && self.gamma_min < 1.0,
            "optimizer.gamma_min",
            format!("must lie in (0, 1), got {}", self.gamma_min),
        )?;
        check(self.cfl > 0.0 && self.cfl <= 1.0, "optimizer.cfl", format!("must lie in (0, 1], got {}", self.cfl))?;
        check(
            self.cg_tolerance > 0.0 && self.cg_tolerance < 1.0,
            "optimizer.cg_tolerance",
            format!("must lie in (0, 1), got {}", self.cg_tolerance),
        )?;
        Ok(())
    }

    /// Move limit, as a fraction of the smallest spacing, at `iter`.
    pub fn move_fraction(&self, iter: usize) -> f64 {
        self.move_limits
            .iter()
            .take_while(|&&(start, _)| start <= iter)
            .last()
            .or(self.move_limits.first())
            .map_or(0.5, |&(_, f)| f)
    }
}

impl Physics {
    /// Applies the solver-related optimizer settings.
    pub fn configure(&mut self, config: &OptimizationConfig) {
        self.solver.tolerance = config.cg_tolerance;
        self.include_thermal_work = config.include_thermal_work;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizers {
    pub c_s0: f64,
    pub c_t0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub j: f64,
    pub structural: f64,
    pub thermal: f64,
}

pub fn evaluate_objective(c_s: f64, c_t: f64, norms: Normalizers, k: f64) -> Objective {
    let structural = c_s / norms.c_s0;
    let thermal = c_t / norms.c_t0;
    Objective {
        j: k * structural + (1.0 - k) * thermal,
        structural,
        thermal,
    }
}

/// Resets the normalizers to the current compliances every `period`
/// iterations. A nonpositive compliance keeps the previous value.
pub fn update_normalizers(iter: usize, period: usize, c_s: f64, c_t: f64, previous: Option<Normalizers>) -> Normalizers {
    let reset = iter % period.max(1) == 0 || previous.is_none();
    let pick = |current: f64, old: Option<f64>, name: &str| {
        if !reset {
            return old.unwrap_or(current);
        }
        if current > 0.0 && current.is_finite() {
            current
        } else if let Some(old) = old {
            warn!("{name} = {current} at iteration {iter}; keeping normalizer {old}");
            old
        } else {
            warn!("{name} = {current} at iteration {iter}; using unit normalizer");
            1.0
        }
    };
    Normalizers {
        c_s0: pick(c_s, previous.map(|p| p.c_s0), "C_S"),
        c_t0: pick(c_t, previous.map(|p| p.c_t0), "C_T"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub z: Vec<f64>,
    pub lambda: f64,
    /// Volume change the step aimed for, m³.
    pub target: f64,
    pub eta: f64,
}

fn movement<'a>(s_j: &'a [f64], s_v: &'a [f64], eta: f64, d_move: f64, lambda: f64) -> impl Iterator<Item = f64> + 'a {
    s_j.iter().zip(s_v).map(move |(sj, sv)| {
        let g = sj + lambda * sv;
        if g == 0.0 {
            0.0
        } else {
            (-eta * g).clamp(-d_move, d_move)
        }
    })
}

fn volume_change(s_j: &[f64], s_v: &[f64], areas: &[f64], eta: f64, d_move: f64, lambda: f64) -> f64 {
    movement(s_j, s_v, eta, d_move, lambda).zip(areas).map(|(z, a)| z * a).sum()
}

/// Clamped stationarity step `z = clamp(-eta (s_J + lambda s_V), ±d_move)`
/// with the smallest `lambda ≥ 0` whose volume change does not exceed
/// `target`. If even `LAMBDA_MAX` cannot reach it, that bound is used.
pub fn solve_subproblem_scaled(
    s_j: &[f64],
    s_v: &[f64],
    areas: &[f64],
    eta: f64,
    d_move: f64,
    target: f64,
) -> SubproblemSolution {
    let dv = |l: f64| volume_change(s_j, s_v, areas, eta, d_move, l);
    let lambda = if dv(0.0) <= target {
        0.0
    } else if dv(LAMBDA_MAX) > target {
        LAMBDA_MAX
    } else {
        let (mut lo, mut hi) = (0.0, LAMBDA_MAX);
        // dv is nonincreasing in lambda: lo infeasible, hi feasible
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dv(mid) <= target {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        hi
    };
    SubproblemSolution {
        z: movement(s_j, s_v, eta, d_move, lambda).collect(),
        lambda,
        target,
        eta,
    }
}

/// Volume change requested for a given excess `gap = Vol - xi Vol(D)`:
/// a share of the excess when infeasible, the remaining slack otherwise.
pub fn volume_target(gap: f64, approach: f64) -> f64 {
    if gap > 0.0 {
        -approach * gap
    } else {
        -gap
    }
}

/// Step scaling: `d_move` over the median |s_J|, so that a typical point
/// moves by about the move limit.
pub fn step_scale(s_j: &[f64], d_move: f64) -> f64 {
    let mut mags: Vec<f64> = s_j.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
    if mags.is_empty() {
        return d_move;
    }
    mags.sort_by(f64::total_cmp);
    let mid = mags.len() / 2;
    let median = if mags.len() % 2 == 1 {
        mags[mid]
    } else {
        0.5 * (mags[mid - 1] + mags[mid])
    };
    d_move / median
}

pub fn solve_subproblem(
    s_j: &[f64],
    s_v: &[f64],
    areas: &[f64],
    volume_gap: f64,
    d_move: f64,
    approach: f64,
) -> SubproblemSolution {
    let target = volume_target(volume_gap, approach);
    if s_j.is_empty() {
        return SubproblemSolution {
            z: Vec::new(),
            lambda: 0.0,
            target,
            eta: 0.0,
        };
    }
    solve_subproblem_scaled(s_j, s_v, areas, step_scale(s_j, d_move), d_move, target)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iter: usize,
    #[serde(rename = "C_S")]
    pub c_s: f64,
    #[serde(rename = "C_T")]
    pub c_t: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub volfrac: f64,
    pub max_disp: f64,
    #[serde(rename = "max_T")]
    pub max_temp: f64,
    pub lambda: f64,
}

/// State handed to the observer after every iteration.
pub struct IterationView<'a> {
    pub record: &'a ConvergenceRecord,
    pub phi: &'a LevelSetField,
    pub state: &'a DesignState,
    pub analysis: &'a Analysis,
    pub points: &'a BoundaryPointSet,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// Level set of the last analyzed design.
    pub phi: LevelSetField,
    pub state: Option<DesignState>,
    pub analysis: Option<Analysis>,
    pub records: Vec<ConvergenceRecord>,
    pub converged: bool,
}

/// Applies trial multipliers to the current design.
struct Mover<'a> {
    config: &'a OptimizationConfig,
    physics: &'a Physics,
    phi: &'a LevelSetField,
    extension: BandExtension,
    s_j: &'a [f64],
    s_v: &'a [f64],
    eta: f64,
    d_move: f64,
    cell_nodes: &'a [bool],
}

impl Mover<'_> {
    /// Advected and cell-clamped level set for multiplier `lambda`, with its
    /// solid volume.
    fn apply(&self, lambda: f64) -> Result<(LevelSetField, f64)> {
        let grid = self.physics.grid();
        let h = grid.min_spacing();
        let z: Vec<f64> = movement(self.s_j, self.s_v, self.eta, self.d_move, lambda).collect();
        let speed: Vec<f64> = self.extension.apply(&z).into_iter().map(|v| -v).collect();
        let vmax = speed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let substeps = ((vmax / (self.config.cfl * h)).ceil() as usize).max(1);
        let dt = 1.0 / substeps as f64;
        let mut phi = self.phi.clone();
        for _ in 0..substeps {
            phi = advect(grid, &phi, &speed, dt, self.config.cfl)?;
        }
        phi.clamp_cells(self.cell_nodes, h);
        let state = compute_volume_fractions(
            grid,
            &phi,
            &self.physics.regions,
            self.config.subsamples,
            self.config.gamma_min,
        );
        let volume = state.design_volume(grid, &self.physics.regions).0;
        Ok((phi, volume))
    }

    /// Smallest multiplier whose advected design meets the volume target of
    /// the linear step. The linear estimate sum(area·z) is accurate for
    /// uniform movement but drifts for mixed-sign steps, which would let the
    /// design stall short of the constraint.
    fn calibrate(&self, linear: &SubproblemSolution, volume: f64) -> Result<(f64, LevelSetField)> {
        let target = volume + linear.target;
        let (phi0, v0) = self.apply(0.0)?;
        if v0 <= target {
            return Ok((0.0, phi0));
        }
        let scale = linear.lambda.max(step_scale(self.s_j, 1.0).recip()).max(1e-12);
        let mut lo = 0.0;
        let mut hi = scale;
        let mut best = self.apply(hi)?;
        while best.1 > target {
            if hi >= LAMBDA_MAX {
                return Ok((LAMBDA_MAX, best.0));
            }
            lo = hi;
            hi = (2.0 * hi).min(LAMBDA_MAX);
            best = self.apply(hi)?;
        }
        for _ in 0..40 {
            if hi - lo <= 1e-6 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let trial = self.apply(mid)?;
            if trial.1 <= target {
                hi = mid;
                best = trial;
            } else {
                lo = mid;
            }
        }
        Ok((hi, best.0))
    }
}

/// Shifts a reinitialized level set uniformly so the design volume matches
/// `target` again. Redistancing the interpolated surface thins convex
/// features, and left alone that loss compounds over iterations.
fn restore_volume(
    physics: &Physics,
    config: &OptimizationConfig,
    phi: LevelSetField,
    target: f64,
    cell_nodes: &[bool],
) -> LevelSetField {
    let grid = physics.grid();
    let h = grid.min_spacing();
    let shifted = |c: f64| {
        let mut values = phi.values().to_vec();
        values.iter_mut().for_each(|v| *v += c);
        let mut p = LevelSetField::new(grid, values).expect("same grid");
        p.clamp_cells(cell_nodes, h);
        let v = compute_volume_fractions(grid, &p, &physics.regions, config.subsamples, config.gamma_min)
            .design_volume(grid, &physics.regions)
            .0;
        (p, v)
    };
    let (mut lo, mut hi) = (-0.5 * h, 0.5 * h);
    if shifted(lo).1 > target || shifted(hi).1 < target {
        return shifted(0.0).0;
    }
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if shifted(mid).1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (p, v) = shifted(hi);
    debug!("volume restored to {v:.6e} (target {target:.6e}) by a shift of {hi:.3e}");
    p
}

/// Nodes kept inside the solid: cell interiors, and loaded faces, which
/// would otherwise push on void and dominate the sensitivities.
fn held_solid_nodes(physics: &Physics) -> Vec<bool> {
    let mut held = physics.regions.interior_cell_nodes(physics.grid());
    for quad in &physics.tags.traction {
        quad.nodes.iter().for_each(|&n| held[n] = true);
    }
    held
}

const TRUST_MIN: f64 = 1.0 / 32.0;

/// Move-limit factor for the next step, judged on the Lagrangian
/// `J + lambda V` with the multiplier of the step just taken, so that volume
/// removal while infeasible is not mistaken for a failed step.
fn adapt_trust(trust: f64, previous: Option<&ConvergenceRecord>, now: (f64, f64, f64), total: f64, n: Normalizers, k: f64) -> f64 {
    let Some(prev) = previous else { return trust };
    let (c_s, c_t, volfrac) = now;
    let merit = |c_s: f64, c_t: f64, volfrac: f64| evaluate_objective(c_s, c_t, n, k).j + prev.lambda * volfrac * total;
    if merit(c_s, c_t, volfrac) > merit(prev.c_s, prev.c_t, prev.volfrac) {
        (0.5 * trust).max(TRUST_MIN)
    } else {
        (1.1 * trust).min(1.0)
    }
}

fn has_converged(records: &[ConvergenceRecord], norms: Normalizers, config: &OptimizationConfig) -> bool {
    let w = config.convergence_window;
    if records.len() <= w {
        return false;
    }
    let last = records[records.len() - 1];
    if (last.volfrac - config.volume_fraction).abs() > config.volume_tolerance {
        return false;
    }
    let j = |r: &ConvergenceRecord| evaluate_objective(r.c_s, r.c_t, norms, config.k).j;
    let now = j(&last);
    records[records.len() - 1 - w..]
        .iter()
        .all(|r| (j(r) - now).abs() <= config.convergence_tolerance * now.abs())
}

/// Runs the loop from `initial`. The observer sees every completed
/// iteration (for incremental output) and may abort with an error.
///
/// The last iteration is analyzed but not advanced, so the returned level
/// set is the design the final record describes.
pub fn run_optimization(
    config: &OptimizationConfig,
    physics: &Physics,
    initial: &LevelSetField,
    mut observer: impl FnMut(&IterationView) -> Result<()>,
) -> Result<Outcome> {
    config.validate()?;
    let grid = physics.grid();
    let regions = &physics.regions;
    let cell_nodes = held_solid_nodes(physics);
    let h = grid.min_spacing();

    let mut phi = initial.clone();
    phi.clamp_cells(&cell_nodes, h);
    let (mut phi, report) = reinitialize(grid, &phi);
    if !report.had_boundary {
        warn!("initial design has no boundary");
    }

    let mut records: Vec<ConvergenceRecord> = Vec::new();
    let mut norms: Option<Normalizers> = None;
    let mut previous: Option<Analysis> = None;
    let mut last_state = None;
    let mut converged = false;
    let mut trust = 1.0;

    for iter in 0..config.max_iterations {
        let state = compute_volume_fractions(grid, &phi, regions, config.subsamples, config.gamma_min);
        let analysis = physics.analyze(&state, previous.as_ref())?;
        let (c_s, c_t) = (analysis.structural_compliance(), analysis.thermal_compliance());
        let n = update_normalizers(iter, config.normalization_period, c_s, c_t, norms);
        norms = Some(n);
        let objective = evaluate_objective(c_s, c_t, n, config.k);
        let (solid, total) = state.design_volume(grid, regions);
        let volfrac = if total > 0.0 { solid / total } else { 1.0 };

        if config.adaptive_move {
            trust = adapt_trust(trust, records.last(), (c_s, c_t, volfrac), total, n, config.k);
        }

        let points = extract_boundary(grid, &phi, regions);
        let d_move = trust * config.move_fraction(iter) * h;
        let step = if points.is_empty() {
            None
        } else {
            let s = structural_sensitivity(physics, &analysis, config.uncoupled_sensitivity)?;
            let t = thermal_sensitivity(physics, &analysis);
            let sens = objective_sensitivity(physics, s.density, t, config.k, n.c_s0, n.c_t0, &points)?;
            let areas: Vec<f64> = points.points.iter().map(|p| p.area).collect();
            let gap = solid - config.volume_fraction * total;
            let linear = solve_subproblem(&sens.s_j, &sens.s_v, &areas, gap, d_move, config.approach_fraction);
            let mover = Mover {
                config,
                physics,
                phi: &phi,
                extension: BandExtension::new(&points, grid, phi.values(), 2.0 * grid.max_spacing() + d_move),
                s_j: &sens.s_j,
                s_v: &sens.s_v,
                eta: linear.eta,
                d_move,
                cell_nodes: &cell_nodes,
            };
            Some(mover.calibrate(&linear, solid)?)
        };

        let record = ConvergenceRecord {
            iter,
            c_s,
            c_t,
            j: objective.j,
            volfrac,
            max_disp: analysis.displacement.max_displacement(),
            max_temp: analysis.temperature.max_temperature(),
            lambda: step.as_ref().map_or(0.0, |s| s.0),
        };
        info!(
            "iter {iter}: C_S {c_s:.6e} C_T {c_t:.6e} J {:.6} vol {volfrac:.4} lambda {:.3e}",
            objective.j, record.lambda
        );
        observer(&IterationView {
            record: &record,
            phi: &phi,
            state: &state,
            analysis: &analysis,
            points: &points,
        })?;
        records.push(record);

        converged = has_converged(&records, n, config);
        let last = converged || iter + 1 == config.max_iterations;
        if last || step.is_none() {
            if !last {
                warn!("no design boundary at iteration {iter}; stopping");
            }
            previous = Some(analysis);
            last_state = Some(state);
            break;
        }
        phi = step.expect("checked above").1;
        let advected = compute_volume_fractions(grid, &phi, regions, config.subsamples, config.gamma_min)
            .design_volume(grid, regions)
            .0;
        let (next, report) = reinitialize(grid, &phi);
        if !report.had_boundary {
            warn!("design lost its boundary at iteration {iter}");
        }
        debug!("reinitialized {} band nodes", report.band_nodes);
        phi = restore_volume(physics, config, next, advected, &cell_nodes);
        previous = Some(analysis);
        last_state = Some(state);
    }

    Ok(Outcome {
        phi,
        state: last_state,
        analysis: previous,
        records,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_examples() {
        let n = Normalizers { c_s0: 1.0, c_t0: 1.0 };
        assert_eq!(evaluate_objective(2.0, 5.0, n, 1.0).j, 2.0);
        assert!((evaluate_objective(2.0, 1.0, n, 0.7).j - 1.7).abs() < 1e-15);
        assert_eq!(evaluate_objective(3.0, 4.0, Normalizers { c_s0: 3.0, c_t0: 4.0 }, 0.5).j, 1.0);
    }

    #[test]
    fn normalizers_reset_on_period() {
        let n = update_normalizers(0, 5, 7.5, 1.0, None);
        assert_eq!(n.c_s0, 7.5);
        let n3 = update_normalizers(3, 5, 2.0, 2.0, Some(n));
        assert_eq!(n3, n);
        let mut cur = Some(n);
        let mut seen = Vec::new();
        for (iter, cs) in [(5, 4.0), (10, 3.0), (15, 2.5)] {
            cur = Some(update_normalizers(iter, 5, cs, 1.0, cur));
            seen.push(cur.unwrap().c_s0);
        }
        assert_eq!(seen, vec![4.0, 3.0, 2.5]);
        let kept = update_normalizers(20, 5, -1.0, 0.0, cur);
        assert_eq!(kept, cur.unwrap());
    }

    #[test]
    fn two_point_hand_example() {
        let s = solve_subproblem_scaled(&[-1.0, -2.0], &[1.0, 1.0], &[1.0, 1.0], 0.05, 0.1, -0.05);
        assert!((s.lambda - 2.0).abs() < 1e-9);
        assert!((s.z[0] + 0.05).abs() < 1e-10 && s.z[1].abs() < 1e-10);
        assert!((s.z[0] + s.z[1] + 0.05).abs() <= 0.01 * 0.05);
    }

    #[test]
    fn feasible_descent_is_clamped() {
        let s = solve_subproblem_scaled(&[-1.0, -2.0], &[1.0, 1.0], &[1.0, 1.0], 0.05, 0.1, 1.0);
        assert_eq!(s.lambda, 0.0);
        assert!((s.z[0] - 0.05).abs() < 1e-15);
        assert_eq!(s.z[1], 0.1);
    }

    #[test]
    fn zero_gradient_feasible_does_not_move() {
        let s = solve_subproblem(&[0.0; 3], &[1.0; 3], &[1.0; 3], -0.5, 0.1, 0.25);
        assert!(s.z.iter().all(|&z| z == 0.0));
        assert_eq!(s.lambda, 0.0);
    }

    #[test]
    fn unreachable_target_hits_bound() {
        let s = solve_subproblem_scaled(&[-1.0], &[1.0], &[1.0], 0.05, 0.1, -1.0);
        assert_eq!(s.lambda, LAMBDA_MAX);
        assert_eq!(s.z, vec![-0.1]);
    }

    #[test]
    fn multiplier_is_smallest_feasible() {
        let s_j: Vec<f64> = (0..50).map(|i| ((i as f64) * 0.37).sin() - 0.2).collect();
        let areas: Vec<f64> = (0..50).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
        let s_v = vec![1.0; 50];
        let sol = solve_subproblem(&s_j, &s_v, &areas, 1.0, 0.1, 0.25);
        let dv = |l: f64| volume_change(&s_j, &s_v, &areas, sol.eta, 0.1, l);
        assert!(dv(sol.lambda) <= sol.target);
        assert!(dv(sol.lambda * (1.0 - 1e-9)) > sol.target);
        assert!((dv(sol.lambda) - sol.target).abs() <= 0.01 * sol.target.abs());
        assert!(sol.z.iter().all(|z| z.abs() <= 0.1));
    }

    #[test]
    fn schedule_lookup() {
        let c = OptimizationConfig::default();
        assert_eq!(c.move_fraction(0), 0.5);
        assert_eq!(c.move_fraction(99), 0.5);
        assert_eq!(c.move_fraction(100), 0.25);
    }

    #[test]
    fn validation_names_key() {
        let c = OptimizationConfig {
            k: 1.3,
            ..Default::default()
        };
        match c.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "optimizer.k"),
            other => panic!("{other:?}"),
        }
        let c = OptimizationConfig {
            move_limits: vec![(10, 0.5), (5, 0.2)],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
