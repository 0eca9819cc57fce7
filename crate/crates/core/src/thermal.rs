//! Steady heat conduction with volumetric sources and fixed-temperature sinks.

use crate::error::{Error, Result};
use crate::fem::cg::{self, CgOptions, CgReport};
use crate::fem::element::quad_form;
use crate::fem::sparse::dot;
use crate::fem::{CsrMatrix, Discretization};
use crate::materials::ElementProperties;

/// Conductivity matrix without boundary conditions.
pub fn assemble_conduction(disc: &Discretization, props: &ElementProperties) -> CsrMatrix {
    let grid = disc.grid();
    let mut k = CsrMatrix::from_pattern(disc.pattern(), 1);
    for e in 0..grid.element_count() {
        k.add_element(
            disc.pattern(),
            &grid.element_nodes(e),
            disc.positions(e),
            disc.conduction(),
            props.conductivity[e],
        );
    }
    k
}

/// Consistent nodal load of piecewise-constant volumetric sources (W/m³ → W).
pub fn source_load(disc: &Discretization, source: &[f64]) -> Vec<f64> {
    let grid = disc.grid();
    let share = grid.element_volume() / 8.0;
    let mut f = vec![0.0; grid.node_count()];
    for (e, &q) in source.iter().enumerate() {
        if q != 0.0 {
            for n in grid.element_nodes(e) {
                f[n] += q * share;
            }
        }
    }
    f
}

/// Linear system in the temperature rise `theta = T - reference`.
#[derive(Debug, Clone)]
pub struct ThermalSystem {
    /// Conductivity with Dirichlet rows and columns eliminated.
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Source load F_T before elimination.
    pub load: Vec<f64>,
    /// Prescribed rise per node.
    pub fixed: Vec<Option<f64>>,
    pub reference: f64,
}

impl ThermalSystem {
    fn homogeneous_data(&self) -> bool {
        self.fixed.iter().all(|f| f.map_or(true, |v| v == 0.0))
    }
}

pub fn assemble_thermal(
    disc: &Discretization,
    props: &ElementProperties,
    source: &[f64],
    dirichlet: &[(usize, f64)],
    reference: f64,
) -> Result<ThermalSystem> {
    let grid = disc.grid();
    if dirichlet.is_empty() {
        return Err(Error::Singular("thermal"));
    }
    if source.len() != grid.element_count() {
        return Err(Error::Precondition("source length does not match element count".into()));
    }
    if let Some(e) = props.conductivity.iter().position(|&k| !(k > 0.0)) {
        return Err(Error::Precondition(format!("non-positive conductivity in element {e}")));
    }
    let mut matrix = assemble_conduction(disc, props);
    let load = source_load(disc, source);
    let mut fixed = vec![None; grid.node_count()];
    for &(n, t) in dirichlet {
        fixed[n] = Some(t - reference);
    }
    let mut rhs = load.clone();
    matrix.eliminate(&fixed, &mut rhs);
    Ok(ThermalSystem {
        matrix,
        rhs,
        load,
        fixed,
        reference,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    /// Nodal temperature rise over `reference`, K.
    pub theta: Vec<f64>,
    pub reference: f64,
    /// Thermal compliance, W·K.
    pub compliance: f64,
    pub report: CgReport,
}

impl TemperatureField {
    pub fn temperatures(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t + self.reference).collect()
    }

    pub fn max_temperature(&self) -> f64 {
        self.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max) + self.reference
    }

    pub fn min_temperature(&self) -> f64 {
        self.theta.iter().copied().fold(f64::INFINITY, f64::min) + self.reference
    }

    /// Nodal rise over an arbitrary reference temperature.
    pub fn rise_over(&self, t_ref: f64) -> Vec<f64> {
        let shift = self.reference - t_ref;
        self.theta.iter().map(|t| t + shift).collect()
    }
}

/// Sum over elements of k_e · theta_eᵀ K0 theta_e.
pub fn conduction_energy(disc: &Discretization, props: &ElementProperties, theta: &[f64]) -> f64 {
    (0..disc.grid().element_count())
        .map(|e| {
            let t = disc.gather(e, theta);
            props.conductivity[e] * quad_form(disc.conduction(), &t, &t)
        })
        .sum()
}

/// Solves for the temperature rise and evaluates the thermal compliance.
///
/// With all prescribed rises zero (sinks at the reference), the compliance
/// is the work `F_Tᵀ theta`. With other Dirichlet data it is the
/// complementary form `2 F_Tᵀ theta - thetaᵀ K theta`, which coincides with
/// the work form in the homogeneous case and keeps the same element
/// sensitivities.
pub fn solve_thermal(
    sys: &ThermalSystem,
    disc: &Discretization,
    props: &ElementProperties,
    options: &CgOptions,
    guess: Option<&[f64]>,
) -> Result<TemperatureField> {
    let n = sys.rhs.len();
    let mut theta = match guess {
        Some(g) if g.len() == n => g.to_vec(),
        _ => vec![0.0; n],
    };
    for (t, f) in theta.iter_mut().zip(&sys.fixed) {
        if let Some(v) = f {
            *t = *v;
        }
    }
    let report = cg::solve(&sys.matrix, &sys.rhs, &mut theta, options, "thermal")?;
    let work = free_work(&sys.load, &theta, &sys.fixed);
    let compliance = if sys.homogeneous_data() {
        work
    } else {
        2.0 * dot(&sys.load, &theta) - conduction_energy(disc, props, &theta)
    };
    Ok(TemperatureField {
        theta,
        reference: sys.reference,
        compliance,
        report,
    })
}

fn free_work(load: &[f64], x: &[f64], fixed: &[Option<f64>]) -> f64 {
    load.iter()
        .zip(x)
        .zip(fixed)
        .filter(|(_, f)| f.is_none())
        .map(|((a, b), _)| a * b)
        .sum()
}
