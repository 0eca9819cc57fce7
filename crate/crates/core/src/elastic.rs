//! Linear elasticity with thermal-expansion loading.
//!
//! The displacement is split as `u = u_mech + u_th`, with `K u_mech = F_S`
//! (tractions, body force, prescribed displacements) and `K u_th = F_th`
//! (homogeneous constraints). The structural compliance is `F_Sᵀ u`, so
//! `u_mech` doubles as its adjoint state.

use crate::error::{Error, Result};
use crate::fem::cg::{self, CgOptions, CgReport};
use crate::fem::element::quad_form;
use crate::fem::sparse::dot;
use crate::fem::{CsrMatrix, Discretization};
use crate::grid::TractionQuad;
use crate::materials::ElementProperties;

/// Structural loading and supports.
#[derive(Debug, Clone, Default)]
pub struct ElasticLoads<'a> {
    /// (dof, prescribed displacement), dof = 3·node + axis.
    pub constraints: &'a [(usize, f64)],
    pub traction: &'a [TractionQuad],
    /// Uniform body force density, N/m³, applied to every element with its
    /// interpolation factor.
    pub body_force: [f64; 3],
    /// Nodal temperature rise over the stress-free temperature.
    pub temperature_rise: Option<&'a [f64]>,
}

/// Every component of every listed node fixed at zero.
pub fn clamp_constraints(nodes: &[usize]) -> Vec<(usize, f64)> {
    nodes
        .iter()
        .flat_map(|&n| (0..3).map(move |c| (3 * n + c, 0.0)))
        .collect()
}

pub fn assemble_stiffness(disc: &Discretization, props: &ElementProperties) -> CsrMatrix {
    let grid = disc.grid();
    let mut k = CsrMatrix::from_pattern(disc.pattern(), 3);
    for e in 0..grid.element_count() {
        k.add_element(
            disc.pattern(),
            &grid.element_nodes(e),
            disc.positions(e),
            &disc.elastic(props.kind[e]).stiffness,
            props.youngs_modulus[e],
        );
    }
    k
}

/// Consistent nodal loads of tractions (area/4 per quad node) and body force.
pub fn mechanical_load(disc: &Discretization, props: &ElementProperties, loads: &ElasticLoads) -> Vec<f64> {
    let grid = disc.grid();
    let mut f = vec![0.0; grid.elastic_dofs()];
    for q in loads.traction {
        for &n in &q.nodes {
            for c in 0..3 {
                f[3 * n + c] += q.traction[c] * q.area / 4.0;
            }
        }
    }
    if loads.body_force != [0.0; 3] {
        let share = grid.element_volume() / 8.0;
        for e in 0..grid.element_count() {
            for n in grid.element_nodes(e) {
                for c in 0..3 {
                    f[3 * n + c] += props.factor[e] * loads.body_force[c] * share;
                }
            }
        }
    }
    f
}

/// Element thermal-expansion load `E_e α_e G (ΔT_e)`, 24 entries.
pub fn element_thermal_load(disc: &Discretization, props: &ElementProperties, e: usize, rise: &[f64]) -> [f64; 24] {
    let g = &disc.elastic(props.kind[e]).thermal_load;
    let t = disc.gather(e, rise);
    let s = props.youngs_modulus[e] * props.expansion[e];
    std::array::from_fn(|i| s * (0..8).map(|a| g[i][a] * t[a]).sum::<f64>())
}

pub fn thermal_load(disc: &Discretization, props: &ElementProperties, rise: &[f64]) -> Vec<f64> {
    let grid = disc.grid();
    let mut f = vec![0.0; grid.elastic_dofs()];
    for e in 0..grid.element_count() {
        let fe = element_thermal_load(disc, props, e, rise);
        for (a, n) in grid.element_nodes(e).into_iter().enumerate() {
            for c in 0..3 {
                f[3 * n + c] += fe[3 * a + c];
            }
        }
    }
    f
}

#[derive(Debug, Clone)]
pub struct ElasticSystem {
    pub matrix: CsrMatrix,
    /// Eliminated right-hand sides.
    pub mech_rhs: Vec<f64>,
    pub thermal_rhs: Vec<f64>,
    /// Loads before elimination.
    pub mech_load: Vec<f64>,
    pub thermal_load: Vec<f64>,
    pub fixed: Vec<Option<f64>>,
}

pub fn assemble_elastic(disc: &Discretization, props: &ElementProperties, loads: &ElasticLoads) -> Result<ElasticSystem> {
    let grid = disc.grid();
    if loads.constraints.is_empty() {
        return Err(Error::Singular("elastic"));
    }
    if let Some(e) = props.youngs_modulus.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Precondition(format!("non-positive Young's modulus in element {e}")));
    }
    let dofs = grid.elastic_dofs();
    let mut fixed = vec![None; dofs];
    for &(d, v) in loads.constraints {
        if d >= dofs {
            return Err(Error::Precondition(format!("constraint dof {d} out of range")));
        }
        fixed[d] = Some(v);
    }
    let mut matrix = assemble_stiffness(disc, props);
    let mech_load = mechanical_load(disc, props, loads);
    let thermal = match loads.temperature_rise {
        Some(rise) => {
            if rise.len() != grid.node_count() {
                return Err(Error::Precondition("temperature field length does not match node count".into()));
            }
            thermal_load(disc, props, rise)
        }
        None => vec![0.0; dofs],
    };
    let mut mech_rhs = mech_load.clone();
    matrix.eliminate(&fixed, &mut mech_rhs);
    let mut thermal_rhs = thermal.clone();
    for (r, f) in thermal_rhs.iter_mut().zip(&fixed) {
        if f.is_some() {
            *r = 0.0;
        }
    }
    Ok(ElasticSystem {
        matrix,
        mech_rhs,
        thermal_rhs,
        mech_load,
        thermal_load: thermal,
        fixed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    /// Total displacement, 3 per node.
    pub u: Vec<f64>,
    pub u_mech: Vec<f64>,
    pub u_thermal: Vec<f64>,
    /// Structural compliance, J.
    pub compliance: f64,
    pub reports: [CgReport; 2],
}

impl DisplacementField {
    pub fn max_displacement(&self) -> f64 {
        self.u
            .chunks_exact(3)
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.u
            .chunks_exact(3)
            .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            .collect()
    }
}

/// Solves both load cases. `guess` is a previous (u_mech, u_thermal) pair.
///
/// With `include_thermal_work` the compliance is `(F_S + F_th)ᵀ u` instead
/// of `F_Sᵀ u`.
pub fn solve_elastic(
    sys: &ElasticSystem,
    options: &CgOptions,
    guess: Option<(&[f64], &[f64])>,
    include_thermal_work: bool,
) -> Result<DisplacementField> {
    let n = sys.mech_rhs.len();
    let start = |g: Option<&[f64]>| match g {
        Some(g) if g.len() == n => g.to_vec(),
        _ => vec![0.0; n],
    };
    let mut u_mech = start(guess.map(|g| g.0));
    for (u, f) in u_mech.iter_mut().zip(&sys.fixed) {
        if let Some(v) = f {
            *u = *v;
        }
    }
    let r_mech = cg::solve(&sys.matrix, &sys.mech_rhs, &mut u_mech, options, "elastic")?;
    let mut u_thermal = start(guess.map(|g| g.1));
    let r_th = cg::solve(&sys.matrix, &sys.thermal_rhs, &mut u_thermal, options, "elastic")?;
    let u: Vec<f64> = u_mech.iter().zip(&u_thermal).map(|(a, b)| a + b).collect();
    let compliance = if include_thermal_work {
        dot(&sys.mech_load, &u) + dot(&sys.thermal_load, &u)
    } else {
        dot(&sys.mech_load, &u)
    };
    Ok(DisplacementField {
        u,
        u_mech,
        u_thermal,
        compliance,
        reports: [r_mech, r_th],
    })
}

/// Sum over elements of `E_e a_eᵀ K0 b_e`.
pub fn stiffness_form(disc: &Discretization, props: &ElementProperties, a: &[f64], b: &[f64]) -> f64 {
    (0..disc.grid().element_count())
        .map(|e| {
            let k = &disc.elastic(props.kind[e]).stiffness;
            props.youngs_modulus[e] * quad_form(k, &disc.gather3(e, a), &disc.gather3(e, b))
        })
        .sum()
}

/// Unconstrained `K u`, e.g. for support reactions.
pub fn internal_force(disc: &Discretization, props: &ElementProperties, u: &[f64]) -> Vec<f64> {
    assemble_stiffness(disc, props).apply(u)
}

/// Elastic energy of the mechanical strain, ½∫(ε - αΔT·1)ᵀ C (ε - αΔT·1) dV,
/// by 2×2×2 Gauss quadrature.
pub fn strain_energy(disc: &Discretization, props: &ElementProperties, u: &[f64], rise: Option<&[f64]>) -> f64 {
    use crate::fem::element::{gauss_points, isotropic_elasticity, shape, shape_gradients, strain_displacement};
    let grid = disc.grid();
    let h = grid.spacing();
    let w = grid.element_volume() / 8.0;
    let points: Vec<([[f64; 24]; 6], [f64; 8])> = gauss_points()
        .into_iter()
        .map(|xi| (strain_displacement(&shape_gradients(xi, h)), shape(xi)))
        .collect();
    (0..grid.element_count())
        .map(|e| {
            let ue = disc.gather3(e, u);
            let te = rise.map(|r| disc.gather(e, r));
            let d = isotropic_elasticity(disc.elastic(props.kind[e]).poisson);
            let mut sum = 0.0;
            for (b, n) in &points {
                let mut eps: [f64; 6] = std::array::from_fn(|i| (0..24).map(|j| b[i][j] * ue[j]).sum());
                if let Some(t) = te {
                    let dt: f64 = (0..8).map(|a| n[a] * t[a]).sum();
                    for v in eps.iter_mut().take(3) {
                        *v -= props.expansion[e] * dt;
                    }
                }
                let q: f64 = (0..6).map(|i| eps[i] * (0..6).map(|k| d[i][k] * eps[k]).sum::<f64>()).sum();
                sum += 0.5 * w * props.youngs_modulus[e] * q;
            }
            sum
        })
        .sum()
}

/// Von Mises stress at each element centroid, including the thermal strain.
pub fn von_mises(disc: &Discretization, props: &ElementProperties, u: &[f64], rise: Option<&[f64]>) -> Vec<f64> {
    use crate::fem::element::{isotropic_elasticity, shape_gradients, strain_displacement};
    let grid = disc.grid();
    let b = strain_displacement(&shape_gradients([0.0; 3], grid.spacing()));
    (0..grid.element_count())
        .map(|e| {
            let ue = disc.gather3(e, u);
            let d = isotropic_elasticity(disc.elastic(props.kind[e]).poisson);
            let mut eps: [f64; 6] = std::array::from_fn(|i| (0..24).map(|j| b[i][j] * ue[j]).sum());
            if let Some(rise) = rise {
                let t = disc.gather(e, rise).iter().sum::<f64>() / 8.0;
                for v in eps.iter_mut().take(3) {
                    *v -= props.expansion[e] * t;
                }
            }
            let s: [f64; 6] =
                std::array::from_fn(|i| props.youngs_modulus[e] * (0..6).map(|k| d[i][k] * eps[k]).sum::<f64>());
            (0.5 * ((s[0] - s[1]).powi(2) + (s[1] - s[2]).powi(2) + (s[2] - s[0]).powi(2))
                + 3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]))
                .sqrt()
        })
        .collect()
}
