//! Element-density sensitivities of the compliances and their transfer to
//! boundary points.
//!
//! Densities are derivatives with respect to the element solid fraction
//! gamma_e. Moving the boundary outward by `dn` over area `A` inside element
//! `e` changes gamma_e by `A dn / V_e`, so `d_e / V_e` is the shape
//! derivative per unit area and unit normal movement.

use crate::analysis::{Analysis, Physics};
use crate::error::{Error, Result};
use crate::fem::cg;
use crate::fem::element::quad_form;
use crate::levelset::{idw_interpolate, BoundaryPointSet};

/// dC_T/dgamma_e = -f'(gamma) kappa thetaᵀ K0 theta.
pub fn thermal_sensitivity(physics: &Physics, analysis: &Analysis) -> Vec<f64> {
    let disc = &physics.disc;
    let props = &analysis.props;
    let theta = &analysis.temperature.theta;
    (0..disc.grid().element_count())
        .map(|e| {
            let slope = props.factor_slope[e];
            if slope == 0.0 {
                return 0.0;
            }
            let t = disc.gather(e, theta);
            -slope * physics.materials.pack.conductivity * quad_form(disc.conduction(), &t, &t)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralSensitivity {
    pub density: Vec<f64>,
    /// Thermal adjoint of the coupling term, when it was computed.
    pub thermal_adjoint: Option<Vec<f64>>,
}

/// dC_S/dgamma_e including the stiffness term, the explicit dependence of
/// the thermal-strain load on the interpolated modulus, and (unless
/// `uncoupled`) the dependence of that load on the temperature field.
pub fn structural_sensitivity(physics: &Physics, analysis: &Analysis, uncoupled: bool) -> Result<StructuralSensitivity> {
    let disc = &physics.disc;
    let grid = disc.grid();
    let props = &analysis.props;
    let disp = &analysis.displacement;
    let pack = &physics.materials.pack;
    // adjoint of the compliance functional and the weight on load derivatives
    let (lambda, w): (&[f64], Vec<f64>) = if physics.include_thermal_work {
        (&disp.u, disp.u.iter().map(|v| 2.0 * v).collect())
    } else {
        (&disp.u_mech, disp.u_mech.clone())
    };

    let mut density: Vec<f64> = (0..grid.element_count())
        .map(|e| {
            let slope = props.factor_slope[e];
            if slope == 0.0 {
                return 0.0;
            }
            let k = &disc.elastic(props.kind[e]).stiffness;
            let stiffness = -slope * pack.youngs_modulus * quad_form(k, &disc.gather3(e, lambda), &disc.gather3(e, &disp.u));
            let g = &disc.elastic(props.kind[e]).thermal_load;
            let we = disc.gather3(e, &w);
            let t = disc.gather(e, &analysis.rise);
            let load: f64 = (0..24).map(|i| we[i] * (0..8).map(|a| g[i][a] * t[a]).sum::<f64>()).sum();
            stiffness + slope * pack.youngs_modulus * props.expansion[e] * load
        })
        .collect();

    if uncoupled {
        return Ok(StructuralSensitivity {
            density,
            thermal_adjoint: None,
        });
    }

    // K_T mu = (dF_th/dT)ᵀ w, homogeneous at the sinks
    let mut rhs = vec![0.0; grid.node_count()];
    for e in 0..grid.element_count() {
        let g = &disc.elastic(props.kind[e]).thermal_load;
        let we = disc.gather3(e, &w);
        let s = props.youngs_modulus[e] * props.expansion[e];
        for (a, n) in grid.element_nodes(e).into_iter().enumerate() {
            rhs[n] += s * (0..24).map(|i| g[i][a] * we[i]).sum::<f64>();
        }
    }
    let sys = &analysis.thermal_system;
    for (r, f) in rhs.iter_mut().zip(&sys.fixed) {
        if f.is_some() {
            *r = 0.0;
        }
    }
    let mut mu = vec![0.0; rhs.len()];
    cg::solve(&sys.matrix, &rhs, &mut mu, &physics.solver, "thermal adjoint")?;
    let theta = &analysis.temperature.theta;
    for (e, d) in density.iter_mut().enumerate() {
        let slope = props.factor_slope[e];
        if slope != 0.0 {
            let m = disc.gather(e, &mu);
            let t = disc.gather(e, theta);
            *d -= slope * physics.materials.pack.conductivity * quad_form(disc.conduction(), &m, &t);
        }
    }
    Ok(StructuralSensitivity {
        density,
        thermal_adjoint: Some(mu),
    })
}

/// Weighted objective derivative from the two normalized derivatives.
#[inline]
pub fn combine(s_structural: f64, s_thermal: f64, k: f64, c_s0: f64, c_t0: f64) -> f64 {
    k * s_structural / c_s0 + (1.0 - k) * s_thermal / c_t0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRecord {
    /// Objective shape derivative per boundary point.
    pub s_j: Vec<f64>,
    /// Volume shape derivative per boundary point (always 1).
    pub s_v: Vec<f64>,
    /// Raw element densities, for diagnostics.
    pub structural: Vec<f64>,
    pub thermal: Vec<f64>,
}

/// Maps element densities of DESIGN elements to boundary points and forms
/// the weighted objective derivative.
pub fn objective_sensitivity(
    physics: &Physics,
    structural: Vec<f64>,
    thermal: Vec<f64>,
    k: f64,
    c_s0: f64,
    c_t0: f64,
    points: &BoundaryPointSet,
) -> Result<SensitivityRecord> {
    if !(c_s0 > 0.0 && c_t0 > 0.0) {
        return Err(Error::Precondition(format!(
            "normalizers must be positive (C_S0 = {c_s0}, C_T0 = {c_t0})"
        )));
    }
    let grid = physics.grid();
    let v = grid.element_volume();
    let design: Vec<usize> = (0..grid.element_count()).filter(|&e| !physics.regions.is_cell(e)).collect();
    let sources: Vec<[f64; 3]> = design.iter().map(|&e| grid.element_centroid(e)).collect();
    let combined: Vec<f64> = design
        .iter()
        .map(|&e| combine(structural[e] / v, thermal[e] / v, k, c_s0, c_t0))
        .collect();
    let targets: Vec<[f64; 3]> = points.points.iter().map(|p| p.position).collect();
    let s_j = idw_interpolate(&sources, &combined, &targets, 2.0 * grid.max_spacing());
    Ok(SensitivityRecord {
        s_v: vec![1.0; s_j.len()],
        s_j,
        structural,
        thermal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BcConfig, BoundaryTags, RegionMap, StructuredGrid, ThermalFaceConfig, TractionConfig};
    use crate::levelset::DesignState;
    use crate::materials::MaterialSet;
    use crate::fem::CgOptions;

    fn physics(counts: [usize; 3], traction: f64, q: f64) -> Physics {
        let grid = StructuredGrid::with_spacing(counts, [0.01; 3]).unwrap();
        let regions = RegionMap::all_design(&grid);
        let bc = BcConfig {
            sink_temperature: 300.0,
            thermal: vec![ThermalFaceConfig {
                face: "z-".into(),
                temperature: None,
            }],
            clamped: vec!["x-".into()],
            traction: vec![TractionConfig {
                face: "x+".into(),
                vector: [0.0, 0.0, traction],
            }],
        };
        let tags = BoundaryTags::tag(&grid, &bc).unwrap();
        let source = vec![q; grid.element_count()];
        let mut p = Physics::new(&grid, regions, MaterialSet::default(), tags, source, 300.0);
        p.solver = CgOptions {
            tolerance: 1e-14,
            max_iterations: Some(20_000),
            ..CgOptions::default()
        };
        p
    }

    fn design(p: &Physics) -> DesignState {
        let n = p.grid().element_count();
        let g = (0..n).map(|e| 0.35 + 0.6 * ((e as f64 * 0.618).fract())).collect();
        DesignState::from_fractions(g, &p.regions, 1e-4)
    }

    fn perturbed(p: &Physics, s: &DesignState, e: usize, h: f64) -> (f64, f64) {
        let mut g = s.gamma().to_vec();
        g[e] += h;
        let st = DesignState::from_fractions(g, &p.regions, s.gamma_min());
        let a = p.analyze(&st, None).unwrap();
        (a.structural_compliance(), a.thermal_compliance())
    }

    fn central(p: &Physics, s: &DesignState, e: usize) -> (f64, f64) {
        let h = 1e-6;
        let (sp, tp) = perturbed(p, s, e, h);
        let (sm, tm) = perturbed(p, s, e, -h);
        ((sp - sm) / (2.0 * h), (tp - tm) / (2.0 * h))
    }

    #[test]
    fn thermal_density_matches_finite_difference() {
        let p = physics([4, 2, 3], -1e5, 2e6);
        let s = design(&p);
        let a = p.analyze(&s, None).unwrap();
        let d = thermal_sensitivity(&p, &a);
        for e in [0, 5, 13, 23] {
            let (_, fd) = central(&p, &s, e);
            assert!((d[e] - fd).abs() <= 1e-4 * fd.abs(), "e{e}: {} vs {fd}", d[e]);
            assert!(d[e] < 0.0);
        }
    }

    #[test]
    fn rod_with_unit_end_difference() {
        // two elements along x, kappa = 1, T = 0 and 1 at the ends
        let grid = StructuredGrid::with_spacing([2, 1, 1], [0.5, 0.2, 0.2]).unwrap();
        let regions = RegionMap::all_design(&grid);
        let mut mats = MaterialSet::default();
        mats.pack.conductivity = 1.0;
        let bc = BcConfig {
            sink_temperature: 0.0,
            thermal: vec![
                ThermalFaceConfig {
                    face: "x-".into(),
                    temperature: Some(0.0),
                },
                ThermalFaceConfig {
                    face: "x+".into(),
                    temperature: Some(1.0),
                },
            ],
            clamped: vec!["x-".into()],
            traction: vec![],
        };
        let tags = BoundaryTags::tag(&grid, &bc).unwrap();
        let mut p = Physics::new(&grid, regions, mats, tags, vec![0.0; 2], 0.0);
        p.solver = CgOptions::with_tolerance(1e-14);
        // equal fractions keep the gradient uniform; interior so FD is two-sided
        let s = DesignState::from_fractions(vec![0.5; 2], &p.regions, 1e-4);
        let a = p.analyze(&s, None).unwrap();
        let d = thermal_sensitivity(&p, &a);
        let grad: f64 = 1.0 / 1.0;
        let v = grid.element_volume();
        for e in 0..2 {
            let want = -(1.0 - 1e-4) * grad * grad * v;
            assert!((d[e] - want).abs() <= 1e-10 * want.abs());
            let (_, fd) = central(&p, &s, e);
            assert!((d[e] - fd).abs() <= 1e-4 * want.abs(), "{} vs {fd}", d[e]);
        }
    }

    #[test]
    fn coupled_density_matches_finite_difference_and_coupling_matters() {
        let p = physics([4, 2, 2], -2e4, 5e6);
        let s = design(&p);
        let a = p.analyze(&s, None).unwrap();
        let full = structural_sensitivity(&p, &a, false).unwrap().density;
        let partial = structural_sensitivity(&p, &a, true).unwrap().density;
        let mut worst_full = 0.0f64;
        let mut worst_partial = 0.0f64;
        let fds: Vec<f64> = (0..16).map(|e| central(&p, &s, e).0).collect();
        let scale = fds.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for e in 0..16 {
            worst_full = worst_full.max((full[e] - fds[e]).abs() / scale);
            worst_partial = worst_partial.max((partial[e] - fds[e]).abs() / scale);
        }
        assert!(worst_full <= 1e-3, "coupled error {worst_full}");
        assert!(worst_partial > 1e-2, "ablation error {worst_partial}");
    }

    #[test]
    fn thermal_work_variant_matches_finite_difference() {
        let mut p = physics([3, 2, 2], -2e4, 5e6);
        p.include_thermal_work = true;
        let s = design(&p);
        let a = p.analyze(&s, None).unwrap();
        let full = structural_sensitivity(&p, &a, false).unwrap().density;
        let fds: Vec<f64> = (0..12).map(|e| central(&p, &s, e).0).collect();
        let scale = fds.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for e in 0..12 {
            assert!((full[e] - fds[e]).abs() <= 1e-3 * scale, "e{e}");
        }
    }

    #[test]
    fn pure_mechanical_density_is_nonpositive() {
        let p = physics([4, 2, 2], -1e6, 0.0);
        let s = design(&p);
        let a = p.analyze(&s, None).unwrap();
        let d = structural_sensitivity(&p, &a, false).unwrap();
        assert!(d.density.iter().all(|&v| v <= 0.0));
        // with no temperature rise the coupling term vanishes
        let u = structural_sensitivity(&p, &a, true).unwrap();
        assert_eq!(d.density, u.density);
    }

    #[test]
    fn combine_weights_normalized_terms() {
        assert_eq!(combine(2.0, 4.0, 0.5, 1.0, 1.0), 3.0);
        assert_eq!(combine(2.0, 4.0, 1.0, 1.0, 1.0), 2.0);
        assert_eq!(combine(2.0, 4.0, 1.0, 2.0, 1.0), 1.0);
    }
}
