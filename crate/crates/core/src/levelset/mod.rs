//! Implicit design representation.
//!
//! The design is the region where the nodal level-set function is
//! nonnegative; void is where it is negative and the boundary is the zero
//! isosurface. The boundary is moved by upwind Hamilton–Jacobi advection and
//! the function is periodically restored to a signed distance.

mod boundary;
mod design;
mod extension;
mod reinit;

pub use boundary::{edge_crossing, extract_boundary, BoundaryPoint, BoundaryPointSet, ElementFacet, Triangle};
pub use design::{compute_volume_fractions, interpolate_properties, DesignState, DEFAULT_GAMMA_MIN};
pub use extension::{extend_velocity, idw_interpolate, BandExtension, IdwOperator};
pub use reinit::{reinitialize, ReinitReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RegionMap, StructuredGrid};

/// Nodal level-set values in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    values: Vec<f64>,
}

impl LevelSetField {
    pub fn new(grid: &StructuredGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Precondition(format!(
                "level set has {} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(Self { values })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &StructuredGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self {
            values: (0..grid.node_count()).map(|n| f(grid.node_position(n))).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Trilinear interpolation at a point inside the grid.
    pub fn interpolate(&self, grid: &StructuredGrid, p: [f64; 3]) -> f64 {
        let o = grid.origin();
        let h = grid.spacing();
        let n = grid.counts();
        let mut idx = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let s = ((p[a] - o[a]) / h[a]).clamp(0.0, n[a] as f64);
            let i = (s.floor() as usize).min(n[a] - 1);
            idx[a] = i;
            t[a] = s - i as f64;
        }
        let e = grid.element_index(idx[0], idx[1], idx[2]);
        trilinear(&grid.element_nodes(e).map(|v| self.values[v]), t)
    }

    /// Raises values on nodes touching CELL elements to at least `floor`.
    pub fn clamp_cells(&mut self, cell_nodes: &[bool], floor: f64) {
        for (v, &c) in self.values.iter_mut().zip(cell_nodes) {
            if c && *v < floor {
                *v = floor;
            }
        }
    }
}

/// Trilinear interpolation of the 8 corner values at local coordinates in [0,1]³.
pub fn trilinear(v: &[f64; 8], t: [f64; 3]) -> f64 {
    let [u, w, s] = t;
    let bottom = (1.0 - u) * (1.0 - w) * v[0] + u * (1.0 - w) * v[1] + u * w * v[2] + (1.0 - u) * w * v[3];
    let top = (1.0 - u) * (1.0 - w) * v[4] + u * (1.0 - w) * v[5] + u * w * v[6] + (1.0 - u) * w * v[7];
    (1.0 - s) * bottom + s * top
}

/// Initial design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeedSpec {
    FullSolid,
    /// Spherical holes on a lattice spanning the box, faces included
    /// (a single hole along an axis sits at the mid-plane).
    HoleLattice { counts: [usize; 3], radius: f64 },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::HoleLattice {
            counts: [4, 3, 4],
            radius: 0.006,
        }
    }
}

impl SeedSpec {
    pub fn hole_centers(&self, grid: &StructuredGrid) -> Vec<[f64; 3]> {
        let SeedSpec::HoleLattice { counts, .. } = self else {
            return Vec::new();
        };
        let o = grid.origin();
        let size = grid.size();
        let coord = |a: usize, i: usize| {
            if counts[a] == 1 {
                o[a] + 0.5 * size[a]
            } else {
                o[a] + size[a] * i as f64 / (counts[a] - 1) as f64
            }
        };
        let mut centers = Vec::new();
        for k in 0..counts[2] {
            for j in 0..counts[1] {
                for i in 0..counts[0] {
                    centers.push([coord(0, i), coord(1, j), coord(2, k)]);
                }
            }
        }
        centers
    }
}

/// Signed distance to the domain boundary, positive inside.
pub fn box_distance(grid: &StructuredGrid, p: [f64; 3]) -> f64 {
    let o = grid.origin();
    let size = grid.size();
    (0..3)
        .map(|a| (p[a] - o[a]).min(o[a] + size[a] - p[a]))
        .fold(f64::INFINITY, f64::min)
}

/// Builds the initial level set; nodes surrounded by CELL elements are kept inside solid.
pub fn initialize_design(
    grid: &StructuredGrid,
    regions: &RegionMap,
    seed: &SeedSpec,
) -> Result<LevelSetField> {
    if let SeedSpec::HoleLattice { radius, .. } = seed {
        if !(*radius > 0.0) {
            return Err(Error::config(
                "optimizer.seed.radius",
                format!("hole radius must be positive, got {radius}"),
            ));
        }
    }
    let centers = seed.hole_centers(grid);
    let radius = match seed {
        SeedSpec::HoleLattice { radius, .. } => *radius,
        SeedSpec::FullSolid => 0.0,
    };
    let mut phi = LevelSetField::from_fn(grid, |p| {
        centers.iter().fold(box_distance(grid, p), |acc, c| {
            let d = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) + (p[2] - c[2]).powi(2)).sqrt();
            acc.min(d - radius)
        })
    });
    phi.clamp_cells(&regions.interior_cell_nodes(grid), grid.min_spacing());
    Ok(phi)
}

/// Godunov upwind gradient magnitude at every node for speed sign `v`.
///
/// Missing one-sided differences at the domain boundary are replaced by the
/// available one (linear extrapolation).
pub fn upwind_gradient_norm(grid: &StructuredGrid, phi: &[f64], speed: &[f64]) -> Vec<f64> {
    let dims = grid.node_dims();
    let h = grid.spacing();
    let stride = [1, dims[0], dims[0] * dims[1]];
    (0..grid.node_count())
        .map(|n| {
            let ijk = grid.node_ijk(n);
            let mut sum = 0.0;
            for a in 0..3 {
                if dims[a] == 1 {
                    continue;
                }
                let back = (ijk[a] > 0).then(|| (phi[n] - phi[n - stride[a]]) / h[a]);
                let fwd = (ijk[a] + 1 < dims[a]).then(|| (phi[n + stride[a]] - phi[n]) / h[a]);
                let (dm, dp) = match (back, fwd) {
                    (Some(b), Some(f)) => (b, f),
                    (Some(b), None) => (b, b),
                    (None, Some(f)) => (f, f),
                    (None, None) => (0.0, 0.0),
                };
                sum += if speed[n] > 0.0 {
                    dm.max(0.0).powi(2).max(dp.min(0.0).powi(2))
                } else {
                    dm.min(0.0).powi(2).max(dp.max(0.0).powi(2))
                };
            }
            sum.sqrt()
        })
        .collect()
}

/// One explicit step of `phi_t + V |grad phi| = 0`: positive `V` erodes the solid.
pub fn advect(
    grid: &StructuredGrid,
    phi: &LevelSetField,
    speed: &[f64],
    dt: f64,
    cfl: f64,
) -> Result<LevelSetField> {
    if speed.len() != grid.node_count() {
        return Err(Error::Precondition("speed field length does not match node count".into()));
    }
    let vmax = speed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let travel = vmax * dt;
    let limit = cfl * grid.min_spacing();
    if travel > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { travel, limit });
    }
    if vmax == 0.0 {
        return Ok(phi.clone());
    }
    let grad = upwind_gradient_norm(grid, &phi.values, speed);
    let values = phi
        .values
        .iter()
        .zip(&grad)
        .zip(speed)
        .map(|((p, g), v)| p - dt * g * v)
        .collect();
    Ok(LevelSetField { values })
}

/// Central-difference gradient magnitude (one-sided at the boundary).
pub fn central_gradient_norm(grid: &StructuredGrid, phi: &[f64]) -> Vec<f64> {
    let dims = grid.node_dims();
    let h = grid.spacing();
    let stride = [1, dims[0], dims[0] * dims[1]];
    (0..grid.node_count())
        .map(|n| {
            let ijk = grid.node_ijk(n);
            (0..3)
                .filter(|&a| dims[a] > 1)
                .map(|a| {
                    let lo = if ijk[a] > 0 { n - stride[a] } else { n };
                    let hi = if ijk[a] + 1 < dims[a] { n + stride[a] } else { n };
                    let span = (grid.node_ijk(hi)[a] - grid.node_ijk(lo)[a]) as f64 * h[a];
                    ((phi[hi] - phi[lo]) / span).powi(2)
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellLayout, GridConfig};

    fn grid() -> StructuredGrid {
        StructuredGrid::with_spacing([6, 5, 4], [0.1, 0.1, 0.1]).unwrap()
    }

    #[test]
    fn zero_speed_is_identity() {
        let g = grid();
        let phi = LevelSetField::from_fn(&g, |p| (p[0] * 7.0).sin() + p[2]);
        let out = advect(&g, &phi, &vec![0.0; g.node_count()], 1.0, 0.5).unwrap();
        assert_eq!(
            out.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            phi.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn uniform_erosion_of_signed_distance() {
        let g = grid();
        let phi = LevelSetField::from_fn(&g, |p| 0.23 - p[2]);
        let out = advect(&g, &phi, &vec![0.1; g.node_count()], 0.4, 0.5).unwrap();
        for (a, b) in phi.values().iter().zip(out.values()) {
            assert!((a - b - 0.04).abs() < 1e-12);
        }
        // uniform V = 0.1 m/s, dt = 1 s on a coarser grid
        let coarse = StructuredGrid::with_spacing([4, 4, 4], [0.25, 0.25, 0.25]).unwrap();
        let phi = LevelSetField::from_fn(&coarse, |p| p[0] - 0.4);
        let out = advect(&coarse, &phi, &vec![0.1; coarse.node_count()], 1.0, 0.5).unwrap();
        for (a, b) in phi.values().iter().zip(out.values()) {
            assert!((a - b - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_speed_grows_solid() {
        let coarse = StructuredGrid::with_spacing([4, 4, 4], [0.25, 0.25, 0.25]).unwrap();
        let phi = LevelSetField::from_fn(&coarse, |p| 0.6 - p[1]);
        let out = advect(&coarse, &phi, &vec![-0.2; coarse.node_count()], 0.5, 0.5).unwrap();
        for (a, b) in phi.values().iter().zip(out.values()) {
            assert!((b - a - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let g = grid();
        let phi = LevelSetField::from_fn(&g, |p| p[0]);
        let err = advect(&g, &phi, &vec![1.0; g.node_count()], 1.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
    }

    #[test]
    fn full_solid_seed_is_box_distance() {
        let g = grid();
        let regions = RegionMap::all_design(&g);
        let phi = initialize_design(&g, &regions, &SeedSpec::FullSolid).unwrap();
        for n in 0..g.node_count() {
            assert!((phi.values()[n] - box_distance(&g, g.node_position(n))).abs() < 1e-15);
        }
        let state = compute_volume_fractions(&g, &phi, &regions, 4, DEFAULT_GAMMA_MIN);
        assert!(state.gamma().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_hole_seed_matches_analytic_distance() {
        let g = StructuredGrid::with_spacing([10, 10, 10], [0.1, 0.1, 0.1]).unwrap();
        let regions = RegionMap::all_design(&g);
        let seed = SeedSpec::HoleLattice {
            counts: [1, 1, 1],
            radius: 0.3,
        };
        let phi = initialize_design(&g, &regions, &seed).unwrap();
        for n in (0..g.node_count()).step_by(g.node_count() / 10) {
            let p = g.node_position(n);
            let r = ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2) + (p[2] - 0.5).powi(2)).sqrt();
            let expected = box_distance(&g, p).min(r - 0.3);
            assert!((phi.values()[n] - expected).abs() < 1e-15, "node {n}");
        }
        let center = g.node_index(5, 5, 5);
        assert!((phi.values()[center] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn holes_over_cells_keep_cells_solid() {
        let g = StructuredGrid::new(&GridConfig {
            elements: [12, 8, 10],
            ..GridConfig::default()
        })
        .unwrap();
        let regions = RegionMap::label(&g, &CellLayout::default()).unwrap();
        let seed = SeedSpec::HoleLattice {
            counts: [3, 2, 2],
            radius: 0.012,
        };
        let phi = initialize_design(&g, &regions, &seed).unwrap();
        let state = compute_volume_fractions(&g, &phi, &regions, 4, DEFAULT_GAMMA_MIN);
        for e in 0..g.element_count() {
            if regions.is_cell(e) {
                assert_eq!(state.gamma()[e], 1.0);
            }
        }
        assert!(state.gamma().iter().any(|&v| v < 1.0));
        let err = initialize_design(&g, &regions, &SeedSpec::HoleLattice { counts: [1, 1, 1], radius: 0.0 });
        assert!(err.is_err());
    }

    #[test]
    fn trilinear_interpolation_reproduces_linear_fields() {
        let g = grid();
        let phi = LevelSetField::from_fn(&g, |p| 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2]);
        let p = [0.33, 0.17, 0.29];
        assert!((phi.interpolate(&g, p) - (1.0 + 0.66 - 0.17 + 0.145)).abs() < 1e-14);
    }
}
