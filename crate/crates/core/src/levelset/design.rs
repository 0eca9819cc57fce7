use rayon::prelude::*;

use super::{trilinear, LevelSetField};
use crate::grid::{RegionMap, StructuredGrid};
use crate::materials::{ElementProperties, MaterialKind, MaterialSet};

pub const DEFAULT_GAMMA_MIN: f64 = 1e-4;

/// Per-element solid fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignState {
    gamma: Vec<f64>,
    gamma_min: f64,
}

impl DesignState {
    /// Wraps explicit fractions; CELL elements are forced to 1.
    pub fn from_fractions(mut gamma: Vec<f64>, regions: &RegionMap, gamma_min: f64) -> Self {
        for (e, g) in gamma.iter_mut().enumerate() {
            if regions.is_cell(e) {
                *g = 1.0;
            } else {
                *g = g.clamp(0.0, 1.0);
            }
        }
        Self { gamma, gamma_min }
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma_min(&self) -> f64 {
        self.gamma_min
    }

    /// Solid volume in DESIGN elements and the DESIGN volume itself.
    pub fn design_volume(&self, grid: &StructuredGrid, regions: &RegionMap) -> (f64, f64) {
        let v = grid.element_volume();
        let mut solid = 0.0;
        let mut total = 0.0;
        for (e, g) in self.gamma.iter().enumerate() {
            if !regions.is_cell(e) {
                solid += g * v;
                total += v;
            }
        }
        (solid, total)
    }

    /// Solid fraction of the designable region.
    pub fn volume_fraction(&self, grid: &StructuredGrid, regions: &RegionMap) -> f64 {
        let (solid, total) = self.design_volume(grid, regions);
        if total > 0.0 {
            solid / total
        } else {
            1.0
        }
    }
}

/// Fraction of each element where the trilinear level set is positive,
/// estimated on a regular `s`³ lattice of sub-cell centers.
pub fn compute_volume_fractions(
    grid: &StructuredGrid,
    phi: &LevelSetField,
    regions: &RegionMap,
    subsamples: usize,
    gamma_min: f64,
) -> DesignState {
    let s = subsamples.max(1);
    let coords: Vec<f64> = (0..s).map(|i| (i as f64 + 0.5) / s as f64).collect();
    let total = (s * s * s) as f64;
    let values = phi.values();
    let gamma = (0..grid.element_count())
        .into_par_iter()
        .map(|e| {
            if regions.is_cell(e) {
                return 1.0;
            }
            let v = grid.element_nodes(e).map(|n| values[n]);
            if v.iter().all(|&x| x > 0.0) {
                return 1.0;
            }
            if v.iter().all(|&x| x < 0.0) {
                return 0.0;
            }
            let mut inside = 0usize;
            for &w in &coords {
                for &q in &coords {
                    for &u in &coords {
                        if trilinear(&v, [u, q, w]) > 0.0 {
                            inside += 1;
                        }
                    }
                }
            }
            inside as f64 / total
        })
        .collect();
    DesignState { gamma, gamma_min }
}

/// Ersatz-material interpolation of element properties.
pub fn interpolate_properties(
    state: &DesignState,
    regions: &RegionMap,
    materials: &MaterialSet,
) -> ElementProperties {
    let n = state.gamma.len();
    let mut props = ElementProperties {
        kind: Vec::with_capacity(n),
        factor: Vec::with_capacity(n),
        conductivity: Vec::with_capacity(n),
        youngs_modulus: Vec::with_capacity(n),
        expansion: Vec::with_capacity(n),
        heat_capacity: Vec::with_capacity(n),
        factor_slope: Vec::with_capacity(n),
    };
    let gm = state.gamma_min;
    for (e, &g) in state.gamma.iter().enumerate() {
        if regions.is_cell(e) {
            let m = &materials.cell;
            props.kind.push(MaterialKind::Cell);
            props.factor.push(1.0);
            props.conductivity.push(m.conductivity);
            props.youngs_modulus.push(m.youngs_modulus);
            props.expansion.push(m.expansion);
            props.heat_capacity.push(m.heat_capacity);
            props.factor_slope.push(0.0);
        } else {
            let m = &materials.pack;
            let f = gm * (1.0 - g) + g;
            props.kind.push(MaterialKind::Pack);
            props.factor.push(f);
            props.conductivity.push(f * m.conductivity);
            props.youngs_modulus.push(f * m.youngs_modulus);
            props.expansion.push(m.expansion);
            props.heat_capacity.push(f * m.heat_capacity);
            props.factor_slope.push(1.0 - gm);
        }
    }
    props
}
