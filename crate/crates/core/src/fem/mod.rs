//! Finite-element machinery on the structured grid.

pub mod cg;
pub mod element;
pub mod multigrid;
pub mod sparse;

pub use cg::{CgOptions, CgReport};
pub use sparse::{CsrMatrix, NodePattern};

use crate::grid::StructuredGrid;
use crate::materials::{MaterialKind, MaterialSet};
use element::ElasticKernel;

/// Grid plus everything that depends only on its geometry: the sparsity
/// pattern, per-element scatter positions and unit element kernels.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: StructuredGrid,
    pattern: NodePattern,
    positions: Vec<[[usize; 8]; 8]>,
    conduction: [[f64; 8]; 8],
    elastic: [ElasticKernel; 2],
}

impl Discretization {
    pub fn new(grid: &StructuredGrid, materials: &MaterialSet) -> Self {
        let pattern = NodePattern::new(grid);
        let positions = (0..grid.element_count())
            .map(|e| pattern.element_positions(&grid.element_nodes(e)))
            .collect();
        let h = grid.spacing();
        Self {
            grid: grid.clone(),
            pattern,
            positions,
            conduction: element::conduction_matrix(h),
            elastic: [
                ElasticKernel::new(h, materials.pack.poisson_ratio),
                ElasticKernel::new(h, materials.cell.poisson_ratio),
            ],
        }
    }

    pub fn grid(&self) -> &StructuredGrid {
        &self.grid
    }

    pub fn pattern(&self) -> &NodePattern {
        &self.pattern
    }

    pub fn positions(&self, element: usize) -> &[[usize; 8]; 8] {
        &self.positions[element]
    }

    /// Unit-conductivity element matrix.
    pub fn conduction(&self) -> &[[f64; 8]; 8] {
        &self.conduction
    }

    pub fn elastic(&self, kind: MaterialKind) -> &ElasticKernel {
        &self.elastic[kind as usize]
    }

    /// Gathers nodal scalar values of an element.
    pub fn gather(&self, element: usize, field: &[f64]) -> [f64; 8] {
        self.grid.element_nodes(element).map(|n| field[n])
    }

    /// Gathers nodal vector values (3 per node) of an element.
    pub fn gather3(&self, element: usize, field: &[f64]) -> [f64; 24] {
        let nodes = self.grid.element_nodes(element);
        std::array::from_fn(|i| field[3 * nodes[i / 3] + i % 3])
    }
}
