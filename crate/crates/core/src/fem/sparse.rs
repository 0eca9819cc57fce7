//! Compressed sparse row storage with the node-neighbor pattern of a structured grid.

use rayon::prelude::*;

use crate::grid::StructuredGrid;

const CHUNK: usize = 4096;

/// Node-level adjacency shared by every operator on the same grid.
#[derive(Debug, Clone)]
pub struct NodePattern {
    dims: [usize; 3],
    ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl NodePattern {
    pub fn new(grid: &StructuredGrid) -> Self {
        let n = grid.node_count();
        let mut ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(27 * n);
        ptr.push(0);
        for node in 0..n {
            cols.extend(grid.node_neighbors(node));
            ptr.push(cols.len());
        }
        Self {
            dims: grid.node_dims(),
            ptr,
            cols,
        }
    }

    fn position(&self, row: usize, col: usize) -> usize {
        let slice = &self.cols[self.ptr[row]..self.ptr[row + 1]];
        slice
            .binary_search(&col)
            .expect("column outside the node pattern")
    }

    /// Positions of each (a, b) pair of element nodes within row a's neighbor list.
    pub fn element_positions(&self, nodes: &[usize; 8]) -> [[usize; 8]; 8] {
        std::array::from_fn(|a| std::array::from_fn(|b| self.position(nodes[a], nodes[b])))
    }
}

/// Square sparse matrix with `block` unknowns per node, rows sorted by column.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub(super) block: usize,
    /// Node dimensions of the structured grid the rows belong to, if any.
    pub(super) grid: Option<[usize; 3]>,
    pub(super) row_ptr: Vec<usize>,
    pub(super) cols: Vec<usize>,
    pub(super) vals: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the full node-neighbor pattern.
    pub fn from_pattern(pattern: &NodePattern, block: usize) -> Self {
        let nodes = pattern.ptr.len() - 1;
        let mut row_ptr = Vec::with_capacity(nodes * block + 1);
        let mut cols = Vec::with_capacity(pattern.cols.len() * block * block);
        row_ptr.push(0);
        for node in 0..nodes {
            let nb = &pattern.cols[pattern.ptr[node]..pattern.ptr[node + 1]];
            for _ in 0..block {
                for &m in nb {
                    for d in 0..block {
                        cols.push(block * m + d);
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        let vals = vec![0.0; cols.len()];
        Self {
            block,
            grid: Some(pattern.dims),
            row_ptr,
            cols,
            vals,
        }
    }

    /// Dense-to-sparse constructor, mainly for tests and tiny systems.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (row_index, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 || j == row_index {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            block: 1,
            grid: None,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Adds `scale * local` into the rows/columns of an element.
    ///
    /// `local` is indexed by local dof `block * a + c` for element node `a`.
    pub fn add_element<const N: usize>(
        &mut self,
        pattern: &NodePattern,
        nodes: &[usize; 8],
        positions: &[[usize; 8]; 8],
        local: &[[f64; N]; N],
        scale: f64,
    ) {
        let bs = self.block;
        debug_assert_eq!(N, 8 * bs);
        for a in 0..8 {
            let node = nodes[a];
            let deg = pattern.ptr[node + 1] - pattern.ptr[node];
            for c in 0..bs {
                let row_start = self.row_ptr[bs * node + c];
                let lrow = &local[bs * a + c];
                for b in 0..8 {
                    let base = row_start + bs * positions[a][b];
                    debug_assert!(base + bs <= row_start + bs * deg);
                    for d in 0..bs {
                        self.vals[base + d] += scale * lrow[bs * b + d];
                    }
                }
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let r = self.row_ptr[i]..self.row_ptr[i + 1];
                self.cols[r.clone()]
                    .iter()
                    .position(|&c| c == i)
                    .map_or(0.0, |p| self.vals[r.start + p])
            })
            .collect()
    }

    pub fn row_sums_abs(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(|v| v.abs()).sum())
            .collect()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, ys)| {
            let start = c * CHUNK;
            for (k, yi) in ys.iter_mut().enumerate() {
                let i = start + k;
                let mut s = 0.0;
                for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                    s += self.vals[p] * x[self.cols[p]];
                }
                *yi = s;
            }
        });
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec(x, &mut y);
        y
    }

    /// Adds `scale` to the diagonal entries.
    pub fn add_diagonal(&mut self, diag: &[f64], scale: f64) {
        for (i, d) in diag.iter().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let p = self.cols[r.clone()]
                .iter()
                .position(|&c| c == i)
                .expect("missing diagonal entry");
            self.vals[r.start + p] += scale * d;
        }
    }

    /// Symmetric elimination of prescribed values: constrained rows and
    /// columns are zeroed, the diagonal set to one, and known values moved to
    /// the right-hand side. `fixed` is a per-dof mask with the prescribed value.
    pub fn eliminate(&mut self, fixed: &[Option<f64>], rhs: &mut [f64]) {
        for i in 0..self.dim() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            match fixed[i] {
                Some(g) => {
                    for p in r {
                        self.vals[p] = if self.cols[p] == i { 1.0 } else { 0.0 };
                    }
                    rhs[i] = g;
                }
                None => {
                    for p in r {
                        if let Some(g) = fixed[self.cols[p]] {
                            rhs[i] -= self.vals[p] * g;
                            self.vals[p] = 0.0;
                        }
                    }
                }
            }
        }
    }
}

/// Dot product with a fixed reduction order, independent of the thread count.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
