//! Geometric multigrid V-cycle on the structured node grid, used as a CG
//! preconditioner. Coarse operators are Galerkin products `Pᵀ A P` with
//! trilinear prolongation, so constrained rows need no special treatment.

use super::sparse::CsrMatrix;

/// Largest coarse system factored densely.
const COARSE_LIMIT: usize = 3000;
/// Coarsening stops once a level is this small.
const COARSE_TARGET: usize = 600;

/// Plain CSR storage for rectangular operators.
#[derive(Debug, Clone)]
struct Sparse {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    index: Vec<usize>,
    vals: Vec<f64>,
}

impl Sparse {
    fn from_matrix(a: &CsrMatrix) -> Self {
        Self {
            rows: a.dim(),
            cols: a.dim(),
            row_ptr: a.row_ptr.clone(),
            index: a.cols.clone(),
            vals: a.vals.clone(),
        }
    }

    fn into_matrix(self, block: usize, grid: [usize; 3]) -> CsrMatrix {
        CsrMatrix {
            block,
            grid: Some(grid),
            row_ptr: self.row_ptr,
            cols: self.index,
            vals: self.vals,
        }
    }

    fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.cols + 1];
        for &c in &self.index {
            count[c + 1] += 1;
        }
        for i in 0..self.cols {
            count[i + 1] += count[i];
        }
        let row_ptr = count.clone();
        let mut next = count;
        let mut index = vec![0; self.index.len()];
        let mut vals = vec![0.0; self.vals.len()];
        for r in 0..self.rows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.index[p];
                index[next[c]] = r;
                vals[next[c]] = self.vals[p];
                next[c] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_ptr,
            index,
            vals,
        }
    }

    /// Sparse product `self * b` with sorted columns.
    fn mul(&self, b: &Sparse) -> Sparse {
        let mut acc = vec![0.0; b.cols];
        let mut seen = vec![false; b.cols];
        let mut touched = Vec::new();
        let mut row_ptr = vec![0];
        let mut index = Vec::new();
        let mut vals = Vec::new();
        for r in 0..self.rows {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                let k = self.index[p];
                let v = self.vals[p];
                for q in b.row_ptr[k]..b.row_ptr[k + 1] {
                    let c = b.index[q];
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    acc[c] += v * b.vals[q];
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                index.push(c);
                vals.push(acc[c]);
                acc[c] = 0.0;
                seen[c] = false;
            }
            touched.clear();
            row_ptr.push(index.len());
        }
        Sparse {
            rows: self.rows,
            cols: b.cols,
            row_ptr,
            index,
            vals,
        }
    }

    /// y = A x
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = (self.row_ptr[r]..self.row_ptr[r + 1])
                .map(|p| self.vals[p] * x[self.index[p]])
                .sum();
        }
    }
}

/// 1D prolongation weights: coarse neighbors of each fine node.
fn line_weights(n: usize, coarsen: bool) -> Vec<Vec<(usize, f64)>> {
    (0..n)
        .map(|i| {
            if !coarsen {
                vec![(i, 1.0)]
            } else if i % 2 == 0 {
                vec![(i / 2, 1.0)]
            } else {
                vec![(i / 2, 0.5), (i / 2 + 1, 0.5)]
            }
        })
        .collect()
}

/// Trilinear prolongation from the coarse node grid, or `None` when no
/// direction has an even element count left.
fn prolongation(dims: [usize; 3], block: usize) -> Option<(Sparse, [usize; 3])> {
    let coarsen = dims.map(|n| n >= 3 && (n - 1) % 2 == 0);
    if !coarsen.iter().any(|&c| c) {
        return None;
    }
    let coarse: [usize; 3] = std::array::from_fn(|d| if coarsen[d] { (dims[d] - 1) / 2 + 1 } else { dims[d] });
    let w: [Vec<Vec<(usize, f64)>>; 3] = std::array::from_fn(|d| line_weights(dims[d], coarsen[d]));
    let mut row_ptr = vec![0];
    let mut index = Vec::new();
    let mut vals = Vec::new();
    let mut entries = Vec::with_capacity(8);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                entries.clear();
                for &(ck, wk) in &w[2][k] {
                    for &(cj, wj) in &w[1][j] {
                        for &(ci, wi) in &w[0][i] {
                            entries.push((ci + coarse[0] * (cj + coarse[1] * ck), wi * wj * wk));
                        }
                    }
                }
                entries.sort_unstable_by_key(|e| e.0);
                for c in 0..block {
                    for &(node, v) in &entries {
                        index.push(block * node + c);
                        vals.push(v);
                    }
                    row_ptr.push(index.len());
                }
            }
        }
    }
    let fine_nodes = dims.iter().product::<usize>();
    let coarse_nodes = coarse.iter().product::<usize>();
    Some((
        Sparse {
            rows: block * fine_nodes,
            cols: block * coarse_nodes,
            row_ptr,
            index,
            vals,
        },
        coarse,
    ))
}

/// Dense Cholesky factor of the coarsest operator.
#[derive(Debug, Clone)]
struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    fn new(a: &CsrMatrix) -> Self {
        let n = a.dim();
        let mut l = vec![0.0; n * n];
        for r in 0..n {
            for p in a.row_ptr[r]..a.row_ptr[r + 1] {
                l[r * n + a.cols[p]] = a.vals[p];
            }
        }
        let scale = (0..n).map(|i| l[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for j in 0..n {
            let mut d = l[j * n + j] - (0..j).map(|k| l[j * n + k] * l[j * n + k]).sum::<f64>();
            // semidefinite directions would otherwise break the factorization
            if d <= 1e-14 * scale {
                d = scale;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let s = l[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
                l[i * n + j] = s / d;
            }
        }
        Self { n, l }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let s = b[i] - (0..i).map(|k| self.l[i * n + k] * x[k]).sum::<f64>();
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s = x[i] - (i + 1..n).map(|k| self.l[k * n + i] * x[k]).sum::<f64>();
            x[i] = s / self.l[i * n + i];
        }
    }
}

#[derive(Debug, Clone)]
struct Transfer {
    p: Sparse,
    pt: Sparse,
}

/// V-cycle hierarchy over a fine operator assembled on a structured grid.
#[derive(Debug, Clone)]
pub struct Multigrid<'a> {
    fine: &'a CsrMatrix,
    coarse_ops: Vec<CsrMatrix>,
    transfers: Vec<Transfer>,
    diag: Vec<Vec<f64>>,
    bottom: Cholesky,
    sweeps: usize,
}

impl<'a> Multigrid<'a> {
    /// Builds the hierarchy, or returns `None` when the matrix has no grid
    /// layout or cannot be coarsened to a directly factorable size.
    pub fn new(a: &'a CsrMatrix, sweeps: usize) -> Option<Self> {
        let mut dims = a.grid?;
        let block = a.block;
        let mut coarse_ops: Vec<CsrMatrix> = Vec::new();
        let mut transfers = Vec::new();
        loop {
            let current = coarse_ops.last().unwrap_or(a);
            if current.dim() <= COARSE_TARGET {
                break;
            }
            let Some((p, next)) = prolongation(dims, block) else { break };
            let pt = p.transpose();
            let ac = pt.mul(&Sparse::from_matrix(current).mul(&p));
            coarse_ops.push(ac.into_matrix(block, next));
            transfers.push(Transfer { p, pt });
            dims = next;
        }
        if transfers.is_empty() {
            return None;
        }
        let last = coarse_ops.last().expect("at least one coarse level");
        if last.dim() > COARSE_LIMIT {
            return None;
        }
        let bottom = Cholesky::new(last);
        let diag = std::iter::once(a)
            .chain(coarse_ops.iter())
            .take(transfers.len())
            .map(|m| m.diagonal())
            .collect();
        Some(Self {
            fine: a,
            coarse_ops,
            transfers,
            diag,
            bottom,
            sweeps,
        })
    }

    pub fn levels(&self) -> usize {
        self.transfers.len() + 1
    }

    fn op(&self, level: usize) -> &CsrMatrix {
        if level == 0 {
            self.fine
        } else {
            &self.coarse_ops[level - 1]
        }
    }

    /// z = M⁻¹ r for one symmetric V-cycle.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(0, r, z);
    }

    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        if level == self.transfers.len() {
            self.bottom.solve(b, x);
            return;
        }
        let a = self.op(level);
        let diag = &self.diag[level];
        x.fill(0.0);
        for _ in 0..self.sweeps {
            gauss_seidel(a, diag, b, x, false);
        }
        let mut res = vec![0.0; b.len()];
        a.mul_vec(x, &mut res);
        for (ri, bi) in res.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let t = &self.transfers[level];
        let mut bc = vec![0.0; t.pt.rows];
        t.pt.apply(&res, &mut bc);
        let mut xc = vec![0.0; t.pt.rows];
        self.cycle(level + 1, &bc, &mut xc);
        t.p.apply(&xc, &mut res);
        for (xi, ci) in x.iter_mut().zip(&res) {
            *xi += ci;
        }
        for _ in 0..self.sweeps {
            gauss_seidel(a, diag, b, x, true);
        }
    }
}

fn gauss_seidel(a: &CsrMatrix, diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let mut relax = |i: usize| {
        let d = diag[i];
        if d > 0.0 {
            let mut s = b[i];
            for p in a.row_ptr[i]..a.row_ptr[i + 1] {
                s -= a.vals[p] * x[a.cols[p]];
            }
            x[i] += s / d;
        }
    };
    if backward {
        (0..a.dim()).rev().for_each(&mut relax);
    } else {
        (0..a.dim()).for_each(&mut relax);
    }
}
