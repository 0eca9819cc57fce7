//! Preconditioned conjugate gradients: a multigrid V-cycle for operators
//! assembled on a coarsenable grid, Jacobi otherwise.

use super::multigrid::Multigrid;
use super::sparse::{dot, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Target relative residual ||b - Ax|| / ||b||.
    pub tolerance: f64,
    /// Iteration cap. `None` uses 100·sqrt(n).
    pub max_iterations: Option<usize>,
    /// Use the multigrid preconditioner when the operator allows it.
    pub multigrid: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: None,
            multigrid: true,
        }
    }
}

impl CgOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_iterations
            .unwrap_or_else(|| ((100.0 * (n as f64).sqrt()).ceil() as usize).max(100))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = b` for SPD `A`, starting from the contents of `x`.
pub fn solve(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    options: &CgOptions,
    system: &'static str,
) -> Result<CgReport> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    assert_eq!(x.len(), n);
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.fill(0.0);
        return Ok(CgReport {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mg = if options.multigrid { Multigrid::new(a, 1) } else { None };
    let precondition = |r: &[f64], z: &mut [f64]| match &mg {
        Some(mg) => mg.apply(r, z),
        None => {
            for ((zi, ri), d) in z.iter_mut().zip(r).zip(&inv_diag) {
                *zi = ri * d;
            }
        }
    };

    let mut r = a.apply(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    let cap = options.iteration_cap(n);

    let mut it = 0;
    while rel > options.tolerance {
        if it >= cap {
            return Err(Error::SolverDivergence {
                system,
                iterations: it,
                residual: rel,
            });
        }
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDivergence {
                system,
                iterations: it,
                residual: rel,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precondition(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        it += 1;
    }
    Ok(CgReport {
        iterations: it,
        residual: rel,
    })
}
