//! Trilinear hexahedron kernels for a box-shaped element.
//!
//! All elements of a structured grid share the same geometry, so the element
//! matrices are computed once per spacing (and Poisson ratio) with unit
//! material coefficients and scaled per element.

use crate::grid::HEX_CORNERS;

const GAUSS: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Reference-coordinate sign (-1 or +1) of each local node along each axis.
fn corner_signs() -> [[f64; 3]; 8] {
    HEX_CORNERS.map(|c| c.map(|v| if v == 0 { -1.0 } else { 1.0 }))
}

/// The eight 2x2x2 Gauss points in reference coordinates (unit weights).
pub fn gauss_points() -> [[f64; 3]; 8] {
    corner_signs().map(|s| s.map(|v| v * GAUSS))
}

/// Trilinear shape functions at a reference point.
pub fn shape(xi: [f64; 3]) -> [f64; 8] {
    corner_signs().map(|s| 0.125 * (1.0 + s[0] * xi[0]) * (1.0 + s[1] * xi[1]) * (1.0 + s[2] * xi[2]))
}

/// Physical shape-function gradients at a reference point of a box element.
pub fn shape_gradients(xi: [f64; 3], h: [f64; 3]) -> [[f64; 3]; 8] {
    corner_signs().map(|s| {
        let f = [0, 1, 2].map(|a| 1.0 + s[a] * xi[a]);
        [
            0.125 * s[0] * f[1] * f[2] * 2.0 / h[0],
            0.125 * f[0] * s[1] * f[2] * 2.0 / h[1],
            0.125 * f[0] * f[1] * s[2] * 2.0 / h[2],
        ]
    })
}

/// Isotropic elasticity matrix (Voigt, engineering shear) for unit Young's modulus.
pub fn isotropic_elasticity(nu: f64) -> [[f64; 6]; 6] {
    let lambda = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = 0.5 / (1.0 + nu);
    let mut d = [[0.0; 6]; 6];
    for i in 0..3 {
        for j in 0..3 {
            d[i][j] = lambda;
        }
        d[i][i] = lambda + 2.0 * mu;
        d[i + 3][i + 3] = mu;
    }
    d
}

/// Strain-displacement matrix, 6 x 24, at a point with shape gradients `g`.
pub fn strain_displacement(g: &[[f64; 3]; 8]) -> [[f64; 24]; 6] {
    let mut b = [[0.0; 24]; 6];
    for (a, [bx, by, bz]) in g.iter().copied().enumerate() {
        let c = 3 * a;
        b[0][c] = bx;
        b[1][c + 1] = by;
        b[2][c + 2] = bz;
        b[3][c] = by;
        b[3][c + 1] = bx;
        b[4][c + 1] = bz;
        b[4][c + 2] = by;
        b[5][c] = bz;
        b[5][c + 2] = bx;
    }
    b
}

/// Conduction matrix of a box element for unit conductivity.
pub fn conduction_matrix(h: [f64; 3]) -> [[f64; 8]; 8] {
    let w = h[0] * h[1] * h[2] / 8.0;
    let mut k = [[0.0; 8]; 8];
    for xi in gauss_points() {
        let g = shape_gradients(xi, h);
        for a in 0..8 {
            for b in 0..8 {
                k[a][b] += w * (g[a][0] * g[b][0] + g[a][1] * g[b][1] + g[a][2] * g[b][2]);
            }
        }
    }
    k
}

/// Elastic element kernels for unit Young's modulus at a fixed Poisson ratio.
#[derive(Debug, Clone)]
pub struct ElasticKernel {
    pub poisson: f64,
    /// 24 x 24 stiffness for E = 1.
    pub stiffness: Box<[[f64; 24]; 24]>,
    /// 24 x 8 map from nodal temperature rise to thermal-expansion load, for E = 1 and alpha = 1.
    pub thermal_load: Box<[[f64; 8]; 24]>,
}

impl ElasticKernel {
    pub fn new(h: [f64; 3], poisson: f64) -> Self {
        let w = h[0] * h[1] * h[2] / 8.0;
        let d = isotropic_elasticity(poisson);
        let mut stiffness = Box::new([[0.0; 24]; 24]);
        let mut thermal_load = Box::new([[0.0; 8]; 24]);
        // D * [1,1,1,0,0,0]
        let dm: [f64; 6] = std::array::from_fn(|i| d[i][0] + d[i][1] + d[i][2]);
        for xi in gauss_points() {
            let b = strain_displacement(&shape_gradients(xi, h));
            let n = shape(xi);
            let mut db = [[0.0; 24]; 6];
            for i in 0..6 {
                for j in 0..24 {
                    db[i][j] = (0..6).map(|k| d[i][k] * b[k][j]).sum();
                }
            }
            for i in 0..24 {
                for j in 0..24 {
                    stiffness[i][j] += w * (0..6).map(|k| b[k][i] * db[k][j]).sum::<f64>();
                }
                let btdm: f64 = (0..6).map(|k| b[k][i] * dm[k]).sum();
                for a in 0..8 {
                    thermal_load[i][a] += w * btdm * n[a];
                }
            }
        }
        Self {
            poisson,
            stiffness,
            thermal_load,
        }
    }
}

#[inline]
pub fn quad_form<const N: usize>(m: &[[f64; N]; N], x: &[f64; N], y: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        let mut r = 0.0;
        for j in 0..N {
            r += m[i][j] * y[j];
        }
        s += x[i] * r;
    }
    s
}
