//! Signed-distance reinitialization.
//!
//! Nodes within a narrow band of the extracted isosurface get their exact
//! distance to the surface triangles, except interface nodes whose values
//! are already distance-like, which are kept so the interface does not move.
//! The rest of the grid is filled by a first-order fast-marching sweep from
//! the band. Signs are taken from the input field.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::boundary::{dot3, extract_all, sub, Triangle};
use super::LevelSetField;
use crate::grid::StructuredGrid;

/// Band half-width in units of the largest grid spacing.
const BAND: f64 = 3.0;
/// Interface nodes whose gradient is within this of one keep their values.
const GRADIENT_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinitReport {
    /// False when the field had no zero isosurface.
    pub had_boundary: bool,
    pub band_nodes: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist: f64,
    node: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // min-heap on distance, ties broken by node index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Closest-point distance from `p` to a triangle.
pub(crate) fn point_triangle_distance(p: [f64; 3], tri: &[[f64; 3]; 3]) -> f64 {
    let [a, b, c] = *tri;
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot3(ab, ap);
    let d2 = dot3(ac, ap);
    let closest = if d1 <= 0.0 && d2 <= 0.0 {
        a
    } else {
        let bp = sub(p, b);
        let d3 = dot3(ab, bp);
        let d4 = dot3(ac, bp);
        if d3 >= 0.0 && d4 <= d3 {
            b
        } else {
            let vc = d1 * d4 - d3 * d2;
            if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
                let v = d1 / (d1 - d3);
                [0, 1, 2].map(|k| a[k] + v * ab[k])
            } else {
                let cp = sub(p, c);
                let d5 = dot3(ab, cp);
                let d6 = dot3(ac, cp);
                if d6 >= 0.0 && d5 <= d6 {
                    c
                } else {
                    let vb = d5 * d2 - d1 * d6;
                    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
                        let w = d2 / (d2 - d6);
                        [0, 1, 2].map(|k| a[k] + w * ac[k])
                    } else {
                        let va = d3 * d6 - d5 * d4;
                        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
                            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
                            [0, 1, 2].map(|k| b[k] + w * (c[k] - b[k]))
                        } else {
                            let denom = 1.0 / (va + vb + vc);
                            let v = vb * denom;
                            let w = vc * denom;
                            [0, 1, 2].map(|k| a[k] + ab[k] * v + ac[k] * w)
                        }
                    }
                }
            }
        }
    };
    let d = sub(p, closest);
    dot3(d, d).sqrt()
}

/// Solves the first-order eikonal update from the smallest known neighbor value per axis.
fn eikonal_update(mut known: Vec<(f64, f64)>) -> f64 {
    // (neighbor value, spacing)
    known.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut u = known[0].0 + known[0].1;
    for m in 2..=known.len() {
        if u <= known[m - 1].0 {
            break;
        }
        // sum_d ((u - a_d)/h_d)^2 = 1 over the first m axes
        let (mut qa, mut qb, mut qc) = (0.0, 0.0, -1.0);
        for &(a, h) in &known[..m] {
            let w = 1.0 / (h * h);
            qa += w;
            qb -= 2.0 * a * w;
            qc += a * a * w;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            break;
        }
        u = (-qb + disc.sqrt()) / (2.0 * qa);
    }
    u
}

/// Restores `phi` to a signed distance from its zero isosurface.
pub fn reinitialize(grid: &StructuredGrid, phi: &LevelSetField) -> (LevelSetField, ReinitReport) {
    let values = phi.values();
    let n = grid.node_count();
    let surface = extract_all(grid, phi);
    let band = BAND * grid.max_spacing();
    if surface.triangles.is_empty() {
        log::warn!("reinitialization skipped: level set has no zero isosurface");
        let clamped = values.iter().map(|&v| if v >= 0.0 { band } else { -band }).collect();
        return (
            LevelSetField { values: clamped },
            ReinitReport {
                had_boundary: false,
                band_nodes: 0,
            },
        );
    }

    let mut dist = vec![f64::INFINITY; n];
    exact_band(grid, &surface.triangles, band, &mut dist);
    preserve_interface(grid, values, &mut dist);
    let mut accepted: Vec<bool> = dist.iter().map(|d| *d <= band).collect();
    let band_nodes = accepted.iter().filter(|&&a| a).count();
    for (d, &a) in dist.iter_mut().zip(&accepted) {
        if !a {
            *d = f64::INFINITY;
        }
    }

    let dims = grid.node_dims();
    let h = grid.spacing();
    let stride = [1, dims[0], dims[0] * dims[1]];
    let neighbors = |node: usize| {
        let ijk = grid.node_ijk(node);
        let mut out = [(usize::MAX, 0usize); 6];
        for a in 0..3 {
            if ijk[a] > 0 {
                out[2 * a] = (node - stride[a], a);
            }
            if ijk[a] + 1 < dims[a] {
                out[2 * a + 1] = (node + stride[a], a);
            }
        }
        out
    };
    let update = |node: usize, dist: &[f64], accepted: &[bool]| -> f64 {
        let mut best = [f64::INFINITY; 3];
        for (m, a) in neighbors(node) {
            if m != usize::MAX && accepted[m] {
                best[a] = best[a].min(dist[m]);
            }
        }
        let known: Vec<(f64, f64)> = (0..3).filter(|&a| best[a].is_finite()).map(|a| (best[a], h[a])).collect();
        if known.is_empty() {
            f64::INFINITY
        } else {
            eikonal_update(known)
        }
    };

    let mut heap = BinaryHeap::new();
    for node in 0..n {
        if accepted[node] {
            continue;
        }
        let has_known = neighbors(node).iter().any(|&(m, _)| m != usize::MAX && accepted[m]);
        if has_known {
            let d = update(node, &dist, &accepted);
            dist[node] = d;
            heap.push(Candidate { dist: d, node });
        }
    }
    while let Some(Candidate { dist: d, node }) = heap.pop() {
        if accepted[node] || d > dist[node] {
            continue;
        }
        accepted[node] = true;
        for (m, _) in neighbors(node) {
            if m == usize::MAX || accepted[m] {
                continue;
            }
            let cand = update(m, &dist, &accepted);
            if cand < dist[m] {
                dist[m] = cand;
                heap.push(Candidate { dist: cand, node: m });
            }
        }
    }

    let signed = values
        .iter()
        .zip(&dist)
        .map(|(&v, &d)| if v >= 0.0 { d } else { -d })
        .collect();
    (
        LevelSetField { values: signed },
        ReinitReport {
            had_boundary: true,
            band_nodes,
        },
    )
}

/// Nodes of elements straddling the interface keep their own values when the
/// local gradient is already close to one. Distances to the triangulated
/// surface would move the interpolated interface inward on convex features
/// (chords lie inside the surface), and repeated application erodes thin
/// members.
fn preserve_interface(grid: &StructuredGrid, values: &[f64], dist: &mut [f64]) {
    let dims = grid.node_dims();
    let h = grid.spacing();
    let stride = [1, dims[0], dims[0] * dims[1]];
    let mut straddle = vec![false; grid.node_count()];
    for e in 0..grid.element_count() {
        let nodes = grid.element_nodes(e);
        let solid = nodes.iter().filter(|&&m| values[m] >= 0.0).count();
        if solid > 0 && solid < 8 {
            nodes.iter().for_each(|&m| straddle[m] = true);
        }
    }
    for node in (0..grid.node_count()).filter(|&m| straddle[m]) {
        let ijk = grid.node_ijk(node);
        let v = values[node];
        let mut sum = 0.0;
        for a in 0..3 {
            if dims[a] == 1 {
                continue;
            }
            // the steeper one-sided slope, since a slope taken across a ridge of
            // the distance function (the middle of a thin member) reads low
            let back = (ijk[a] > 0).then(|| (v - values[node - stride[a]]).abs() / h[a]);
            let fwd = (ijk[a] + 1 < dims[a]).then(|| (values[node + stride[a]] - v).abs() / h[a]);
            let slope = back.unwrap_or(0.0).max(fwd.unwrap_or(0.0));
            sum += slope * slope;
        }
        let g = sum.sqrt();
        if (g - 1.0).abs() <= GRADIENT_SLACK {
            dist[node] = v.abs();
        }
    }
}

/// Exact unsigned distance to the triangles for nodes within `band` of them.
fn exact_band(grid: &StructuredGrid, triangles: &[Triangle], band: f64, dist: &mut [f64]) {
    let o = grid.origin();
    let h = grid.spacing();
    let dims = grid.node_dims();
    for tri in triangles {
        let v = &tri.vertices;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let mn = v.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min) - band;
            let mx = v.iter().map(|p| p[a]).fold(f64::NEG_INFINITY, f64::max) + band;
            lo[a] = (((mn - o[a]) / h[a]).ceil().max(0.0)) as usize;
            hi[a] = ((((mx - o[a]) / h[a]).floor()).max(-1.0) + 1.0).min(dims[a] as f64) as usize;
        }
        for k in lo[2]..hi[2] {
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    let node = grid.node_index(i, j, k);
                    let d = point_triangle_distance(grid.node_position(node), v);
                    if d < dist[node] {
                        dist[node] = d;
                    }
                }
            }
        }
    }
}
