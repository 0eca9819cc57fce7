//! Inverse-distance-weighted transfer of scattered values.

use rayon::prelude::*;

use super::BoundaryPointSet;
use crate::grid::StructuredGrid;

/// Uniform bucket grid over scattered source points.
struct Buckets {
    origin: [f64; 3],
    size: f64,
    dims: [usize; 3],
    start: Vec<usize>,
    items: Vec<usize>,
}

impl Buckets {
    fn new(points: &[[f64; 3]], size: f64) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let dims = [0, 1, 2].map(|a| (((hi[a] - lo[a]) / size).floor() as usize) + 1);
        let mut b = Self {
            origin: lo,
            size,
            dims,
            start: Vec::new(),
            items: Vec::new(),
        };
        let count = dims.iter().product::<usize>();
        let keys: Vec<usize> = points.iter().map(|p| b.key(b.cell(*p))).collect();
        let mut counts = vec![0usize; count + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..count {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        b.items = vec![0; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            b.items[fill[k]] = i;
            fill[k] += 1;
        }
        b.start = counts;
        b
    }

    fn cell(&self, p: [f64; 3]) -> [i64; 3] {
        [0, 1, 2].map(|a| ((p[a] - self.origin[a]) / self.size).floor() as i64)
    }

    fn key(&self, c: [i64; 3]) -> usize {
        let c = [0, 1, 2].map(|a| c[a].clamp(0, self.dims[a] as i64 - 1) as usize);
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    /// Sources in buckets at Chebyshev distance exactly `ring` from `c`, in a fixed order.
    fn ring(&self, c: [i64; 3], ring: i64, mut visit: impl FnMut(usize)) {
        for dz in -ring..=ring {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                        continue;
                    }
                    let q = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if (0..3).any(|a| q[a] < 0 || q[a] >= self.dims[a] as i64) {
                        continue;
                    }
                    let k = q[0] as usize + self.dims[0] * (q[1] as usize + self.dims[1] * q[2] as usize);
                    for &i in &self.items[self.start[k]..self.start[k + 1]] {
                        visit(i);
                    }
                }
            }
        }
    }

    fn max_ring(&self, c: [i64; 3]) -> i64 {
        (0..3)
            .map(|a| c[a].abs().max((self.dims[a] as i64 - 1 - c[a]).abs()))
            .max()
            .unwrap_or(0)
    }
}

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Inverse-distance-squared transfer from fixed sources to fixed targets,
/// stored as normalized weights so it can be applied to many value sets.
#[derive(Debug, Clone)]
pub struct IdwOperator {
    sources: usize,
    row_ptr: Vec<usize>,
    index: Vec<usize>,
    weight: Vec<f64>,
}

impl IdwOperator {
    /// Each target averages the sources within `radius`; targets with none in
    /// range take the nearest source. A coincident source (distance below
    /// `1e-12·radius`) is taken directly.
    pub fn new(sources: &[[f64; 3]], targets: &[[f64; 3]], radius: f64) -> Self {
        if sources.is_empty() {
            return Self {
                sources: 0,
                row_ptr: vec![0; targets.len() + 1],
                index: Vec::new(),
                weight: Vec::new(),
            };
        }
        let buckets = Buckets::new(sources, radius);
        let r2 = radius * radius;
        let tiny2 = (1e-12 * radius).powi(2);
        let rows: Vec<Vec<(usize, f64)>> = targets
            .par_iter()
            .map(|&t| {
                let c = buckets.cell(t);
                let mut row: Vec<(usize, f64)> = Vec::new();
                let mut exact: Option<usize> = None;
                for ring in 0..=1 {
                    buckets.ring(c, ring, |i| {
                        let d2 = dist2(sources[i], t);
                        if d2 <= tiny2 {
                            exact.get_or_insert(i);
                        } else if d2 <= r2 {
                            row.push((i, 1.0 / d2));
                        }
                    });
                }
                if let Some(i) = exact {
                    return vec![(i, 1.0)];
                }
                if !row.is_empty() {
                    let total: f64 = row.iter().map(|r| r.1).sum();
                    for r in &mut row {
                        r.1 /= total;
                    }
                    return row;
                }
                // nearest source, widening the search until no closer ring can exist
                let mut best = (f64::INFINITY, usize::MAX);
                let last = buckets.max_ring(c);
                let mut ring = 0;
                while ring <= last {
                    buckets.ring(c, ring, |i| {
                        let d2 = dist2(sources[i], t);
                        if d2 < best.0 || (d2 == best.0 && i < best.1) {
                            best = (d2, i);
                        }
                    });
                    let reach = (ring as f64) * radius;
                    if best.1 != usize::MAX && reach * reach >= best.0 {
                        break;
                    }
                    ring += 1;
                }
                vec![(best.1, 1.0)]
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(targets.len() + 1);
        row_ptr.push(0);
        let mut index = Vec::new();
        let mut weight = Vec::new();
        for row in rows {
            for (i, w) in row {
                index.push(i);
                weight.push(w);
            }
            row_ptr.push(index.len());
        }
        Self {
            sources: sources.len(),
            row_ptr,
            index,
            weight,
        }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.sources);
        (0..self.row_ptr.len() - 1)
            .map(|t| {
                let r = self.row_ptr[t]..self.row_ptr[t + 1];
                self.index[r.clone()].iter().zip(&self.weight[r]).map(|(&i, w)| values[i] * w).sum()
            })
            .collect()
    }
}

/// Inverse-distance-squared average of `values` over sources within `radius`
/// of each target; targets with no source in range take the nearest source.
pub fn idw_interpolate(sources: &[[f64; 3]], values: &[f64], targets: &[[f64; 3]], radius: f64) -> Vec<f64> {
    assert_eq!(sources.len(), values.len());
    IdwOperator::new(sources, targets, radius).apply(values)
}

/// Extends boundary-point values to every grid node (radius 2·max spacing).
pub fn extend_velocity(points: &BoundaryPointSet, values: &[f64], grid: &StructuredGrid) -> Vec<f64> {
    let sources: Vec<[f64; 3]> = points.points.iter().map(|p| p.position).collect();
    let targets: Vec<[f64; 3]> = (0..grid.node_count()).map(|n| grid.node_position(n)).collect();
    idw_interpolate(&sources, values, &targets, 2.0 * grid.max_spacing())
}

/// Velocity extension restricted to nodes with |phi| ≤ `band`; other nodes
/// get zero.
#[derive(Debug, Clone)]
pub struct BandExtension {
    nodes: Vec<usize>,
    node_count: usize,
    op: IdwOperator,
}

impl BandExtension {
    pub fn new(points: &BoundaryPointSet, grid: &StructuredGrid, phi: &[f64], band: f64) -> Self {
        let sources: Vec<[f64; 3]> = points.points.iter().map(|p| p.position).collect();
        let nodes: Vec<usize> = (0..grid.node_count()).filter(|&n| phi[n].abs() <= band).collect();
        let targets: Vec<[f64; 3]> = nodes.iter().map(|&n| grid.node_position(n)).collect();
        Self {
            op: IdwOperator::new(&sources, &targets, 2.0 * grid.max_spacing()),
            nodes,
            node_count: grid.node_count(),
        }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.node_count];
        for (&n, v) in self.nodes.iter().zip(self.op.apply(values)) {
            out[n] = v;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_extend_to_constant() {
        let g = StructuredGrid::with_spacing([5, 4, 3], [0.1; 3]).unwrap();
        let sources = vec![[0.05, 0.05, 0.05], [0.41, 0.2, 0.1], [0.2, 0.33, 0.29]];
        let targets: Vec<_> = (0..g.node_count()).map(|n| g.node_position(n)).collect();
        let out = idw_interpolate(&sources, &[0.7; 3], &targets, 0.2);
        assert!(out.iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn single_source_reaches_every_node() {
        let targets: Vec<[f64; 3]> = (0..50).map(|i| [i as f64 * 0.3, 1.0, -2.0]).collect();
        let out = idw_interpolate(&[[0.0; 3]], &[4.2], &targets, 0.1);
        assert!(out.iter().all(|&v| v == 4.2));
    }

    #[test]
    fn equidistant_sources_average() {
        let out = idw_interpolate(&[[-0.1, 0.0, 0.0], [0.1, 0.0, 0.0]], &[1.0, 3.0], &[[0.0, 0.0, 0.0]], 0.5);
        assert!((out[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn banded_extension_matches_full_inside_band() {
        let g = StructuredGrid::with_spacing([6, 5, 4], [0.1; 3]).unwrap();
        let phi = crate::levelset::LevelSetField::from_fn(&g, |p| 0.25 - p[0]);
        let pts = crate::levelset::extract_boundary(&g, &phi, &crate::grid::RegionMap::all_design(&g));
        let vals: Vec<f64> = pts.points.iter().map(|p| p.position[1]).collect();
        let full = extend_velocity(&pts, &vals, &g);
        let band = BandExtension::new(&pts, &g, phi.values(), 0.2).apply(&vals);
        for n in 0..g.node_count() {
            if phi.values()[n].abs() <= 0.2 {
                assert_eq!(band[n], full[n]);
            } else {
                assert_eq!(band[n], 0.0);
            }
        }
    }

    #[test]
    fn nearest_fallback_finds_true_nearest() {
        let sources: Vec<[f64; 3]> = (0..40).map(|i| [(i as f64 * 0.77).sin() * 5.0, (i as f64).cos() * 5.0, 0.0]).collect();
        let values: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let targets = vec![[20.0, 3.0, 1.0], [-9.0, -9.0, 4.0], [0.0, 0.0, 30.0]];
        let out = idw_interpolate(&sources, &values, &targets, 0.3);
        for (t, v) in targets.iter().zip(out) {
            let (i, _) = sources
                .iter()
                .enumerate()
                .map(|(i, s)| (i, dist2(*s, *t)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert_eq!(v, i as f64);
        }
    }
}
