//! Zero-isosurface extraction.
//!
//! Each hexahedron is split into five tetrahedra whose edges are hex edges or
//! face diagonals; the split alternates with element parity so the diagonals
//! of neighbouring elements coincide and the surface is watertight. Boundary
//! points are the edge crossings of the isosurface, shared between the
//! elements that meet at the edge. Each point carries a third of the area of
//! every surface triangle it belongs to.

use std::collections::HashMap;

use super::LevelSetField;
use crate::grid::{RegionMap, StructuredGrid};

const TETS_EVEN: [[usize; 4]; 5] = [[1, 0, 2, 5], [3, 0, 2, 7], [4, 0, 5, 7], [6, 2, 5, 7], [0, 2, 5, 7]];
const TETS_ODD: [[usize; 4]; 5] = [[0, 1, 3, 4], [2, 1, 3, 6], [5, 1, 4, 6], [7, 3, 4, 6], [1, 3, 4, 6]];

/// Parameter along a → b at which the linear interpolant of (phi_a, phi_b) vanishes.
pub fn edge_crossing(phi_a: f64, phi_b: f64) -> f64 {
    phi_a / (phi_a - phi_b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub position: [f64; 3],
    /// Share of the isosurface area represented by this point, m².
    pub area: f64,
    /// Unit normal pointing toward void.
    pub normal: [f64; 3],
    /// Lowest-index element in which the point was found.
    pub element: usize,
    /// Grid nodes of the cut edge.
    pub edge: (usize, usize),
}

/// Surface triangle with its unit normal (toward void).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub vertices: [[f64; 3]; 3],
    pub normal: [f64; 3],
    pub element: usize,
}

impl Triangle {
    pub fn area(&self) -> f64 {
        0.5 * norm(cross(sub(self.vertices[1], self.vertices[0]), sub(self.vertices[2], self.vertices[0])))
    }

    pub fn centroid(&self) -> [f64; 3] {
        let v = &self.vertices;
        [0, 1, 2].map(|a| (v[0][a] + v[1][a] + v[2][a]) / 3.0)
    }
}

/// Isosurface patch of one cut element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementFacet {
    pub element: usize,
    pub area: f64,
    /// Area-weighted unit normal toward void.
    pub normal: [f64; 3],
    pub centroid: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryPointSet {
    pub points: Vec<BoundaryPoint>,
    pub triangles: Vec<Triangle>,
    pub facets: Vec<ElementFacet>,
}

impl BoundaryPointSet {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn total_area(&self) -> f64 {
        self.points.iter().map(|p| p.area).sum()
    }
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Extracts the zero isosurface over the elements selected by `include`.
fn extract_where(grid: &StructuredGrid, phi: &LevelSetField, include: impl Fn(usize) -> bool) -> BoundaryPointSet {
    let values = phi.values();
    let mut set = BoundaryPointSet::default();
    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut weighted_normals: Vec<[f64; 3]> = Vec::new();

    for e in 0..grid.element_count() {
        if !include(e) {
            continue;
        }
        let nodes = grid.element_nodes(e);
        let v = nodes.map(|n| values[n]);
        let solid = v.map(|x| x >= 0.0);
        if solid.iter().all(|&s| s) || solid.iter().all(|&s| !s) {
            continue;
        }
        let ijk = grid.element_ijk(e);
        let tets = if (ijk[0] + ijk[1] + ijk[2]) % 2 == 0 { &TETS_EVEN } else { &TETS_ODD };
        let positions = nodes.map(|n| grid.node_position(n));

        let mut facet_area = 0.0;
        let mut facet_normal = [0.0; 3];
        let mut facet_centroid = [0.0; 3];
        for tet in tets {
            let inside: Vec<usize> = tet.iter().copied().filter(|&c| solid[c]).collect();
            let outside: Vec<usize> = tet.iter().copied().filter(|&c| !solid[c]).collect();
            if inside.is_empty() || outside.is_empty() {
                continue;
            }
            let mut crossing = |a: usize, b: usize| -> ([f64; 3], usize) {
                // a inside, b outside
                let t = edge_crossing(v[a], v[b]);
                let p = [0, 1, 2].map(|k| positions[a][k] + t * (positions[b][k] - positions[a][k]));
                let key = (nodes[a].min(nodes[b]), nodes[a].max(nodes[b]));
                let idx = *edge_index.entry(key).or_insert_with(|| {
                    set.points.push(BoundaryPoint {
                        position: p,
                        area: 0.0,
                        normal: [0.0; 3],
                        element: e,
                        edge: key,
                    });
                    weighted_normals.push([0.0; 3]);
                    set.points.len() - 1
                });
                (p, idx)
            };
            let polygon: Vec<([f64; 3], usize)> = match (inside.len(), outside.len()) {
                (1, 3) => outside.iter().map(|&o| crossing(inside[0], o)).collect(),
                (3, 1) => inside.iter().map(|&i| crossing(i, outside[0])).collect(),
                _ => {
                    // quad: order the crossings so consecutive ones share a vertex
                    let (i0, i1, o0, o1) = (inside[0], inside[1], outside[0], outside[1]);
                    vec![crossing(i0, o0), crossing(i0, o1), crossing(i1, o1), crossing(i1, o0)]
                }
            };
            let centroid_of = |ids: &[usize]| {
                let mut c = [0.0; 3];
                for &id in ids {
                    for k in 0..3 {
                        c[k] += positions[id][k] / ids.len() as f64;
                    }
                }
                c
            };
            let toward_void = sub(centroid_of(&outside), centroid_of(&inside));
            for tri in 1..polygon.len() - 1 {
                let corners = [polygon[0], polygon[tri], polygon[tri + 1]];
                let n = cross(sub(corners[1].0, corners[0].0), sub(corners[2].0, corners[0].0));
                let len = norm(n);
                if len == 0.0 {
                    continue;
                }
                let sign = if dot3(n, toward_void) < 0.0 { -1.0 } else { 1.0 };
                let unit = n.map(|x| sign * x / len);
                let area = 0.5 * len;
                let triangle = Triangle {
                    vertices: corners.map(|c| c.0),
                    normal: unit,
                    element: e,
                };
                let c = triangle.centroid();
                for k in 0..3 {
                    facet_normal[k] += area * unit[k];
                    facet_centroid[k] += area * c[k];
                }
                facet_area += area;
                for &(_, idx) in &corners {
                    set.points[idx].area += area / 3.0;
                    for k in 0..3 {
                        weighted_normals[idx][k] += area * unit[k];
                    }
                }
                set.triangles.push(triangle);
            }
        }
        if facet_area > 0.0 {
            let len = norm(facet_normal);
            set.facets.push(ElementFacet {
                element: e,
                area: facet_area,
                normal: if len > 0.0 { facet_normal.map(|x| x / len) } else { [0.0; 3] },
                centroid: facet_centroid.map(|x| x / facet_area),
            });
        }
    }

    for (p, wn) in set.points.iter_mut().zip(&weighted_normals) {
        let len = norm(*wn);
        if len > 0.0 {
            p.normal = wn.map(|x| x / len);
        }
    }
    // Degenerate crossings at nodes carry no area.
    set.points.retain(|p| p.area > 0.0);
    set
}

/// Isosurface of the design region (CELL elements excluded).
pub fn extract_boundary(grid: &StructuredGrid, phi: &LevelSetField, regions: &RegionMap) -> BoundaryPointSet {
    extract_where(grid, phi, |e| !regions.is_cell(e))
}

/// Isosurface over the whole grid.
pub(crate) fn extract_all(grid: &StructuredGrid, phi: &LevelSetField) -> BoundaryPointSet {
    extract_where(grid, phi, |_| true)
}
