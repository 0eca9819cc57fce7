//! Fixed structured hexahedral grid, passive cell regions and boundary tagging.
//!
//! Nodes are numbered lexicographically with x fastest, then y, then z.
//! Elements follow the same ordering. The local node order of an element is
//! the usual trilinear-hex order: the bottom face counter-clockwise starting
//! at the minimum corner, then the top face in the same order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Local (i, j, k) offsets of the eight element nodes.
pub const HEX_CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Element counts along x, y, z.
    pub elements: [usize; 3],
    /// Domain extents in meters.
    pub size: [f64; 3],
    #[serde(default)]
    pub origin: [f64; 3],
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            elements: [48, 32, 40],
            size: [0.078, 0.052, 0.070],
            origin: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid {
    counts: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
}

impl StructuredGrid {
    pub fn new(config: &GridConfig) -> Result<Self> {
        for (axis, &n) in config.elements.iter().enumerate() {
            if n == 0 {
                return Err(Error::config(
                    format!("grid.elements[{axis}]"),
                    "element count must be at least 1",
                ));
            }
        }
        for (axis, &len) in config.size.iter().enumerate() {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::config(
                    format!("grid.size[{axis}]"),
                    format!("domain length must be positive, got {len}"),
                ));
            }
        }
        let spacing = [0, 1, 2].map(|a| config.size[a] / config.elements[a] as f64);
        Ok(Self {
            counts: config.elements,
            spacing,
            origin: config.origin,
        })
    }

    /// Grid of `counts` elements with edge lengths `spacing`, anchored at the origin.
    pub fn with_spacing(counts: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        Self::new(&GridConfig {
            elements: counts,
            size: [0, 1, 2].map(|a| spacing[a] * counts[a] as f64),
            origin: [0.0; 3],
        })
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn size(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.spacing[a] * self.counts[a] as f64)
    }

    pub fn node_dims(&self) -> [usize; 3] {
        self.counts.map(|n| n + 1)
    }

    pub fn node_count(&self) -> usize {
        self.node_dims().iter().product()
    }

    pub fn element_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn thermal_dofs(&self) -> usize {
        self.node_count()
    }

    pub fn elastic_dofs(&self) -> usize {
        3 * self.node_count()
    }

    /// Thermal plus elastic unknowns of the coupled problem.
    pub fn total_dofs(&self) -> usize {
        self.thermal_dofs() + self.elastic_dofs()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn element_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn domain_volume(&self) -> f64 {
        self.element_volume() * self.element_count() as f64
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [px, py, _] = self.node_dims();
        i + px * (j + py * k)
    }

    #[inline]
    pub fn node_ijk(&self, node: usize) -> [usize; 3] {
        let [px, py, _] = self.node_dims();
        [node % px, (node / px) % py, node / (px * py)]
    }

    #[inline]
    pub fn node_position(&self, node: usize) -> [f64; 3] {
        let ijk = self.node_ijk(node);
        [0, 1, 2].map(|a| self.origin[a] + ijk[a] as f64 * self.spacing[a])
    }

    #[inline]
    pub fn element_index(&self, i: usize, j: usize, k: usize) -> usize {
        let [nx, ny, _] = self.counts;
        i + nx * (j + ny * k)
    }

    #[inline]
    pub fn element_ijk(&self, element: usize) -> [usize; 3] {
        let [nx, ny, _] = self.counts;
        [element % nx, (element / nx) % ny, element / (nx * ny)]
    }

    #[inline]
    pub fn element_nodes(&self, element: usize) -> [usize; 8] {
        let [i, j, k] = self.element_ijk(element);
        HEX_CORNERS.map(|[a, b, c]| self.node_index(i + a, j + b, k + c))
    }

    pub fn element_centroid(&self, element: usize) -> [f64; 3] {
        let ijk = self.element_ijk(element);
        [0, 1, 2].map(|a| self.origin[a] + (ijk[a] as f64 + 0.5) * self.spacing[a])
    }

    /// Minimum corner of an element.
    pub fn element_origin(&self, element: usize) -> [f64; 3] {
        let ijk = self.element_ijk(element);
        [0, 1, 2].map(|a| self.origin[a] + ijk[a] as f64 * self.spacing[a])
    }

    /// Sorted node indices adjacent to `node` (including itself) through shared elements.
    pub fn node_neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let [i, j, k] = self.node_ijk(node);
        let [px, py, pz] = self.node_dims();
        let range = |c: usize, n: usize| c.saturating_sub(1)..=(c + 1).min(n - 1);
        range(k, pz).flat_map(move |kk| {
            range(j, py).flat_map(move |jj| range(i, px).map(move |ii| self.node_index(ii, jj, kk)))
        })
    }

    /// Elements sharing `node`, in increasing index order.
    pub fn node_elements(&self, node: usize) -> Vec<usize> {
        let [i, j, k] = self.node_ijk(node);
        let [nx, ny, nz] = self.counts;
        let range = |c: usize, n: usize| c.saturating_sub(1)..c.min(n - 1) + 1;
        let mut out = Vec::with_capacity(8);
        for kk in range(k, nz) {
            for jj in range(j, ny) {
                for ii in range(i, nx) {
                    out.push(self.element_index(ii, jj, kk));
                }
            }
        }
        out
    }

    /// All nodes lying on a boundary face, in increasing index order.
    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        let axis = face.axis();
        let fixed = if face.is_max() { self.counts[axis] } else { 0 };
        (0..self.node_count())
            .filter(|&n| self.node_ijk(n)[axis] == fixed)
            .collect()
    }

    /// Boundary quads on `face` as four node indices each, plus the quad area.
    pub fn face_quads(&self, face: Face) -> (Vec<[usize; 4]>, f64) {
        let axis = face.axis();
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let fixed = if face.is_max() { self.counts[axis] } else { 0 };
        let mut quads = Vec::with_capacity(self.counts[a] * self.counts[b]);
        for q in 0..self.counts[b] {
            for p in 0..self.counts[a] {
                let corner = |dp: usize, dq: usize| {
                    let mut ijk = [0usize; 3];
                    ijk[axis] = fixed;
                    ijk[a] = p + dp;
                    ijk[b] = q + dq;
                    self.node_index(ijk[0], ijk[1], ijk[2])
                };
                quads.push([corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)]);
            }
        }
        (quads, self.spacing[a] * self.spacing[b])
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        let ijk = self.node_ijk(node);
        (0..3).any(|a| ijk[a] == 0 || ijk[a] == self.counts[a])
    }
}

/// One of the six axis-aligned faces of the box domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::XMin,
        Face::XMax,
        Face::YMin,
        Face::YMax,
        Face::ZMin,
        Face::ZMax,
    ];

    pub fn axis(self) -> usize {
        match self {
            Face::XMin | Face::XMax => 0,
            Face::YMin | Face::YMax => 1,
            Face::ZMin | Face::ZMax => 2,
        }
    }

    pub fn is_max(self) -> bool {
        matches!(self, Face::XMax | Face::YMax | Face::ZMax)
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XMin => "x-",
            Face::XMax => "x+",
            Face::YMin => "y-",
            Face::YMax => "y+",
            Face::ZMin => "z-",
            Face::ZMax => "z+",
        }
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Face {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Face::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown face `{s}` (expected one of x-, x+, y-, y+, z-, z+)"))
    }
}

/// Rectangular lattice of upright cylindrical cells, centered in the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellLayout {
    /// Cells along x.
    pub rows: usize,
    /// Cells along y.
    pub cols: usize,
    /// Center-to-center spacing in meters.
    pub pitch: f64,
    pub diameter: f64,
    pub height: f64,
}

impl Default for CellLayout {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 2,
            pitch: 0.026,
            diameter: 0.021,
            height: 0.070,
        }
    }
}

impl CellLayout {
    pub fn empty() -> Self {
        Self {
            rows: 0,
            cols: 0,
            ..Self::default()
        }
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell_volume(&self) -> f64 {
        std::f64::consts::PI * 0.25 * self.diameter * self.diameter * self.height
    }

    /// Axis centers (x, y) of each cylinder and the z-extent shared by all of them.
    pub fn cylinders(&self, grid: &StructuredGrid) -> (Vec<[f64; 2]>, [f64; 2]) {
        let origin = grid.origin();
        let size = grid.size();
        let center = [0, 1, 2].map(|a| origin[a] + 0.5 * size[a]);
        let mut axes = Vec::with_capacity(self.cell_count());
        for c in 0..self.cols {
            for r in 0..self.rows {
                let x = center[0] + (r as f64 - 0.5 * (self.rows as f64 - 1.0)) * self.pitch;
                let y = center[1] + (c as f64 - 0.5 * (self.cols as f64 - 1.0)) * self.pitch;
                axes.push([x, y]);
            }
        }
        (
            axes,
            [center[2] - 0.5 * self.height, center[2] + 0.5 * self.height],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Design,
    Cell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionMap {
    labels: Vec<Region>,
    cell_elements: usize,
}

impl RegionMap {
    /// Every element designable.
    pub fn all_design(grid: &StructuredGrid) -> Self {
        Self {
            labels: vec![Region::Design; grid.element_count()],
            cell_elements: 0,
        }
    }

    /// Labels elements whose centroid falls inside one of the layout's cylinders.
    pub fn label(grid: &StructuredGrid, layout: &CellLayout) -> Result<Self> {
        if layout.cell_count() > 0 {
            if !(layout.diameter > 0.0 && layout.height > 0.0 && layout.pitch > 0.0) {
                return Err(Error::config(
                    "layout",
                    "pitch, diameter and height must be positive",
                ));
            }
            let (axes, [z0, z1]) = layout.cylinders(grid);
            let lo = grid.origin();
            let size = grid.size();
            let r = 0.5 * layout.diameter;
            let slack = 1e-9 * size.iter().copied().fold(0.0, f64::max);
            let outside = |v: f64, a: usize| v < lo[a] - slack || v > lo[a] + size[a] + slack;
            let exceeds = axes.iter().any(|&[x, y]| {
                outside(x - r, 0) || outside(x + r, 0) || outside(y - r, 1) || outside(y + r, 1)
            }) || outside(z0, 2)
                || outside(z1, 2);
            if exceeds {
                return Err(Error::config(
                    "layout",
                    "cell cylinders extend beyond the grid bounding box",
                ));
            }
        }
        let (axes, [z0, z1]) = layout.cylinders(grid);
        let r2 = 0.25 * layout.diameter * layout.diameter;
        let labels: Vec<Region> = (0..grid.element_count())
            .map(|e| {
                let [x, y, z] = grid.element_centroid(e);
                let inside = z >= z0
                    && z <= z1
                    && axes
                        .iter()
                        .any(|&[cx, cy]| (x - cx).powi(2) + (y - cy).powi(2) < r2);
                if inside {
                    Region::Cell
                } else {
                    Region::Design
                }
            })
            .collect();
        let cell_elements = labels.iter().filter(|&&l| l == Region::Cell).count();
        Ok(Self {
            labels,
            cell_elements,
        })
    }

    pub fn from_labels(labels: Vec<Region>) -> Self {
        let cell_elements = labels.iter().filter(|&&l| l == Region::Cell).count();
        Self {
            labels,
            cell_elements,
        }
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    #[inline]
    pub fn region(&self, element: usize) -> Region {
        self.labels[element]
    }

    #[inline]
    pub fn is_cell(&self, element: usize) -> bool {
        self.labels[element] == Region::Cell
    }

    pub fn cell_element_count(&self) -> usize {
        self.cell_elements
    }

    pub fn design_element_count(&self) -> usize {
        self.labels.len() - self.cell_elements
    }

    /// Per-node flag: node belongs to at least one CELL element.
    pub fn cell_nodes(&self, grid: &StructuredGrid) -> Vec<bool> {
        let mut flags = vec![false; grid.node_count()];
        for e in (0..grid.element_count()).filter(|&e| self.is_cell(e)) {
            for n in grid.element_nodes(e) {
                flags[n] = true;
            }
        }
        flags
    }

    /// Per-node flag: every element around the node is CELL.
    pub fn interior_cell_nodes(&self, grid: &StructuredGrid) -> Vec<bool> {
        let mut flags = self.cell_nodes(grid);
        for e in (0..grid.element_count()).filter(|&e| !self.is_cell(e)) {
            for n in grid.element_nodes(e) {
                flags[n] = false;
            }
        }
        flags
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalFaceConfig {
    pub face: String,
    /// Prescribed temperature in K. Defaults to the sink temperature.
    #[serde(default)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TractionConfig {
    pub face: String,
    /// Traction vector in N/m².
    pub vector: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcConfig {
    pub sink_temperature: f64,
    pub thermal: Vec<ThermalFaceConfig>,
    pub clamped: Vec<String>,
    pub traction: Vec<TractionConfig>,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self {
            sink_temperature: 298.15,
            thermal: ["z-", "z+"]
                .map(|f| ThermalFaceConfig {
                    face: f.into(),
                    temperature: None,
                })
                .into(),
            clamped: vec!["x-".into()],
            traction: vec![TractionConfig {
                face: "x+".into(),
                vector: [0.0, 0.0, -15.0e6],
            }],
        }
    }
}

impl BcConfig {
    pub fn empty(sink_temperature: f64) -> Self {
        Self {
            sink_temperature,
            thermal: Vec::new(),
            clamped: Vec::new(),
            traction: Vec::new(),
        }
    }
}

/// A loaded boundary quad.
#[derive(Debug, Clone, PartialEq)]
pub struct TractionQuad {
    pub nodes: [usize; 4],
    pub area: f64,
    pub traction: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryTags {
    /// (node, temperature K), sorted by node, unique.
    pub thermal: Vec<(usize, f64)>,
    /// Fully clamped nodes, sorted, unique.
    pub clamped: Vec<usize>,
    pub traction: Vec<TractionQuad>,
}

impl BoundaryTags {
    pub fn tag(grid: &StructuredGrid, bc: &BcConfig) -> Result<Self> {
        let face = |name: &str, key: String| name.parse::<Face>().map_err(|m| Error::config(key, m));

        let mut thermal: Vec<(usize, f64)> = Vec::new();
        for (i, t) in bc.thermal.iter().enumerate() {
            let f = face(&t.face, format!("bc.thermal[{i}].face"))?;
            let value = t.temperature.unwrap_or(bc.sink_temperature);
            thermal.extend(grid.face_nodes(f).into_iter().map(|n| (n, value)));
        }
        // First listed face wins on shared edges.
        thermal.sort_by_key(|&(n, _)| n);
        thermal.dedup_by_key(|&mut (n, _)| n);

        let mut clamped = Vec::new();
        for (i, name) in bc.clamped.iter().enumerate() {
            clamped.extend(grid.face_nodes(face(name, format!("bc.clamped[{i}]"))?));
        }
        clamped.sort_unstable();
        clamped.dedup();

        let mut traction = Vec::new();
        for (i, t) in bc.traction.iter().enumerate() {
            let f = face(&t.face, format!("bc.traction[{i}].face"))?;
            let (quads, area) = grid.face_quads(f);
            traction.extend(quads.into_iter().map(|nodes| TractionQuad {
                nodes,
                area,
                traction: t.vector,
            }));
        }
        Ok(Self {
            thermal,
            clamped,
            traction,
        })
    }

    /// Resultant of all applied tractions in N.
    pub fn total_traction_force(&self) -> [f64; 3] {
        self.traction.iter().fold([0.0; 3], |acc, q| {
            [0, 1, 2].map(|a| acc[a] + q.traction[a] * q.area)
        })
    }
}
