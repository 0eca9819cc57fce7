//! Shared fixture for the kernel benchmarks: the enclosure on a desk-scale grid
//! with its seeded initial design.

use packtopo::analysis::cell_source;
use packtopo::fem::Discretization;
use packtopo::grid::{BcConfig, BoundaryTags, CellLayout, GridConfig, RegionMap, StructuredGrid};
use packtopo::levelset::{compute_volume_fractions, initialize_design, interpolate_properties, DesignState, LevelSetField};
use packtopo::materials::{ElementProperties, MaterialSet};
use packtopo::optimizer::OptimizationConfig;

pub struct Fixture {
    pub grid: StructuredGrid,
    pub regions: RegionMap,
    pub tags: BoundaryTags,
    pub phi: LevelSetField,
    pub state: DesignState,
    pub disc: Discretization,
    pub props: ElementProperties,
    /// Cell source at 8250 W/m³.
    pub source: Vec<f64>,
    pub sink: f64,
}

impl Fixture {
    pub fn new(elements: [usize; 3]) -> Self {
        let grid = StructuredGrid::new(&GridConfig {
            elements,
            ..GridConfig::default()
        })
        .unwrap();
        let regions = RegionMap::label(&grid, &CellLayout::default()).unwrap();
        let bc = BcConfig::default();
        let tags = BoundaryTags::tag(&grid, &bc).unwrap();
        let opt = OptimizationConfig::default();
        let phi = initialize_design(&grid, &regions, &opt.seed).unwrap();
        let state = compute_volume_fractions(&grid, &phi, &regions, opt.subsamples, opt.gamma_min);
        let mats = MaterialSet::default();
        let disc = Discretization::new(&grid, &mats);
        let props = interpolate_properties(&state, &regions, &mats);
        let source = cell_source(&regions, 8250.0);
        Self {
            grid,
            regions,
            tags,
            phi,
            state,
            disc,
            props,
            source,
            sink: bc.sink_temperature,
        }
    }

    pub fn desk() -> Self {
        Self::new([24, 16, 20])
    }
}
