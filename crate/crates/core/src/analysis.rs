//! Coupled steady analysis of one design: conduction, then elasticity
//! loaded by the resulting thermal strain.

use crate::elastic::{self, clamp_constraints, DisplacementField, ElasticLoads};
use crate::error::Result;
use crate::fem::{CgOptions, Discretization};
use crate::grid::{BoundaryTags, RegionMap, StructuredGrid};
use crate::levelset::DesignState;
use crate::materials::{ElementProperties, MaterialSet};
use crate::thermal::{self, TemperatureField, ThermalSystem};

/// Everything about the problem that does not change with the design.
#[derive(Debug, Clone)]
pub struct Physics {
    pub disc: Discretization,
    pub regions: RegionMap,
    pub materials: MaterialSet,
    pub tags: BoundaryTags,
    /// Per-element volumetric heat source, W/m³.
    pub source: Vec<f64>,
    /// Temperature the conduction problem is solved relative to, K.
    pub sink_temperature: f64,
    /// Stress-free temperature of the thermal strain, K.
    pub stress_free_temperature: f64,
    pub body_force: [f64; 3],
    pub include_thermal_work: bool,
    pub solver: CgOptions,
    constraints: Vec<(usize, f64)>,
}

/// Uniform source on CELL elements, zero elsewhere.
pub fn cell_source(regions: &RegionMap, q: f64) -> Vec<f64> {
    regions.labels().iter().enumerate().map(|(e, _)| if regions.is_cell(e) { q } else { 0.0 }).collect()
}

impl Physics {
    pub fn new(
        grid: &StructuredGrid,
        regions: RegionMap,
        materials: MaterialSet,
        tags: BoundaryTags,
        source: Vec<f64>,
        sink_temperature: f64,
    ) -> Self {
        let constraints = clamp_constraints(&tags.clamped);
        Self {
            disc: Discretization::new(grid, &materials),
            regions,
            materials,
            tags,
            source,
            sink_temperature,
            stress_free_temperature: sink_temperature,
            body_force: [0.0; 3],
            include_thermal_work: false,
            solver: CgOptions::default(),
            constraints,
        }
    }

    pub fn grid(&self) -> &StructuredGrid {
        self.disc.grid()
    }

    pub fn constraints(&self) -> &[(usize, f64)] {
        &self.constraints
    }

    /// Solves both physics for `state`, warm-starting from `previous`.
    pub fn analyze(&self, state: &DesignState, previous: Option<&Analysis>) -> Result<Analysis> {
        let props = crate::levelset::interpolate_properties(state, &self.regions, &self.materials);
        let thermal_system =
            thermal::assemble_thermal(&self.disc, &props, &self.source, &self.tags.thermal, self.sink_temperature)?;
        let temperature = thermal::solve_thermal(
            &thermal_system,
            &self.disc,
            &props,
            &self.solver,
            previous.map(|p| p.temperature.theta.as_slice()),
        )?;
        let rise = temperature.rise_over(self.stress_free_temperature);
        let loads = ElasticLoads {
            constraints: &self.constraints,
            traction: &self.tags.traction,
            body_force: self.body_force,
            temperature_rise: Some(&rise),
        };
        let elastic_system = elastic::assemble_elastic(&self.disc, &props, &loads)?;
        let displacement = elastic::solve_elastic(
            &elastic_system,
            &self.solver,
            previous.map(|p| (p.displacement.u_mech.as_slice(), p.displacement.u_thermal.as_slice())),
            self.include_thermal_work,
        )?;
        Ok(Analysis {
            props,
            thermal_system,
            temperature,
            rise,
            displacement,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub props: ElementProperties,
    pub thermal_system: ThermalSystem,
    pub temperature: TemperatureField,
    /// Nodal temperature over the stress-free temperature.
    pub rise: Vec<f64>,
    pub displacement: DisplacementField,
}

impl Analysis {
    pub fn structural_compliance(&self) -> f64 {
        self.displacement.compliance
    }

    pub fn thermal_compliance(&self) -> f64 {
        self.temperature.compliance
    }
}
