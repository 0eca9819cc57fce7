//! Base material data and per-element interpolated properties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    /// W/(m·K)
    pub conductivity: f64,
    /// Pa
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// 1/K
    pub expansion: f64,
    /// Volumetric heat capacity rho·c_p, J/(m³·K)
    pub heat_capacity: f64,
}

impl Material {
    pub fn aluminum() -> Self {
        Self {
            conductivity: 220.0,
            youngs_modulus: 68.0e9,
            poisson_ratio: 0.32,
            expansion: 21.0e-6,
            heat_capacity: 2_430_000.0,
        }
    }

    /// Effective properties of a cylindrical 21700 cell.
    pub fn cell() -> Self {
        Self {
            conductivity: 1.25,
            youngs_modulus: 1.5e9,
            poisson_ratio: 0.2,
            expansion: 10.0e-6,
            heat_capacity: 1_767_574.0,
        }
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        let positive = [
            ("conductivity", self.conductivity),
            ("youngs_modulus", self.youngs_modulus),
            ("heat_capacity", self.heat_capacity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{key}.{name}"), format!("must be positive, got {v}")));
            }
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(Error::config(
                format!("{key}.poisson_ratio"),
                format!("must lie in (0, 0.5), got {}", self.poisson_ratio),
            ));
        }
        if !(self.expansion.is_finite() && self.expansion >= 0.0) {
            return Err(Error::config(format!("{key}.expansion"), "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSet {
    /// Designable enclosure material.
    pub pack: Material,
    /// Passive battery-cell material.
    pub cell: Material,
}

impl Default for MaterialSet {
    fn default() -> Self {
        Self {
            pack: Material::aluminum(),
            cell: Material::cell(),
        }
    }
}

impl MaterialSet {
    /// Same material everywhere; handy for verification problems.
    pub fn uniform(m: Material) -> Self {
        Self { pack: m, cell: m }
    }
}

/// Which base material an element draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaterialKind {
    Pack = 0,
    Cell = 1,
}

/// Interpolated element properties.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementProperties {
    pub kind: Vec<MaterialKind>,
    /// gamma_min·(1 - gamma) + gamma on design elements, 1 on cells.
    pub factor: Vec<f64>,
    pub conductivity: Vec<f64>,
    pub youngs_modulus: Vec<f64>,
    pub expansion: Vec<f64>,
    pub heat_capacity: Vec<f64>,
    /// d(factor)/d(gamma): 1 - gamma_min on design elements, 0 on cells.
    pub factor_slope: Vec<f64>,
}

impl ElementProperties {
    pub fn len(&self) -> usize {
        self.factor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.is_empty()
    }
}
