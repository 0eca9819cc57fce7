//! Run configuration: a strict TOML schema whose defaults describe the
//! reference enclosure problem.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BcConfig, CellLayout, GridConfig};
use crate::materials::MaterialSet;
use crate::optimizer::OptimizationConfig;

/// Synthetic take-off / cruise / landing demand per cell, W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticProfile {
    pub takeoff: f64,
    pub cruise: f64,
    pub landing: f64,
}

impl Default for SyntheticProfile {
    fn default() -> Self {
        Self {
            takeoff: 35.0,
            cruise: 15.0,
            landing: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatgenConfig {
    /// Power profile CSV (`t,P`). The synthetic profile is used when absent.
    pub profile: Option<PathBuf>,
    /// Precomputed heat series CSV (`t,Q`); bypasses the cell model.
    pub heat: Option<PathBuf>,
    /// Open-circuit voltage table CSV (`soc,ocv`). Flat 3.6 V when absent.
    pub ocv: Option<PathBuf>,
    /// Entropic coefficient table CSV (`soc,dudt`). Zero when absent.
    pub entropic: Option<PathBuf>,
    /// Ah
    pub capacity: f64,
    /// Ω
    pub resistance: f64,
    /// Cell volume, m³. Defaults to the layout cylinder.
    pub volume: Option<f64>,
    pub initial_soc: f64,
    /// Wh
    pub energy: f64,
    /// Fixed cell temperature for the entropic term, K.
    pub cell_temperature: f64,
    /// s
    pub dt: f64,
    pub synthetic: SyntheticProfile,
}

impl Default for HeatgenConfig {
    fn default() -> Self {
        Self {
            profile: None,
            heat: None,
            ocv: None,
            entropic: None,
            capacity: 17.8 / 3.6,
            resistance: 0.02,
            volume: None,
            initial_soc: 1.0,
            energy: 17.8,
            cell_temperature: 298.15,
            dt: 1.0,
            synthetic: SyntheticProfile::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TransientSection {
    /// s. Defaults to a 500th of the duration.
    pub dt: Option<f64>,
    /// s. Defaults to the length of the heat series.
    pub duration: Option<f64>,
    /// K. Defaults to the sink temperature.
    pub initial_temperature: Option<f64>,
    /// Times at which nodal temperature fields are written.
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write a field file every this many iterations; 0 writes only the final design.
    pub dump_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            dump_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub layout: CellLayout,
    pub materials: MaterialSet,
    pub bc: BcConfig,
    pub optimizer: OptimizationConfig,
    pub heatgen: HeatgenConfig,
    pub transient: TransientSection,
    pub output: OutputConfig,
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Parses TOML text. Relative file paths are left as written.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<root>", e.to_string()))?;
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let key = if key == "." { "<root>".to_string() } else { key };
            Error::config(key, e.into_inner().message().trim().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every range the modules rely on.
    pub fn validate(&self) -> Result<()> {
        for (axis, &v) in self.grid.size.iter().enumerate() {
            positive(&format!("grid.size[{axis}]"), v)?;
        }
        for (axis, &n) in self.grid.elements.iter().enumerate() {
            if n == 0 {
                return Err(Error::config(format!("grid.elements[{axis}]"), "must be at least 1"));
            }
        }
        if self.layout.cell_count() > 0 {
            positive("layout.pitch", self.layout.pitch)?;
            positive("layout.diameter", self.layout.diameter)?;
            positive("layout.height", self.layout.height)?;
        }
        self.materials.pack.validate("materials.pack")?;
        self.materials.cell.validate("materials.cell")?;
        if !self.bc.sink_temperature.is_finite() || self.bc.sink_temperature <= 0.0 {
            return Err(Error::config("bc.sink_temperature", "must be a positive absolute temperature"));
        }
        self.optimizer.validate()?;
        let h = &self.heatgen;
        positive("heatgen.capacity", h.capacity)?;
        positive("heatgen.resistance", h.resistance)?;
        positive("heatgen.energy", h.energy)?;
        positive("heatgen.cell_temperature", h.cell_temperature)?;
        positive("heatgen.dt", h.dt)?;
        if let Some(v) = h.volume {
            positive("heatgen.volume", v)?;
        }
        if !(0.0..=1.0).contains(&h.initial_soc) {
            return Err(Error::config("heatgen.initial_soc", format!("must lie in [0, 1], got {}", h.initial_soc)));
        }
        let t = &self.transient;
        if let Some(dt) = t.dt {
            positive("transient.dt", dt)?;
        }
        if let Some(d) = t.duration {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::config("transient.duration", format!("must be non-negative, got {d}")));
            }
        }
        if let Some(v) = t.initial_temperature {
            positive("transient.initial_temperature", v)?;
        }
        Ok(())
    }

    /// Resolves relative input files against `base` and checks they exist.
    pub fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        let h = &mut self.heatgen;
        for (key, slot) in [
            ("heatgen.profile", &mut h.profile),
            ("heatgen.heat", &mut h.heat),
            ("heatgen.ocv", &mut h.ocv),
            ("heatgen.entropic", &mut h.entropic),
        ] {
            if let Some(p) = slot {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                if !p.is_file() {
                    return Err(Error::config(key, format!("file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    /// Cell volume for the heat model: explicit, else the layout cylinder.
    pub fn cell_volume(&self) -> f64 {
        self.heatgen.volume.unwrap_or_else(|| self.layout.cell_volume())
    }
}

/// Reads, validates and resolves a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = RunConfig::from_toml(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    config.resolve_paths(&base)?;
    Ok(config)
}
