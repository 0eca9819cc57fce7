//! Thermo-structural level-set topology optimization of battery-pack enclosures.

pub mod error;
pub mod fem;
pub mod grid;
pub mod levelset;
pub mod materials;

pub use error::{Error, Result};
pub mod elastic;
pub mod thermal;
pub mod analysis;
pub mod sensitivity;
pub mod optimizer;
pub mod heatgen;
pub mod transient;
pub mod config;
pub mod io;
