//! CSV series and legacy-VTK field files.
//!
//! Floats are written in their shortest round-trip form, so identical
//! inputs give identical bytes and every file parses back exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::StructuredGrid;
use crate::heatgen::{HeatGenerationSeries, HeatSample, PowerProfile, Table};
use crate::optimizer::ConvergenceRecord;
use crate::transient::TemperatureHistory;

fn read_rows<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let found = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(Error::parse(
            path,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    writer.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct PowerRow {
    t: f64,
    #[serde(rename = "P")]
    p: f64,
}

/// Power profile CSV with header `t,P`.
pub fn read_power_profile(path: &Path) -> Result<PowerProfile> {
    let rows: Vec<PowerRow> = read_rows(path, &["t", "P"])?;
    PowerProfile::new(rows.iter().map(|r| r.t).collect(), rows.iter().map(|r| r.p).collect())
        .map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_power_profile(path: &Path, profile: &PowerProfile) -> Result<()> {
    write_rows(path, &["t", "P"], profile.samples())
}

#[derive(Deserialize)]
struct RateRow {
    t: f64,
    #[serde(rename = "Q")]
    q: f64,
}

/// Precomputed heat series CSV with header `t,Q`.
pub fn read_heat_rates(path: &Path) -> Result<HeatGenerationSeries> {
    let rows: Vec<RateRow> = read_rows(path, &["t", "Q"])?;
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let q: Vec<f64> = rows.iter().map(|r| r.q).collect();
    HeatGenerationSeries::from_rates(&t, &q).map_err(|e| Error::parse(path, e.to_string()))
}

/// Lookup table CSV with header `soc,<column>`.
pub fn read_table(path: &Path, column: &str) -> Result<Table> {
    let rows: Vec<(f64, f64)> = read_rows(path, &["soc", column])?;
    Table::new(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.1).collect())
        .map_err(|e| Error::parse(path, e.to_string()))
}

/// Heat series CSV `t,Q,I,V,soc`; the electrical columns are empty for
/// series that were read as bare rates.
pub fn write_heat_series(path: &Path, series: &HeatGenerationSeries) -> Result<()> {
    let rows = series.samples.iter().map(|s: &HeatSample| {
        let e = s.electrical;
        (s.t, s.q, e.map(|e| e.current), e.map(|e| e.voltage), e.map(|e| e.soc))
    });
    write_rows(path, &["t", "Q", "I", "V", "soc"], rows)
}

/// Reads a `t,Q,I,V,soc` file back, keeping only the rates.
pub fn read_heat_series(path: &Path) -> Result<HeatGenerationSeries> {
    let rows: Vec<(f64, f64, Option<f64>, Option<f64>, Option<f64>)> = read_rows(path, &["t", "Q", "I", "V", "soc"])?;
    let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let q: Vec<f64> = rows.iter().map(|r| r.1).collect();
    HeatGenerationSeries::from_rates(&t, &q).map_err(|e| Error::parse(path, e.to_string()))
}

/// Heat series from either CSV layout, told apart by the header.
pub fn read_any_heat(path: &Path) -> Result<HeatGenerationSeries> {
    let first = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = first.lines().next().unwrap_or("").replace(' ', "");
    if header == "t,Q" {
        read_heat_rates(path)
    } else {
        read_heat_series(path)
    }
}

const CONVERGENCE_HEADER: [&str; 8] = ["iter", "C_S", "C_T", "J", "volfrac", "max_disp", "max_T", "lambda"];

pub fn write_convergence(path: &Path, records: &[ConvergenceRecord]) -> Result<()> {
    write_rows(path, &CONVERGENCE_HEADER, records)
}

pub fn read_convergence(path: &Path) -> Result<Vec<ConvergenceRecord>> {
    read_rows(path, &CONVERGENCE_HEADER)
}

/// Appends-friendly writer that keeps the convergence file current during a run.
pub struct ConvergenceLog {
    writer: csv::Writer<fs::File>,
    path: std::path::PathBuf,
}

impl ConvergenceLog {
    pub fn create(path: &Path) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        writer.write_record(CONVERGENCE_HEADER).map_err(|e| csv_error(path, e))?;
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(Self {
            writer,
            path: path.to_path_buf(),
        })
    }

    pub fn push(&mut self, record: &ConvergenceRecord) -> Result<()> {
        self.writer.serialize(record).map_err(|e| csv_error(&self.path, e))?;
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_history(path: &Path, history: &TemperatureHistory) -> Result<()> {
    let rows = history.samples.iter().map(|s| (s.t, s.max_temperature, s.mean_temperature));
    write_rows(path, &["t", "max_T", "mean_T"], rows)
}

/// One line of a weight sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub k: f64,
    #[serde(rename = "C_S")]
    pub c_s: f64,
    #[serde(rename = "C_T")]
    pub c_t: f64,
    pub max_disp: f64,
    #[serde(rename = "max_T")]
    pub max_temp: f64,
    /// Over the k = 1 run of the sweep, when present.
    pub max_disp_rel_k1: Option<f64>,
    #[serde(rename = "max_T_rise_rel_k1")]
    pub max_temp_rel_k1: Option<f64>,
    /// Over the initial design of the same run.
    pub max_disp_rel_initial: f64,
    #[serde(rename = "max_T_rise_rel_initial")]
    pub max_temp_rel_initial: f64,
}

pub const PARETO_HEADER: [&str; 9] = [
    "k",
    "C_S",
    "C_T",
    "max_disp",
    "max_T",
    "max_disp_rel_k1",
    "max_T_rise_rel_k1",
    "max_disp_rel_initial",
    "max_T_rise_rel_initial",
];

pub fn write_pareto(path: &Path, rows: &[ParetoRow]) -> Result<()> {
    write_rows(path, &PARETO_HEADER, rows)
}

pub fn read_pareto(path: &Path) -> Result<Vec<ParetoRow>> {
    read_rows(path, &PARETO_HEADER)
}

/// Nodal or element array.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalars(Vec<f64>),
    Vectors(Vec<[f64; 3]>),
}

impl FieldData {
    fn len(&self) -> usize {
        match self {
            FieldData::Scalars(v) => v.len(),
            FieldData::Vectors(v) => v.len(),
        }
    }

    /// Groups an interleaved xyz array into vectors.
    pub fn vectors_from(interleaved: &[f64]) -> Self {
        FieldData::Vectors(interleaved.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect())
    }
}

/// Named arrays bound to a grid.
#[derive(Debug, Clone)]
pub struct FieldSnapshot<'a> {
    grid: &'a StructuredGrid,
    point_data: Vec<(String, FieldData)>,
    cell_data: Vec<(String, FieldData)>,
}

impl<'a> FieldSnapshot<'a> {
    pub fn new(grid: &'a StructuredGrid) -> Self {
        Self {
            grid,
            point_data: Vec::new(),
            cell_data: Vec::new(),
        }
    }

    fn check(&self, name: &str, len: usize, expected: usize) -> Result<()> {
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Precondition(format!("invalid array name `{name}`")));
        }
        if self.point_data.iter().chain(&self.cell_data).any(|(n, _)| n == name) {
            return Err(Error::Precondition(format!("duplicate array name `{name}`")));
        }
        if len != expected {
            return Err(Error::Precondition(format!("array `{name}` has {len} entries, expected {expected}")));
        }
        Ok(())
    }

    pub fn with_point(mut self, name: &str, data: FieldData) -> Result<Self> {
        self.check(name, data.len(), self.grid.node_count())?;
        self.point_data.push((name.to_string(), data));
        Ok(self)
    }

    pub fn with_cell(mut self, name: &str, data: FieldData) -> Result<Self> {
        self.check(name, data.len(), self.grid.element_count())?;
        self.cell_data.push((name.to_string(), data));
        Ok(self)
    }

    /// Legacy ASCII structured-points text.
    pub fn to_vtk(&self) -> String {
        let g = self.grid;
        let [nx, ny, nz] = g.node_dims();
        let o = g.origin();
        let h = g.spacing();
        let mut s = String::new();
        s.push_str("# vtk DataFile Version 3.0\npacktopo field snapshot\nASCII\nDATASET STRUCTURED_POINTS\n");
        let _ = writeln!(s, "DIMENSIONS {nx} {ny} {nz}");
        let _ = writeln!(s, "ORIGIN {} {} {}", o[0], o[1], o[2]);
        let _ = writeln!(s, "SPACING {} {} {}", h[0], h[1], h[2]);
        for (section, count, arrays) in [
            ("POINT_DATA", g.node_count(), &self.point_data),
            ("CELL_DATA", g.element_count(), &self.cell_data),
        ] {
            if arrays.is_empty() {
                continue;
            }
            let _ = writeln!(s, "{section} {count}");
            for (name, data) in arrays {
                match data {
                    FieldData::Scalars(v) => {
                        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                        for x in v {
                            let _ = writeln!(s, "{x}");
                        }
                    }
                    FieldData::Vectors(v) => {
                        let _ = writeln!(s, "VECTORS {name} double");
                        for [a, b, c] in v {
                            let _ = writeln!(s, "{a} {b} {c}");
                        }
                    }
                }
            }
        }
        s
    }
}

pub fn write_vtk(snapshot: &FieldSnapshot, path: &Path) -> Result<()> {
    fs::write(path, snapshot.to_vtk()).map_err(|e| Error::io(path, e))
}

/// Reads the nodal scalar array `name` from a structured-points file
/// written for `grid`.
pub fn read_vtk_point_scalars(path: &Path, grid: &StructuredGrid, name: &str) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::parse(path, m);
    let mut lines = text.lines().map(str::trim);
    let mut in_points = false;
    while let Some(line) = lines.next() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["DIMENSIONS", dims @ ..] => {
                let dims: Vec<usize> = dims.iter().filter_map(|d| d.parse().ok()).collect();
                if dims != grid.node_dims() {
                    return Err(bad(format!("grid dimensions {dims:?} do not match {:?}", grid.node_dims())));
                }
            }
            ["POINT_DATA", _] => in_points = true,
            ["CELL_DATA", _] => in_points = false,
            ["SCALARS", n, ..] if in_points && *n == name => {
                if lines.next() != Some("LOOKUP_TABLE default") {
                    return Err(bad("expected `LOOKUP_TABLE default`".into()));
                }
                let count = grid.node_count();
                let values = lines
                    .by_ref()
                    .flat_map(str::split_whitespace)
                    .take(count)
                    .map(|w| w.parse::<f64>().map_err(|e| bad(format!("{name}: {e}"))))
                    .collect::<Result<Vec<f64>>>()?;
                if values.len() != count {
                    return Err(bad(format!("{name} has {} values, expected {count}", values.len())));
                }
                return Ok(values);
            }
            _ => {}
        }
    }
    Err(bad(format!("no point scalars named `{name}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heatgen::{simulate_heat, CellModel};

    #[test]
    fn single_element_cell_scalar() {
        let grid = StructuredGrid::with_spacing([1, 1, 1], [1.0; 3]).unwrap();
        let snap = FieldSnapshot::new(&grid).with_cell("gamma", FieldData::Scalars(vec![1.0])).unwrap();
        let text = snap.to_vtk();
        let tail: Vec<&str> = text.lines().skip_while(|l| !l.starts_with("CELL_DATA")).collect();
        assert_eq!(tail, ["CELL_DATA 1", "SCALARS gamma double 1", "LOOKUP_TABLE default", "1"]);
        assert!(!text.contains("POINT_DATA"));
    }

    #[test]
    fn nodal_values_in_lattice_order() {
        let grid = StructuredGrid::with_spacing([2, 1, 1], [0.5; 3]).unwrap();
        let t: Vec<f64> = (0..grid.node_count()).map(|n| n as f64).collect();
        let snap = FieldSnapshot::new(&grid)
            .with_point("T", FieldData::Scalars(t.clone()))
            .unwrap()
            .with_cell("gamma", FieldData::Scalars(vec![0.25, 1.0]))
            .unwrap();
        let text = snap.to_vtk();
        assert!(text.contains("DIMENSIONS 3 2 2\n"));
        let lines: Vec<&str> = text.lines().collect();
        let at = lines.iter().position(|l| *l == "POINT_DATA 12").unwrap();
        let values: Vec<f64> = lines[at + 3..at + 15].iter().map(|l| l.parse().unwrap()).collect();
        assert_eq!(values, t);
        assert!(at < lines.iter().position(|l| l.starts_with("CELL_DATA")).unwrap());
    }

    #[test]
    fn snapshot_rejects_mismatched_or_duplicate_arrays() {
        let grid = StructuredGrid::with_spacing([2, 1, 1], [0.5; 3]).unwrap();
        let s = FieldSnapshot::new(&grid);
        assert!(s.clone().with_point("T", FieldData::Scalars(vec![0.0; 11])).is_err());
        let s = s.with_cell("g", FieldData::Scalars(vec![0.0; 2])).unwrap();
        assert!(s.with_point("g", FieldData::Scalars(vec![0.0; 12])).is_err());
    }

    #[test]
    fn vtk_is_byte_stable_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let grid = StructuredGrid::with_spacing([3, 2, 2], [0.1, 0.2, 0.3]).unwrap();
        let phi: Vec<f64> = (0..grid.node_count()).map(|n| (n as f64 * 0.37).sin() / 3.0).collect();
        let u: Vec<f64> = (0..3 * grid.node_count()).map(|i| i as f64 * 1e-7).collect();
        let snap = FieldSnapshot::new(&grid)
            .with_point("phi", FieldData::Scalars(phi.clone()))
            .unwrap()
            .with_point("u", FieldData::vectors_from(&u))
            .unwrap();
        let (a, b) = (dir.path().join("a.vtk"), dir.path().join("b.vtk"));
        write_vtk(&snap, &a).unwrap();
        write_vtk(&snap, &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(read_vtk_point_scalars(&a, &grid, "phi").unwrap(), phi);
        assert!(read_vtk_point_scalars(&a, &grid, "T").is_err());
        let other = StructuredGrid::with_spacing([2, 2, 2], [0.1; 3]).unwrap();
        assert!(read_vtk_point_scalars(&a, &other, "phi").is_err());
    }

    #[test]
    fn convergence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let records: Vec<ConvergenceRecord> = (0..4)
            .map(|i| ConvergenceRecord {
                iter: i,
                c_s: 1.0 / (i as f64 + 3.0),
                c_t: 0.1 * std::f64::consts::PI.powi(i as i32),
                j: 1.0 - 1e-17 * i as f64,
                volfrac: 0.3 + 1e-12,
                max_disp: 1.234e-5,
                max_temp: 298.15 + 1.0 / 7.0,
                lambda: -4.0e4,
            })
            .collect();
        write_convergence(&path, &records).unwrap();
        assert_eq!(read_convergence(&path).unwrap(), records);
        write_convergence(&path, &[]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), CONVERGENCE_HEADER.join(",") + "\n");
        let mut log = ConvergenceLog::create(&path).unwrap();
        for r in &records {
            log.push(r).unwrap();
        }
        assert_eq!(read_convergence(&path).unwrap(), records);
    }

    #[test]
    fn heat_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let profile = PowerProfile::synthetic(35.0, 15.0, 40.0);
        let p = dir.path().join("p.csv");
        write_power_profile(&p, &profile).unwrap();
        let back = read_power_profile(&p).unwrap();
        assert_eq!(back.samples().collect::<Vec<_>>(), profile.samples().collect::<Vec<_>>());
        let series = simulate_heat(&back, &CellModel::flat_21700(), 298.15, 10.0).unwrap();
        let h = dir.path().join("h.csv");
        write_heat_series(&h, &series).unwrap();
        assert!(fs::read_to_string(&h).unwrap().starts_with("t,Q,I,V,soc\n"));
        let rates = read_any_heat(&h).unwrap();
        assert_eq!(rates.worst, series.worst);
        assert_eq!(rates.samples.len(), series.samples.len());
        let q = dir.path().join("q.csv");
        fs::write(&q, "t,Q\n0,1000\n5,5000\n").unwrap();
        assert_eq!(read_any_heat(&q).unwrap().worst, 5000.0);
    }

    #[test]
    fn wrong_header_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.csv");
        fs::write(&p, "time,power\n0,1\n").unwrap();
        assert!(matches!(read_power_profile(&p), Err(Error::Parse { .. })));
        fs::write(&p, "t,P\n0,1\n0,2\n").unwrap();
        assert!(matches!(read_power_profile(&p), Err(Error::Parse { .. })));
        let ocv = dir.path().join("ocv.csv");
        fs::write(&ocv, "soc,ocv\n0,3.0\n1,4.2\n").unwrap();
        assert_eq!(read_table(&ocv, "ocv").unwrap().eval(0.5), 3.6);
    }

    #[test]
    fn pareto_round_trip_with_missing_reference() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pareto.csv");
        let rows = vec![ParetoRow {
            k: 0.5,
            c_s: 70.0,
            c_t: 0.13,
            max_disp: 1e-4,
            max_temp: 298.4,
            max_disp_rel_k1: None,
            max_temp_rel_k1: None,
            max_disp_rel_initial: 0.9,
            max_temp_rel_initial: 0.8,
        }];
        write_pareto(&p, &rows).unwrap();
        assert_eq!(read_pareto(&p).unwrap(), rows);
    }
}
