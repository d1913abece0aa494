//! Run artifacts: the node table, the JSON run report and the binary field
//! dump with its text sidecar.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use radtemp::entropy::EntropyReport;
use radtemp::solvers::SolverReport;
use radtemp::transport::{Grids, RadiationField};

use crate::config::RunConfig;

pub const NODE_TABLE: &str = "nodes.csv";
pub const REPORT: &str = "report.json";
pub const FIELD_DUMP: &str = "field.bin";

const MAGIC: &[u8; 8] = b"RADTEMPF";
const VERSION: u32 = 1;
const HAS_TEMPERATURE: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a readable field dump: {reason}")]
    Unreadable { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io { path: path.to_path_buf(), source }
}

/// One row per spatial node.
pub struct NodeRow {
    pub x: [f64; 3],
    pub temperature: f64,
    pub emission: f64,
    pub residual: f64,
}

/// CSV with columns `x,y,z,T,w,conservation_residual`, 17 significant digits.
pub fn write_node_table(path: &Path, rows: &[NodeRow]) -> Result<(), ArtifactError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "x,y,z,T,w,conservation_residual")?;
        for r in rows {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.x[0], r.x[1], r.x[2], r.temperature, r.emission, r.residual
            )?;
        }
        out.flush()
    };
    write().map_err(io_err(path))
}

/// Reads back the numeric columns of a node table.
pub fn read_node_table(path: &Path) -> Result<Vec<[f64; 6]>, ArtifactError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |reason: String| ArtifactError::Unreadable { path: path.to_path_buf(), reason };
    let mut rows = Vec::new();
    for (k, line) in text.lines().enumerate().skip(1) {
        let mut row = [0.0; 6];
        let mut cols = line.split(',');
        for v in row.iter_mut() {
            let col = cols.next().ok_or_else(|| bad(format!("line {} has fewer than 6 columns", k + 1)))?;
            *v = col.parse().map_err(|e| bad(format!("line {}: {e}", k + 1)))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Largest relative conservation defect and its absolute counterpart.
#[derive(Debug, Clone, Serialize)]
pub struct ConservationSummary {
    pub max_absolute: f64,
    pub max_relative: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub threads: usize,
    pub nodes: usize,
    pub solver: &'a SolverReport,
    pub conservation: Option<ConservationSummary>,
    pub entropy: Option<&'a EntropyReport>,
    pub field_dump: Option<String>,
    pub notes: Vec<String>,
    /// The resolved configuration, defaults expanded.
    pub config: &'a RunConfig,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(std::io::Error::from)
        .and_then(|_| out.write_all(b"\n"))
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

/// A persisted solution with the grid descriptors needed to check it
/// against a rebuilt discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub h: f64,
    pub nodes: Vec<[f64; 3]>,
    pub directions: Vec<[f64; 3]>,
    pub direction_weights: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub frequency_weights: Vec<f64>,
    pub temperature: Option<Vec<f64>>,
    pub field: RadiationField,
}

impl FieldDump {
    pub fn new(grids: &Grids, temperature: Option<Vec<f64>>, field: RadiationField) -> Self {
        FieldDump {
            h: grids.spatial.h,
            nodes: grids.spatial.nodes.iter().map(|x| [x.x, x.y, x.z]).collect(),
            directions: grids.angular.nodes.iter().map(|n| [n.x, n.y, n.z]).collect(),
            direction_weights: grids.angular.weights.clone(),
            frequencies: grids.spectral.nodes.clone(),
            frequency_weights: grids.spectral.weights.clone(),
            temperature,
            field,
        }
    }

    /// Bit-exact agreement of every grid descriptor with `grids`.
    pub fn matches(&self, grids: &Grids) -> bool {
        let same = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits());
        let flat = |v: &[[f64; 3]]| v.iter().flatten().copied().collect::<Vec<f64>>();
        let grid_nodes: Vec<f64> = grids.spatial.nodes.iter().flat_map(|x| [x.x, x.y, x.z]).collect();
        let grid_dirs: Vec<f64> = grids.angular.nodes.iter().flat_map(|n| [n.x, n.y, n.z]).collect();
        self.h.to_bits() == grids.spatial.h.to_bits()
            && same(&flat(&self.nodes), &grid_nodes)
            && same(&flat(&self.directions), &grid_dirs)
            && same(&self.direction_weights, &grids.angular.weights)
            && same(&self.frequencies, &grids.spectral.nodes)
            && same(&self.frequency_weights, &grids.spectral.weights)
    }
}

/// Text descriptor written next to the binary dump.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub byte_order: String,
    pub n_nodes: usize,
    pub n_dirs: usize,
    pub n_freq: usize,
    pub has_temperature: bool,
    pub layout: Vec<String>,
    pub config: RunConfig,
}

pub fn sidecar_path(dump: &Path) -> PathBuf {
    dump.with_extension("toml")
}

/// Layout, all little-endian: magic `RADTEMPF`, `u32` version, `u32` flags,
/// `u64` node/direction/frequency counts, `f64` spacing, then the node
/// coordinates, directions, direction weights, frequencies, frequency
/// weights, optional temperatures and the radiance `[node][dir][freq]`.
pub fn write_field_dump(path: &Path, dump: &FieldDump, config: &RunConfig) -> Result<(), ArtifactError> {
    let f = &dump.field;
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        let flags = if dump.temperature.is_some() { HAS_TEMPERATURE } else { 0 };
        out.write_all(&flags.to_le_bytes())?;
        for n in [f.n_nodes, f.n_dirs, f.n_freq] {
            out.write_all(&(n as u64).to_le_bytes())?;
        }
        let mut put = |values: &[f64]| -> std::io::Result<()> {
            for v in values {
                out.write_all(&v.to_le_bytes())?;
            }
            Ok(())
        };
        put(&[dump.h])?;
        put(dump.nodes.as_flattened())?;
        put(dump.directions.as_flattened())?;
        put(&dump.direction_weights)?;
        put(&dump.frequencies)?;
        put(&dump.frequency_weights)?;
        if let Some(t) = &dump.temperature {
            put(t)?;
        }
        put(&f.values)?;
        out.flush()
    };
    write().map_err(io_err(path))?;

    let sidecar = Sidecar {
        format: "radtemp-field".into(),
        version: VERSION,
        byte_order: "little-endian".into(),
        n_nodes: f.n_nodes,
        n_dirs: f.n_dirs,
        n_freq: f.n_freq,
        has_temperature: dump.temperature.is_some(),
        layout: [
            "magic: 8 bytes \"RADTEMPF\"",
            "version: u32",
            "flags: u32 (bit 0: temperature present)",
            "n_nodes, n_dirs, n_freq: u64",
            "h: f64",
            "nodes: f64[n_nodes][3]",
            "directions: f64[n_dirs][3]",
            "direction_weights: f64[n_dirs]",
            "frequencies: f64[n_freq]",
            "frequency_weights: f64[n_freq]",
            "temperature: f64[n_nodes] (if flagged)",
            "radiance: f64[n_nodes][n_dirs][n_freq]",
        ]
        .map(String::from)
        .to_vec(),
        config: config.clone(),
    };
    let side = sidecar_path(path);
    let text = toml::to_string(&sidecar).expect("a sidecar always serializes");
    std::fs::write(&side, text).map_err(io_err(&side))
}

pub fn read_field_dump(path: &Path) -> Result<FieldDump, ArtifactError> {
    let bad = |reason: String| ArtifactError::Unreadable { path: path.to_path_buf(), reason };
    let file = File::open(path).map_err(io_err(path))?;
    let len = file.metadata().map_err(io_err(path))?.len();
    let mut input = BufReader::new(file);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(|e| bad(e.to_string()))?;
    if &magic != MAGIC {
        return Err(bad("wrong magic".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word).map_err(|e| bad(e.to_string()))?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    input.read_exact(&mut word).map_err(|e| bad(e.to_string()))?;
    let flags = u32::from_le_bytes(word);
    let mut counts = [0usize; 3];
    for c in counts.iter_mut() {
        let mut b = [0u8; 8];
        input.read_exact(&mut b).map_err(|e| bad(e.to_string()))?;
        *c = usize::try_from(u64::from_le_bytes(b)).map_err(|e| bad(e.to_string()))?;
    }
    let [nn, nd, nf] = counts;
    let has_t = flags & HAS_TEMPERATURE != 0;
    let floats = nn
        .checked_mul(nd)
        .and_then(|v| v.checked_mul(nf))
        .and_then(|v| v.checked_add(1 + 3 * nn + 4 * nd + 2 * nf + if has_t { nn } else { 0 }))
        .ok_or_else(|| bad("counts overflow".into()))?;
    let header = 8 + 4 + 4 + 24;
    if floats.checked_mul(8).and_then(|b| b.checked_add(header)) != Some(len as usize) {
        return Err(bad(format!("size {len} does not match the declared counts")));
    }
    let mut take = |n: usize| -> Result<Vec<f64>, ArtifactError> {
        let mut bytes = vec![0u8; n * 8];
        input.read_exact(&mut bytes).map_err(|e| bad(e.to_string()))?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
    };
    let triples = |v: Vec<f64>| v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect::<Vec<_>>();
    let h = take(1)?[0];
    let nodes = triples(take(3 * nn)?);
    let directions = triples(take(3 * nd)?);
    let direction_weights = take(nd)?;
    let frequencies = take(nf)?;
    let frequency_weights = take(nf)?;
    let temperature = if has_t { Some(take(nn)?) } else { None };
    let values = take(nn * nd * nf)?;
    Ok(FieldDump {
        h,
        nodes,
        directions,
        direction_weights,
        frequencies,
        frequency_weights,
        temperature,
        field: RadiationField { n_nodes: nn, n_dirs: nd, n_freq: nf, values },
    })
}

pub fn read_sidecar(dump: &Path) -> Result<Sidecar, ArtifactError> {
    let path = sidecar_path(dump);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let sidecar: Sidecar =
        toml::from_str(&text).map_err(|e| ArtifactError::Unreadable { path: path.clone(), reason: e.to_string() })?;
    sidecar.config.validate().map_err(|e| ArtifactError::Unreadable { path, reason: e.to_string() })?;
    Ok(sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (FieldDump, RunConfig) {
        let cfg = RunConfig::parse(
            r#"
            mode = "spectral"
            [domain]
            shape = "ball"
            center = [0.0, 0.0, 0.0]
            radius = 1.0
            [medium]
            absorption = 1.0
            [boundary]
            kind = "zero"
            [spatial]
            h = 0.5
            [angular]
            rule = "lebedev26"
            [spectral]
            n_nodes = 8
            "#,
        )
        .unwrap();
        let g = cfg.grids().unwrap();
        let n = g.spatial.len() * g.angular.len() * g.spectral.len();
        let values: Vec<f64> = (0..n).map(|k| (k as f64 * 0.731).sin().abs() * 1e-3 + f64::MIN_POSITIVE).collect();
        let field = RadiationField { n_nodes: g.spatial.len(), n_dirs: g.angular.len(), n_freq: g.spectral.len(), values };
        let t = (0..g.spatial.len()).map(|m| 1.0 / (m as f64 + 3.0)).collect();
        (FieldDump::new(&g, Some(t), field), cfg)
    }

    #[test]
    fn dump_round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FIELD_DUMP);
        let (dump, cfg) = sample();
        write_field_dump(&path, &dump, &cfg).unwrap();
        let back = read_field_dump(&path).unwrap();
        assert!(back.field.values.iter().zip(&dump.field.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back, dump);
        assert!(back.matches(&cfg.grids().unwrap()));
        let side = read_sidecar(&path).unwrap();
        assert_eq!(side.config, cfg);
        assert_eq!(side.n_nodes, dump.field.n_nodes);
    }

    #[test]
    fn truncated_or_foreign_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FIELD_DUMP);
        let (dump, cfg) = sample();
        write_field_dump(&path, &dump, &cfg).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_field_dump(&path), Err(ArtifactError::Unreadable { .. })));
        std::fs::write(&path, b"not a dump at all").unwrap();
        assert!(matches!(read_field_dump(&path), Err(ArtifactError::Unreadable { .. })));
    }

    #[test]
    fn node_table_keeps_seventeen_digits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(NODE_TABLE);
        let rows = vec![NodeRow { x: [0.1, -0.2, 1.0 / 3.0], temperature: 0.1 + 0.2, emission: 1e-300, residual: -0.0 }];
        write_node_table(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,z,T,w,conservation_residual\n"));
        let back = read_node_table(&path).unwrap();
        assert_eq!(back[0][2].to_bits(), (1.0f64 / 3.0).to_bits());
        assert_eq!(back[0][3].to_bits(), (0.1f64 + 0.2).to_bits());
    }
}
