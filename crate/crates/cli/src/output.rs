//! Deterministic CSV artifacts with a provenance header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hetrdme_core::analysis::Scenario;
use hetrdme_core::discretization::{ConcField, Lattice};

use crate::scenario::LoadedScenario;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance lines written at the top of every file.
#[derive(Clone, Debug)]
pub struct Header {
    pub scenario_sha256: String,
    pub seed: u64,
    pub rate_convention: String,
    pub ghost_coeff: String,
    pub scheme: String,
    pub command: String,
}

impl Header {
    pub fn new(loaded: &LoadedScenario, seed: u64, command: impl Into<String>) -> Self {
        let sc = &loaded.scenario;
        Self {
            scenario_sha256: loaded.hash(),
            seed,
            rate_convention: sc.convention.as_str().into(),
            ghost_coeff: ghost_name(sc).into(),
            scheme: sc.scheme.as_str().into(),
            command: command.into(),
        }
    }

    pub fn lines(&self) -> Vec<String> {
        vec![
            format!("# hetrdme {VERSION}"),
            format!("# scenario_sha256 {}", self.scenario_sha256),
            format!("# seed {}", self.seed),
            format!("# rate_convention {}", self.rate_convention),
            format!("# ghost_coeff {}", self.ghost_coeff),
            format!("# scheme {}", self.scheme),
            format!("# command {}", self.command),
        ]
    }
}

fn ghost_name(sc: &Scenario) -> &'static str {
    use hetrdme_core::discretization::GhostCoefficient;
    match sc.ghost {
        GhostCoefficient::Clamp => "clamp",
        GhostCoefficient::Mirror => "mirror",
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// `i,j,...` lattice coordinates of a voxel.
pub fn voxel_label(lattice: &Lattice, voxel: usize) -> String {
    lattice
        .coordinates(voxel)
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// CSV table writer that emits the header block first.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, header: &Header, columns: &[&str]) -> Result<Self, CliError> {
        let io = |e| CliError::io(path, e);
        let mut out = BufWriter::new(File::create(path).map_err(io)?);
        for line in header.lines() {
            writeln!(out, "{line}").map_err(io)?;
        }
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        writer.write_record(columns).map_err(|e| CliError::csv(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| CliError::csv(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub const FIELD_COLUMNS: [&str; 6] = ["scale", "replicate", "t", "species", "voxel_index", "value"];

/// Appends one snapshot in the long trajectory/PDE layout.
pub fn write_field(
    table: &mut Table,
    scale: &str,
    replicate: &str,
    t: f64,
    names: &[String],
    field: &ConcField<f64>,
) -> Result<(), CliError> {
    let lat = *field.lattice();
    let t = fmt_f64(t);
    for j in 0..lat.voxels() {
        let label = voxel_label(&lat, j);
        for (l, name) in names.iter().enumerate() {
            table.row([scale, replicate, t.as_str(), name.as_str(), label.as_str(), &fmt_f64(field.get(l, j))])?;
        }
    }
    Ok(())
}

/// Reads a file back without its `#` header lines.
pub fn strip_header(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
