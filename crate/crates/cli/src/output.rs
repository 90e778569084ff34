//! Output files: CSV tables, the run manifest, and atomic publication.
//!
//! Every float is written with Rust's `Display`, which yields the shortest
//! decimal that parses back to the same `f64`; lines end in `\n`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::TempDir;

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

/// One CSV table held in memory until it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        writer.write_record(&self.header)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
            .map_err(|source| CliError::Csv {
                path: path.to_path_buf(),
                source,
            })
    }
}

/// Shortest round-trip decimal.
pub fn num(x: f64) -> String {
    x.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Manifest<C> {
    pub command: String,
    pub config: C,
    pub version: String,
    pub outputs: Vec<String>,
    pub master_seed: u64,
}

impl<C: Serialize> Manifest<C> {
    pub fn new(command: &str, config: C, master_seed: u64) -> Self {
        Self {
            command: command.to_owned(),
            config,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            outputs: Vec::new(),
            master_seed,
        }
    }
}

/// Files are written into a hidden staging directory inside the destination
/// and only moved into place by [`Staging::publish`]. If a command fails
/// first, the staging directory is removed and the destination is untouched.
pub struct Staging {
    dest: PathBuf,
    dir: TempDir,
    files: Vec<String>,
}

impl Staging {
    pub fn new(dest: &Path) -> Result<Self> {
        fs::create_dir_all(dest).map_err(|e| CliError::io(dest, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(dest)
            .map_err(|e| CliError::io(dest, e))?;
        Ok(Self {
            dest: dest.to_path_buf(),
            dir,
            files: Vec::new(),
        })
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        table.write(&self.dir.path().join(name))?;
        self.files.push(name.to_owned());
        Ok(())
    }

    /// Writes the manifest (listing every staged file plus itself), then
    /// moves everything into the destination.
    pub fn publish<C: Serialize>(mut self, mut manifest: Manifest<C>) -> Result<Vec<PathBuf>> {
        manifest.outputs = self.files.clone();
        manifest.outputs.push(MANIFEST.to_owned());
        let path = self.dir.path().join(MANIFEST);
        let mut text =
            serde_json::to_string_pretty(&manifest).map_err(|source| CliError::Json {
                path: path.clone(),
                source,
            })?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files.push(MANIFEST.to_owned());
        let mut published = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let to = self.dest.join(name);
            fs::rename(self.dir.path().join(name), &to).map_err(|e| CliError::io(&to, e))?;
            published.push(to);
        }
        Ok(published)
    }
}
