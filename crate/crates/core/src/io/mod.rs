//! Configuration input, tabular output and run manifests.
//!
//! Tables are comma-separated UTF-8 with `\n` line endings. Floats are written in
//! scientific notation with 17 significant digits, so they re-read bit-exactly.

pub mod cli;
mod config;
mod manifest;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use config::{parse_config, read_config, BlobSpec, RunConfig, POSITION_TOL};
pub use manifest::{sha256_file, OutputDigest, RunManifest, MANIFEST_FILE};

use crate::error::{Error, Result};

pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a header line and one line per row.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(io_error(path))?;
    let mut w = BufWriter::new(file);
    let mut emit = |line: String| w.write_all(line.as_bytes()).map_err(io_error(path));
    emit(format!("{}\n", header.join(",")))?;
    for row in rows {
        emit(format!("{}\n", row.join(",")))?;
    }
    w.flush().map_err(io_error(path))
}
