//! Artifact files in the output directory.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::{fmt_f64, to_json_pretty};

pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// File names written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        fs::write(self.path(name), to_json_pretty(value)?)?;
        self.written.push(name.into());
        Ok(())
    }

    pub fn with_writer(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        f(&mut w)?;
        w.flush()?;
        self.written.push(name.into());
        Ok(())
    }

    /// One line of comma-separated values.
    pub fn csv_line(&mut self, name: &str, values: &[f64]) -> Result<()> {
        self.with_writer(name, |w| {
            let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
            Ok(())
        })
    }

    pub fn csv_rows(
        &mut self,
        name: &str,
        header: &[String],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<()> {
        self.with_writer(name, |w| {
            writeln!(w, "{}", header.join(","))?;
            for r in rows {
                writeln!(w, "{}", r.join(","))?;
            }
            Ok(())
        })
    }
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Numeric CSV rows with a constant column count; a non-numeric first line
/// is taken as a header.
pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => {
                if rows.first().is_some_and(|f: &Vec<f64>| f.len() != r.len()) {
                    return Err(Error::Parse(format!("{}: line {} has {} fields", path.display(), i + 1, r.len())));
                }
                rows.push(r);
            }
            Err(_) if i == 0 => {}
            Err(e) => return Err(Error::Parse(format!("{}: line {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(rows)
}
