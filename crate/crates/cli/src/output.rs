use std::fmt::Display;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Collects output files for one run and writes the manifest last.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
    notes: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes a comma-delimited table with a header row.
    pub fn table<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: Display,
    {
        let path = self.path(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Two-column `key,value` table.
    pub fn key_values(&mut self, name: &str, pairs: &[(String, String)]) -> Result<()> {
        self.table(
            name,
            &["key", "value"],
            pairs.iter().map(|(k, v)| [k.as_str(), v.as_str()]),
        )
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn finish<A: Serialize, P: Serialize>(
        self,
        command: &str,
        args: &A,
        config: &RunConfig,
        params: &P,
    ) -> Result<()> {
        let manifest = Manifest {
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool: "mmm",
            version: env!("CARGO_PKG_VERSION"),
            command,
            args,
            config,
            params,
            outputs: &self.written,
            notes: &self.notes,
        };
        let path = self.path("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a, A, P> {
    created_unix: u64,
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    args: &'a A,
    config: &'a RunConfig,
    params: &'a P,
    outputs: &'a [String],
    notes: &'a [String],
}

pub fn print_pairs(pairs: &[(String, String)]) {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in pairs {
        println!("{k:<width$}  {v}");
    }
}
