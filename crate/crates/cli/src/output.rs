//! Comma-separated output files, each headed by the hash of its run manifest.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Everything needed to rerun a command: feed it back through `--config`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub subcommand: String,
    /// Keyed by long flag name, sorted.
    pub params: Vec<(String, String)>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn text(&self) -> String {
        let mut s = String::from("# wrisk run manifest\n");
        let _ = writeln!(s, "subcommand = {}", self.subcommand);
        let _ = writeln!(s, "version = {VERSION}");
        let _ = writeln!(s, "outputs = {}", self.outputs.join(","));
        for (k, v) in &self.params {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.text().as_bytes()))
    }

    pub fn header(&self) -> String {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!(
            "# wrisk {VERSION} {} manifest sha256:{}\n# params: {}\n",
            self.subcommand,
            self.digest(),
            params.join(" ")
        )
    }
}

/// Rows of comma-separated fields under a column header.
#[derive(Debug, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut t = Self::default();
        t.text.push_str(&columns.join(","));
        t.text.push('\n');
        t
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for f in fields {
            if !first {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
            first = false;
        }
        self.text.push('\n');
    }

    /// Starts a new block with a `#` comment and a fresh column header.
    pub fn section(&mut self, title: &str, columns: &[&str]) {
        let _ = writeln!(self.text, "# {title}");
        self.text.push_str(&columns.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(wrap)?;
    }
    std::fs::write(path, contents).map_err(wrap)
}
