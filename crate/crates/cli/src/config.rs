//! `--config FILE`: flat `key = value` lines, one flag per line, keyed by the
//! long flag name. The entries are appended after the command line, so they
//! override flags given directly. A run manifest is a valid config file.

use std::ffi::OsString;
use std::path::PathBuf;

use crate::error::{read_text, CliError, Result};

/// Keys a manifest carries that are not flags.
const INFORMATIONAL: [&str; 2] = ["version", "outputs"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`", i + 1))
        })?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(entries)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(tok) = it.next() {
        let Some(s) = tok.to_str() else { continue };
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(rest) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(rest));
        }
    }
    found
}

/// Index of the first positional argument after the subcommand. Every flag
/// of every subcommand takes a value.
fn positional_index(argv: &[OsString]) -> Option<usize> {
    let mut i = 2;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if s.starts_with("--") {
            i += if s.contains('=') { 1 } else { 2 };
        } else {
            return Some(i);
        }
    }
    None
}

/// Returns `argv` with the config file's entries applied.
pub fn expand(mut argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let entries = parse(&read_text(&path)?)?;
    let sub = argv.get(1).map(|s| s.to_string_lossy().into_owned());
    for (key, value) in entries {
        if INFORMATIONAL.contains(&key.as_str()) {
            continue;
        }
        if key == "subcommand" {
            if sub.as_deref() != Some(value.as_str()) {
                return Err(CliError::Usage(format!(
                    "{} is a config for `{value}`, not `{}`",
                    path.display(),
                    sub.unwrap_or_default()
                )));
            }
            continue;
        }
        if key == "target" {
            match positional_index(&argv) {
                Some(i) => argv[i] = value.into(),
                None => argv.push(value.into()),
            }
            continue;
        }
        argv.push(format!("--{key}={value}").into());
    }
    Ok(argv)
}
