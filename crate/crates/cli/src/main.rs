//! `wrisk`: command-line front end for the worst-case model-risk library.
//!
//! Exit codes: 0 on success, 1 when an output cannot be written or a golden
//! comparison fails, 2 on invalid input, 3 when the requested worst case does
//! not exist numerically.

mod args;
mod commands;
mod config;
mod error;
mod output;
mod repro;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches};

use args::{Cli, Command};
use error::{CliError, Result};
use output::{write_file, Manifest};

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("WRISK_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "WRISK_THREADS must be a positive integer, got `{v}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

/// Every argument that has a value, defaults included, keyed by long flag
/// name. `--config` is left out: the manifest replaces it.
fn collect_params(cmd: &clap::Command, m: &ArgMatches, skip: &[&str]) -> Vec<(String, String)> {
    let mut params = Vec::new();
    for arg in cmd.get_arguments() {
        let id = arg.get_id().as_str();
        if id == "config" || skip.contains(&id) {
            continue;
        }
        let Ok(Some(raw)) = m.try_get_raw(id) else {
            continue;
        };
        let value: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        let key = arg.get_long().unwrap_or(id).to_string();
        params.push((key, value.join(",")));
    }
    params.sort();
    params
}

fn run(argv: Vec<OsString>) -> Result<()> {
    configure_threads()?;
    let argv = config::expand(argv)?;
    let mut cmd = Cli::command();
    let matches = cmd
        .try_get_matches_from_mut(&argv)
        .unwrap_or_else(|e| e.exit());
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let name = cli.command.name();
    let sub_matches = matches
        .subcommand_matches(name)
        .expect("subcommand was parsed");
    let sub_cmd = cmd.find_subcommand(name).expect("subcommand exists");

    if let Command::Repro(a) = &cli.command {
        let params = collect_params(sub_cmd, sub_matches, &["out_dir", "check"]);
        return repro::run(a, params);
    }

    let (body, out): (String, &PathBuf) = match &cli.command {
        Command::Discrete(a) => (commands::discrete(a)?, &a.out),
        Command::Density(a) => (commands::density(a)?, &a.out),
        Command::Gaussian(a) => (commands::gaussian(a)?, &a.out),
        Command::Frontier(a) => (commands::frontier(a)?, &a.out),
        Command::Hedge(a) => (commands::hedge(a)?, &a.out),
        Command::Repro(_) => unreachable!("handled above"),
    };
    let manifest = Manifest {
        subcommand: name.to_string(),
        params: collect_params(sub_cmd, sub_matches, &[]),
        outputs: vec![out.display().to_string()],
    };
    write_file(out, &(manifest.header() + &body))?;
    let mut manifest_path = out.clone().into_os_string();
    manifest_path.push(".manifest");
    write_file(&PathBuf::from(manifest_path), &manifest.text())
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
