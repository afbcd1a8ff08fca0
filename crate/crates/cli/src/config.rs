//! `key = value` scenario files and their merge with command-line flags.

use std::ffi::OsString;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config {path}, line {line}: expected `key = value`, found {text:?}")]
    Syntax { path: String, line: usize, text: String },
}

/// Reads a scenario file: one `key = value` per line, `#` starts a comment.
/// Keys are flag names without the leading dashes (`alpha`, `init`, …);
/// `true`/`false` switch boolean flags on or off.
pub fn read(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
    parse(&text, &path.display().to_string())
}

pub fn parse(text: &str, origin: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .filter(|(k, _)| !k.is_empty())
            .ok_or_else(|| ConfigError::Syntax { path: origin.to_string(), line: i + 1, text: raw.to_string() })?;
        out.push((key.trim_start_matches('-').to_string(), value.to_string()));
    }
    Ok(out)
}

/// Builds `program subcommand <file flags> <command-line flags>`; later flags
/// override earlier ones, so the command line wins over the file.
pub fn merge(program: OsString, subcommand: OsString, file: &[(String, String)], rest: &[OsString]) -> Vec<OsString> {
    let mut argv = vec![program, subcommand];
    for (key, value) in file {
        match value.as_str() {
            "true" => argv.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                argv.push(format!("--{key}").into());
                argv.push(value.into());
            }
        }
    }
    argv.extend(rest.iter().cloned());
    argv
}

/// Finds the value of `--config` (as `--config path` or `--config=path`).
pub fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}
