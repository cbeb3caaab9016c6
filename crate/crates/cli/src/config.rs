//! Flat `key = value` run configuration.
//!
//! Keys are long flag names without the leading dashes. A config file is
//! expanded into flags placed before the command-line flags, so anything
//! given on the command line wins.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Syntax(String),
}

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`", lineno + 1));
        };
        let key = key.trim();
        if key.is_empty() || key.starts_with('-') || key.contains(char::is_whitespace) {
            return Err(format!("line {}: bad key `{key}`", lineno + 1));
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn to_flags(entries: &[(String, String)]) -> Vec<OsString> {
    let mut flags = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                flags.push(format!("--{key}").into());
                flags.push(value.into());
            }
        }
    }
    flags
}

/// Find `--config <path>` / `--config=<path>` in `args`, drop it, and splice
/// the file's flags in right after the subcommand name (`args[1]`).
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, ConfigError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy().into_owned();
        if text == "--config" {
            match iter.next() {
                Some(p) => path = Some(p),
                None => return Err(ConfigError::Syntax("--config needs a path".into())),
            }
        } else if let Some(p) = text.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let entries =
        parse(&text).map_err(|e| ConfigError::Syntax(format!("{}: {e}", path.display())))?;
    let split = rest.len().min(2);
    let mut out: Vec<OsString> = rest[..split].to_vec();
    out.extend(to_flags(&entries));
    out.extend_from_slice(&rest[split..]);
    Ok(out)
}
