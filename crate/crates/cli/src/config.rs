//! Config files as default flags.
//!
//! Top-level keys become global flags; a table named after a subcommand
//! supplies that subcommand's flags:
//!
//! ```toml
//! log-level = "info"
//!
//! [eval]
//! subset = "segmented"
//! strict-length = true
//! ```
//!
//! The generated flags are placed before the user's own, and every option
//! overrides itself, so the command line always wins.

use std::ffi::OsString;
use std::path::PathBuf;

use toml::{Table, Value};

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut iter = argv.iter().skip(1);
    while let Some(arg) = iter.next() {
        let arg = arg.to_string_lossy();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            return iter.next().map(PathBuf::from);
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

fn flags(table: &Table, out: &mut Vec<OsString>, subcommands: &[String]) -> Result<(), String> {
    for (key, value) in table {
        if matches!(value, Value::Table(_)) {
            if !subcommands.contains(key) {
                return Err(format!("config: unknown section [{key}]"));
            }
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let values = match value {
            Value::Array(items) => items.clone(),
            other => vec![other.clone()],
        };
        for v in values {
            match v {
                Value::Boolean(true) => out.push(flag.clone().into()),
                Value::Boolean(false) => {}
                Value::String(s) => {
                    out.push(flag.clone().into());
                    out.push(s.into());
                }
                Value::Integer(_) | Value::Float(_) => {
                    out.push(flag.clone().into());
                    out.push(v.to_string().into());
                }
                _ => return Err(format!("config: unsupported value for {key}")),
            }
        }
    }
    Ok(())
}

/// Splices config-file defaults into `argv`.
pub fn inject(argv: Vec<OsString>, subcommands: &[String]) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("config {}: {e}", path.display()))?;
    let table: Table = text.parse().map_err(|e| format!("config {}: {e}", path.display()))?;

    let mut global = Vec::new();
    flags(&table, &mut global, subcommands)?;
    let position = argv.iter().position(|a| subcommands.iter().any(|s| a.to_string_lossy() == *s));
    let mut local = Vec::new();
    if let Some(i) = position {
        let name = argv[i].to_string_lossy().into_owned();
        if let Some(Value::Table(section)) = table.get(&name) {
            flags(section, &mut local, subcommands)?;
        }
    }

    let mut out = Vec::with_capacity(argv.len() + global.len() + local.len());
    out.push(argv[0].clone());
    out.extend(global);
    match position {
        Some(i) => {
            out.extend(argv[1..=i].iter().cloned());
            out.extend(local);
            out.extend(argv[i + 1..].iter().cloned());
        }
        None => out.extend(argv[1..].iter().cloned()),
    }
    Ok(out)
}
