//! Merges a TOML config file under the command line.
//!
//! Each subcommand reads the table of the same name, whose keys are long flag
//! names. A key is turned back into `--key value` and appended unless the
//! flag already appears on the command line, so explicit flags win and
//! unknown keys are rejected by the parser like any other unknown flag.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

/// Global options that take a value, as they may appear before the subcommand.
const GLOBAL_VALUED: &[&str] = &["--config", "--jobs", "-j"];

/// Path given with `--config`, if any.
pub fn config_path(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

fn subcommand(args: &[OsString]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if GLOBAL_VALUED.contains(&s.as_ref()) {
            it.next();
        } else if !s.starts_with('-') {
            return Some(s.into_owned());
        }
    }
    None
}

fn flag_present(args: &[OsString], flag: &str) -> bool {
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&format!("{flag}="))
    })
}

fn scalar(key: &str, v: &toml::Value) -> Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        other => bail!("config key {key:?}: unsupported value {other}"),
    })
}

/// Returns `args` with the config table for the chosen subcommand appended.
pub fn merge(args: Vec<OsString>, text: &str) -> Result<Vec<OsString>> {
    let doc: toml::Table = text.parse().context("config file is not valid TOML")?;
    let Some(sub) = subcommand(&args) else {
        return Ok(args);
    };
    let Some(table) = doc.get(&sub) else {
        return Ok(args);
    };
    let table = table
        .as_table()
        .with_context(|| format!("config entry [{sub}] must be a table"))?;
    let mut extra = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag_present(&args, &flag) {
            continue;
        }
        match value {
            toml::Value::Boolean(true) => extra.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone());
                    extra.push(scalar(key, item)?);
                }
            }
            v => {
                extra.push(flag);
                extra.push(scalar(key, v)?);
            }
        }
    }
    let mut out = args;
    out.extend(extra.into_iter().map(OsString::from));
    Ok(out)
}
