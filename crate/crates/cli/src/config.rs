//! `--config FILE` support: each `key=value` line becomes `--key=value` for
//! the chosen subcommand unless the command line already sets that key.
//! Blank lines and lines starting with `#` are ignored.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{ArgAction, CommandFactory};

use crate::{Cli, CliError};

pub fn merge(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv)? else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let root = Cli::command();
    let Some(sub) = argv
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find_map(|a| root.find_subcommand(a))
    else {
        return Ok(argv);
    };
    let given = |key: &str| {
        argv.iter().filter_map(|a| a.to_str()).any(|a| {
            a.strip_prefix("--")
                .and_then(|rest| rest.strip_prefix(key))
                .is_some_and(|tail| tail.is_empty() || tail.starts_with('='))
        })
    };

    let mut extra = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| CliError::Usage(format!("{}:{}: {msg}", path.display(), lineno + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, found {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            return Err(bad("config files cannot include other config files".into()));
        }
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key))
            .ok_or_else(|| bad(format!("unknown option {key:?} for '{}'", sub.get_name())))?;
        if given(key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                "true" | "yes" | "1" => extra.push(OsString::from(format!("--{key}"))),
                "false" | "no" | "0" => {}
                _ => return Err(bad(format!("{key} expects true or false, found {value:?}"))),
            },
            _ => extra.push(OsString::from(format!("--{key}={value}"))),
        }
    }
    argv.extend(extra);
    Ok(argv)
}

fn config_path(argv: &[OsString]) -> Result<Option<PathBuf>, CliError> {
    let mut iter = argv.iter().skip(1);
    while let Some(arg) = iter.next() {
        let Some(s) = arg.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            return match iter.next() {
                Some(p) => Ok(Some(PathBuf::from(p))),
                None => Err(CliError::Usage("--config requires a file name".into())),
            };
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
    }
    Ok(None)
}
