//! `--config` files: `key = value` lines whose keys are long flag names.
//! Their flags are spliced in right after the subcommand name, so anything
//! typed on the command line comes later and overrides them.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i + 1, line))
        })
        .map(|(no, line)| {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {no}: expected `key = value`"))?;
            let v = v.trim().trim_matches('"');
            Ok((k.trim().replace('_', "-"), v.to_string()))
        })
        .collect()
}

/// Return `argv` with the config file's flags inserted after the subcommand.
pub fn expand_args(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let entries = parse_config(&text)?;

    let root = Cli::command();
    let Some((pos, sub)) = argv.iter().enumerate().skip(1).find_map(|(i, a)| {
        root.find_subcommand(a.to_string_lossy().as_ref())
            .map(|s| (i, s.clone()))
    }) else {
        return Ok(argv);
    };

    let mut spliced = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| format!("unknown config key `{key}` for `{}`", sub.get_name()))?;
        if key == "config" {
            continue;
        }
        let flag = format!("--{key}");
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" => spliced.push(flag.into()),
                "false" => {}
                _ => return Err(format!("config key `{key}` takes true or false")),
            }
        } else {
            spliced.push(flag.into());
            spliced.push(value.into());
        }
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, spliced);
    Ok(out)
}
