//! `key=value` config files merged under the command-line flags.
//!
//! Each key names a long flag of the chosen subcommand (`nfe=10`, `budget=5,10`,
//! `afs=true`). Entries are appended to the argument list only when the flag is
//! not already given, so flags always win.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Switches take `true`/`false` in the file rather than a value.
const SWITCHES: [&str; 2] = ["afs", "dump-costs"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {raw:?}", n + 1);
        };
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", n + 1);
        }
        if entries.iter().any(|(seen, _)| *seen == key) {
            bail!("line {}: duplicate key {key:?}", n + 1);
        }
        entries.push((key, v.trim().to_string()));
    }
    Ok(entries)
}

fn given(args: &[String], key: &str) -> bool {
    let flag = format!("--{key}");
    let joined = format!("{flag}=");
    args.iter().any(|a| *a == flag || a.starts_with(&joined))
}

/// Appends the file's entries that the command line leaves unset.
pub fn merge(args: &[String], entries: &[(String, String)]) -> Result<Vec<String>> {
    let mut out = args.to_vec();
    for (key, value) in entries {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        if given(args, key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" | "1" | "yes" => out.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                other => bail!("{key} expects true or false, got {other:?}"),
            }
        } else {
            out.push(format!("--{key}={value}"));
        }
    }
    Ok(out)
}

/// Finds `--config PATH` (or `--config=PATH`), removes it, and merges the file.
pub fn expand(args: Vec<String>) -> Result<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = Some(it.next().context("--config needs a file path")?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(Path::new(&path)).with_context(|| format!("cannot read config file {path}"))?;
    let entries = parse(&text).with_context(|| format!("in config file {path}"))?;
    merge(&rest, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flags_win_over_the_file() {
        let entries = parse("nfe = 10\nseed=3 # comment\n\nafs=true\ndump_costs=false\n").unwrap();
        let merged = merge(&args(&["trajlab", "sample", "--nfe", "4"]), &entries).unwrap();
        assert_eq!(merged, args(&["trajlab", "sample", "--nfe", "4", "--seed=3", "--afs"]));
        let merged = merge(&args(&["trajlab", "sample", "--seed=9"]), &entries).unwrap();
        assert!(merged.contains(&"--nfe=10".to_string()));
        assert!(!merged.contains(&"--seed=3".to_string()));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(parse("nfe 10").is_err());
        assert!(parse("nfe=1\nnfe=2").is_err());
        assert!(parse("=4").is_err());
        assert!(merge(&args(&["x"]), &parse("afs=maybe").unwrap()).is_err());
        assert!(merge(&args(&["x"]), &parse("config=other").unwrap()).is_err());
    }
}
