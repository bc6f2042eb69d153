//! `--config FILE` support.
//!
//! The file holds one `key = value` per line, keys spelled like the long
//! flags without dashes. `#` starts a comment. `key = true` turns a switch
//! on and `key = false` leaves it off; a key listed several times (such as
//! `grid`) is passed several times. The entries replace the `--config`
//! argument in place, so flags written after it win.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub fn expand(args: Vec<String>) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let path = if arg == "--config" {
            match iter.next() {
                Some(p) => p,
                None => bail!("--config needs a file path"),
            }
        } else if let Some(p) = arg.strip_prefix("--config=") {
            p.to_string()
        } else {
            out.push(arg);
            continue;
        };
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading config file {path}"))?;
        out.extend(parse(&text, Path::new(&path))?);
    }
    Ok(out)
}

pub fn parse(text: &str, path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key = value", path.display(), n + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.starts_with('-') {
            bail!("{}:{}: bad key {key:?}", path.display(), n + 1);
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}
