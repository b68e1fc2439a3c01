//! `--config file.json`: a JSON object whose keys are long flag names.
//! The entries are spliced in front of the command-line flags, so explicit
//! flags win.

use std::ffi::OsString;

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Returns `argv` with every `--config PATH` replaced by the flags it holds.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config=")) else {
        return Ok(argv);
    };
    let arg = argv[pos].to_string_lossy().into_owned();
    let (path, consumed) = match arg.strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => match argv.get(pos + 1) {
            Some(p) => (p.to_string_lossy().into_owned(), 2),
            None => bail!("--config needs a path"),
        },
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {path}"))?;
    let flags = to_flags(&doc).with_context(|| format!("config {path}"))?;

    // after the subcommand name, before everything the user typed
    let mut out: Vec<OsString> = Vec::with_capacity(argv.len() + flags.len());
    let sub = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|i| i + 1);
    for (i, a) in argv.iter().enumerate() {
        if i >= pos && i < pos + consumed {
            continue;
        }
        out.push(a.clone());
        if Some(i) == sub {
            out.extend(flags.iter().map(OsString::from));
        }
    }
    if sub.is_none() {
        bail!("--config needs a subcommand");
    }
    Ok(out)
}

fn to_flags(doc: &Value) -> Result<Vec<String>> {
    let Value::Object(map) = doc else {
        bail!("expected a JSON object of flag names");
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                if key == "param" {
                    for p in parts {
                        out.push(flag.clone());
                        out.push(p);
                    }
                } else {
                    out.push(flag);
                    out.push(parts.join(","));
                }
            }
            Value::Object(_) if key == "system" => {
                out.push(flag);
                out.push(v.to_string());
            }
            other => {
                out.push(flag);
                out.push(scalar(other)?);
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => bail!("unsupported config value {other}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_are_spliced_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"energy": 1, "hbars": [0.1, 0.05], "emit_plot": true, "expect": null}"#).unwrap();
        let argv = os(&["isoperiod", "diffspec", "--config", path.to_str().unwrap(), "--c", "1"]);
        let out: Vec<String> = expand(argv).unwrap().iter().map(|s| s.to_string_lossy().into_owned()).collect();
        assert_eq!(
            out,
            ["isoperiod", "diffspec", "--emit-plot", "--energy", "1", "--hbars", "0.1,0.05", "--c", "1"]
        );
    }

    #[test]
    fn missing_or_bad_config() {
        assert!(expand(os(&["isoperiod", "survey", "--config"])).is_err());
        assert!(expand(os(&["isoperiod", "survey", "--config", "/nonexistent.json"])).is_err());
        assert!(to_flags(&serde_json::json!([1, 2])).is_err());
    }
}
