use std::fs;

use serde_json::Value;

const SUBCOMMANDS: &[&str] = &[
    "aif", "gen", "weights", "surface", "panorama", "phantom", "map", "fpc", "schedule", "recover",
];

/// Replaces `--config <json>` by the flags it holds. Flags given explicitly on
/// the command line win over the file.
pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => {
            let p = p.to_string();
            args.remove(pos);
            p
        }
        None => {
            if pos + 1 >= args.len() {
                return Err("--config needs a file argument".into());
            }
            args.remove(pos);
            args.remove(pos)
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let Value::Object(map) = value else {
        return Err(format!("config {path}: expected a JSON object of flag values"));
    };

    let explicit: Vec<String> = args
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let mut injected = Vec::new();
    for (key, value) in map {
        let flag = key.replace('_', "-");
        if explicit.contains(&flag) {
            continue;
        }
        let text = match value {
            Value::Bool(true) => {
                injected.push(format!("--{flag}"));
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            Value::Object(_) => return Err(format!("config {path}: flag '{key}' has an object value")),
        };
        injected.push(format!("--{flag}"));
        injected.push(text);
    }

    let mut at = 1;
    while at < args.len() && SUBCOMMANDS.contains(&args[at].as_str()) {
        at += 1;
    }
    args.splice(at..at, injected);
    Ok(args)
}
