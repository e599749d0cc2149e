use std::io::Write;
use std::path::Path;
use std::time::{Duration, UNIX_EPOCH};

use serde_json::Value;

use crate::CliError;

pub fn git_describe() -> &'static str {
    env!("GAUSSGLASS_GIT_DESCRIBE")
}

/// RFC 3339 time from `SOURCE_DATE_EPOCH`, else the commit time of the build.
pub fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .unwrap_or_else(|| env!("GAUSSGLASS_COMMIT_TIME").parse().unwrap_or(0));
    humantime::format_rfc3339_seconds(UNIX_EPOCH + Duration::from_secs(secs)).to_string()
}

/// Formats a float so that `-0` prints as `0`.
pub fn num(x: f64) -> String {
    format!("{}", x + 0.0)
}

/// `key,value` rows of a JSON object, nested keys joined with `.`.
pub fn flatten_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, child) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, child, out);
                }
            }
            Value::Array(items) => {
                for (i, child) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), child, out);
                }
            }
            Value::String(s) => out.push_str(&format!("{prefix},{s}\n")),
            other => out.push_str(&format!("{prefix},{other}\n")),
        }
    }
    let mut out = String::from("key,value\n");
    walk("", v, &mut out);
    out
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn negative_zero_prints_as_zero() {
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(-0.25), "-0.25");
    }

    #[test]
    fn flattens_nested_records() {
        let v = json!({"b": {"x": 1, "y": [true, "s"]}, "a": 2.5});
        assert_eq!(flatten_csv(&v), "key,value\na,2.5\nb.x,1\nb.y.0,true\nb.y.1,s\n");
    }

    #[test]
    fn timestamp_follows_source_date_epoch() {
        // Only asserts the format; the variable may be set by the environment.
        let t = timestamp();
        assert!(t.ends_with('Z') && t.len() == 20, "{t}");
    }
}
