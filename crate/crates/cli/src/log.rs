use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{Map, Value};

/// Writes one JSON object per line to standard output.
pub fn event(level: &str, name: &str, fields: Value) {
    let mut obj = Map::new();
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    obj.insert("ts_ms".into(), ts.into());
    obj.insert("level".into(), level.into());
    obj.insert("event".into(), name.into());
    if let Value::Object(extra) = fields {
        obj.extend(extra);
    }
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", Value::Object(obj));
}

pub fn info(name: &str, fields: Value) {
    event("info", name, fields);
}

pub fn warn(name: &str, fields: Value) {
    event("warn", name, fields);
}
