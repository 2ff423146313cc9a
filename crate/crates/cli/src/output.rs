use std::io::Write;
use std::path::Path;

use fracpoin::Result;
use serde_json::{json, Map, Value};

/// JSON document whose first key is the header with command and seed.
pub fn json_document(command: &str, seed: u64, body: Value) -> String {
    let mut doc = Map::new();
    doc.insert("header".into(), json!({ "command": command, "seed": seed }));
    if let Value::Object(fields) = body {
        doc.extend(fields);
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    text.push('\n');
    text
}

/// Comment line written before the CSV column header.
pub fn csv_preamble(command: &str, seed: u64) -> String {
    format!("# command={command} seed={seed}\n")
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}
