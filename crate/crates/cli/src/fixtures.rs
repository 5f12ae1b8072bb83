//! `run-all-fixtures`: every `fixture.json` under a directory lists
//! command lines and expectations on their output.

use std::path::Path;

use serde_json::Value;

use crate::{execute, Outcome};

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => elastica::scalar::parse_rational(s).map(|r| elastica::Scalar::to_f64(&r)),
        _ => None,
    }
}

fn csv_cell(text: &str, spec: &Value) -> Result<f64, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or(format!("no column {name}"));
    let (ni, pi) = (col("n")?, col("params")?);
    let want = spec["column"].as_str().ok_or("csv spec needs a column")?;
    let ci = col(want)?;
    let n = spec["n"].as_u64().ok_or("csv spec needs n")?.to_string();
    let params = spec["params"].as_str().unwrap_or("");
    for l in lines {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.get(ni) == Some(&n.as_str()) && cells.get(pi) == Some(&params) {
            return cells[ci].parse::<f64>().map_err(|e| e.to_string());
        }
    }
    Err(format!("no row n={n} params={params}"))
}

/// Checks one expectation; `Err` carries the reason.
fn expect(out: &Outcome, e: &Value) -> Result<(), String> {
    if let Some(code) = e.get("exit") {
        return if code.as_i64() == Some(out.code as i64) { Ok(()) } else { Err(format!("exit {} (expected {code})", out.code)) };
    }
    let got: Value = if let Some(spec) = e.get("csv") {
        Value::from(csv_cell(&out.text, spec)?)
    } else {
        let doc: Value = serde_json::from_str(&out.text).map_err(|err| format!("output is not JSON: {err}"))?;
        let ptr = e["pointer"].as_str().ok_or("expectation needs a pointer")?;
        doc.pointer(ptr).cloned().ok_or(format!("{ptr} missing"))?
    };
    if let Some(want) = e.get("equals") {
        return if &got == want { Ok(()) } else { Err(format!("got {got}, expected {want}")) };
    }
    let x = as_number(&got).ok_or(format!("{got} is not a number"))?;
    if let Some(min) = e.get("min").and_then(Value::as_f64) {
        return if x >= min { Ok(()) } else { Err(format!("got {x}, expected at least {min}")) };
    }
    let want = e["value"].as_f64().ok_or("expectation needs a value")?;
    let tol = e["tol"].as_f64().unwrap_or(0.0);
    if (x - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("got {x}, expected {want} within {tol}"))
    }
}

pub fn run_all(root: &Path) -> Outcome {
    let mut dirs: Vec<_> = match std::fs::read_dir(root) {
        Ok(rd) => rd.filter_map(|d| d.ok()).map(|d| d.path()).filter(|p| p.join("fixture.json").is_file()).collect(),
        Err(e) => return Outcome { code: 3, text: format!("{}: {e}\n", root.display()) },
    };
    dirs.sort();
    let mut text = String::new();
    let (mut passed, mut failed) = (0, 0);
    for dir in dirs {
        let name = dir.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
        let doc: Value = match std::fs::read_to_string(dir.join("fixture.json")).map_err(|e| e.to_string()).and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string())) {
            Ok(d) => d,
            Err(e) => {
                failed += 1;
                text.push_str(&format!("FAIL {name}: fixture.json: {e}\n"));
                continue;
            }
        };
        for (i, check) in doc["checks"].as_array().cloned().unwrap_or_default().iter().enumerate() {
            let args: Vec<String> = check["args"]
                .as_array()
                .map(|a| a.iter().filter_map(|x| x.as_str()).map(|s| {
                    if s.ends_with(".json") { dir.join(s).display().to_string() } else { s.to_string() }
                }).collect())
                .unwrap_or_default();
            let shown: Vec<&str> = check["args"].as_array().map(|a| a.iter().filter_map(|x| x.as_str()).collect()).unwrap_or_default();
            let out = execute(&args);
            let expects = check["expect"].as_array().cloned().unwrap_or_default();
            let mut problems: Vec<String> = expects.iter().filter_map(|e| expect(&out, e).err()).collect();
            if out.code != 0 && !expects.iter().any(|e| e.get("exit").is_some()) {
                problems.insert(0, format!("exit {}", out.code));
            }
            if problems.is_empty() {
                passed += 1;
                text.push_str(&format!("PASS {name}#{i}: {}\n", shown.join(" ")));
            } else {
                failed += 1;
                text.push_str(&format!("FAIL {name}#{i}: {}: {}\n", shown.join(" "), problems.join("; ")));
            }
        }
    }
    text.push_str(&format!("{passed} passed, {failed} failed\n"));
    Outcome { code: if failed == 0 { 0 } else { 1 }, text }
}
