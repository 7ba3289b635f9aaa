use crate::commands::Failure;
use serde_json::Value;
use std::io::Write;
use std::path::Path;

/// Rewrites `-0.0` as `0.0` so that printed results do not depend on the
/// sign of a cancelled zero.
fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.as_f64() == Some(0.0) && n.is_f64() {
                *v = serde_json::json!(0.0);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(normalize),
        Value::Object(o) => o.values_mut().for_each(normalize),
        _ => {}
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display())))?;
            Ok(Box::new(std::io::BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn write_json(mut v: Value, path: Option<&Path>) -> Result<(), Failure> {
    normalize(&mut v);
    let mut w = sink(path)?;
    let text = serde_json::to_string_pretty(&v).map_err(|e| Failure::input(e.to_string()))?;
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| Failure::input(format!("write failed: {e}")))
}

/// CSV with a header row; non-finite cells are written as `inf`, `-inf`, `nan`.
pub fn write_csv(header: &[&str], rows: &[Vec<f64>], path: Option<&Path>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    let io = |e: csv::Error| Failure::input(format!("write failed: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| cell(x))).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::input(format!("write failed: {e}")))
}

fn cell(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 {
        "0".into()
    } else {
        serde_json::Number::from_f64(x).map_or_else(|| format!("{x}"), |n| n.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_is_normalised() {
        let mut v = serde_json::json!({"a": -0.0, "b": [-0.0, 1.5]});
        normalize(&mut v);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"a":0.0,"b":[0.0,1.5]}"#);
    }

    #[test]
    fn cells() {
        assert_eq!(cell(-0.0), "0");
        assert_eq!(cell(f64::INFINITY), "inf");
        assert_eq!(cell(0.25), "0.25");
        assert_eq!(cell(1.5e-16), "1.5e-16");
    }
}
