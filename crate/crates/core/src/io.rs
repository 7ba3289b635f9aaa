//! JSON formats for operators, states, joint distributions and channels.
//!
//! Matrices are nested arrays of `[re, im]` pairs (plain numbers are read
//! as real entries); states add an optional `"dims": [dA, dB]`. Infinite
//! values are written as the string `"inf"`.

use crate::error::{Error, Result};
use crate::operator::{BipartiteState, CMatrix, DensityMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};

pub fn serialize_f64_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn serialize_vec_f64_or_inf<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&F64OrInf(*x))?;
    }
    seq.end()
}

/// Wrapper that serialises non-finite values as strings.
#[derive(Clone, Copy, Debug)]
pub struct F64OrInf(pub f64);

impl Serialize for F64OrInf {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_f64_or_inf(&self.0, s)
    }
}

pub fn f64_or_inf_json(v: f64) -> Value {
    serde_json::to_value(F64OrInf(v)).expect("scalar serialises")
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    Complex([f64; 2]),
    Real(f64),
}

#[derive(Clone, Debug, Deserialize)]
struct MatrixDoc {
    #[serde(default)]
    dims: Option<Vec<usize>>,
    matrix: Vec<Vec<Entry>>,
}

pub(crate) fn matrix_from_rows(rows: &[Vec<Complex64>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("matrix must be square and non-empty".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn entries_to_matrix(rows: &[Vec<Entry>]) -> Result<CMatrix> {
    let rows: Vec<Vec<Complex64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|e| match e {
                    Entry::Complex([re, im]) => Complex64::new(*re, *im),
                    Entry::Real(re) => Complex64::new(*re, 0.0),
                })
                .collect()
        })
        .collect();
    matrix_from_rows(&rows)
}

pub fn matrix_from_value(v: &Value) -> Result<CMatrix> {
    let rows: Vec<Vec<Entry>> = serde_json::from_value(v.clone())?;
    entries_to_matrix(&rows)
}

/// Parses `{"dims": [..]?, "matrix": [[[re, im], ..], ..]}`.
pub fn parse_matrix(text: &str) -> Result<(CMatrix, Option<Vec<usize>>)> {
    let doc: MatrixDoc = serde_json::from_str(text)?;
    Ok((entries_to_matrix(&doc.matrix)?, doc.dims))
}

/// Parses a bipartite state; without `dims` the dimension must be a square.
pub fn parse_state(text: &str) -> Result<BipartiteState> {
    let (m, dims) = parse_matrix(text)?;
    let (da, db) = match dims.as_deref() {
        Some([a, b]) => (*a, *b),
        Some(other) => return Err(Error::InvalidInput(format!("dims must have two entries, got {other:?}"))),
        None => {
            let d = (m.nrows() as f64).sqrt().round() as usize;
            if d * d != m.nrows() {
                return Err(Error::InvalidInput(format!("cannot infer dims for dimension {}", m.nrows())));
            }
            (d, d)
        }
    };
    BipartiteState::from_matrix(m, da, db)
}

pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

pub fn state_json(s: &BipartiteState) -> Value {
    json!({ "dims": [s.da, s.db], "matrix": matrix_json(s.matrix()) })
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_json(self.matrix()).serialize(s)
    }
}

/// Reads a probability table from `{"pxy": [[..]]}`; a flat `{"p": [..]}`
/// is read as a single-row table.
pub fn parse_table(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let v: Value = serde_json::from_str(text)?;
    if let Some(rows) = v.get("pxy") {
        let rows: Vec<Vec<f64>> = serde_json::from_value(rows.clone())?;
        let ny = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch("pxy must be a non-empty rectangular table".into()));
        }
        return Ok((rows.len(), ny, rows.concat()));
    }
    if let Some(p) = v.get("p") {
        let p: Vec<f64> = serde_json::from_value(p.clone())?;
        return Ok((1, p.len(), p));
    }
    Err(Error::InvalidInput("expected a \"pxy\" or \"p\" field".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_round_trip() {
        let text = r#"{"dims":[2,2],"matrix":[[[0.5,0],[0,0],[0,0],[0.5,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0.5,0],[0,0],[0,0],[0.5,0]]]}"#;
        let s = parse_state(text).unwrap();
        let again = parse_state(&state_json(&s).to_string()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn dims_inferred_or_rejected() {
        let text = r#"{"matrix":[[1,0],[0,0]]}"#;
        assert!(parse_state(text).is_err());
        let text = r#"{"matrix":[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#;
        let s = parse_state(text).unwrap();
        assert_eq!((s.da, s.db), (2, 2));
    }

    #[test]
    fn infinity_is_a_string() {
        assert_eq!(f64_or_inf_json(f64::INFINITY), json!("inf"));
        assert_eq!(f64_or_inf_json(0.5), json!(0.5));
    }

    #[test]
    fn tables() {
        assert_eq!(parse_table(r#"{"pxy":[[0.5,0],[0,0.5]]}"#).unwrap(), (2, 2, vec![0.5, 0.0, 0.0, 0.5]));
        assert_eq!(parse_table(r#"{"p":[0.9,0.1]}"#).unwrap(), (1, 2, vec![0.9, 0.1]));
        assert!(parse_table(r#"{"pxy":[[0.5],[0.2,0.3]]}"#).is_err());
    }
}
