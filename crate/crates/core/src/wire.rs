//! JSON shape of a result table, shared by the CLI's json output and the
//! HTTP service.
//!
//! ```json
//! {"columns":["p.name","p"],
//!  "rows":[["Jay",{"labels":["person"],"id":57,"properties":{"name":"Jay"}}]]}
//! ```
//!
//! Edges additionally carry `leaving` and `arriving` ids.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Number};
use thiserror::Error;

use crate::engine::{BindingTable, Datum, ElementValue};
use crate::types::Value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct WireResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<serde_json::Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etag: Option<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("row {row} has {found} cells, expected {expected}")]
    RowWidth {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("cannot decode cell: {0}")]
    BadCell(String),
}

fn value_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Null => serde_json::Value::Null,
        Value::Bool(b) => json!(b),
        Value::Int(i) => json!(i),
        Value::Float(x) => Number::from_f64(*x)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null),
        Value::Str(s) => json!(s),
    }
}

fn json_value(j: &serde_json::Value) -> Result<Value, WireError> {
    Ok(match j {
        serde_json::Value::Null => Value::Null,
        serde_json::Value::Bool(b) => Value::Bool(*b),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::Float(
                n.as_f64()
                    .ok_or_else(|| WireError::BadCell(n.to_string()))?,
            ),
        },
        serde_json::Value::String(s) => Value::Str(s.clone()),
        other => return Err(WireError::BadCell(other.to_string())),
    })
}

pub fn datum_json(d: &Datum) -> serde_json::Value {
    match d {
        Datum::Value(v) => value_json(v),
        Datum::Element(e) => {
            let mut obj = Map::new();
            obj.insert("labels".into(), json!(e.labels));
            obj.insert("id".into(), json!(e.id));
            let props: Map<String, serde_json::Value> = e
                .properties
                .iter()
                .map(|(k, v)| (k.clone(), value_json(v)))
                .collect();
            obj.insert("properties".into(), serde_json::Value::Object(props));
            if let Some((l, a)) = e.endpoints {
                obj.insert("leaving".into(), json!(l));
                obj.insert("arriving".into(), json!(a));
            }
            serde_json::Value::Object(obj)
        }
    }
}

fn json_datum(j: &serde_json::Value) -> Result<Datum, WireError> {
    let serde_json::Value::Object(obj) = j else {
        return json_value(j).map(Datum::Value);
    };
    let bad = || WireError::BadCell(j.to_string());
    let labels = obj
        .get("labels")
        .and_then(|l| l.as_array())
        .ok_or_else(bad)?
        .iter()
        .map(|l| l.as_str().map(str::to_string).ok_or_else(bad))
        .collect::<Result<Vec<_>, _>>()?;
    let id = obj.get("id").and_then(|i| i.as_i64()).ok_or_else(bad)?;
    let properties = obj
        .get("properties")
        .and_then(|p| p.as_object())
        .ok_or_else(bad)?
        .iter()
        .map(|(k, v)| Ok((k.clone(), json_value(v)?)))
        .collect::<Result<Vec<_>, WireError>>()?;
    let end = |k: &str| obj.get(k).and_then(|v| v.as_i64());
    let endpoints = match (end("leaving"), end("arriving")) {
        (Some(l), Some(a)) => Some((l, a)),
        (None, None) => None,
        _ => return Err(bad()),
    };
    Ok(Datum::Element(ElementValue {
        id,
        labels,
        properties,
        endpoints,
    }))
}

impl WireResult {
    pub fn from_table(table: &BindingTable) -> WireResult {
        WireResult {
            columns: table.columns.clone(),
            rows: table
                .rows
                .iter()
                .map(|r| r.iter().map(datum_json).collect())
                .collect(),
            etag: None,
        }
    }

    pub fn to_table(&self) -> Result<BindingTable, WireError> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.columns.len() {
                return Err(WireError::RowWidth {
                    row: i,
                    found: r.len(),
                    expected: self.columns.len(),
                });
            }
            rows.push(r.iter().map(json_datum).collect::<Result<_, _>>()?);
        }
        Ok(BindingTable {
            columns: self.columns.clone(),
            rows,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("wire results always serialize")
    }
}
