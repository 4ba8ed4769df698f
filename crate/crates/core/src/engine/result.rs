use std::fmt::{self, Display, Formatter};

use crate::types::{Position, Value};

use super::state::Element;

/// A node or edge as it appears in a result.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementValue {
    /// The `@id` pseudo-property.
    pub id: i64,
    pub labels: Vec<String>,
    /// Sorted by name.
    pub properties: Vec<(String, Value)>,
    /// `(leaving, arriving)` ids for edges.
    pub endpoints: Option<(i64, i64)>,
}

impl ElementValue {
    pub fn from_element(el: &Element) -> Self {
        ElementValue {
            id: el.pos.id(),
            labels: el.labels.clone(),
            properties: el.props.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            endpoints: el.endpoints.map(|(l, a)| (l.id(), a.id())),
        }
    }
}

impl Display for ElementValue {
    /// `(:person:account @42 {name: 'Jay'})` for nodes, `[:transfer @90 42->57 {..}]` for edges.
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let (open, close) = if self.endpoints.is_some() {
            ('[', ']')
        } else {
            ('(', ')')
        };
        write!(f, "{open}")?;
        for l in &self.labels {
            write!(f, ":{l}")?;
        }
        write!(f, " @{}", self.id)?;
        if let Some((l, a)) = self.endpoints {
            write!(f, " {l}->{a}")?;
        }
        if !self.properties.is_empty() {
            f.write_str(" {")?;
            for (i, (k, v)) in self.properties.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{k}: {v}")?;
            }
            f.write_str("}")?;
        }
        write!(f, "{close}")
    }
}

/// One cell of a result row.
#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Value(Value),
    Element(ElementValue),
}

impl Display for Datum {
    /// Table rendering: strings bare, everything else in literal syntax.
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Value(Value::Str(s)) => f.write_str(s),
            Datum::Value(v) => write!(f, "{v}"),
            Datum::Element(e) => write!(f, "{e}"),
        }
    }
}

/// Result of a RETURN-bearing statement.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BindingTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Datum>>,
}

impl BindingTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Cells of the named column.
    pub fn column(&self, name: &str) -> Option<Vec<&Datum>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Rewrites element ids, edge endpoints and the integer cells of
    /// `id_columns` through `f`.
    pub fn map_ids(&mut self, id_columns: &[usize], f: impl Fn(i64) -> i64) {
        for row in &mut self.rows {
            for (i, cell) in row.iter_mut().enumerate() {
                match cell {
                    Datum::Element(e) => {
                        e.id = f(e.id);
                        if let Some((l, a)) = &mut e.endpoints {
                            *l = f(*l);
                            *a = f(*a);
                        }
                    }
                    Datum::Value(Value::Int(v)) if id_columns.contains(&i) => *v = f(*v),
                    Datum::Value(_) => {}
                }
            }
        }
    }
}

/// Internal binding row: element positions by slot.
pub(crate) type Row = Vec<Position>;
