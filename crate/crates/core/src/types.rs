use std::cmp::Ordering;
use std::fmt;

use crate::frontend::{Literal, TypeTag};

/// Identity of every committed object: the byte offset of its record in the log.
///
/// Objects staged in an uncommitted transaction carry a provisional position
/// (an index into the transaction's record run, stored on the negative side).
/// Provisional positions order after all committed ones, by index, so a
/// transaction's row order is unchanged when its records are committed.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Position(i64);

impl Position {
    /// The built-in home graph `/`. No record lives at offset 0 (the file magic does).
    pub const HOME_GRAPH: Position = Position(0);

    pub fn committed(offset: u64) -> Self {
        Position(i64::try_from(offset).expect("log offset exceeds i64"))
    }

    pub fn provisional(index: usize) -> Self {
        Position(-(index as i64) - 1)
    }

    pub fn is_provisional(self) -> bool {
        self.0 < 0
    }

    pub fn offset(self) -> Option<u64> {
        (self.0 >= 0).then_some(self.0 as u64)
    }

    pub fn provisional_index(self) -> Option<usize> {
        (self.0 < 0).then(|| (-(self.0 + 1)) as usize)
    }

    /// Value of the `@id` pseudo-property.
    pub fn id(self) -> i64 {
        self.0
    }
}

impl Ord for Position {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.provisional_index(), other.provisional_index()) {
            (None, None) => self.0.cmp(&other.0),
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => a.cmp(&b),
        }
    }
}

impl PartialOrd for Position {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.provisional_index() {
            Some(i) => write!(f, "Position(~{i})"),
            None => write!(f, "Position({})", self.0),
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A property value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Value {
    pub fn tag(&self) -> Option<TypeTag> {
        match self {
            Value::Null => None,
            Value::Bool(_) => Some(TypeTag::Bool),
            Value::Int(_) => Some(TypeTag::Int),
            Value::Float(_) => Some(TypeTag::Float),
            Value::Str(_) => Some(TypeTag::String),
        }
    }

    /// Query equality: same type and value. Int and float never match; null matches nothing.
    pub fn matches(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a == b,
            (Value::Str(a), Value::Str(b)) => a == b,
            _ => false,
        }
    }
}

impl From<&Literal> for Value {
    fn from(lit: &Literal) -> Self {
        match lit {
            Literal::Null => Value::Null,
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(i) => Value::Int(*i),
            Literal::Float(x) => Value::Float(*x),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }
}

impl fmt::Display for Value {
    /// GQL literal syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{}", Literal::Float(*x)),
            Value::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}
