use crate::frontend::{CatalogPath, TypeTag};
use crate::types::{Position, Value};

/// Kind byte written in each record frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum RecordKind {
    TxnBegin = 1,
    TxnCommit = 2,
    SchemaDef = 3,
    GraphTypeDef = 4,
    NodeTypeDef = 5,
    EdgeTypeDef = 6,
    PropertyDef = 7,
    GraphDef = 8,
    Node = 9,
    Edge = 10,
    Update = 11,
    Delete = 12,
    SubProperty = 13,
}

impl RecordKind {
    pub fn from_byte(b: u8) -> Option<RecordKind> {
        use RecordKind::*;
        Some(match b {
            1 => TxnBegin,
            2 => TxnCommit,
            3 => SchemaDef,
            4 => GraphTypeDef,
            5 => NodeTypeDef,
            6 => EdgeTypeDef,
            7 => PropertyDef,
            8 => GraphDef,
            9 => Node,
            10 => Edge,
            11 => Update,
            12 => Delete,
            13 => SubProperty,
            _ => return None,
        })
    }
}

/// One entry of the transaction log. Other objects are referenced by
/// [`Position`]; within an uncommitted run those are provisional indices.
#[derive(Debug, Clone, PartialEq)]
pub enum LogRecord {
    TxnBegin {
        txn_id: u64,
        user: String,
    },
    TxnCommit {
        txn_id: u64,
    },
    SchemaDef {
        path: CatalogPath,
    },
    GraphTypeDef {
        path: CatalogPath,
    },
    NodeTypeDef {
        label: String,
        quoted: bool,
        graph_type: Option<Position>,
        origin_graph: Position,
        singleton: bool,
    },
    EdgeTypeDef {
        label: String,
        quoted: bool,
        graph_type: Option<Position>,
        origin_graph: Position,
        /// Node type positions of (source, target); `None` accepts any endpoints.
        connecting: Option<(Position, Position)>,
    },
    PropertyDef {
        owner: Position,
        name: String,
        quoted: bool,
        tag: TypeTag,
    },
    GraphDef {
        path: CatalogPath,
        graph_type: Option<Position>,
    },
    Node {
        graph: Position,
        types: Vec<Position>,
        props: Vec<(Position, Value)>,
    },
    Edge {
        graph: Position,
        types: Vec<Position>,
        leaving: Position,
        arriving: Position,
        props: Vec<(Position, Value)>,
    },
    Update {
        element: Position,
        set: Vec<(Position, Value)>,
        remove: Vec<Position>,
    },
    Delete {
        element: Position,
    },
    SubProperty {
        sub: Position,
        sup: Position,
    },
}

impl LogRecord {
    pub fn kind(&self) -> RecordKind {
        match self {
            LogRecord::TxnBegin { .. } => RecordKind::TxnBegin,
            LogRecord::TxnCommit { .. } => RecordKind::TxnCommit,
            LogRecord::SchemaDef { .. } => RecordKind::SchemaDef,
            LogRecord::GraphTypeDef { .. } => RecordKind::GraphTypeDef,
            LogRecord::NodeTypeDef { .. } => RecordKind::NodeTypeDef,
            LogRecord::EdgeTypeDef { .. } => RecordKind::EdgeTypeDef,
            LogRecord::PropertyDef { .. } => RecordKind::PropertyDef,
            LogRecord::GraphDef { .. } => RecordKind::GraphDef,
            LogRecord::Node { .. } => RecordKind::Node,
            LogRecord::Edge { .. } => RecordKind::Edge,
            LogRecord::Update { .. } => RecordKind::Update,
            LogRecord::Delete { .. } => RecordKind::Delete,
            LogRecord::SubProperty { .. } => RecordKind::SubProperty,
        }
    }

    /// Visits every Position reference in the payload.
    pub fn refs_mut(&mut self, f: &mut impl FnMut(&mut Position)) {
        fn opt(p: &mut Option<Position>, f: &mut impl FnMut(&mut Position)) {
            if let Some(p) = p {
                f(p);
            }
        }
        fn props(ps: &mut [(Position, Value)], f: &mut impl FnMut(&mut Position)) {
            for (p, _) in ps {
                f(p);
            }
        }
        match self {
            LogRecord::TxnBegin { .. }
            | LogRecord::TxnCommit { .. }
            | LogRecord::SchemaDef { .. }
            | LogRecord::GraphTypeDef { .. } => {}
            LogRecord::NodeTypeDef {
                graph_type,
                origin_graph,
                ..
            } => {
                opt(graph_type, f);
                f(origin_graph);
            }
            LogRecord::EdgeTypeDef {
                graph_type,
                origin_graph,
                connecting,
                ..
            } => {
                opt(graph_type, f);
                f(origin_graph);
                if let Some((a, b)) = connecting {
                    f(a);
                    f(b);
                }
            }
            LogRecord::PropertyDef { owner, .. } => f(owner),
            LogRecord::GraphDef { graph_type, .. } => opt(graph_type, f),
            LogRecord::Node {
                graph,
                types,
                props: ps,
            } => {
                f(graph);
                types.iter_mut().for_each(&mut *f);
                props(ps, f);
            }
            LogRecord::Edge {
                graph,
                types,
                leaving,
                arriving,
                props: ps,
            } => {
                f(graph);
                types.iter_mut().for_each(&mut *f);
                f(leaving);
                f(arriving);
                props(ps, f);
            }
            LogRecord::Update {
                element,
                set,
                remove,
            } => {
                f(element);
                props(set, f);
                remove.iter_mut().for_each(&mut *f);
            }
            LogRecord::Delete { element } => f(element),
            LogRecord::SubProperty { sub, sup } => {
                f(sub);
                f(sup);
            }
        }
    }

    pub fn refs(&self) -> Vec<Position> {
        let mut out = Vec::new();
        self.clone().refs_mut(&mut |p| out.push(*p));
        out
    }
}
