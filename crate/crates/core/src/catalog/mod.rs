//! Schema objects: schemata, graph types, node and edge types keyed by label,
//! graph definitions, and the subproperty order over edge labels.
//!
//! The catalog is an immutable value (persistent maps) rebuilt record by
//! record from the log. Operations that change it go through a
//! [`CatalogSink`], which stages a log record and applies it to the sink's
//! private catalog copy.

mod order;

pub use order::SubPropertyOrder;

use std::collections::BTreeSet;

use im::{OrdMap, OrdSet};
use thiserror::Error;

use crate::frontend::{canonical_name, CatalogPath, GraphTypeSpec, Ident, PropertySpec, TypeTag};
use crate::store::LogRecord;
use crate::types::{Position, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("unknown schema {0}")]
    UnknownSchema(String),
    #[error("path {0} already exists")]
    DuplicatePath(String),
    #[error("unknown graph type {0}")]
    UnknownGraphType(String),
    #[error("unknown graph {0}")]
    UnknownGraph(String),
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("label {0} is already defined")]
    DuplicateLabel(String),
    #[error("property {property} declared twice on {label}")]
    DuplicateProperty { label: String, property: String },
    #[error("connecting clause names undeclared node label {0}")]
    UnknownLabelInConnecting(String),
    #[error("label {label} is a {actual} label, expected {expected}")]
    LabelKindMismatch {
        label: String,
        expected: &'static str,
        actual: &'static str,
    },
    #[error("property {property} of {label} has type {expected}, got {found}")]
    PropertyTypeMismatch {
        label: String,
        property: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("label {label} is not declared in the graph type of {graph}")]
    UnknownLabelInClosedGraph { label: String, graph: String },
    #[error("property {property} is not declared for labels {labels}")]
    UnknownProperty { property: String, labels: String },
    #[error("edge {label} must connect {from} to {to}")]
    ConnectingViolation {
        label: String,
        from: String,
        to: String,
    },
    #[error("subproperty {sub} => {sup} would create a cycle")]
    SubPropertyCycle { sub: String, sup: String },
    #[error("{0} is not an edge label")]
    NotAnEdgeLabel(String),
    #[error("an element needs at least one label")]
    EmptyLabelSet,
    #[error("inconsistent log: {0}")]
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, CatalogError>;

/// A label as registered in the catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    /// Lowercased if unquoted, exact if quoted. Unique across the catalog.
    pub canonical: String,
    /// First-seen spelling.
    pub display: String,
    pub quoted: bool,
    /// Position of the defining type record; `None` while unregistered.
    pub def_pos: Option<Position>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TypeKind {
    Node,
    Edge {
        /// (source node type, target node type); `None` accepts any endpoints.
        connecting: Option<(Position, Position)>,
    },
}

impl TypeKind {
    pub fn name(&self) -> &'static str {
        match self {
            TypeKind::Node => "node",
            TypeKind::Edge { .. } => "edge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDef {
    pub pos: Position,
    pub owner: Position,
    pub name: String,
    pub display: String,
    pub tag: TypeTag,
}

/// A node type or edge type. Each label names exactly one type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementType {
    pub pos: Position,
    pub label: Label,
    pub kind: TypeKind,
    /// Property signature keyed by canonical name.
    pub props: OrdMap<String, PropertyDef>,
    /// Declaring graph type; `None` for types created by use in an open graph.
    pub graph_type: Option<Position>,
    pub origin_graph: Position,
    pub singleton: bool,
}

impl ElementType {
    pub fn is_edge(&self) -> bool {
        matches!(self.kind, TypeKind::Edge { .. })
    }

    pub fn connecting(&self) -> Option<(Position, Position)> {
        match self.kind {
            TypeKind::Edge { connecting } => connecting,
            TypeKind::Node => None,
        }
    }

    /// Declared types belong to a closed graph type and never widen.
    pub fn extensible(&self) -> bool {
        self.graph_type.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphType {
    pub pos: Position,
    pub path: CatalogPath,
    pub types: OrdSet<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDef {
    pub pos: Position,
    pub path: CatalogPath,
    /// `None`: open graph.
    pub graph_type: Option<Position>,
}

impl GraphDef {
    pub fn is_open(&self) -> bool {
        self.graph_type.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    schemas: OrdMap<String, Position>,
    graph_types: OrdMap<Position, GraphType>,
    graph_type_paths: OrdMap<String, Position>,
    graphs: OrdMap<Position, GraphDef>,
    graph_paths: OrdMap<String, Position>,
    types: OrdMap<Position, ElementType>,
    labels: OrdMap<String, Position>,
    prop_defs: OrdMap<Position, PropertyDef>,
    subprops: SubPropertyOrder,
    /// Record position of each asserted (sub, sup) pair.
    subprop_defs: OrdMap<(Position, Position), Position>,
}

impl Default for Catalog {
    fn default() -> Self {
        Catalog::new()
    }
}

/// Receives staged catalog records. Implementations apply the record to their
/// own catalog before returning its (provisional) position.
pub trait CatalogSink {
    fn catalog(&self) -> &Catalog;
    fn stage(&mut self, record: LogRecord) -> Result<Position>;
}

/// Resolved typing of an element about to be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Typing {
    pub types: Vec<Position>,
    /// Non-null properties keyed by property definition.
    pub props: Vec<(Position, Value)>,
}

/// What an element is being inserted as.
#[derive(Debug, Clone, Copy)]
pub enum Role<'a> {
    Node,
    Edge {
        leaving: &'a [Position],
        arriving: &'a [Position],
    },
}

impl Role<'_> {
    fn name(&self) -> &'static str {
        match self {
            Role::Node => "node",
            Role::Edge { .. } => "edge",
        }
    }
}

fn tag_name(v: &Value) -> &'static str {
    v.tag().map(TypeTag::name).unwrap_or("null")
}

impl Catalog {
    pub fn new() -> Self {
        let root = CatalogPath::root();
        let home = GraphDef {
            pos: Position::HOME_GRAPH,
            path: root.clone(),
            graph_type: None,
        };
        Catalog {
            schemas: OrdMap::unit(root.key(), Position::HOME_GRAPH),
            graph_types: OrdMap::new(),
            graph_type_paths: OrdMap::new(),
            graphs: OrdMap::unit(Position::HOME_GRAPH, home),
            graph_paths: OrdMap::unit(root.key(), Position::HOME_GRAPH),
            types: OrdMap::new(),
            labels: OrdMap::new(),
            prop_defs: OrdMap::new(),
            subprops: SubPropertyOrder::default(),
            subprop_defs: OrdMap::new(),
        }
    }

    /// Looks up a label by spelling, or returns an unregistered label.
    pub fn resolve_label(&self, spelling: &str, quoted: bool) -> Label {
        let canonical = canonical_name(spelling, quoted);
        match self.labels.get(&canonical).and_then(|p| self.types.get(p)) {
            Some(t) => t.label.clone(),
            None => Label {
                canonical,
                display: spelling.to_string(),
                quoted,
                def_pos: None,
            },
        }
    }

    pub fn type_by_label(&self, canonical: &str) -> Option<&ElementType> {
        self.labels.get(canonical).and_then(|p| self.types.get(p))
    }

    pub fn element_type(&self, pos: Position) -> Option<&ElementType> {
        self.types.get(&pos)
    }

    pub fn types(&self) -> impl Iterator<Item = &ElementType> {
        self.types.values()
    }

    pub fn property_def(&self, pos: Position) -> Option<&PropertyDef> {
        self.prop_defs.get(&pos)
    }

    pub fn schema_exists(&self, path: &CatalogPath) -> bool {
        self.schemas.contains_key(&path.key())
    }

    pub fn graph_by_path(&self, path: &CatalogPath) -> Option<&GraphDef> {
        self.graph_paths
            .get(&path.key())
            .and_then(|p| self.graphs.get(p))
    }

    pub fn graph(&self, pos: Position) -> Option<&GraphDef> {
        self.graphs.get(&pos)
    }

    pub fn graphs(&self) -> impl Iterator<Item = &GraphDef> {
        self.graphs.values()
    }

    pub fn graph_type_by_path(&self, path: &CatalogPath) -> Option<&GraphType> {
        self.graph_type_paths
            .get(&path.key())
            .and_then(|p| self.graph_types.get(p))
    }

    pub fn graph_type(&self, pos: Position) -> Option<&GraphType> {
        self.graph_types.get(&pos)
    }

    pub fn subproperties(&self) -> &SubPropertyOrder {
        &self.subprops
    }

    /// Asserted pairs as `(sub, sup, record position)`.
    pub fn subproperty_assertions(&self) -> impl Iterator<Item = (Position, Position, Position)> + '_ {
        self.subprop_defs.iter().map(|((a, b), p)| (*a, *b, *p))
    }

    /// Labels of the types declared by a closed graph's graph type.
    pub fn declared_labels(&self, graph: &GraphDef) -> BTreeSet<String> {
        graph
            .graph_type
            .and_then(|gt| self.graph_types.get(&gt))
            .map(|gt| {
                gt.types
                    .iter()
                    .filter_map(|t| self.types.get(t))
                    .map(|t| t.label.canonical.clone())
                    .collect()
            })
            .unwrap_or_default()
    }

    /// All labels `l'` with `l' ⊑ label` in the reflexive-transitive
    /// subproperty order. Unknown labels map to themselves.
    pub fn label_closure(&self, canonical: &str) -> BTreeSet<String> {
        let Some(t) = self.type_by_label(canonical) else {
            return BTreeSet::from([canonical.to_string()]);
        };
        self.subprops
            .below(t.pos)
            .into_iter()
            .filter_map(|p| self.types.get(&p))
            .map(|t| t.label.canonical.clone())
            .collect()
    }

    /// Property definition for `name` among `types`, first match wins.
    pub fn find_property(&self, types: &[Position], name: &str) -> Option<&PropertyDef> {
        types
            .iter()
            .filter_map(|t| self.types.get(t))
            .find_map(|t| t.props.get(name))
    }

    /// Applies a catalog record at `pos`. Element records are ignored.
    pub fn apply(&mut self, pos: Position, record: &LogRecord) -> Result<()> {
        let missing = |what: &str, p: Position| {
            CatalogError::Inconsistent(format!("record at {pos} references missing {what} {p:?}"))
        };
        match record {
            LogRecord::SchemaDef { path } => {
                self.schemas.insert(path.key(), pos);
            }
            LogRecord::GraphTypeDef { path } => {
                self.graph_type_paths.insert(path.key(), pos);
                self.graph_types.insert(
                    pos,
                    GraphType {
                        pos,
                        path: path.clone(),
                        types: OrdSet::new(),
                    },
                );
            }
            LogRecord::GraphDef { path, graph_type } => {
                if let Some(gt) = graph_type {
                    if !self.graph_types.contains_key(gt) {
                        return Err(missing("graph type", *gt));
                    }
                }
                self.graph_paths.insert(path.key(), pos);
                self.graphs.insert(
                    pos,
                    GraphDef {
                        pos,
                        path: path.clone(),
                        graph_type: *graph_type,
                    },
                );
            }
            LogRecord::NodeTypeDef {
                label,
                quoted,
                graph_type,
                origin_graph,
                singleton,
            } => self.add_type(
                pos,
                label,
                *quoted,
                TypeKind::Node,
                *graph_type,
                *origin_graph,
                *singleton,
            )?,
            LogRecord::EdgeTypeDef {
                label,
                quoted,
                graph_type,
                origin_graph,
                connecting,
            } => {
                if let Some((s, t)) = connecting {
                    for p in [s, t] {
                        if !self.types.get(p).is_some_and(|t| !t.is_edge()) {
                            return Err(missing("node type", *p));
                        }
                    }
                }
                self.add_type(
                    pos,
                    label,
                    *quoted,
                    TypeKind::Edge {
                        connecting: *connecting,
                    },
                    *graph_type,
                    *origin_graph,
                    false,
                )?
            }
            LogRecord::PropertyDef {
                owner,
                name,
                quoted,
                tag,
            } => {
                let def = PropertyDef {
                    pos,
                    owner: *owner,
                    name: canonical_name(name, *quoted),
                    display: name.clone(),
                    tag: *tag,
                };
                let ty = self.types.get_mut(owner).ok_or_else(|| missing("type", *owner))?;
                ty.props.insert(def.name.clone(), def.clone());
                self.prop_defs.insert(pos, def);
            }
            LogRecord::SubProperty { sub, sup } => {
                for p in [sub, sup] {
                    if !self.types.get(p).is_some_and(ElementType::is_edge) {
                        return Err(missing("edge type", *p));
                    }
                }
                self.subprops.insert(*sub, *sup);
                self.subprop_defs.entry((*sub, *sup)).or_insert(pos);
            }
            LogRecord::TxnBegin { .. }
            | LogRecord::TxnCommit { .. }
            | LogRecord::Node { .. }
            | LogRecord::Edge { .. }
            | LogRecord::Update { .. }
            | LogRecord::Delete { .. } => {}
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn add_type(
        &mut self,
        pos: Position,
        label: &str,
        quoted: bool,
        kind: TypeKind,
        graph_type: Option<Position>,
        origin_graph: Position,
        singleton: bool,
    ) -> Result<()> {
        let canonical = canonical_name(label, quoted);
        if self.labels.contains_key(&canonical) {
            return Err(CatalogError::DuplicateLabel(canonical));
        }
        if let Some(gt) = graph_type {
            self.graph_types
                .get_mut(&gt)
                .ok_or_else(|| CatalogError::Inconsistent(format!("missing graph type {gt:?}")))?
                .types
                .insert(pos);
        }
        self.labels.insert(canonical.clone(), pos);
        self.types.insert(
            pos,
            ElementType {
                pos,
                label: Label {
                    canonical,
                    display: label.to_string(),
                    quoted,
                    def_pos: Some(pos),
                },
                kind,
                props: OrdMap::new(),
                graph_type,
                origin_graph,
                singleton,
            },
        );
        Ok(())
    }
}

fn require_parent_schema(catalog: &Catalog, path: &CatalogPath) -> Result<()> {
    let parent = path.parent();
    if path.is_root() || !catalog.schema_exists(&parent) {
        return Err(CatalogError::UnknownSchema(parent.to_string()));
    }
    Ok(())
}

pub fn create_schema(sink: &mut impl CatalogSink, path: &CatalogPath) -> Result<Position> {
    require_parent_schema(sink.catalog(), path)?;
    if sink.catalog().schema_exists(path) {
        return Err(CatalogError::DuplicatePath(path.to_string()));
    }
    sink.stage(LogRecord::SchemaDef { path: path.clone() })
}

fn stage_props(
    sink: &mut impl CatalogSink,
    owner: Position,
    label: &str,
    props: &[PropertySpec],
) -> Result<()> {
    let mut seen = BTreeSet::new();
    for p in props {
        if !seen.insert(p.name.canonical()) {
            return Err(CatalogError::DuplicateProperty {
                label: label.to_string(),
                property: p.name.canonical(),
            });
        }
        sink.stage(LogRecord::PropertyDef {
            owner,
            name: p.name.name.clone(),
            quoted: p.name.quoted,
            tag: p.tag,
        })?;
    }
    Ok(())
}

/// Registers a closed graph type with its node and edge types.
pub fn define_graph_type(
    sink: &mut impl CatalogSink,
    path: &CatalogPath,
    spec: &GraphTypeSpec,
) -> Result<Position> {
    let cat = sink.catalog();
    require_parent_schema(cat, path)?;
    if cat.graph_type_by_path(path).is_some() {
        return Err(CatalogError::DuplicatePath(path.to_string()));
    }
    let mut declared = BTreeSet::new();
    let all_labels = spec
        .nodes
        .iter()
        .map(|n| &n.label)
        .chain(spec.edges.iter().map(|e| &e.label));
    for label in all_labels {
        let c = label.canonical();
        if cat.type_by_label(&c).is_some() || !declared.insert(c.clone()) {
            return Err(CatalogError::DuplicateLabel(c));
        }
    }
    let node_labels: BTreeSet<String> = spec.nodes.iter().map(|n| n.label.canonical()).collect();
    for e in &spec.edges {
        for end in [&e.source, &e.target] {
            if !node_labels.contains(&end.canonical()) {
                return Err(CatalogError::UnknownLabelInConnecting(end.canonical()));
            }
        }
    }
    let gt = sink.stage(LogRecord::GraphTypeDef { path: path.clone() })?;
    for n in &spec.nodes {
        let pos = sink.stage(LogRecord::NodeTypeDef {
            label: n.label.name.clone(),
            quoted: n.label.quoted,
            graph_type: Some(gt),
            origin_graph: gt,
            singleton: false,
        })?;
        stage_props(sink, pos, &n.label.canonical(), &n.props)?;
    }
    for e in &spec.edges {
        let lookup = |cat: &Catalog, id: &Ident| {
            cat.type_by_label(&id.canonical())
                .map(|t| t.pos)
                .ok_or_else(|| CatalogError::UnknownLabelInConnecting(id.canonical()))
        };
        let source = lookup(sink.catalog(), &e.source)?;
        let target = lookup(sink.catalog(), &e.target)?;
        let pos = sink.stage(LogRecord::EdgeTypeDef {
            label: e.label.name.clone(),
            quoted: e.label.quoted,
            graph_type: Some(gt),
            origin_graph: gt,
            connecting: Some((source, target)),
        })?;
        stage_props(sink, pos, &e.label.canonical(), &e.props)?;
    }
    Ok(gt)
}

/// How a new graph is typed.
#[derive(Debug, Clone, Copy)]
pub enum NewGraphKind<'a> {
    Open,
    Closed(&'a CatalogPath),
    Inline(&'a GraphTypeSpec),
}

pub fn create_graph(
    sink: &mut impl CatalogSink,
    path: &CatalogPath,
    kind: NewGraphKind<'_>,
) -> Result<Position> {
    let cat = sink.catalog();
    require_parent_schema(cat, path)?;
    if cat.graph_by_path(path).is_some() {
        return Err(CatalogError::DuplicatePath(path.to_string()));
    }
    let graph_type = match kind {
        NewGraphKind::Open => None,
        NewGraphKind::Closed(t) => Some(
            cat.graph_type_by_path(t)
                .ok_or_else(|| CatalogError::UnknownGraphType(t.to_string()))?
                .pos,
        ),
        NewGraphKind::Inline(spec) => Some(define_graph_type(sink, path, spec)?),
    };
    sink.stage(LogRecord::GraphDef {
        path: path.clone(),
        graph_type,
    })
}

fn dedup_labels(labels: &[Ident]) -> Result<Vec<&Ident>> {
    if labels.is_empty() {
        return Err(CatalogError::EmptyLabelSet);
    }
    let mut seen = BTreeSet::new();
    Ok(labels
        .iter()
        .filter(|l| seen.insert(l.canonical()))
        .collect())
}

fn check_kind(t: &ElementType, role: Role<'_>) -> Result<()> {
    if t.is_edge() != matches!(role, Role::Edge { .. }) {
        return Err(CatalogError::LabelKindMismatch {
            label: t.label.canonical.clone(),
            expected: role.name(),
            actual: t.kind.name(),
        });
    }
    Ok(())
}

fn check_connecting(cat: &Catalog, t: &ElementType, role: Role<'_>) -> Result<()> {
    let (Some((s, tg)), Role::Edge { leaving, arriving }) = (t.connecting(), role) else {
        return Ok(());
    };
    if !leaving.contains(&s) || !arriving.contains(&tg) {
        let name = |p: Position| {
            cat.element_type(p)
                .map(|t| t.label.canonical.clone())
                .unwrap_or_default()
        };
        return Err(CatalogError::ConnectingViolation {
            label: t.label.canonical.clone(),
            from: name(s),
            to: name(tg),
        });
    }
    Ok(())
}

/// Checks `value` against every signature entry for `name` among `types`.
/// Returns the first matching definition.
fn check_property(
    cat: &Catalog,
    types: &[Position],
    name: &str,
    value: &Value,
) -> Result<Option<Position>> {
    let mut found = None;
    for t in types.iter().filter_map(|t| cat.element_type(*t)) {
        if let Some(def) = t.props.get(name) {
            if Some(def.tag) != value.tag() {
                return Err(CatalogError::PropertyTypeMismatch {
                    label: t.label.canonical.clone(),
                    property: name.to_string(),
                    expected: def.tag.name(),
                    found: tag_name(value),
                });
            }
            found.get_or_insert(def.pos);
        }
    }
    Ok(found)
}

fn label_list(cat: &Catalog, types: &[Position]) -> String {
    types
        .iter()
        .filter_map(|t| cat.element_type(*t))
        .map(|t| t.label.canonical.as_str())
        .collect::<Vec<_>>()
        .join("&")
}

/// Types an element inserted into an open graph, creating singleton types for
/// unknown labels and widening extensible signatures with new properties.
pub fn extend_open_type(
    sink: &mut impl CatalogSink,
    graph: Position,
    labels: &[Ident],
    props: &[(Ident, Value)],
    role: Role<'_>,
) -> Result<Typing> {
    let mut types = Vec::new();
    for label in dedup_labels(labels)? {
        let canonical = label.canonical();
        let pos = match sink.catalog().type_by_label(&canonical) {
            Some(t) => {
                check_kind(t, role)?;
                check_connecting(sink.catalog(), t, role)?;
                t.pos
            }
            None => match role {
                Role::Node => sink.stage(LogRecord::NodeTypeDef {
                    label: label.name.clone(),
                    quoted: label.quoted,
                    graph_type: None,
                    origin_graph: graph,
                    singleton: true,
                })?,
                Role::Edge { leaving, arriving } => {
                    // earliest-defined label of each endpoint
                    let pick = |ends: &[Position]| ends.iter().min().copied();
                    let connecting = pick(leaving).zip(pick(arriving));
                    sink.stage(LogRecord::EdgeTypeDef {
                        label: label.name.clone(),
                        quoted: label.quoted,
                        graph_type: None,
                        origin_graph: graph,
                        connecting,
                    })?
                }
            },
        };
        types.push(pos);
    }
    let mut typed_props = Vec::new();
    let mut seen = BTreeSet::new();
    for (name, value) in props {
        if matches!(value, Value::Null) || !seen.insert(name.canonical()) {
            continue;
        }
        let def = type_property(sink, &types, name, value)?;
        typed_props.push((def, value.clone()));
    }
    Ok(Typing {
        types,
        props: typed_props,
    })
}

/// Finds or creates the property definition for a non-null `value` stored
/// under `name` on an element of `types`. A new property goes to the first
/// extensible type.
pub fn type_property(
    sink: &mut impl CatalogSink,
    types: &[Position],
    name: &Ident,
    value: &Value,
) -> Result<Position> {
    let key = name.canonical();
    if let Some(def) = check_property(sink.catalog(), types, &key, value)? {
        return Ok(def);
    }
    let tag = value.tag().ok_or_else(|| CatalogError::PropertyTypeMismatch {
        label: label_list(sink.catalog(), types),
        property: key.clone(),
        expected: "a non-null value",
        found: "null",
    })?;
    let owner = types
        .iter()
        .copied()
        .find(|t| {
            sink.catalog()
                .element_type(*t)
                .is_some_and(ElementType::extensible)
        })
        .ok_or_else(|| CatalogError::UnknownProperty {
            property: key.clone(),
            labels: label_list(sink.catalog(), types),
        })?;
    sink.stage(LogRecord::PropertyDef {
        owner,
        name: name.name.clone(),
        quoted: name.quoted,
        tag,
    })
}

/// Checks an element inserted into a graph closed over `graph_type`.
pub fn validate_closed_insert(
    cat: &Catalog,
    graph: &GraphDef,
    labels: &[Ident],
    props: &[(Ident, Value)],
    role: Role<'_>,
) -> Result<Typing> {
    let gt = graph
        .graph_type
        .and_then(|p| cat.graph_type(p))
        .ok_or_else(|| CatalogError::Inconsistent(format!("{} is not closed", graph.path)))?;
    let mut types = Vec::new();
    for label in dedup_labels(labels)? {
        let canonical = label.canonical();
        let t = cat
            .type_by_label(&canonical)
            .filter(|t| gt.types.contains(&t.pos))
            .ok_or_else(|| CatalogError::UnknownLabelInClosedGraph {
                label: canonical.clone(),
                graph: graph.path.to_string(),
            })?;
        check_kind(t, role)?;
        check_connecting(cat, t, role)?;
        types.push(t.pos);
    }
    let mut typed_props = Vec::new();
    let mut seen = BTreeSet::new();
    for (name, value) in props {
        let key = name.canonical();
        if matches!(value, Value::Null) || !seen.insert(key.clone()) {
            continue;
        }
        let def = check_property(cat, &types, &key, value)?.ok_or_else(|| {
            CatalogError::UnknownProperty {
                property: key.clone(),
                labels: label_list(cat, &types),
            }
        })?;
        typed_props.push((def, value.clone()));
    }
    Ok(Typing {
        types,
        props: typed_props,
    })
}

/// Asserts `sub ⊑ sup`. An unbound `sup` gets a new unconstrained edge type.
/// Returns `false` if the pair was already asserted.
pub fn add_subproperty(
    sink: &mut impl CatalogSink,
    graph: Position,
    sub: &Ident,
    sup: &Ident,
) -> Result<bool> {
    let cat = sink.catalog();
    let sub_c = sub.canonical();
    let sup_c = sup.canonical();
    let sub_t = cat
        .type_by_label(&sub_c)
        .ok_or_else(|| CatalogError::UnknownLabel(sub_c.clone()))?;
    if !sub_t.is_edge() {
        return Err(CatalogError::NotAnEdgeLabel(sub_c));
    }
    let sub_pos = sub_t.pos;
    if sub_c == sup_c {
        return Err(CatalogError::SubPropertyCycle { sub: sub_c, sup: sup_c });
    }
    let sup_pos = match cat.type_by_label(&sup_c) {
        Some(t) if !t.is_edge() => return Err(CatalogError::NotAnEdgeLabel(sup_c)),
        Some(t) => {
            if cat.subprops.contains(sub_pos, t.pos) {
                return Ok(false);
            }
            if cat.subprops.below(sub_pos).contains(&t.pos) {
                return Err(CatalogError::SubPropertyCycle { sub: sub_c, sup: sup_c });
            }
            t.pos
        }
        None => sink.stage(LogRecord::EdgeTypeDef {
            label: sup.name.clone(),
            quoted: sup.quoted,
            graph_type: None,
            origin_graph: graph,
            connecting: None,
        })?,
    };
    sink.stage(LogRecord::SubProperty {
        sub: sub_pos,
        sup: sup_pos,
    })?;
    Ok(true)
}

/// A catalog plus its staged records; used where no engine transaction exists.
#[derive(Debug, Clone, Default)]
pub struct StagedCatalog {
    pub catalog: Catalog,
    pub staged: Vec<LogRecord>,
}

impl CatalogSink for StagedCatalog {
    fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn stage(&mut self, record: LogRecord) -> Result<Position> {
        let pos = Position::provisional(self.staged.len() + 1);
        self.catalog.apply(pos, &record)?;
        self.staged.push(record);
        Ok(pos)
    }
}

#[cfg(test)]
mod tests;
