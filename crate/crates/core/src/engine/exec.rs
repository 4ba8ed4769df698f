use std::collections::BTreeMap;

use crate::catalog::{
    self, add_subproperty, create_graph, create_schema, define_graph_type, extend_open_type,
    type_property, validate_closed_insert, NewGraphKind, Role,
};
use crate::frontend::{
    Assignment, Dependent, Direction, ElementPattern, GraphKind, GraphTarget, Ident, PathPattern,
    PropertyAccess, PropertyRef, ReturnItem, Statement,
};
use crate::store::LogRecord;
use crate::types::{Position, Value};

use super::matcher::{Compiled, InstanceView, SlotKind, View};
use super::result::{BindingTable, Datum, ElementValue, Row};
use super::schema_view::schema_view;
use super::{EngineError, Result, Transaction};

type Bindings = BTreeMap<String, (Position, SlotKind)>;

fn row_bindings(c: &Compiled<'_>, row: &Row) -> Bindings {
    c.named()
        .map(|(i, a)| (a.canonical(), (row[i], c.slots[i].kind)))
        .collect()
}

fn require_alias(c: &Compiled<'_>, alias: &Ident) -> Result<usize> {
    c.slot_of(alias)
        .ok_or_else(|| EngineError::UnknownAlias(alias.name.clone()))
}

fn project(
    c: &Compiled<'_>,
    rows: &[Row],
    items: Option<&[ReturnItem]>,
    view: &dyn View,
) -> Result<BindingTable> {
    let owned: Vec<ReturnItem>;
    let items = match items {
        Some(items) => items,
        None => {
            owned = c.named().map(|(_, a)| ReturnItem::Alias(a.clone())).collect();
            &owned
        }
    };
    let cols = items
        .iter()
        .map(|it| {
            let alias = match it {
                ReturnItem::Alias(a) => a,
                ReturnItem::Property(p) => &p.alias,
            };
            require_alias(c, alias)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = BindingTable {
        columns: items.iter().map(|it| it.to_string()).collect(),
        rows: Vec::with_capacity(rows.len()),
    };
    for row in rows {
        let mut out = Vec::with_capacity(items.len());
        for (it, &slot) in items.iter().zip(&cols) {
            let pos = row[slot];
            let el = view.get(pos, c.slots[slot].kind).ok_or_else(|| {
                EngineError::Inconsistent(format!("bound element {pos:?} is missing"))
            })?;
            out.push(match it {
                ReturnItem::Alias(_) => Datum::Element(ElementValue::from_element(el)),
                ReturnItem::Property(PropertyAccess {
                    property: PropertyRef::Id,
                    ..
                }) => Datum::Value(Value::Int(pos.id())),
                ReturnItem::Property(PropertyAccess {
                    property: PropertyRef::Named(name),
                    ..
                }) => Datum::Value(el.props.get(&name.canonical()).cloned().unwrap_or(Value::Null)),
            });
        }
        table.rows.push(out);
    }
    Ok(table)
}

fn insert_labels(pat: &ElementPattern) -> Result<Vec<Ident>> {
    match &pat.labels {
        None => Ok(Vec::new()),
        Some(expr) => expr
            .conjuncts()
            .map(|ls| ls.into_iter().cloned().collect())
            .ok_or_else(|| EngineError::Unsupported("label disjunction in INSERT".into())),
    }
}

impl Transaction {
    pub(super) fn dispatch(&mut self, stmt: &Statement) -> Result<Option<BindingTable>> {
        match stmt {
            Statement::CreateSchema(path) => {
                create_schema(self, path)?;
                Ok(None)
            }
            Statement::CreateGraphType { path, spec } => {
                define_graph_type(self, path, spec)?;
                Ok(None)
            }
            Statement::CreateGraph { path, kind } => {
                let kind = match kind {
                    GraphKind::Any => NewGraphKind::Open,
                    GraphKind::Typed(t) => NewGraphKind::Closed(t),
                    GraphKind::Inline(spec) => NewGraphKind::Inline(spec),
                };
                let g = create_graph(self, path, kind)?;
                self.current_graph = Some(g);
                Ok(None)
            }
            Statement::UseGraph(GraphTarget::Path(p)) => {
                self.use_graph(p)?;
                Ok(None)
            }
            Statement::UseGraph(GraphTarget::Url(_)) => Err(EngineError::RemoteUnavailable(
                "a transaction cannot switch to a remote graph".into(),
            )),
            Statement::Insert(patterns) => {
                self.insert(patterns, &Bindings::new())?;
                Ok(None)
            }
            Statement::Match {
                patterns,
                dependent,
            } => self.eval_match(patterns, dependent.as_ref()),
            Statement::MatchSchema { patterns, items } => {
                let g = self.graph()?;
                let view = schema_view(&self.state, g);
                let c = Compiled::new(patterns)?;
                self.reads.any = true;
                let rows = c.run(&view);
                Ok(Some(project(&c, &rows, items.as_deref(), &view)?))
            }
            Statement::InsertSchema { sub, sup } => {
                let g = self.graph()?;
                add_subproperty(self, g, sub, sup)?;
                Ok(None)
            }
            Statement::Begin | Statement::Commit | Statement::Rollback => {
                Err(EngineError::TransactionControl)
            }
        }
    }

    fn eval_match(
        &mut self,
        patterns: &[PathPattern],
        dependent: Option<&Dependent>,
    ) -> Result<Option<BindingTable>> {
        let g = self.graph()?;
        let c = Compiled::new(patterns)?;
        let rows = c.run(&InstanceView {
            state: &self.state,
            graph: g,
        });
        let view = InstanceView {
            state: &self.state,
            graph: g,
        };
        for r in &rows {
            self.reads.positions.extend(r.iter().copied());
        }
        match c.read_labels(&view) {
            Some(labels) => self.reads.labels.extend(labels),
            None => self.reads.any = true,
        }
        match dependent {
            None => Ok(Some(project(&c, &rows, None, &view)?)),
            Some(Dependent::Return(items)) => Ok(Some(project(&c, &rows, Some(items), &view)?)),
            Some(Dependent::Insert(ins)) => {
                for row in &rows {
                    self.insert(ins, &row_bindings(&c, row))?;
                }
                Ok(None)
            }
            Some(Dependent::Set(assignments)) => {
                let targets = assignments
                    .iter()
                    .map(|a| self.target(&c, &a.target))
                    .collect::<Result<Vec<_>>>()?;
                for row in &rows {
                    self.set_row(row, assignments, &targets)?;
                }
                Ok(None)
            }
            Some(Dependent::Remove(accesses)) => {
                let targets = accesses
                    .iter()
                    .map(|a| self.target(&c, a))
                    .collect::<Result<Vec<_>>>()?;
                for row in &rows {
                    self.remove_row(row, accesses, &targets)?;
                }
                Ok(None)
            }
            Some(Dependent::Delete { aliases, detach }) => {
                let slots = aliases
                    .iter()
                    .map(|a| require_alias(&c, a).map(|s| (s, c.slots[s].kind)))
                    .collect::<Result<Vec<_>>>()?;
                for row in &rows {
                    for &(s, kind) in &slots {
                        self.delete(row[s], kind, *detach)?;
                    }
                }
                Ok(None)
            }
        }
    }

    /// Slot of a writable `alias.prop` target.
    fn target(&self, c: &Compiled<'_>, access: &PropertyAccess) -> Result<usize> {
        let slot = require_alias(c, &access.alias)?;
        if access.property == PropertyRef::Id {
            return Err(EngineError::ReadOnlyProperty(access.to_string()));
        }
        Ok(slot)
    }

    fn live_types(&self, pos: Position) -> Result<Vec<Position>> {
        self.state
            .element(pos)
            .map(|e| e.types.clone())
            .ok_or_else(|| EngineError::Inconsistent(format!("element {pos:?} is gone")))
    }

    fn set_row(&mut self, row: &Row, assignments: &[Assignment], slots: &[usize]) -> Result<()> {
        let mut updates: BTreeMap<Position, (Vec<(Position, Value)>, Vec<Position>)> =
            BTreeMap::new();
        for (a, &slot) in assignments.iter().zip(slots) {
            let pos = row[slot];
            let PropertyRef::Named(name) = &a.target.property else {
                unreachable!("checked by target()");
            };
            let value = Value::from(&a.value);
            let types = self.live_types(pos)?;
            let entry = updates.entry(pos).or_default();
            if matches!(value, Value::Null) {
                if let Some(def) = self.state.catalog.find_property(&types, &name.canonical()) {
                    entry.1.push(def.pos);
                }
            } else {
                let def = type_property(self, &types, name, &value)?;
                entry.0.push((def, value));
            }
        }
        for (element, (set, remove)) in updates {
            if !set.is_empty() || !remove.is_empty() {
                self.stage_record(LogRecord::Update {
                    element,
                    set,
                    remove,
                })?;
            }
        }
        Ok(())
    }

    fn remove_row(&mut self, row: &Row, accesses: &[PropertyAccess], slots: &[usize]) -> Result<()> {
        let mut removals: BTreeMap<Position, Vec<Position>> = BTreeMap::new();
        for (a, &slot) in accesses.iter().zip(slots) {
            let pos = row[slot];
            let PropertyRef::Named(name) = &a.property else {
                unreachable!("checked by target()");
            };
            let key = name.canonical();
            let Some(el) = self.state.element(pos) else {
                continue;
            };
            if !el.props.contains_key(&key) {
                continue;
            }
            if let Some(def) = self.state.catalog.find_property(&el.types, &key) {
                let list = removals.entry(pos).or_default();
                if !list.contains(&def.pos) {
                    list.push(def.pos);
                }
            }
        }
        for (element, remove) in removals {
            self.stage_record(LogRecord::Update {
                element,
                set: Vec::new(),
                remove,
            })?;
        }
        Ok(())
    }

    fn delete(&mut self, pos: Position, kind: SlotKind, detach: bool) -> Result<()> {
        match kind {
            SlotKind::Edge => {
                if self.state.edges.contains_key(&pos) {
                    self.stage_record(LogRecord::Delete { element: pos })?;
                }
            }
            SlotKind::Node => {
                if !self.state.nodes.contains_key(&pos) {
                    return Ok(());
                }
                let edges: Vec<Position> = self.state.incident_edges(pos).collect();
                if !edges.is_empty() && !detach {
                    return Err(EngineError::NodeHasEdges(pos.id()));
                }
                for e in edges {
                    self.stage_record(LogRecord::Delete { element: e })?;
                }
                self.stage_record(LogRecord::Delete { element: pos })?;
            }
        }
        Ok(())
    }

    fn insert(&mut self, patterns: &[PathPattern], bound: &Bindings) -> Result<()> {
        let mut local = bound.clone();
        for path in patterns {
            let mut left = self.insert_node(&path.start, &mut local)?;
            for (edge, node) in &path.steps {
                let right = self.insert_node(node, &mut local)?;
                let (from, to) = match edge.direction {
                    Direction::LeftToRight => (left, right),
                    Direction::RightToLeft => (right, left),
                };
                self.insert_edge(&edge.element, from, to, &mut local)?;
                left = right;
            }
        }
        Ok(())
    }

    fn typing(&mut self, pat: &ElementPattern, role: Role<'_>) -> Result<catalog::Typing> {
        let g = self.graph()?;
        let labels = insert_labels(pat)?;
        let props: Vec<(Ident, Value)> = pat
            .props
            .iter()
            .map(|(k, v)| (k.clone(), Value::from(v)))
            .collect();
        let gdef = self
            .state
            .catalog
            .graph(g)
            .cloned()
            .ok_or(EngineError::NoCurrentGraph)?;
        Ok(if gdef.is_open() {
            extend_open_type(self, g, &labels, &props, role)?
        } else {
            validate_closed_insert(&self.state.catalog, &gdef, &labels, &props, role)?
        })
    }

    fn insert_node(&mut self, pat: &ElementPattern, local: &mut Bindings) -> Result<Position> {
        if let Some(alias) = &pat.alias {
            if let Some(&(pos, kind)) = local.get(&alias.canonical()) {
                if kind != SlotKind::Node {
                    return Err(EngineError::AliasKindMismatch(alias.name.clone()));
                }
                if pat.labels.is_some() || !pat.props.is_empty() {
                    return Err(EngineError::BoundAliasRedefined(alias.name.clone()));
                }
                if !self.state.nodes.contains_key(&pos) {
                    return Err(EngineError::EdgeEndpointMissing(alias.name.clone()));
                }
                return Ok(pos);
            }
        }
        let g = self.graph()?;
        let typing = self.typing(pat, Role::Node)?;
        let pos = self.stage_record(LogRecord::Node {
            graph: g,
            types: typing.types,
            props: typing.props,
        })?;
        if let Some(alias) = &pat.alias {
            local.insert(alias.canonical(), (pos, SlotKind::Node));
        }
        Ok(pos)
    }

    fn insert_edge(
        &mut self,
        pat: &ElementPattern,
        leaving: Position,
        arriving: Position,
        local: &mut Bindings,
    ) -> Result<Position> {
        if let Some(alias) = &pat.alias {
            if local.contains_key(&alias.canonical()) {
                return Err(EngineError::BoundAliasRedefined(alias.name.clone()));
            }
        }
        let g = self.graph()?;
        let l_types = self.live_types(leaving)?;
        let a_types = self.live_types(arriving)?;
        let typing = self.typing(
            pat,
            Role::Edge {
                leaving: &l_types,
                arriving: &a_types,
            },
        )?;
        let pos = self.stage_record(LogRecord::Edge {
            graph: g,
            types: typing.types,
            leaving,
            arriving,
            props: typing.props,
        })?;
        if let Some(alias) = &pat.alias {
            local.insert(alias.canonical(), (pos, SlotKind::Edge));
        }
        Ok(pos)
    }
}
