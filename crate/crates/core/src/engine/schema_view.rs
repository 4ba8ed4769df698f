//! The schema graph of a data graph: node types as nodes, constrained edge
//! types as edges, and a `=>` edge per subproperty assertion.

use std::collections::{BTreeMap, BTreeSet};

use im::OrdMap;

use crate::catalog::{Catalog, ElementType};
use crate::types::{Position, Value};

use super::matcher::{SlotKind, View};
use super::state::{DbState, Element};

pub const SUBPROPERTY_LABEL: &str = "=>";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchemaGraph {
    pub nodes: BTreeMap<Position, Element>,
    pub edges: BTreeMap<Position, Element>,
}

/// Types visible from `graph`: its graph type's declarations when closed;
/// otherwise types created in it plus the types of its member elements.
fn graph_types(state: &DbState, graph: Position) -> BTreeSet<Position> {
    let cat = &state.catalog;
    let mut out = BTreeSet::new();
    if let Some(gt) = cat
        .graph(graph)
        .and_then(|g| g.graph_type)
        .and_then(|gt| cat.graph_type(gt))
    {
        out.extend(gt.types.iter().copied());
        return out;
    }
    out.extend(cat.types().filter(|t| t.origin_graph == graph).map(|t| t.pos));
    for el in state.nodes.values().chain(state.edges.values()) {
        if state.is_member(el, graph) {
            out.extend(el.types.iter().copied());
        }
    }
    out
}

fn type_node(t: &ElementType) -> Element {
    let mut props = OrdMap::new();
    for (name, def) in &t.props {
        props.insert(name.clone(), Value::Str(def.tag.name().to_string()));
    }
    // the type's own name wins over a signature entry called `name`
    props.insert("name".to_string(), Value::Str(t.label.canonical.clone()));
    Element {
        pos: t.pos,
        labels: vec![t.label.canonical.clone()],
        types: Vec::new(),
        props,
        graph: Position::HOME_GRAPH,
        endpoints: None,
    }
}

pub fn schema_view(state: &DbState, graph: Position) -> SchemaGraph {
    let cat: &Catalog = &state.catalog;
    let mut included = graph_types(state, graph);
    let assertions: Vec<_> = cat
        .subproperty_assertions()
        .filter(|(sub, _, _)| included.contains(sub))
        .collect();
    let mut as_node: BTreeSet<Position> = BTreeSet::new();
    for (sub, sup, _) in &assertions {
        included.insert(*sup);
        as_node.insert(*sub);
        as_node.insert(*sup);
    }
    for t in included.clone() {
        if let Some((s, tg)) = cat.element_type(t).and_then(ElementType::connecting) {
            included.insert(s);
            included.insert(tg);
        }
    }
    let mut view = SchemaGraph::default();
    for t in included.iter().filter_map(|p| cat.element_type(*p)) {
        if !t.is_edge() || as_node.contains(&t.pos) {
            view.nodes.insert(t.pos, type_node(t));
        }
    }
    for t in included.iter().filter_map(|p| cat.element_type(*p)) {
        if let Some(ends) = t.connecting() {
            let mut el = type_node(t);
            el.endpoints = Some(ends);
            view.edges.insert(t.pos, el);
        }
    }
    for (sub, sup, pos) in assertions {
        view.edges.insert(
            pos,
            Element {
                pos,
                labels: vec![SUBPROPERTY_LABEL.to_string()],
                types: Vec::new(),
                props: OrdMap::unit("name".to_string(), Value::Str(SUBPROPERTY_LABEL.to_string())),
                graph: Position::HOME_GRAPH,
                endpoints: Some((sub, sup)),
            },
        );
    }
    view
}

impl View for SchemaGraph {
    fn get(&self, pos: Position, kind: SlotKind) -> Option<&Element> {
        match kind {
            SlotKind::Node => self.nodes.get(&pos),
            SlotKind::Edge => self.edges.get(&pos),
        }
    }

    fn nodes(&self) -> Vec<Position> {
        self.nodes.keys().copied().collect()
    }

    fn edges(&self) -> Vec<Position> {
        self.edges.keys().copied().collect()
    }

    fn incident(&self, node: Position) -> Vec<Position> {
        self.edges
            .values()
            .filter(|e| e.endpoints.is_some_and(|(l, a)| l == node || a == node))
            .map(|e| e.pos)
            .collect()
    }

    fn closure(&self, label: &str) -> BTreeSet<String> {
        BTreeSet::from([label.to_string()])
    }
}
