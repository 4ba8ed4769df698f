//! Homomorphic pattern matching by backtracking over slots in order of first
//! appearance.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{Direction, ElementPattern, Ident, LabelExpr, PathPattern, PropMap};
use crate::types::{Position, Value};

use super::result::Row;
use super::state::{DbState, Element};
use super::EngineError;

/// A graph the matcher can search.
pub(crate) trait View {
    /// A node or edge by position; a schema type can be both.
    fn get(&self, pos: Position, kind: SlotKind) -> Option<&Element>;
    /// Member nodes in ascending order.
    fn nodes(&self) -> Vec<Position>;
    fn edges(&self) -> Vec<Position>;
    /// Member edges incident to a node.
    fn incident(&self, node: Position) -> Vec<Position>;
    /// Labels that satisfy `label` under subproperty saturation.
    fn closure(&self, label: &str) -> BTreeSet<String>;
}

/// The members of one graph.
pub(crate) struct InstanceView<'a> {
    pub state: &'a DbState,
    pub graph: Position,
}

impl InstanceView<'_> {
    fn member(&self, el: &Element) -> bool {
        self.state.is_member(el, self.graph)
    }
}

impl View for InstanceView<'_> {
    fn get(&self, pos: Position, kind: SlotKind) -> Option<&Element> {
        match kind {
            SlotKind::Node => self.state.nodes.get(&pos),
            SlotKind::Edge => self.state.edges.get(&pos),
        }
    }

    fn nodes(&self) -> Vec<Position> {
        self.state
            .nodes
            .values()
            .filter(|e| self.member(e))
            .map(|e| e.pos)
            .collect()
    }

    fn edges(&self) -> Vec<Position> {
        self.state
            .edges
            .values()
            .filter(|e| self.member(e))
            .map(|e| e.pos)
            .collect()
    }

    fn incident(&self, node: Position) -> Vec<Position> {
        self.state
            .incident_edges(node)
            .filter(|e| self.state.edges.get(e).is_some_and(|e| self.member(e)))
            .collect()
    }

    fn closure(&self, label: &str) -> BTreeSet<String> {
        self.state.catalog.label_closure(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SlotKind {
    Node,
    Edge,
}

#[derive(Debug, Clone)]
pub(crate) struct Slot<'p> {
    pub alias: Option<&'p Ident>,
    pub kind: SlotKind,
    filters: Vec<&'p ElementPattern>,
}

/// Patterns flattened into slots and `(leaving, edge, arriving)` hops.
#[derive(Debug, Clone)]
pub(crate) struct Compiled<'p> {
    pub slots: Vec<Slot<'p>>,
    hops: Vec<(usize, usize, usize)>,
}

impl<'p> Compiled<'p> {
    pub fn new(patterns: &'p [PathPattern]) -> Result<Self, EngineError> {
        let mut c = Compiled {
            slots: Vec::new(),
            hops: Vec::new(),
        };
        let mut by_alias: BTreeMap<String, usize> = BTreeMap::new();
        for path in patterns {
            let mut left = c.slot(&mut by_alias, &path.start, SlotKind::Node)?;
            for (edge, node) in &path.steps {
                let e = c.slot(&mut by_alias, &edge.element, SlotKind::Edge)?;
                let right = c.slot(&mut by_alias, node, SlotKind::Node)?;
                c.hops.push(match edge.direction {
                    Direction::LeftToRight => (left, e, right),
                    Direction::RightToLeft => (right, e, left),
                });
                left = right;
            }
        }
        Ok(c)
    }

    fn slot(
        &mut self,
        by_alias: &mut BTreeMap<String, usize>,
        pat: &'p ElementPattern,
        kind: SlotKind,
    ) -> Result<usize, EngineError> {
        if let Some(alias) = &pat.alias {
            if let Some(&i) = by_alias.get(&alias.canonical()) {
                if self.slots[i].kind != kind {
                    return Err(EngineError::AliasKindMismatch(alias.name.clone()));
                }
                self.slots[i].filters.push(pat);
                return Ok(i);
            }
            by_alias.insert(alias.canonical(), self.slots.len());
        }
        self.slots.push(Slot {
            alias: pat.alias.as_ref(),
            kind,
            filters: vec![pat],
        });
        Ok(self.slots.len() - 1)
    }

    /// Named slots in order of first appearance.
    pub fn named(&self) -> impl Iterator<Item = (usize, &'p Ident)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.alias.map(|a| (i, a)))
    }

    pub fn slot_of(&self, alias: &Ident) -> Option<usize> {
        let key = alias.canonical();
        self.named()
            .find(|(_, a)| a.canonical() == key)
            .map(|(i, _)| i)
    }

    /// Labels whose elements can change this pattern's result when written
    /// concurrently, or `None` when any element can.
    pub fn read_labels(&self, view: &dyn View) -> Option<BTreeSet<String>> {
        let in_hop = |i| self.hops.iter().any(|&(l, e, a)| l == i || e == i || a == i);
        let mut out = BTreeSet::new();
        for (i, s) in self.slots.iter().enumerate() {
            let mut labelled = false;
            for f in &s.filters {
                if let Some(expr) = &f.labels {
                    labelled = true;
                    collect_labels(expr, &mut |l| out.extend(view.closure(l)));
                }
            }
            let filtered = s.filters.iter().any(|f| !f.props.is_empty());
            if !labelled && (filtered || !in_hop(i)) {
                return None;
            }
        }
        Some(out)
    }

    /// All assignments, ordered by the position tuple.
    pub fn run(&self, view: &dyn View) -> Vec<Row> {
        let mut closures = BTreeMap::new();
        for s in &self.slots {
            for f in &s.filters {
                if let Some(expr) = &f.labels {
                    collect_labels(expr, &mut |l| {
                        closures
                            .entry(l.to_string())
                            .or_insert_with(|| view.closure(l));
                    });
                }
            }
        }
        let mut search = Search {
            c: self,
            view,
            closures,
            row: Vec::with_capacity(self.slots.len()),
            out: Vec::new(),
            all_nodes: None,
            all_edges: None,
        };
        search.extend();
        let mut out = search.out;
        out.sort();
        out
    }
}

fn collect_labels(expr: &LabelExpr, f: &mut impl FnMut(&str)) {
    match expr {
        LabelExpr::Label(l) => f(&l.canonical()),
        LabelExpr::And(a, b) | LabelExpr::Or(a, b) => {
            collect_labels(a, f);
            collect_labels(b, f);
        }
    }
}

pub(crate) fn label_matches(
    expr: &LabelExpr,
    labels: &[String],
    closure: &dyn Fn(&str) -> BTreeSet<String>,
) -> bool {
    match expr {
        LabelExpr::Label(l) => {
            let c = closure(&l.canonical());
            labels.iter().any(|x| c.contains(x))
        }
        LabelExpr::And(a, b) => label_matches(a, labels, closure) && label_matches(b, labels, closure),
        LabelExpr::Or(a, b) => label_matches(a, labels, closure) || label_matches(b, labels, closure),
    }
}

pub(crate) fn props_match(props: &PropMap, el: &Element) -> bool {
    props.iter().all(|(k, lit)| {
        el.props
            .get(&k.canonical())
            .is_some_and(|v| v.matches(&Value::from(lit)))
    })
}

struct Search<'a, 'p> {
    c: &'a Compiled<'p>,
    view: &'a dyn View,
    closures: BTreeMap<String, BTreeSet<String>>,
    row: Row,
    out: Vec<Row>,
    all_nodes: Option<Vec<Position>>,
    all_edges: Option<Vec<Position>>,
}

impl Search<'_, '_> {
    fn candidates(&mut self, i: usize) -> Vec<Position> {
        let bound = self.row.len();
        match self.c.slots[i].kind {
            SlotKind::Edge => {
                for &(l, e, a) in &self.c.hops {
                    if e != i {
                        continue;
                    }
                    if l < bound {
                        let node = self.row[l];
                        return self.edges_at(node, true);
                    }
                    if a < bound {
                        let node = self.row[a];
                        return self.edges_at(node, false);
                    }
                }
                self.all_edges
                    .get_or_insert_with(|| self.view.edges())
                    .clone()
            }
            SlotKind::Node => {
                for &(l, e, a) in &self.c.hops {
                    if e < bound && (l == i || a == i) {
                        let Some((from, to)) =
                            self.view.get(self.row[e], SlotKind::Edge).and_then(|el| el.endpoints)
                        else {
                            return Vec::new();
                        };
                        let p = if l == i { from } else { to };
                        return if self.is_member_node(p) { vec![p] } else { Vec::new() };
                    }
                }
                self.all_nodes
                    .get_or_insert_with(|| self.view.nodes())
                    .clone()
            }
        }
    }

    fn is_member_node(&mut self, p: Position) -> bool {
        self.all_nodes
            .get_or_insert_with(|| self.view.nodes())
            .binary_search(&p)
            .is_ok()
    }

    fn edges_at(&self, node: Position, leaving: bool) -> Vec<Position> {
        let mut v: Vec<Position> = self
            .view
            .incident(node)
            .into_iter()
            .filter(|e| {
                self.view
                    .get(*e, SlotKind::Edge)
                    .and_then(|el| el.endpoints)
                    .is_some_and(|(l, a)| if leaving { l == node } else { a == node })
            })
            .collect();
        v.sort();
        v
    }

    fn accepts(&self, i: usize, pos: Position) -> bool {
        let Some(el) = self.view.get(pos, self.c.slots[i].kind) else {
            return false;
        };
        let closure = |l: &str| {
            self.closures
                .get(l)
                .cloned()
                .unwrap_or_else(|| BTreeSet::from([l.to_string()]))
        };
        let filters_ok = self.c.slots[i].filters.iter().all(|f| {
            f.labels
                .as_ref()
                .is_none_or(|e| label_matches(e, &el.labels, &closure))
                && props_match(&f.props, el)
        });
        if !filters_ok {
            return false;
        }
        // hops completed by this slot
        self.c.hops.iter().all(|&(l, e, a)| {
            let max = l.max(e).max(a);
            if max != i {
                return true;
            }
            let at = |s: usize| if s == i { pos } else { self.row[s] };
            self.view
                .get(at(e), SlotKind::Edge)
                .and_then(|el| el.endpoints)
                .is_some_and(|(from, to)| from == at(l) && to == at(a))
        })
    }

    fn extend(&mut self) {
        let i = self.row.len();
        if i == self.c.slots.len() {
            self.out.push(self.row.clone());
            return;
        }
        for pos in self.candidates(i) {
            if self.accepts(i, pos) {
                self.row.push(pos);
                self.extend();
                self.row.pop();
            }
        }
    }
}
