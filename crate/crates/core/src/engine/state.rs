use im::{OrdMap, OrdSet};

use crate::catalog::Catalog;
use crate::store::{LogRecord, HEADER_LEN};
use crate::types::{Position, Value};

use super::EngineError;

/// A stored node or edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub pos: Position,
    /// Canonical labels in the order they were written.
    pub labels: Vec<String>,
    pub types: Vec<Position>,
    /// Keyed by canonical property name.
    pub props: OrdMap<String, Value>,
    /// Graph that was current when the element was inserted.
    pub graph: Position,
    /// `(leaving, arriving)` for edges.
    pub endpoints: Option<(Position, Position)>,
}

impl Element {
    pub fn is_edge(&self) -> bool {
        self.endpoints.is_some()
    }
}

/// Everything a transaction reads: the catalog and all live elements, as of
/// committed log end `version`. Cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct DbState {
    pub version: u64,
    pub catalog: Catalog,
    pub nodes: OrdMap<Position, Element>,
    pub edges: OrdMap<Position, Element>,
    /// Live edges incident to each node.
    pub incident: OrdMap<Position, OrdSet<Position>>,
}

impl Default for DbState {
    fn default() -> Self {
        DbState {
            version: HEADER_LEN,
            catalog: Catalog::new(),
            nodes: OrdMap::new(),
            edges: OrdMap::new(),
            incident: OrdMap::new(),
        }
    }
}

fn inconsistent(pos: Position, what: impl std::fmt::Display) -> EngineError {
    EngineError::Inconsistent(format!("record at {pos}: {what}"))
}

impl DbState {
    pub fn element(&self, pos: Position) -> Option<&Element> {
        self.nodes.get(&pos).or_else(|| self.edges.get(&pos))
    }

    /// Whether `el` belongs to `graph`: inserted into it, or carrying a label
    /// declared by its graph type.
    pub fn is_member(&self, el: &Element, graph: Position) -> bool {
        if el.graph == graph {
            return true;
        }
        let Some(gt) = self
            .catalog
            .graph(graph)
            .and_then(|g| g.graph_type)
            .and_then(|gt| self.catalog.graph_type(gt))
        else {
            return false;
        };
        el.types.iter().any(|t| gt.types.contains(t))
    }

    pub fn incident_edges(&self, node: Position) -> impl Iterator<Item = Position> + '_ {
        self.incident
            .get(&node)
            .into_iter()
            .flat_map(|s| s.iter().copied())
    }

    fn resolve_props(
        &self,
        pos: Position,
        props: &[(Position, Value)],
    ) -> Result<Vec<(String, Value)>, EngineError> {
        props
            .iter()
            .map(|(p, v)| {
                let def = self
                    .catalog
                    .property_def(*p)
                    .ok_or_else(|| inconsistent(pos, format!("missing property definition {p:?}")))?;
                Ok((def.name.clone(), v.clone()))
            })
            .collect()
    }

    fn build(
        &self,
        pos: Position,
        graph: Position,
        types: &[Position],
        props: &[(Position, Value)],
        endpoints: Option<(Position, Position)>,
    ) -> Result<Element, EngineError> {
        if self.catalog.graph(graph).is_none() {
            return Err(inconsistent(pos, format!("missing graph {graph:?}")));
        }
        let labels = types
            .iter()
            .map(|t| {
                self.catalog
                    .element_type(*t)
                    .map(|t| t.label.canonical.clone())
                    .ok_or_else(|| inconsistent(pos, format!("missing type {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Element {
            pos,
            labels,
            types: types.to_vec(),
            props: self.resolve_props(pos, props)?.into_iter().collect(),
            graph,
            endpoints,
        })
    }

    /// Applies one log record at `pos`. Used both for live staging and replay.
    pub fn apply(&mut self, pos: Position, record: &LogRecord) -> Result<(), EngineError> {
        match record {
            LogRecord::Node {
                graph,
                types,
                props,
            } => {
                let el = self.build(pos, *graph, types, props, None)?;
                self.nodes.insert(pos, el);
            }
            LogRecord::Edge {
                graph,
                types,
                leaving,
                arriving,
                props,
            } => {
                for end in [leaving, arriving] {
                    if !self.nodes.contains_key(end) {
                        return Err(inconsistent(pos, format!("edge endpoint {end:?} is not a live node")));
                    }
                }
                let el = self.build(pos, *graph, types, props, Some((*leaving, *arriving)))?;
                self.edges.insert(pos, el);
                for end in [leaving, arriving] {
                    self.incident.entry(*end).or_default().insert(pos);
                }
            }
            LogRecord::Update {
                element,
                set,
                remove,
            } => {
                let set = self.resolve_props(pos, set)?;
                let removed: Vec<String> = remove
                    .iter()
                    .map(|p| {
                        self.catalog
                            .property_def(*p)
                            .map(|d| d.name.clone())
                            .ok_or_else(|| inconsistent(pos, format!("missing property definition {p:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                let el = match self.nodes.get_mut(element) {
                    Some(el) => el,
                    None => self
                        .edges
                        .get_mut(element)
                        .ok_or_else(|| inconsistent(pos, format!("update of missing element {element:?}")))?,
                };
                for name in removed {
                    el.props.remove(&name);
                }
                for (name, v) in set {
                    el.props.insert(name, v);
                }
            }
            LogRecord::Delete { element } => {
                if let Some(edge) = self.edges.remove(element) {
                    let (l, a) = edge.endpoints.expect("edges have endpoints");
                    for end in [l, a] {
                        if let Some(set) = self.incident.get_mut(&end) {
                            set.remove(element);
                        }
                    }
                } else if self.nodes.contains_key(element) {
                    if self.incident_edges(*element).next().is_some() {
                        return Err(inconsistent(pos, "deleted node still has edges"));
                    }
                    self.nodes.remove(element);
                    self.incident.remove(element);
                } else {
                    return Err(inconsistent(pos, format!("delete of missing element {element:?}")));
                }
            }
            other => self.catalog.apply(pos, other)?,
        }
        Ok(())
    }
}
