//! Statement AST and its pretty-printer. Printing any statement and parsing the
//! output again yields an equal AST.

use std::fmt::{self, Display, Formatter, Write as _};

use super::lexer::Keyword;

/// An identifier as written. Unquoted identifiers compare case-insensitively,
/// quoted ones exactly; see [`Ident::canonical`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ident {
    pub name: String,
    pub quoted: bool,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            quoted: false,
        }
    }

    pub fn quoted(name: impl Into<String>) -> Self {
        Ident {
            name: name.into(),
            quoted: true,
        }
    }

    pub fn canonical(&self) -> String {
        canonical_name(&self.name, self.quoted)
    }
}

pub fn canonical_name(spelling: &str, quoted: bool) -> String {
    if quoted {
        spelling.to_string()
    } else {
        spelling.to_lowercase()
    }
}

fn needs_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    let first_ok = chars
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_');
    !first_ok
        || !name.chars().all(|c| c.is_alphanumeric() || c == '_')
        || Keyword::lookup(name).is_some()
        || name.eq_ignore_ascii_case("http")
        || name.eq_ignore_ascii_case("https")
}

impl Display for Ident {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.quoted || needs_quotes(&self.name) {
            f.write_char('"')?;
            f.write_str(&self.name.replace('"', "\"\""))?;
            f.write_char('"')
        } else {
            f.write_str(&self.name)
        }
    }
}

/// A slash-separated catalog path such as `/yc/Fraud`. The empty path is the root `/`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CatalogPath(pub Vec<Ident>);

impl CatalogPath {
    pub fn root() -> Self {
        CatalogPath(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// Path extended by one unquoted segment.
    pub fn child(&self, name: &str) -> CatalogPath {
        let mut segs = self.0.clone();
        segs.push(Ident::new(name));
        CatalogPath(segs)
    }

    /// Path with its last segment dropped.
    pub fn parent(&self) -> CatalogPath {
        let mut segs = self.0.clone();
        segs.pop();
        CatalogPath(segs)
    }

    /// Canonical key: `/seg/seg` with each segment in canonical form.
    pub fn key(&self) -> String {
        if self.0.is_empty() {
            return "/".to_string();
        }
        let mut out = String::new();
        for seg in &self.0 {
            out.push('/');
            out.push_str(&seg.canonical());
        }
        out
    }
}

impl Display for CatalogPath {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for seg in &self.0 {
            write!(f, "/{seg}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => f.write_str("NULL"),
            Literal::Bool(true) => f.write_str("TRUE"),
            Literal::Bool(false) => f.write_str("FALSE"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => {
                let s = format!("{x:?}");
                if s.contains(['.', 'e', 'E']) || !x.is_finite() {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
            Literal::Str(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

/// Primitive property type tags used in type declarations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeTag {
    String,
    Int,
    Float,
    Bool,
}

impl TypeTag {
    pub fn name(self) -> &'static str {
        match self {
            TypeTag::String => "string",
            TypeTag::Int => "int",
            TypeTag::Float => "float",
            TypeTag::Bool => "bool",
        }
    }

    pub fn from_name(name: &str) -> Option<TypeTag> {
        match name.to_ascii_lowercase().as_str() {
            "string" | "varchar" | "char" => Some(TypeTag::String),
            "int" | "integer" | "int64" => Some(TypeTag::Int),
            "float" | "double" | "real" | "float64" => Some(TypeTag::Float),
            "bool" | "boolean" => Some(TypeTag::Bool),
            _ => None,
        }
    }
}

/// Label expression. `:a:b` parses to the same tree as `:a&b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelExpr {
    Label(Ident),
    And(Box<LabelExpr>, Box<LabelExpr>),
    Or(Box<LabelExpr>, Box<LabelExpr>),
}

impl LabelExpr {
    /// The labels of a pure conjunction, or `None` if the expression contains `|`.
    pub fn conjuncts(&self) -> Option<Vec<&Ident>> {
        match self {
            LabelExpr::Label(l) => Some(vec![l]),
            LabelExpr::And(a, b) => {
                let mut v = a.conjuncts()?;
                v.extend(b.conjuncts()?);
                Some(v)
            }
            LabelExpr::Or(..) => None,
        }
    }

    fn fmt_prec(&self, f: &mut Formatter<'_>, parent_and: bool) -> fmt::Result {
        match self {
            LabelExpr::Label(l) => write!(f, "{l}"),
            LabelExpr::And(a, b) => {
                a.fmt_prec(f, true)?;
                f.write_char('&')?;
                // right operand parenthesized to keep left associativity
                if matches!(**b, LabelExpr::And(..)) {
                    f.write_char('(')?;
                    b.fmt_prec(f, false)?;
                    f.write_char(')')
                } else {
                    b.fmt_prec(f, true)
                }
            }
            LabelExpr::Or(a, b) => {
                if parent_and {
                    f.write_char('(')?;
                }
                a.fmt_prec(f, false)?;
                f.write_char('|')?;
                if matches!(**b, LabelExpr::Or(..)) {
                    f.write_char('(')?;
                    b.fmt_prec(f, false)?;
                    f.write_char(')')?;
                } else {
                    b.fmt_prec(f, false)?;
                }
                if parent_and {
                    f.write_char(')')?;
                }
                Ok(())
            }
        }
    }
}

impl Display for LabelExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

pub type PropMap = Vec<(Ident, Literal)>;

fn fmt_props(f: &mut Formatter<'_>, props: &PropMap) -> fmt::Result {
    f.write_char('{')?;
    for (i, (k, v)) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{k}: {v}")?;
    }
    f.write_char('}')
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElementPattern {
    pub alias: Option<Ident>,
    pub labels: Option<LabelExpr>,
    pub props: PropMap,
}

impl ElementPattern {
    fn fmt_filler(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if let Some(a) = &self.alias {
            write!(f, "{a}")?;
        }
        if let Some(l) = &self.labels {
            if self.alias.is_some() {
                f.write_char(' ')?;
            }
            write!(f, ":{l}")?;
        }
        if !self.props.is_empty() {
            if self.alias.is_some() || self.labels.is_some() {
                f.write_char(' ')?;
            }
            fmt_props(f, &self.props)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `-[ ]->`
    LeftToRight,
    /// `<-[ ]-`
    RightToLeft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgePattern {
    pub element: ElementPattern,
    pub direction: Direction,
}

/// `n` node patterns joined by `n - 1` edge patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPattern {
    pub start: ElementPattern,
    pub steps: Vec<(EdgePattern, ElementPattern)>,
}

impl PathPattern {
    pub fn nodes(&self) -> impl Iterator<Item = &ElementPattern> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, n)| n))
    }
}

impl Display for PathPattern {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('(')?;
        self.start.fmt_filler(f)?;
        f.write_char(')')?;
        for (edge, node) in &self.steps {
            match edge.direction {
                Direction::LeftToRight => {
                    f.write_str("-[")?;
                    edge.element.fmt_filler(f)?;
                    f.write_str("]->")?;
                }
                Direction::RightToLeft => {
                    f.write_str("<-[")?;
                    edge.element.fmt_filler(f)?;
                    f.write_str("]-")?;
                }
            }
            f.write_char('(')?;
            node.fmt_filler(f)?;
            f.write_char(')')?;
        }
        Ok(())
    }
}

fn fmt_patterns(f: &mut Formatter<'_>, patterns: &[PathPattern]) -> fmt::Result {
    for (i, p) in patterns.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{p}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertySpec {
    pub name: Ident,
    pub tag: TypeTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTypeSpec {
    pub label: Ident,
    pub props: Vec<PropertySpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTypeSpec {
    pub label: Ident,
    pub props: Vec<PropertySpec>,
    pub source: Ident,
    pub target: Ident,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphTypeSpec {
    pub nodes: Vec<NodeTypeSpec>,
    pub edges: Vec<EdgeTypeSpec>,
}

fn fmt_prop_specs(f: &mut Formatter<'_>, props: &[PropertySpec]) -> fmt::Result {
    f.write_str(" {")?;
    for (i, p) in props.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{} {}", p.name, p.tag.name())?;
    }
    f.write_char('}')
}

impl Display for GraphTypeSpec {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('{')?;
        let mut first = true;
        for n in &self.nodes {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "NODE {}", n.label)?;
            if !n.props.is_empty() {
                fmt_prop_specs(f, &n.props)?;
            }
        }
        for e in &self.edges {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "DIRECTED EDGE {}", e.label)?;
            if !e.props.is_empty() {
                fmt_prop_specs(f, &e.props)?;
            }
            write!(f, " CONNECTING ({}->{})", e.source, e.target)?;
        }
        f.write_char('}')
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    /// `ANY`: an open graph.
    Any,
    /// `:: /path` or `TYPED /path`: closed over a named graph type.
    Typed(CatalogPath),
    /// Closed over an inline graph type.
    Inline(GraphTypeSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphTarget {
    Path(CatalogPath),
    Url(String),
}

/// Property designator after `alias.`; `@id` is the position pseudo-property.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertyRef {
    Named(Ident),
    Id,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyAccess {
    pub alias: Ident,
    pub property: PropertyRef,
}

impl Display for PropertyAccess {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.property {
            PropertyRef::Named(p) => write!(f, "{}.{}", self.alias, p),
            PropertyRef::Id => write!(f, "{}@id", self.alias),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReturnItem {
    Alias(Ident),
    Property(PropertyAccess),
}

impl Display for ReturnItem {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ReturnItem::Alias(a) => write!(f, "{a}"),
            ReturnItem::Property(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub target: PropertyAccess,
    pub value: Literal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dependent {
    Return(Vec<ReturnItem>),
    Insert(Vec<PathPattern>),
    Set(Vec<Assignment>),
    Remove(Vec<PropertyAccess>),
    Delete { aliases: Vec<Ident>, detach: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    CreateSchema(CatalogPath),
    CreateGraphType {
        path: CatalogPath,
        spec: GraphTypeSpec,
    },
    CreateGraph {
        path: CatalogPath,
        kind: GraphKind,
    },
    UseGraph(GraphTarget),
    Insert(Vec<PathPattern>),
    Match {
        patterns: Vec<PathPattern>,
        dependent: Option<Dependent>,
    },
    MatchSchema {
        patterns: Vec<PathPattern>,
        items: Option<Vec<ReturnItem>>,
    },
    InsertSchema {
        sub: Ident,
        sup: Ident,
    },
    Begin,
    Commit,
    Rollback,
}

fn fmt_list<T: Display>(f: &mut Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl Display for Dependent {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Dependent::Return(items) => {
                f.write_str("RETURN ")?;
                fmt_list(f, items)
            }
            Dependent::Insert(p) => {
                f.write_str("INSERT ")?;
                fmt_patterns(f, p)
            }
            Dependent::Set(assigns) => {
                f.write_str("SET ")?;
                for (i, a) in assigns.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{} = {}", a.target, a.value)?;
                }
                Ok(())
            }
            Dependent::Remove(targets) => {
                f.write_str("REMOVE ")?;
                fmt_list(f, targets)
            }
            Dependent::Delete { aliases, detach } => {
                if *detach {
                    f.write_str("DETACH ")?;
                }
                f.write_str("DELETE ")?;
                fmt_list(f, aliases)
            }
        }
    }
}

impl Display for Statement {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Statement::CreateSchema(p) => write!(f, "CREATE SCHEMA {p}"),
            Statement::CreateGraphType { path, spec } => {
                write!(f, "CREATE GRAPH TYPE {path} {spec}")
            }
            Statement::CreateGraph { path, kind } => match kind {
                GraphKind::Any => write!(f, "CREATE GRAPH {path} ANY"),
                GraphKind::Typed(t) => write!(f, "CREATE GRAPH {path} :: {t}"),
                GraphKind::Inline(spec) => write!(f, "CREATE GRAPH {path} {spec}"),
            },
            Statement::UseGraph(GraphTarget::Path(p)) => write!(f, "USE GRAPH {p}"),
            Statement::UseGraph(GraphTarget::Url(u)) => write!(f, "USE GRAPH ({u})"),
            Statement::Insert(p) => {
                f.write_str("INSERT ")?;
                fmt_patterns(f, p)
            }
            Statement::Match {
                patterns,
                dependent,
            } => {
                f.write_str("MATCH ")?;
                fmt_patterns(f, patterns)?;
                if let Some(d) = dependent {
                    write!(f, " {d}")?;
                }
                Ok(())
            }
            Statement::MatchSchema { patterns, items } => {
                f.write_str("MATCH SCHEMA ")?;
                fmt_patterns(f, patterns)?;
                if let Some(items) = items {
                    f.write_str(" RETURN ")?;
                    fmt_list(f, items)?;
                }
                Ok(())
            }
            Statement::InsertSchema { sub, sup } => {
                write!(f, "INSERT SCHEMA [:{sub}=>:{sup}]")
            }
            Statement::Begin => f.write_str("BEGIN"),
            Statement::Commit => f.write_str("COMMIT"),
            Statement::Rollback => f.write_str("ROLLBACK"),
        }
    }
}

/// Writes an indented tree view of a statement (the `--parse-only` output).
pub fn write_tree(stmt: &Statement, out: &mut String) {
    fn line(out: &mut String, depth: usize, text: impl Display) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        let _ = writeln!(out, "{text}");
    }
    fn element(out: &mut String, depth: usize, kind: &str, e: &ElementPattern) {
        let mut desc = kind.to_string();
        if let Some(a) = &e.alias {
            let _ = write!(desc, " alias={a}");
        }
        if let Some(l) = &e.labels {
            let _ = write!(desc, " labels={l}");
        }
        line(out, depth, desc);
        for (k, v) in &e.props {
            line(out, depth + 1, format!("prop {k} = {v}"));
        }
    }
    fn patterns(out: &mut String, depth: usize, ps: &[PathPattern]) {
        for p in ps {
            line(out, depth, "Path");
            element(out, depth + 1, "Node", &p.start);
            for (edge, node) in &p.steps {
                let dir = match edge.direction {
                    Direction::LeftToRight => "Edge ->",
                    Direction::RightToLeft => "Edge <-",
                };
                element(out, depth + 1, dir, &edge.element);
                element(out, depth + 1, "Node", node);
            }
        }
    }
    fn spec(out: &mut String, depth: usize, s: &GraphTypeSpec) {
        for n in &s.nodes {
            line(out, depth, format!("NodeType {}", n.label));
            for p in &n.props {
                line(out, depth + 1, format!("{} {}", p.name, p.tag.name()));
            }
        }
        for e in &s.edges {
            line(
                out,
                depth,
                format!("EdgeType {} ({}->{})", e.label, e.source, e.target),
            );
            for p in &e.props {
                line(out, depth + 1, format!("{} {}", p.name, p.tag.name()));
            }
        }
    }
    match stmt {
        Statement::CreateSchema(p) => line(out, 0, format!("CreateSchema {p}")),
        Statement::CreateGraphType { path, spec: s } => {
            line(out, 0, format!("CreateGraphType {path}"));
            spec(out, 1, s);
        }
        Statement::CreateGraph { path, kind } => match kind {
            GraphKind::Any => line(out, 0, format!("CreateGraph {path} ANY")),
            GraphKind::Typed(t) => line(out, 0, format!("CreateGraph {path} TYPED {t}")),
            GraphKind::Inline(s) => {
                line(out, 0, format!("CreateGraph {path} INLINE"));
                spec(out, 1, s);
            }
        },
        Statement::UseGraph(GraphTarget::Path(p)) => line(out, 0, format!("UseGraph {p}")),
        Statement::UseGraph(GraphTarget::Url(u)) => line(out, 0, format!("UseGraph url={u}")),
        Statement::Insert(ps) => {
            line(out, 0, "Insert");
            patterns(out, 1, ps);
        }
        Statement::Match {
            patterns: ps,
            dependent,
        } => {
            line(out, 0, "Match");
            patterns(out, 1, ps);
            if let Some(d) = dependent {
                match d {
                    Dependent::Insert(ps) => {
                        line(out, 1, "Insert");
                        patterns(out, 2, ps);
                    }
                    other => line(out, 1, other),
                }
            }
        }
        Statement::MatchSchema { patterns: ps, items } => {
            line(out, 0, "MatchSchema");
            patterns(out, 1, ps);
            if let Some(items) = items {
                line(out, 1, Dependent::Return(items.clone()));
            }
        }
        Statement::InsertSchema { sub, sup } => {
            line(out, 0, format!("InsertSchema {sub} => {sup}"))
        }
        Statement::Begin => line(out, 0, "Begin"),
        Statement::Commit => line(out, 0, "Commit"),
        Statement::Rollback => line(out, 0, "Rollback"),
    }
}
