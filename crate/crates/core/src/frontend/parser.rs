use super::ast::*;
use super::lexer::{end_position, tokenize, Keyword, Punct, Token, TokenKind};
use super::SyntaxError;

/// A statement together with the source position of its first token.
#[derive(Debug, Clone, PartialEq)]
pub struct Located<T> {
    pub node: T,
    pub line: usize,
    pub column: usize,
}

/// Parses a `;`-separated script. Empty statements are skipped.
pub fn parse_script(text: &str) -> Result<Vec<Statement>, SyntaxError> {
    Ok(parse_script_located(text)?
        .into_iter()
        .map(|l| l.node)
        .collect())
}

pub fn parse_script_located(text: &str) -> Result<Vec<Located<Statement>>, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        eof: end_position(text),
    };
    let mut out = Vec::new();
    loop {
        while p.eat_punct(Punct::Semicolon) {}
        let Some(first) = p.peek() else { break };
        let (line, column) = (first.line, first.column);
        let stmt = p.statement()?;
        out.push(Located {
            node: stmt,
            line,
            column,
        });
        if p.peek().is_some() && !p.eat_punct(Punct::Semicolon) {
            return Err(p.unexpected("`;`"));
        }
    }
    Ok(out)
}

/// Parses exactly one statement (a trailing `;` is allowed).
pub fn parse_statement(text: &str) -> Result<Statement, SyntaxError> {
    let mut stmts = parse_script(text)?;
    match stmts.len() {
        1 => Ok(stmts.remove(0)),
        n => {
            let (line, column) = end_position(text);
            Err(SyntaxError::Parse {
                line,
                column,
                expected: "exactly one statement".into(),
                found: format!("{n} statements"),
            })
        }
    }
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    eof: (usize, usize),
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn unexpected(&self, expected: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError::Parse {
                line: t.line,
                column: t.column,
                expected: expected.to_string(),
                found: t.to_string(),
            },
            None => SyntaxError::Parse {
                line: self.eof.0,
                column: self.eof.1,
                expected: expected.to_string(),
                found: "end of input".into(),
            },
        }
    }

    fn unsupported(&self, what: &str) -> SyntaxError {
        let (line, column) = self
            .peek()
            .map(|t| (t.line, t.column))
            .unwrap_or(self.eof);
        SyntaxError::Unsupported {
            line,
            column,
            feature: what.to_string(),
        }
    }

    fn at_punct(&self, p: Punct) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_keyword(&self, k: Keyword) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(k))
    }

    fn eat_punct(&mut self, p: Punct) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, k: Keyword) -> bool {
        if self.at_keyword(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: Punct) -> Result<(), SyntaxError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", p.as_str())))
        }
    }

    fn expect_keyword(&mut self, k: Keyword) -> Result<(), SyntaxError> {
        if self.eat_keyword(k) {
            Ok(())
        } else {
            Err(self.unexpected(k.as_str()))
        }
    }

    /// Contextual (non-reserved) word.
    fn eat_word(&mut self, word: &str) -> bool {
        let hit = self
            .peek()
            .is_some_and(|t| t.kind == TokenKind::Identifier && t.text.eq_ignore_ascii_case(word));
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(|t| {
            matches!(
                t.kind,
                TokenKind::Identifier | TokenKind::QuotedIdentifier
            )
        })
    }

    fn ident(&mut self) -> Result<Ident, SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(Ident::new(t.text.clone()))
            }
            Some(t) if t.kind == TokenKind::QuotedIdentifier => {
                self.pos += 1;
                Ok(Ident::quoted(t.text.clone()))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn statement(&mut self) -> Result<Statement, SyntaxError> {
        let Some(tok) = self.peek() else {
            return Err(self.unexpected("statement"));
        };
        match tok.kind {
            TokenKind::Keyword(Keyword::Create) => {
                self.pos += 1;
                self.create()
            }
            TokenKind::Keyword(Keyword::Use) => {
                self.pos += 1;
                self.expect_keyword(Keyword::Graph)?;
                self.use_graph()
            }
            TokenKind::Keyword(Keyword::Insert) => {
                self.pos += 1;
                if self.eat_keyword(Keyword::Schema) {
                    self.insert_schema()
                } else {
                    Ok(Statement::Insert(self.path_patterns()?))
                }
            }
            TokenKind::Keyword(Keyword::Match) => {
                self.pos += 1;
                if self.eat_keyword(Keyword::Schema) {
                    let patterns = self.path_patterns()?;
                    let items = if self.eat_keyword(Keyword::Return) {
                        Some(self.return_items()?)
                    } else {
                        None
                    };
                    Ok(Statement::MatchSchema { patterns, items })
                } else {
                    let patterns = self.path_patterns()?;
                    let dependent = self.dependent()?;
                    Ok(Statement::Match {
                        patterns,
                        dependent,
                    })
                }
            }
            TokenKind::Keyword(Keyword::Begin) => {
                self.pos += 1;
                Ok(Statement::Begin)
            }
            TokenKind::Keyword(Keyword::Commit) => {
                self.pos += 1;
                Ok(Statement::Commit)
            }
            TokenKind::Keyword(Keyword::Rollback) => {
                self.pos += 1;
                Ok(Statement::Rollback)
            }
            TokenKind::Identifier if tok.text.eq_ignore_ascii_case("where") => {
                Err(self.unsupported("WHERE clause"))
            }
            _ => Err(self.unexpected("statement")),
        }
    }

    fn create(&mut self) -> Result<Statement, SyntaxError> {
        if self.eat_keyword(Keyword::Schema) {
            return Ok(Statement::CreateSchema(self.path()?));
        }
        self.expect_keyword(Keyword::Graph)?;
        if self.eat_keyword(Keyword::Type) {
            let path = self.path()?;
            let spec = self.graph_type_spec()?;
            return Ok(Statement::CreateGraphType { path, spec });
        }
        let path = self.path()?;
        let kind = if self.eat_keyword(Keyword::Any) {
            GraphKind::Any
        } else if self.at_punct(Punct::LBrace) {
            GraphKind::Inline(self.graph_type_spec()?)
        } else if self.eat_punct(Punct::DoubleColon) || self.eat_word("typed") {
            GraphKind::Typed(self.path()?)
        } else {
            return Err(self.unexpected("ANY, `::`, TYPED or a graph type body"));
        };
        Ok(Statement::CreateGraph { path, kind })
    }

    fn path(&mut self) -> Result<CatalogPath, SyntaxError> {
        self.expect_punct(Punct::Slash)?;
        let mut segs = Vec::new();
        if !self.at_ident() {
            return Ok(CatalogPath::root());
        }
        segs.push(self.ident()?);
        while self.eat_punct(Punct::Slash) {
            segs.push(self.ident()?);
        }
        Ok(CatalogPath(segs))
    }

    fn use_graph(&mut self) -> Result<Statement, SyntaxError> {
        if self.eat_punct(Punct::LParen) {
            let target = match self.peek() {
                Some(t) if t.kind == TokenKind::Url => {
                    self.pos += 1;
                    GraphTarget::Url(t.text.clone())
                }
                Some(t) if t.kind == TokenKind::StringLiteral => {
                    self.pos += 1;
                    GraphTarget::Url(t.text.clone())
                }
                Some(t) if t.is_punct(Punct::Slash) => GraphTarget::Path(self.path()?),
                _ => return Err(self.unexpected("URL or graph path")),
            };
            self.expect_punct(Punct::RParen)?;
            Ok(Statement::UseGraph(target))
        } else {
            Ok(Statement::UseGraph(GraphTarget::Path(self.path()?)))
        }
    }

    fn insert_schema(&mut self) -> Result<Statement, SyntaxError> {
        self.expect_punct(Punct::LBracket)?;
        self.expect_punct(Punct::Colon)?;
        let sub = self.ident()?;
        self.expect_punct(Punct::Implies)?;
        self.expect_punct(Punct::Colon)?;
        let sup = self.ident()?;
        self.expect_punct(Punct::RBracket)?;
        Ok(Statement::InsertSchema { sub, sup })
    }

    fn type_tag(&mut self) -> Result<TypeTag, SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => match TypeTag::from_name(&t.text) {
                Some(tag) => {
                    self.pos += 1;
                    Ok(tag)
                }
                None => Err(self.unexpected("property type (string, int, float, bool)")),
            },
            _ => Err(self.unexpected("property type (string, int, float, bool)")),
        }
    }

    fn property_specs(&mut self) -> Result<Vec<PropertySpec>, SyntaxError> {
        let mut props = Vec::new();
        if !self.eat_punct(Punct::LBrace) {
            return Ok(props);
        }
        if self.eat_punct(Punct::RBrace) {
            return Ok(props);
        }
        loop {
            let name = self.ident()?;
            let tag = self.type_tag()?;
            props.push(PropertySpec { name, tag });
            if self.eat_punct(Punct::RBrace) {
                return Ok(props);
            }
            self.expect_punct(Punct::Comma)?;
        }
    }

    fn graph_type_spec(&mut self) -> Result<GraphTypeSpec, SyntaxError> {
        self.expect_punct(Punct::LBrace)?;
        let mut spec = GraphTypeSpec::default();
        if self.eat_punct(Punct::RBrace) {
            return Ok(spec);
        }
        loop {
            if self.eat_keyword(Keyword::Node) {
                let label = self.ident()?;
                let props = self.property_specs()?;
                spec.nodes.push(NodeTypeSpec { label, props });
            } else if self.at_keyword(Keyword::Directed) || self.at_keyword(Keyword::Edge) {
                self.eat_keyword(Keyword::Directed);
                self.expect_keyword(Keyword::Edge)?;
                let label = self.ident()?;
                let props = self.property_specs()?;
                self.expect_keyword(Keyword::Connecting)?;
                self.expect_punct(Punct::LParen)?;
                let source = self.ident()?;
                self.expect_punct(Punct::Arrow)?;
                let target = self.ident()?;
                self.expect_punct(Punct::RParen)?;
                spec.edges.push(EdgeTypeSpec {
                    label,
                    props,
                    source,
                    target,
                });
            } else {
                return Err(self.unexpected("NODE or DIRECTED EDGE"));
            }
            if self.eat_punct(Punct::RBrace) {
                return Ok(spec);
            }
            self.expect_punct(Punct::Comma)?;
        }
    }

    fn path_patterns(&mut self) -> Result<Vec<PathPattern>, SyntaxError> {
        let mut out = vec![self.path_pattern()?];
        while self.eat_punct(Punct::Comma) {
            out.push(self.path_pattern()?);
        }
        Ok(out)
    }

    fn path_pattern(&mut self) -> Result<PathPattern, SyntaxError> {
        let start = self.node_pattern()?;
        let mut steps = Vec::new();
        loop {
            let direction = if self.at_punct(Punct::Minus) {
                Direction::LeftToRight
            } else if self.at_punct(Punct::LeftArrow) {
                Direction::RightToLeft
            } else if self.at_punct(Punct::Arrow) {
                return Err(self.unsupported("abbreviated edge pattern `->` (write `-[]->`)"));
            } else {
                break;
            };
            self.pos += 1;
            self.expect_punct(Punct::LBracket)?;
            let element = self.element_filler(Punct::RBracket)?;
            self.expect_punct(Punct::RBracket)?;
            match direction {
                Direction::LeftToRight => {
                    if self.at_punct(Punct::Minus) {
                        return Err(self.unsupported("undirected edge pattern"));
                    }
                    self.expect_punct(Punct::Arrow)?
                }
                Direction::RightToLeft => {
                    if self.at_punct(Punct::Arrow) {
                        return Err(self.unsupported("undirected edge pattern `<-[]->`"));
                    }
                    self.expect_punct(Punct::Minus)?
                }
            }
            if self.at_punct(Punct::LBrace)
                || self.at_punct(Punct::Star)
                || self.at_punct(Punct::Plus)
                || self.at_punct(Punct::Question)
            {
                return Err(self.unsupported("quantified path pattern"));
            }
            let node = self.node_pattern()?;
            steps.push((EdgePattern { element, direction }, node));
        }
        Ok(PathPattern { start, steps })
    }

    fn node_pattern(&mut self) -> Result<ElementPattern, SyntaxError> {
        self.expect_punct(Punct::LParen)?;
        let e = self.element_filler(Punct::RParen)?;
        self.expect_punct(Punct::RParen)?;
        Ok(e)
    }

    fn element_filler(&mut self, close: Punct) -> Result<ElementPattern, SyntaxError> {
        let mut e = ElementPattern::default();
        if self.at_ident() {
            e.alias = Some(self.ident()?);
        }
        if self.eat_punct(Punct::Colon) {
            e.labels = Some(self.label_disjunction()?);
        }
        if self.at_punct(Punct::LBrace) {
            e.props = self.prop_map()?;
        }
        if self.peek().is_some_and(|t| {
            t.kind == TokenKind::Identifier && t.text.eq_ignore_ascii_case("where")
        }) {
            return Err(self.unsupported("WHERE clause"));
        }
        if !self.at_punct(close) {
            return Err(self.unexpected(&format!("`{}`", close.as_str())));
        }
        Ok(e)
    }

    fn label_disjunction(&mut self) -> Result<LabelExpr, SyntaxError> {
        let mut lhs = self.label_conjunction()?;
        while self.eat_punct(Punct::Pipe) {
            let rhs = self.label_conjunction()?;
            lhs = LabelExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn label_conjunction(&mut self) -> Result<LabelExpr, SyntaxError> {
        let mut lhs = self.label_primary()?;
        while self.eat_punct(Punct::Amp) || self.eat_punct(Punct::Colon) {
            let rhs = self.label_primary()?;
            lhs = LabelExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn label_primary(&mut self) -> Result<LabelExpr, SyntaxError> {
        if self.at_punct(Punct::Bang) {
            return Err(self.unsupported("label negation `!`"));
        }
        if self.eat_punct(Punct::LParen) {
            let inner = self.label_disjunction()?;
            self.expect_punct(Punct::RParen)?;
            return Ok(inner);
        }
        Ok(LabelExpr::Label(self.ident().map_err(|_| self.unexpected("label"))?))
    }

    fn prop_map(&mut self) -> Result<PropMap, SyntaxError> {
        self.expect_punct(Punct::LBrace)?;
        let mut props = Vec::new();
        if self.eat_punct(Punct::RBrace) {
            return Ok(props);
        }
        loop {
            let key = self.ident()?;
            self.expect_punct(Punct::Colon)?;
            let value = self.literal()?;
            props.push((key, value));
            if self.eat_punct(Punct::RBrace) {
                return Ok(props);
            }
            self.expect_punct(Punct::Comma)?;
        }
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        let negative = self.eat_punct(Punct::Minus);
        let Some(tok) = self.peek() else {
            return Err(self.unexpected("literal"));
        };
        let lit = match tok.kind {
            TokenKind::Integer => {
                let magnitude: u64 = tok.text.parse().map_err(|_| self.unexpected("64-bit integer"))?;
                let value = if negative {
                    if magnitude == 1u64 << 63 {
                        i64::MIN
                    } else {
                        -(i64::try_from(magnitude).map_err(|_| self.unexpected("64-bit integer"))?)
                    }
                } else {
                    i64::try_from(magnitude).map_err(|_| self.unexpected("64-bit integer"))?
                };
                Literal::Int(value)
            }
            TokenKind::Float => {
                let v: f64 = tok.text.parse().map_err(|_| self.unexpected("float"))?;
                Literal::Float(if negative { -v } else { v })
            }
            _ if negative => return Err(self.unexpected("number")),
            TokenKind::StringLiteral => Literal::Str(tok.text.clone()),
            TokenKind::Keyword(Keyword::True) => Literal::Bool(true),
            TokenKind::Keyword(Keyword::False) => Literal::Bool(false),
            TokenKind::Keyword(Keyword::Null) => Literal::Null,
            _ => return Err(self.unexpected("literal")),
        };
        self.pos += 1;
        Ok(lit)
    }

    fn property_access(&mut self) -> Result<PropertyAccess, SyntaxError> {
        let alias = self.ident()?;
        self.property_suffix(alias)?
            .ok_or_else(|| self.unexpected("`.property` or `@id`"))
    }

    /// Parses `.name`, `.@id` or `@id` after an alias.
    fn property_suffix(&mut self, alias: Ident) -> Result<Option<PropertyAccess>, SyntaxError> {
        if self.eat_punct(Punct::Dot) {
            if self.at_punct(Punct::At) {
                self.pos += 1;
                self.expect_id_word()?;
                return Ok(Some(PropertyAccess {
                    alias,
                    property: PropertyRef::Id,
                }));
            }
            let name = self.ident()?;
            return Ok(Some(PropertyAccess {
                alias,
                property: PropertyRef::Named(name),
            }));
        }
        if self.eat_punct(Punct::At) {
            self.expect_id_word()?;
            return Ok(Some(PropertyAccess {
                alias,
                property: PropertyRef::Id,
            }));
        }
        Ok(None)
    }

    fn expect_id_word(&mut self) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier && t.text.eq_ignore_ascii_case("id") => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected("`id`")),
        }
    }

    fn return_items(&mut self) -> Result<Vec<ReturnItem>, SyntaxError> {
        let mut items = Vec::new();
        loop {
            let alias = self.ident()?;
            items.push(match self.property_suffix(alias.clone())? {
                Some(p) => ReturnItem::Property(p),
                None => ReturnItem::Alias(alias),
            });
            if !self.eat_punct(Punct::Comma) {
                return Ok(items);
            }
        }
    }

    fn dependent(&mut self) -> Result<Option<Dependent>, SyntaxError> {
        let Some(tok) = self.peek() else {
            return Ok(None);
        };
        let dep = match tok.kind {
            TokenKind::Keyword(Keyword::Return) => {
                self.pos += 1;
                Dependent::Return(self.return_items()?)
            }
            TokenKind::Keyword(Keyword::Insert) => {
                self.pos += 1;
                Dependent::Insert(self.path_patterns()?)
            }
            TokenKind::Keyword(Keyword::Set) => {
                self.pos += 1;
                let mut assigns = Vec::new();
                loop {
                    let target = self.property_access()?;
                    self.expect_punct(Punct::Eq)?;
                    let value = self.literal()?;
                    assigns.push(Assignment { target, value });
                    if !self.eat_punct(Punct::Comma) {
                        break;
                    }
                }
                Dependent::Set(assigns)
            }
            TokenKind::Keyword(Keyword::Remove) => {
                self.pos += 1;
                let mut targets = vec![self.property_access()?];
                while self.eat_punct(Punct::Comma) {
                    targets.push(self.property_access()?);
                }
                Dependent::Remove(targets)
            }
            TokenKind::Keyword(Keyword::Detach) | TokenKind::Keyword(Keyword::Delete) => {
                let detach = self.eat_keyword(Keyword::Detach);
                self.expect_keyword(Keyword::Delete)?;
                let mut aliases = vec![self.ident()?];
                while self.eat_punct(Punct::Comma) {
                    aliases.push(self.ident()?);
                }
                Dependent::Delete { aliases, detach }
            }
            TokenKind::Identifier if tok.text.eq_ignore_ascii_case("where") => {
                return Err(self.unsupported("WHERE clause"))
            }
            _ => return Ok(None),
        };
        Ok(Some(dep))
    }
}
