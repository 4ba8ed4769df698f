use std::fmt;

use super::SyntaxError;

/// Reserved words. Everything else lexes as an identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Create,
    Schema,
    Graph,
    Type,
    Any,
    Node,
    Edge,
    Directed,
    Connecting,
    Use,
    Insert,
    Match,
    Return,
    Set,
    Remove,
    Delete,
    Detach,
    Begin,
    Commit,
    Rollback,
    True,
    False,
    Null,
}

impl Keyword {
    const ALL: [Keyword; 23] = [
        Keyword::Create,
        Keyword::Schema,
        Keyword::Graph,
        Keyword::Type,
        Keyword::Any,
        Keyword::Node,
        Keyword::Edge,
        Keyword::Directed,
        Keyword::Connecting,
        Keyword::Use,
        Keyword::Insert,
        Keyword::Match,
        Keyword::Return,
        Keyword::Set,
        Keyword::Remove,
        Keyword::Delete,
        Keyword::Detach,
        Keyword::Begin,
        Keyword::Commit,
        Keyword::Rollback,
        Keyword::True,
        Keyword::False,
        Keyword::Null,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Create => "CREATE",
            Keyword::Schema => "SCHEMA",
            Keyword::Graph => "GRAPH",
            Keyword::Type => "TYPE",
            Keyword::Any => "ANY",
            Keyword::Node => "NODE",
            Keyword::Edge => "EDGE",
            Keyword::Directed => "DIRECTED",
            Keyword::Connecting => "CONNECTING",
            Keyword::Use => "USE",
            Keyword::Insert => "INSERT",
            Keyword::Match => "MATCH",
            Keyword::Return => "RETURN",
            Keyword::Set => "SET",
            Keyword::Remove => "REMOVE",
            Keyword::Delete => "DELETE",
            Keyword::Detach => "DETACH",
            Keyword::Begin => "BEGIN",
            Keyword::Commit => "COMMIT",
            Keyword::Rollback => "ROLLBACK",
            Keyword::True => "TRUE",
            Keyword::False => "FALSE",
            Keyword::Null => "NULL",
        }
    }

    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL
            .iter()
            .copied()
            .find(|k| k.as_str().eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Colon,
    Comma,
    Semicolon,
    Amp,
    Pipe,
    Dot,
    Eq,
    /// `=>`
    Implies,
    /// `->`
    Arrow,
    /// `<-`
    LeftArrow,
    Minus,
    Slash,
    At,
    Bang,
    Star,
    Plus,
    Question,
    /// `::`
    DoubleColon,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        match self {
            Punct::LParen => "(",
            Punct::RParen => ")",
            Punct::LBrace => "{",
            Punct::RBrace => "}",
            Punct::LBracket => "[",
            Punct::RBracket => "]",
            Punct::Colon => ":",
            Punct::Comma => ",",
            Punct::Semicolon => ";",
            Punct::Amp => "&",
            Punct::Pipe => "|",
            Punct::Dot => ".",
            Punct::Eq => "=",
            Punct::Implies => "=>",
            Punct::Arrow => "->",
            Punct::LeftArrow => "<-",
            Punct::Minus => "-",
            Punct::Slash => "/",
            Punct::At => "@",
            Punct::Bang => "!",
            Punct::Star => "*",
            Punct::Plus => "+",
            Punct::Question => "?",
            Punct::DoubleColon => "::",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    QuotedIdentifier,
    StringLiteral,
    Integer,
    Float,
    /// `http://...` inside `USE GRAPH (...)`.
    Url,
    Keyword(Keyword),
    Punct(Punct),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Token value: identifiers and numbers as written, quoted identifiers
    /// and strings with delimiters stripped and escapes resolved.
    pub text: String,
    pub line: usize,
    pub column: usize,
    /// Byte range of the raw token in the source.
    pub span: std::ops::Range<usize>,
}

impl Token {
    pub fn is_punct(&self, p: Punct) -> bool {
        self.kind == TokenKind::Punct(p)
    }

    pub fn is_keyword(&self, k: Keyword) -> bool {
        self.kind == TokenKind::Keyword(k)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::Identifier | TokenKind::Integer | TokenKind::Float | TokenKind::Url => {
                write!(f, "`{}`", self.text)
            }
            TokenKind::QuotedIdentifier => write!(f, "`\"{}\"`", self.text),
            TokenKind::StringLiteral => write!(f, "string '{}'", self.text),
            TokenKind::Keyword(k) => write!(f, "keyword {}", k.as_str()),
            TokenKind::Punct(p) => write!(f, "`{}`", p.as_str()),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<u8> {
        self.bytes.get(self.pos + n).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> SyntaxError {
        SyntaxError::Lex {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    /// Reads a delimited run where a doubled delimiter stands for itself.
    fn delimited(&mut self, delim: char, what: &str) -> Result<String, SyntaxError> {
        let (line, column) = (self.line, self.col);
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, column, format!("unterminated {what}"))),
                Some(c) if c == delim => {
                    if self.peek() == Some(delim) {
                        self.bump();
                        out.push(delim);
                    } else {
                        return Ok(out);
                    }
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn number(&mut self) -> TokenKind {
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        let mut kind = TokenKind::Integer;
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|b| b.is_ascii_digit()) {
            kind = TokenKind::Float;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let digit_at = match self.peek_at(1) {
                Some(b'+' | b'-') => 2,
                _ => 1,
            };
            if self.peek_at(digit_at).is_some_and(|b| b.is_ascii_digit()) {
                kind = TokenKind::Float;
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        kind
    }

    fn punct(&mut self) -> Option<Punct> {
        let c = self.peek()?;
        let next = self.peek_at(1);
        let (p, width) = match (c, next) {
            ('=', Some(b'>')) => (Punct::Implies, 2),
            ('-', Some(b'>')) => (Punct::Arrow, 2),
            ('<', Some(b'-')) => (Punct::LeftArrow, 2),
            (':', Some(b':')) => (Punct::DoubleColon, 2),
            ('(', _) => (Punct::LParen, 1),
            (')', _) => (Punct::RParen, 1),
            ('{', _) => (Punct::LBrace, 1),
            ('}', _) => (Punct::RBrace, 1),
            ('[', _) => (Punct::LBracket, 1),
            (']', _) => (Punct::RBracket, 1),
            (':', _) => (Punct::Colon, 1),
            (',', _) => (Punct::Comma, 1),
            (';', _) => (Punct::Semicolon, 1),
            ('&', _) => (Punct::Amp, 1),
            ('|', _) => (Punct::Pipe, 1),
            ('.', _) => (Punct::Dot, 1),
            ('=', _) => (Punct::Eq, 1),
            ('-', _) => (Punct::Minus, 1),
            ('/', _) => (Punct::Slash, 1),
            ('@', _) => (Punct::At, 1),
            ('!', _) => (Punct::Bang, 1),
            ('*', _) => (Punct::Star, 1),
            ('+', _) => (Punct::Plus, 1),
            ('?', _) => (Punct::Question, 1),
            _ => return None,
        };
        for _ in 0..width {
            self.bump();
        }
        Some(p)
    }

    fn next_token(&mut self) -> Result<Option<Token>, SyntaxError> {
        self.skip_trivia();
        let Some(c) = self.peek() else {
            return Ok(None);
        };
        let (line, column, start) = (self.line, self.col, self.pos);
        let (kind, text) = if c == '\'' {
            (TokenKind::StringLiteral, self.delimited('\'', "string literal")?)
        } else if c == '"' {
            let text = self.delimited('"', "quoted identifier")?;
            if text.is_empty() {
                return Err(self.error(line, column, "empty quoted identifier"));
            }
            (TokenKind::QuotedIdentifier, text)
        } else if c.is_ascii_digit() {
            let kind = self.number();
            (kind, self.src[start..self.pos].to_string())
        } else if c.is_alphabetic() || c == '_' {
            while self.peek().is_some_and(|c| c.is_alphanumeric() || c == '_') {
                self.bump();
            }
            let word = &self.src[start..self.pos];
            let is_scheme = word.eq_ignore_ascii_case("http") || word.eq_ignore_ascii_case("https");
            if is_scheme && self.src[self.pos..].starts_with("://") {
                while self
                    .peek()
                    .is_some_and(|c| !c.is_whitespace() && c != ')' && c != ';')
                {
                    self.bump();
                }
                (TokenKind::Url, self.src[start..self.pos].to_string())
            } else {
                let kind = match Keyword::lookup(word) {
                    Some(k) => TokenKind::Keyword(k),
                    None => TokenKind::Identifier,
                };
                (kind, word.to_string())
            }
        } else if let Some(p) = self.punct() {
            (TokenKind::Punct(p), p.as_str().to_string())
        } else {
            return Err(self.error(line, column, format!("illegal character {c:?}")));
        };
        Ok(Some(Token {
            kind,
            text,
            line,
            column,
            span: start..self.pos,
        }))
    }
}

/// Splits GQL source text into tokens. Keywords are matched case-insensitively.
pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut lexer = Lexer {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        tokens.push(tok);
    }
    Ok(tokens)
}

/// Line and column just past the end of `text`.
pub(crate) fn end_position(text: &str) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for c in text.chars() {
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn edge_pattern_tokens() {
        use Punct::*;
        let got = kinds("-[:Transfer{amount:350000}]->");
        let want = vec![
            (TokenKind::Punct(Minus), "-".to_string()),
            (TokenKind::Punct(LBracket), "[".into()),
            (TokenKind::Punct(Colon), ":".into()),
            (TokenKind::Identifier, "Transfer".into()),
            (TokenKind::Punct(LBrace), "{".into()),
            (TokenKind::Identifier, "amount".into()),
            (TokenKind::Punct(Colon), ":".into()),
            (TokenKind::Integer, "350000".into()),
            (TokenKind::Punct(RBrace), "}".into()),
            (TokenKind::Punct(RBracket), "]".into()),
            (TokenKind::Punct(Arrow), "->".into()),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").unwrap().is_empty());
        assert!(tokenize("  \n\t ").unwrap().is_empty());
    }

    #[test]
    fn doubled_quote_escape() {
        let toks = tokenize("'O''Hara'").unwrap();
        assert_eq!(toks.len(), 1);
        assert_eq!(toks[0].kind, TokenKind::StringLiteral);
        assert_eq!(toks[0].text, "O'Hara");
    }

    #[test]
    fn implies_is_one_token() {
        let toks = tokenize("[:masterFrom=>:DegreeFrom]").unwrap();
        assert!(toks.iter().any(|t| t.is_punct(Punct::Implies)));
        assert_eq!(toks.len(), 7);
    }

    #[test]
    fn keywords_any_case() {
        let toks = tokenize("create Graph TYPE").unwrap();
        assert_eq!(toks[0].kind, TokenKind::Keyword(Keyword::Create));
        assert_eq!(toks[1].kind, TokenKind::Keyword(Keyword::Graph));
        assert_eq!(toks[2].kind, TokenKind::Keyword(Keyword::Type));
    }

    #[test]
    fn quoted_identifier_strips_quotes() {
        let toks = tokenize(r#""Member""#).unwrap();
        assert_eq!(toks[0].kind, TokenKind::QuotedIdentifier);
        assert_eq!(toks[0].text, "Member");
    }

    #[test]
    fn unterminated_string_reports_start() {
        let err = tokenize("insert\n  'abc").unwrap_err();
        match err {
            SyntaxError::Lex { line, column, .. } => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn illegal_character() {
        assert!(matches!(
            tokenize("match (a) # x"),
            Err(SyntaxError::Lex { line: 1, column: 11, .. })
        ));
    }

    #[test]
    fn numbers() {
        assert_eq!(
            kinds("1.5 2 3e4 7.")[..3],
            [
                (TokenKind::Float, "1.5".to_string()),
                (TokenKind::Integer, "2".into()),
                (TokenKind::Float, "3e4".into())
            ]
        );
        // a trailing dot stays punctuation (`a.name`-style access)
        assert_eq!(kinds("7.")[1].0, TokenKind::Punct(Punct::Dot));
    }

    #[test]
    fn url_token() {
        let toks = tokenize("USE GRAPH (http://127.0.0.1:8080/g/yc/fraud);").unwrap();
        assert_eq!(toks[3].kind, TokenKind::Url);
        assert_eq!(toks[3].text, "http://127.0.0.1:8080/g/yc/fraud");
        assert!(toks[4].is_punct(Punct::RParen));
    }

    #[test]
    fn spans_reconstruct_source() {
        let src = "insert (a :Account{owner:'O''Hara'})-[:\"Member\"]->(b) ;\n";
        let toks = tokenize(src).unwrap();
        let mut rebuilt = String::new();
        let mut last = 0;
        for t in &toks {
            let gap = &src[last..t.span.start];
            assert!(gap.chars().all(char::is_whitespace));
            rebuilt.push_str(gap);
            rebuilt.push_str(&src[t.span.clone()]);
            last = t.span.end;
        }
        rebuilt.push_str(&src[last..]);
        assert_eq!(rebuilt, src);
    }
}
