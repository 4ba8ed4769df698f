//! Lexer, statement AST and recursive-descent parser for the GQL dialect.

mod ast;
mod lexer;
mod parser;

pub use ast::*;
pub use lexer::{tokenize, Keyword, Punct, Token, TokenKind};
pub use parser::{parse_script, parse_script_located, parse_statement, Located};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("lex error at {line}:{column}: {message}")]
    Lex {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("parse error at {line}:{column}: expected {expected}, found {found}")]
    Parse {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("unsupported at {line}:{column}: {feature}")]
    Unsupported {
        line: usize,
        column: usize,
        feature: String,
    },
}

impl SyntaxError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            SyntaxError::Lex { line, column, .. }
            | SyntaxError::Parse { line, column, .. }
            | SyntaxError::Unsupported { line, column, .. } => (*line, *column),
        }
    }
}
