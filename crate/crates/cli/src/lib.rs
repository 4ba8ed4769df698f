//! Script runner, REPL and result formatting for the `linkgraph` binary.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use linkgraph::engine::{BindingTable, Database, Datum, EngineError, Session};
use linkgraph::frontend::{
    parse_script, parse_script_located, tokenize, write_tree, CatalogPath, Punct, TokenKind,
};
use linkgraph::wire::WireResult;
use linkgraph_remote::HttpConnector;

pub const EXIT_PARSE: i32 = 1;
pub const EXIT_EXEC: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    Repl,
    Script(PathBuf),
    Serve(String),
    /// Parse a script (or stdin when `None`) and print its syntax tree.
    ParseOnly(Option<PathBuf>),
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub db: Option<PathBuf>,
    pub mode: Mode,
    pub user: String,
    pub format: Format,
    pub allow: Vec<String>,
}

fn cell(d: &Datum) -> String {
    d.to_string()
}

/// Renders one result. Table output is left-aligned columns under a header
/// row; json output is the wire object shared with the HTTP service.
pub fn format_result(table: &BindingTable, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = WireResult::from_table(table).to_json();
            s.push('\n');
            s
        }
        Format::Table => {
            let cells: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| r.iter().map(cell).collect())
                .collect();
            let mut widths: Vec<usize> = table.columns.iter().map(|c| c.chars().count()).collect();
            for r in &cells {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let mut out = String::new();
            let mut line = |items: &[String]| {
                let mut l = String::new();
                for (i, (item, w)) in items.iter().zip(&widths).enumerate() {
                    if i > 0 {
                        l.push_str(" | ");
                    }
                    l.push_str(item);
                    l.extend(std::iter::repeat_n(' ', w - item.chars().count()));
                }
                out.push_str(l.trim_end());
                out.push('\n');
            };
            line(&table.columns);
            for r in &cells {
                line(r);
            }
            out
        }
    }
}

fn open_session(db: &Database, user: &str) -> Session {
    let mut s = db.session(user).with_graph(CatalogPath::root());
    s.set_connector(Arc::new(HttpConnector));
    s
}

fn exit_for(e: &EngineError) -> i32 {
    if e.is_syntax() {
        EXIT_PARSE
    } else {
        EXIT_EXEC
    }
}

/// Runs `text` in one session against `db`, writing results to `out` and
/// diagnostics to `err`. Stops at the first error. Returns the exit code.
pub fn run_text(
    db: &Database,
    text: &str,
    user: &str,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let stmts = match parse_script_located(text) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_PARSE;
        }
    };
    let mut session = open_session(db, user);
    let emit = |t: &BindingTable, out: &mut dyn Write| out.write_all(format_result(t, format).as_bytes());
    for s in &stmts {
        match session.execute(&s.node) {
            Ok(Some(t)) => {
                if emit(&t, out).is_err() {
                    return EXIT_IO;
                }
            }
            Ok(None) => {}
            Err(e) => {
                let _ = writeln!(err, "error at {}:{}: {e}", s.line, s.column);
                return exit_for(&e);
            }
        }
    }
    match session.finish() {
        Ok(Some(t)) => {
            if emit(&t, out).is_err() {
                return EXIT_IO;
            }
            0
        }
        Ok(None) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_for(&e)
        }
    }
}

fn open_db(path: &Path, err: &mut dyn Write) -> Result<Database, i32> {
    Database::open(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot open {}: {e}", path.display());
        EXIT_IO
    })
}

/// Executes a script file against the database at `db_path`.
pub fn run_script(
    db_path: &Path,
    script: &Path,
    user: &str,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let text = match std::fs::read_to_string(script) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", script.display());
            return EXIT_IO;
        }
    };
    let db = match open_db(db_path, err) {
        Ok(db) => db,
        Err(code) => return code,
    };
    run_text(&db, &text, user, format, out, err)
}

/// Prints the syntax tree of every statement in `text`.
pub fn parse_only(text: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match parse_script(text) {
        Ok(stmts) => {
            let mut s = String::new();
            for stmt in &stmts {
                write_tree(stmt, &mut s);
            }
            match out.write_all(s.as_bytes()) {
                Ok(()) => 0,
                Err(_) => EXIT_IO,
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_PARSE
        }
    }
}

/// Whether `buffer` holds complete `;`-terminated input.
fn complete(buffer: &str) -> bool {
    if !buffer.trim_end().ends_with(';') {
        return false;
    }
    match tokenize(buffer) {
        Ok(tokens) => tokens
            .last()
            .is_some_and(|t| matches!(t.kind, TokenKind::Punct(Punct::Semicolon))),
        Err(_) => true,
    }
}

/// Interactive loop: statements end with `;` and may span lines; `:quit`
/// leaves. Errors are reported and the loop continues.
pub fn run_repl(
    db: &Database,
    user: &str,
    format: Format,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> io::Result<()> {
    let mut session = open_session(db, user);
    let mut buffer = String::new();
    loop {
        let _ = write!(err, "{}", if buffer.is_empty() { "gql> " } else { "...> " });
        let _ = err.flush();
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        if buffer.is_empty() && matches!(line.trim(), ":quit" | ":q" | ":exit") {
            break;
        }
        buffer.push_str(&line);
        if !complete(&buffer) {
            continue;
        }
        let text = std::mem::take(&mut buffer);
        match parse_script_located(&text) {
            Err(e) => writeln!(err, "error: {e}")?,
            Ok(stmts) => {
                for s in &stmts {
                    match session.execute(&s.node) {
                        Ok(Some(t)) => out.write_all(format_result(&t, format).as_bytes())?,
                        Ok(None) => {}
                        Err(e) => {
                            writeln!(err, "error: {e}")?;
                            break;
                        }
                    }
                }
                out.flush()?;
            }
        }
    }
    match session.finish() {
        Ok(Some(t)) => out.write_all(format_result(&t, format).as_bytes())?,
        Ok(None) => {}
        Err(e) => writeln!(err, "error: {e}")?,
    }
    Ok(())
}

/// Entry point behind the binary; returns the process exit code.
pub fn run(config: &CliConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Mode::ParseOnly(file) = &config.mode {
        let text = match file {
            Some(f) => std::fs::read_to_string(f),
            None => io::read_to_string(io::stdin()),
        };
        return match text {
            Ok(t) => parse_only(&t, out, err),
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_IO
            }
        };
    }
    let Some(db_path) = &config.db else {
        let _ = writeln!(err, "error: --db is required");
        return EXIT_IO;
    };
    match &config.mode {
        Mode::Script(file) => run_script(db_path, file, &config.user, config.format, out, err),
        Mode::Repl => {
            let db = match open_db(db_path, err) {
                Ok(db) => db,
                Err(code) => return code,
            };
            let stdin = io::stdin();
            match run_repl(&db, &config.user, config.format, &mut stdin.lock(), out, err) {
                Ok(()) => 0,
                Err(_) => EXIT_IO,
            }
        }
        Mode::Serve(addr) => {
            let db = match open_db(db_path, err) {
                Ok(db) => db,
                Err(code) => return code,
            };
            let allowlist = (!config.allow.is_empty()).then(|| config.allow.iter().cloned().collect());
            match linkgraph_remote::serve(db, addr, linkgraph_remote::ServerConfig { allowlist }) {
                Ok(server) => {
                    let _ = writeln!(err, "serving {} at http://{}/g/...", db_path.display(), server.local_addr());
                    server.wait();
                    0
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_IO
                }
            }
        }
        Mode::ParseOnly(_) => unreachable!(),
    }
}
