use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use linkgraph_cli::{run, CliConfig, Format, Mode};

/// Embedded graph database shell.
#[derive(Parser, Debug)]
#[command(name = "linkgraph", version)]
struct Args {
    /// Database file (created if missing).
    #[arg(long, required_unless_present = "parse_only")]
    db: Option<PathBuf>,
    /// Run the statements in this file, then exit.
    #[arg(long, conflicts_with = "serve")]
    script: Option<PathBuf>,
    /// Serve the database over HTTP at this address, e.g. 127.0.0.1:7070.
    #[arg(long)]
    serve: Option<String>,
    /// Identity for transactions and remote requests.
    #[arg(long, default_value = "anonymous")]
    user: String,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Only parse (the --script file, or stdin) and print the syntax tree.
    #[arg(long, conflicts_with = "serve")]
    parse_only: bool,
    /// With --serve: users allowed to send requests (repeatable).
    #[arg(long, requires = "serve")]
    allow: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mode = if args.parse_only {
        Mode::ParseOnly(args.script)
    } else if let Some(addr) = args.serve {
        Mode::Serve(addr)
    } else if let Some(file) = args.script {
        Mode::Script(file)
    } else {
        Mode::Repl
    };
    let config = CliConfig {
        db: args.db,
        mode,
        user: args.user,
        format: args.format,
        allow: args.allow,
    };
    let code = run(&config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
