//! Statement execution over immutable snapshots with optimistic commit.
//!
//! A [`Transaction`] works on a private copy of the committed [`DbState`] and
//! stages log records, applying each one to its copy as it goes. Commit
//! checks the records appended since the transaction began against its write
//! and read keys, then appends the staged run in one write.

mod exec;
mod matcher;
mod result;
mod schema_view;
mod state;

pub use result::{BindingTable, Datum, ElementValue};
pub use schema_view::{schema_view, SchemaGraph, SUBPROPERTY_LABEL};
pub use state::{DbState, Element};

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

use crate::catalog::{self, CatalogError, CatalogSink};
use crate::frontend::{canonical_name, parse_script, CatalogPath, GraphTarget, Statement, SyntaxError};
use crate::store::{LogRecord, Store, StoreError};
use crate::types::Position;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RemoteErrorKind {
    Connect,
    Parse,
    Forbidden,
    NotFound,
    Conflict,
    PreconditionFailed,
    Other,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no current graph; use USE GRAPH or CREATE GRAPH first")]
    NoCurrentGraph,
    #[error("unknown graph {0}")]
    UnknownGraph(String),
    #[error("unknown alias {0}")]
    UnknownAlias(String),
    #[error("alias {0} is used both as a node and as an edge")]
    AliasKindMismatch(String),
    #[error("alias {0} is already bound and cannot take labels or properties here")]
    BoundAliasRedefined(String),
    #[error("{0} is read-only")]
    ReadOnlyProperty(String),
    #[error("node @{0} still has edges; use DETACH DELETE")]
    NodeHasEdges(i64),
    #[error("edge endpoint {0} binds no live node")]
    EdgeEndpointMissing(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("transaction conflict: {0}")]
    Conflict(String),
    #[error("a transaction is already active")]
    TransactionActive,
    #[error("no active transaction")]
    NoActiveTransaction,
    #[error("transaction still open at end of input; rolled back")]
    OpenTransaction,
    #[error("BEGIN, COMMIT and ROLLBACK are handled by the session")]
    TransactionControl,
    #[error("remote graphs are not available: {0}")]
    RemoteUnavailable(String),
    #[error("remote error{}: {message}", status.map(|s| format!(" ({s})")).unwrap_or_default())]
    Remote {
        kind: RemoteErrorKind,
        status: Option<u16>,
        message: String,
    },
    #[error("inconsistent state: {0}")]
    Inconsistent(String),
}

impl EngineError {
    pub fn is_conflict(&self) -> bool {
        matches!(
            self,
            EngineError::Conflict(_)
                | EngineError::Remote {
                    kind: RemoteErrorKind::Conflict,
                    ..
                }
        )
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self, EngineError::Syntax(_))
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// What a log record touches, for conflict detection.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ConflictKey {
    Pos(Position),
    Label(String),
    Path(&'static str, String),
}

/// What a transaction's matches depended on: the elements in result rows,
/// plus labels (or everything) whose concurrent writes could add rows.
#[derive(Debug, Clone, Default)]
struct ReadSet {
    positions: BTreeSet<Position>,
    labels: BTreeSet<String>,
    any: bool,
}

impl ReadSet {
    /// Whether a record committed concurrently could change what was read.
    fn touched_by(&self, latest: &DbState, pos: Position, rec: &LogRecord) -> bool {
        let labels: Vec<String> = match rec {
            LogRecord::Node { .. } | LogRecord::Edge { .. } => match latest.element(pos) {
                Some(el) => el.labels.clone(),
                None => return self.any || !self.labels.is_empty(),
            },
            LogRecord::Update { element, .. } => match latest.element(*element) {
                Some(el) => el.labels.clone(),
                None => return self.any || !self.labels.is_empty(),
            },
            LogRecord::SubProperty { sub, sup } => [sub, sup]
                .iter()
                .filter_map(|p| latest.catalog.element_type(**p))
                .map(|t| t.label.canonical.clone())
                .collect(),
            _ => return false,
        };
        self.any || labels.iter().any(|l| self.labels.contains(l))
    }
}

fn record_keys(pos: Position, rec: &LogRecord) -> Vec<ConflictKey> {
    use ConflictKey::*;
    match rec {
        LogRecord::TxnBegin { .. } | LogRecord::TxnCommit { .. } => vec![],
        LogRecord::SchemaDef { path } => vec![Path("schema", path.key())],
        LogRecord::GraphTypeDef { path } => vec![Path("graph type", path.key())],
        LogRecord::GraphDef { path, .. } => vec![Path("graph", path.key())],
        LogRecord::NodeTypeDef { label, quoted, .. } | LogRecord::EdgeTypeDef { label, quoted, .. } => {
            vec![Label(canonical_name(label, *quoted))]
        }
        LogRecord::PropertyDef { owner, .. } => vec![Pos(*owner)],
        LogRecord::Node { .. } => vec![Pos(pos)],
        LogRecord::Edge {
            leaving, arriving, ..
        } => vec![Pos(pos), Pos(*leaving), Pos(*arriving)],
        LogRecord::Update { element, .. } | LogRecord::Delete { element } => vec![Pos(*element)],
        LogRecord::SubProperty { sub, sup } => vec![Pos(*sub), Pos(*sup)],
    }
}

struct Inner {
    path: PathBuf,
    store: Mutex<Store>,
    state: RwLock<Arc<DbState>>,
}

/// A database handle. Clones share the same log and committed state.
#[derive(Clone)]
pub struct Database {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Database {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Database")
            .field("path", &self.inner.path)
            .field("version", &self.version())
            .finish()
    }
}

/// Rebuilds state by replaying every committed record of `store`.
pub fn replay_state(store: &Store) -> Result<DbState> {
    let mut state = DbState::default();
    store.replay(|pos, rec| state.apply(pos, rec))?;
    state.version = store.committed_end();
    Ok(state)
}

impl Database {
    /// Opens the database file at `path`, creating it if missing.
    pub fn open(path: impl AsRef<Path>) -> Result<Database> {
        Self::open_with(path, true)
    }

    pub fn open_with(path: impl AsRef<Path>, create_if_missing: bool) -> Result<Database> {
        let store = Store::open(path.as_ref(), create_if_missing)?;
        let state = replay_state(&store)?;
        Ok(Database {
            inner: Arc::new(Inner {
                path: path.as_ref().to_path_buf(),
                store: Mutex::new(store),
                state: RwLock::new(Arc::new(state)),
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.inner.path
    }

    /// The latest committed state.
    pub fn snapshot(&self) -> Arc<DbState> {
        self.inner
            .state
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Committed log end offset.
    pub fn version(&self) -> u64 {
        self.snapshot().version
    }

    pub fn begin(&self, user: &str) -> Transaction {
        let base = self.snapshot();
        Transaction {
            db: self.clone(),
            user: user.to_string(),
            state: (*base).clone(),
            base,
            staged: Vec::new(),
            keys: BTreeSet::new(),
            reads: ReadSet::default(),
            current_graph: None,
        }
    }

    /// A session with no current graph.
    pub fn session(&self, user: &str) -> Session {
        Session::new(self.clone(), user)
    }

    /// Runs a script in a fresh session and returns every result table.
    pub fn run(&self, script: &str) -> Result<Vec<BindingTable>> {
        let mut session = self.session("anonymous");
        let mut out = Vec::new();
        for stmt in parse_script(script)? {
            out.extend(session.execute(&stmt)?);
        }
        out.extend(session.finish()?);
        Ok(out)
    }

    fn commit(&self, txn: Transaction) -> Result<(u64, Vec<Position>)> {
        if txn.staged.is_empty() {
            return Ok((self.version(), Vec::new()));
        }
        let mut store = self.inner.store.lock().unwrap_or_else(|e| e.into_inner());
        let latest = self.snapshot();
        if latest.version != txn.base.version {
            for (pos, rec) in store.read_range(txn.base.version)? {
                if txn.reads.touched_by(&latest, pos, &rec) {
                    return Err(EngineError::Conflict(format!(
                        "record at {pos} written concurrently changes a match"
                    )));
                }
                for key in record_keys(pos, &rec) {
                    let read = matches!(key, ConflictKey::Pos(p) if txn.reads.positions.contains(&p));
                    if read || txn.keys.contains(&key) {
                        return Err(EngineError::Conflict(format!(
                            "record at {pos} written concurrently touches {key:?}"
                        )));
                    }
                }
            }
        }
        let txn_id = store.next_txn_id();
        let mut run = Vec::with_capacity(txn.staged.len() + 2);
        run.push(LogRecord::TxnBegin {
            txn_id,
            user: txn.user.clone(),
        });
        run.extend(txn.staged);
        run.push(LogRecord::TxnCommit { txn_id });
        let (resolved, positions) = store.resolve_run(&run)?;
        let mut next = (*latest).clone();
        for (rec, pos) in resolved.iter().zip(&positions) {
            next.apply(*pos, rec)
                .map_err(|e| EngineError::Conflict(e.to_string()))?;
        }
        store.append_commit(&run)?;
        next.version = store.committed_end();
        let version = next.version;
        *self.inner.state.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        Ok((version, positions))
    }
}

/// An open transaction. Reads see its base snapshot plus its own writes.
pub struct Transaction {
    db: Database,
    user: String,
    base: Arc<DbState>,
    state: DbState,
    staged: Vec<LogRecord>,
    keys: BTreeSet<ConflictKey>,
    reads: ReadSet,
    current_graph: Option<Position>,
}

struct Checkpoint {
    state: DbState,
    staged: usize,
    keys: BTreeSet<ConflictKey>,
    reads: ReadSet,
    current_graph: Option<Position>,
}

impl Transaction {
    pub fn base_version(&self) -> u64 {
        self.base.version
    }

    /// The transaction's view: base snapshot plus staged changes.
    pub fn state(&self) -> &DbState {
        &self.state
    }

    pub fn staged(&self) -> &[LogRecord] {
        &self.staged
    }

    pub fn current_graph(&self) -> Option<Position> {
        self.current_graph
    }

    pub fn current_graph_path(&self) -> Option<CatalogPath> {
        self.current_graph
            .and_then(|g| self.state.catalog.graph(g))
            .map(|g| g.path.clone())
    }

    /// Sets the current graph by path.
    pub fn use_graph(&mut self, path: &CatalogPath) -> Result<()> {
        let g = self
            .state
            .catalog
            .graph_by_path(path)
            .ok_or_else(|| EngineError::UnknownGraph(path.to_string()))?;
        self.current_graph = Some(g.pos);
        Ok(())
    }

    /// Executes one statement. A failing statement leaves no trace in the
    /// transaction.
    pub fn execute(&mut self, stmt: &Statement) -> Result<Option<BindingTable>> {
        let cp = Checkpoint {
            state: self.state.clone(),
            staged: self.staged.len(),
            keys: self.keys.clone(),
            reads: self.reads.clone(),
            current_graph: self.current_graph,
        };
        let r = self.dispatch(stmt);
        if r.is_err() {
            self.state = cp.state;
            self.staged.truncate(cp.staged);
            self.keys = cp.keys;
            self.reads = cp.reads;
            self.current_graph = cp.current_graph;
        }
        r
    }

    /// Commits and returns the new version.
    pub fn commit(self) -> Result<u64> {
        self.commit_resolved().map(|(v, _)| v)
    }

    /// Commits and also returns the final position of every record in the
    /// run, indexed like provisional positions (index 0 is the TxnBegin).
    pub fn commit_resolved(self) -> Result<(u64, Vec<Position>)> {
        let db = self.db.clone();
        db.commit(self)
    }

    pub fn rollback(self) {}

    fn graph(&self) -> Result<Position> {
        self.current_graph.ok_or(EngineError::NoCurrentGraph)
    }

    fn stage_record(&mut self, rec: LogRecord) -> Result<Position> {
        // index 0 of the run is TxnBegin
        let pos = Position::provisional(self.staged.len() + 1);
        self.state.apply(pos, &rec)?;
        self.keys.extend(record_keys(pos, &rec));
        self.staged.push(rec);
        Ok(pos)
    }
}

impl CatalogSink for Transaction {
    fn catalog(&self) -> &catalog::Catalog {
        &self.state.catalog
    }

    fn stage(&mut self, record: LogRecord) -> catalog::Result<Position> {
        self.stage_record(record).map_err(|e| match e {
            EngineError::Catalog(c) => c,
            other => CatalogError::Inconsistent(other.to_string()),
        })
    }
}

/// A graph reached through `USE GRAPH (url)`.
pub trait RemoteGraph: Send {
    /// Runs a `;`-separated batch as one remote transaction and returns the
    /// final statement's result.
    fn execute(&mut self, statements: &str) -> Result<Option<BindingTable>>;
}

pub trait RemoteConnector: Send + Sync {
    fn connect(&self, url: &str, user: &str) -> Result<Box<dyn RemoteGraph>>;
}

struct RemoteState {
    graph: Box<dyn RemoteGraph>,
    buffer: Vec<String>,
}

/// Statement-at-a-time execution with auto-commit, explicit
/// BEGIN/COMMIT/ROLLBACK, and remote graph routing.
pub struct Session {
    db: Database,
    user: String,
    graph: Option<CatalogPath>,
    txn: Option<Transaction>,
    remote: Option<RemoteState>,
    connector: Option<Arc<dyn RemoteConnector>>,
}

impl Session {
    pub fn new(db: Database, user: &str) -> Session {
        Session {
            db,
            user: user.to_string(),
            graph: None,
            txn: None,
            remote: None,
            connector: None,
        }
    }

    pub fn with_graph(mut self, path: CatalogPath) -> Session {
        self.graph = Some(path);
        self
    }

    pub fn set_connector(&mut self, connector: Arc<dyn RemoteConnector>) {
        self.connector = Some(connector);
    }

    pub fn database(&self) -> &Database {
        &self.db
    }

    pub fn user(&self) -> &str {
        &self.user
    }

    pub fn current_graph(&self) -> Option<&CatalogPath> {
        self.graph.as_ref()
    }

    pub fn in_transaction(&self) -> bool {
        self.txn.is_some()
    }

    pub fn is_remote(&self) -> bool {
        self.remote.is_some()
    }

    fn begin_txn(&self) -> Transaction {
        let mut txn = self.db.begin(&self.user);
        if let Some(p) = &self.graph {
            txn.current_graph = txn.state.catalog.graph_by_path(p).map(|g| g.pos);
        }
        txn
    }

    pub fn execute(&mut self, stmt: &Statement) -> Result<Option<BindingTable>> {
        if let Some(remote) = &mut self.remote {
            match stmt {
                Statement::Begin => return Ok(None),
                Statement::Commit => return self.flush(),
                Statement::Rollback => {
                    remote.buffer.clear();
                    return Ok(None);
                }
                Statement::UseGraph(_) => {}
                other => {
                    remote.buffer.push(other.to_string());
                    return Ok(None);
                }
            }
        }
        match stmt {
            Statement::Begin => {
                if self.txn.is_some() {
                    return Err(EngineError::TransactionActive);
                }
                self.txn = Some(self.begin_txn());
                Ok(None)
            }
            Statement::Commit => {
                let txn = self.txn.take().ok_or(EngineError::NoActiveTransaction)?;
                txn.commit()?;
                Ok(None)
            }
            Statement::Rollback => {
                self.txn.take();
                Ok(None)
            }
            Statement::UseGraph(target) => {
                let flushed = self.flush()?;
                self.remote = None;
                self.use_graph(target)?;
                Ok(flushed)
            }
            other => self.execute_local(other),
        }
    }

    fn use_graph(&mut self, target: &GraphTarget) -> Result<()> {
        match target {
            GraphTarget::Path(p) => {
                match &mut self.txn {
                    Some(txn) => txn.use_graph(p)?,
                    None => {
                        if self.db.snapshot().catalog.graph_by_path(p).is_none() {
                            return Err(EngineError::UnknownGraph(p.to_string()));
                        }
                    }
                }
                self.graph = Some(p.clone());
                Ok(())
            }
            GraphTarget::Url(url) => {
                if self.txn.is_some() {
                    return Err(EngineError::RemoteUnavailable(
                        "cannot switch to a remote graph inside a local transaction".into(),
                    ));
                }
                let connector = self
                    .connector
                    .as_ref()
                    .ok_or_else(|| EngineError::RemoteUnavailable("no connector configured".into()))?;
                let graph = connector.connect(url, &self.user)?;
                self.remote = Some(RemoteState {
                    graph,
                    buffer: Vec::new(),
                });
                Ok(())
            }
        }
    }

    fn execute_local(&mut self, stmt: &Statement) -> Result<Option<BindingTable>> {
        let (mut txn, auto) = match self.txn.take() {
            Some(t) => (t, false),
            None => (self.begin_txn(), true),
        };
        let r = txn.execute(stmt);
        if let Some(p) = txn.current_graph_path() {
            self.graph = Some(p);
        }
        if auto {
            let out = r?;
            txn.commit()?;
            Ok(out)
        } else {
            self.txn = Some(txn);
            r
        }
    }

    /// Ships buffered remote statements; returns the final result.
    pub fn flush(&mut self) -> Result<Option<BindingTable>> {
        let Some(remote) = &mut self.remote else {
            return Ok(None);
        };
        if remote.buffer.is_empty() {
            return Ok(None);
        }
        let body = remote.buffer.join(";\n");
        remote.buffer.clear();
        remote.graph.execute(&body)
    }

    /// Ends the session's input: flushes remote statements and rolls back an
    /// unterminated local transaction.
    pub fn finish(&mut self) -> Result<Option<BindingTable>> {
        let flushed = self.flush()?;
        if self.txn.take().is_some() {
            return Err(EngineError::OpenTransaction);
        }
        Ok(flushed)
    }
}
