use std::collections::BTreeSet;
use std::net::{SocketAddr, TcpListener as StdListener};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Body;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::Response;
use axum::routing::post;
use axum::Router;
use linkgraph::engine::{BindingTable, Database, EngineError};
use linkgraph::frontend::{
    parse_script, CatalogPath, Dependent, PropertyAccess, PropertyRef, ReturnItem, Statement,
};
use linkgraph::wire::WireResult;
use thiserror::Error;
use tokio::sync::oneshot;

use crate::USER_HEADER;

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    /// When set, only these users may send requests.
    pub allowlist: Option<BTreeSet<String>>,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("cannot start runtime: {0}")]
    Runtime(std::io::Error),
}

/// Request headers that matter to the service.
#[derive(Debug, Clone, Default)]
pub struct RequestHeaders {
    pub user: Option<String>,
    pub if_match: Option<String>,
}

/// Outcome of one request: status, JSON body and the ETag to send back.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub body: String,
    pub etag: Option<String>,
}

impl Reply {
    fn error(status: u16, message: impl std::fmt::Display) -> Reply {
        Reply {
            status,
            body: serde_json::json!({ "error": message.to_string() }).to_string(),
            etag: None,
        }
    }
}

/// Strong validator for a committed version: quoted lowercase hex offset.
pub fn etag_for(version: u64) -> String {
    format!("\"{version:x}\"")
}

pub fn compute_etag(db: &Database) -> String {
    etag_for(db.version())
}

fn status_of(e: &EngineError) -> u16 {
    match e {
        EngineError::Conflict(_) => 409,
        EngineError::UnknownGraph(_) => 404,
        EngineError::Store(_) | EngineError::Inconsistent(_) => 500,
        _ => 400,
    }
}

/// Result columns holding `@id` values.
fn id_columns(stmt: &Statement) -> Vec<usize> {
    let items = match stmt {
        Statement::Match {
            dependent: Some(Dependent::Return(items)),
            ..
        } => items,
        Statement::MatchSchema {
            items: Some(items), ..
        } => items,
        _ => return Vec::new(),
    };
    items
        .iter()
        .enumerate()
        .filter(|(_, it)| {
            matches!(
                it,
                ReturnItem::Property(PropertyAccess {
                    property: PropertyRef::Id,
                    ..
                })
            )
        })
        .map(|(i, _)| i)
        .collect()
}

/// Runs one request body against `graph` as a single transaction.
pub fn handle_request(
    db: &Database,
    config: &ServerConfig,
    graph: &CatalogPath,
    body: &str,
    headers: &RequestHeaders,
) -> Reply {
    let user = headers.user.as_deref().unwrap_or("anonymous");
    if let Some(allow) = &config.allowlist {
        if !allow.contains(user) {
            return Reply::error(403, format!("user {user} may not access this service"));
        }
    }
    let stmts = match parse_script(body) {
        Ok(s) => s,
        Err(e) => return Reply::error(400, e),
    };
    let mut txn = db.begin(user);
    if let Err(e) = txn.use_graph(graph) {
        return Reply::error(status_of(&e), e);
    }
    let current = etag_for(txn.base_version());
    if let Some(tag) = &headers.if_match {
        if tag.trim() != "*" && tag.trim() != current {
            let mut r = Reply::error(412, format!("version is {current}, not {tag}"));
            r.etag = Some(current);
            return r;
        }
    }
    let mut last: Option<(BindingTable, Vec<usize>)> = None;
    for stmt in &stmts {
        match txn.execute(stmt) {
            Ok(r) => last = r.map(|t| (t, id_columns(stmt))),
            Err(e) => return Reply::error(status_of(&e), e),
        }
    }
    let (version, positions) = match txn.commit_resolved() {
        Ok(v) => v,
        Err(e) => return Reply::error(status_of(&e), e),
    };
    // rows were computed before commit; give new elements their final ids
    let table = match last {
        Some((mut t, ids)) => {
            t.map_ids(&ids, |id| match usize::try_from(-(id + 1)) {
                Ok(i) => positions.get(i).map_or(id, |p| p.id()),
                Err(_) => id,
            });
            t
        }
        None => BindingTable {
            columns: vec![],
            rows: vec![],
        },
    };
    Reply {
        status: 200,
        body: WireResult::from_table(&table).to_json(),
        etag: Some(etag_for(version)),
    }
}

struct App {
    db: Database,
    config: ServerConfig,
}

fn header_str(h: &HeaderMap, name: &str) -> Option<String> {
    h.get(name).and_then(|v| v.to_str().ok()).map(str::to_string)
}

async fn route(app: Arc<App>, path: String, headers: HeaderMap, body: String) -> Response {
    let graph = path
        .split('/')
        .filter(|s| !s.is_empty())
        .fold(CatalogPath::root(), |p, s| p.child(s));
    let req = RequestHeaders {
        user: header_str(&headers, USER_HEADER),
        if_match: header_str(&headers, header::IF_MATCH.as_str()),
    };
    let reply = tokio::task::spawn_blocking(move || {
        handle_request(&app.db, &app.config, &graph, &body, &req)
    })
    .await
    .unwrap_or_else(|e| Reply::error(500, e));
    let mut resp = Response::new(Body::from(reply.body));
    *resp.status_mut() = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    resp.headers_mut().insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/json"),
    );
    if let Some(tag) = reply.etag.and_then(|t| HeaderValue::from_str(&t).ok()) {
        resp.headers_mut().insert(header::ETAG, tag);
    }
    resp
}

/// A running service; dropping it stops the server.
pub struct Server {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl Server {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL for a graph path such as `/yc/fraud`.
    pub fn graph_url(&self, path: &str) -> String {
        format!("http://{}/g{}", self.addr, path)
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    fn stop_now(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Starts serving `db` on `addr` in a background thread.
pub fn serve(db: Database, addr: &str, config: ServerConfig) -> Result<Server, ServeError> {
    let listener = StdListener::bind(addr).map_err(|source| ServeError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    let local = listener.local_addr().map_err(ServeError::Runtime)?;
    listener.set_nonblocking(true).map_err(ServeError::Runtime)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_io()
        .build()
        .map_err(ServeError::Runtime)?;
    let app = Arc::new(App { db, config });
    let router = Router::new()
        .route(
            "/g",
            post({
                let app = app.clone();
                move |headers: HeaderMap, body: String| route(app, String::new(), headers, body)
            }),
        )
        .route(
            "/g/{*path}",
            post(
                |State(app): State<Arc<App>>, Path(path): Path<String>, headers: HeaderMap, body: String| {
                    route(app, path, headers, body)
                },
            ),
        )
        .with_state(app);
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let Ok(listener) = tokio::net::TcpListener::from_std(listener) else {
                return;
            };
            let _ = axum::serve(listener, router)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(Server {
        addr: local,
        stop: Some(tx),
        thread: Some(thread),
    })
}
