use linkgraph::catalog::CatalogError;
use linkgraph::engine::{BindingTable, Database, Datum, EngineError, Session};
use linkgraph::frontend::{parse_script, parse_statement, CatalogPath};
use linkgraph::Value;

const YACHT_CLUB: &str = r#"
create schema /yc;
create graph type /yc/Social {node Person {name string},
    node YachtClub {name string,address string},
    directed edge "Member" connecting (Person->YachtClub)};
create graph /yc/Fraud ANY;
insert (a2 :Account{owner:'Scott',isBlocked:false})-[:Transfer{amount:350000}]->
(:Account{owner:'Aretha',isBlocked:false})-[:Transfer{amount:2000000}]->
(p1 :Person&Account{owner:'Jay',name:'Jay',isBlocked:false})
-[:"Member"]->(:YachtClub {name:'Ankh-Morpork Yacht Club',address: 'Cable Street'})
<-[:"Member"]-(p2 :Person&Account {owner:'Mike',name:'Mike', isBlocked:true})
-[:"Member"]->(:YachtClub{name:'Emerald City Yacht Club',address:'Yellow Brick Road'}),
(p1)-[:Transfer{amount:250000}]->(p2)-[:Transfer{amount:300000}]->(a2);
"#;

const DEGREES: &str = "insert (j:John)-[:degreefrom:masterFrom]->
(d:DauphineUni), (j)-[:degreefrom:phdFrom]->(d);";

const SCHEMA_SCRIPT: &str = "
INSERT (:John)-[:masterFrom]->(:DauphineUni);
MATCH (j:John),(u:DauphineUni)
INSERT (j)-[:phdFrom]->(u);
INSERT SCHEMA [:masterFrom=>:DegreeFrom];
INSERT SCHEMA [:phdFrom=>:DegreeFrom];
";

struct Fixture {
    _dir: tempfile::TempDir,
    db: Database,
}

fn fresh() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let db = Database::open(dir.path().join("test.gql")).unwrap();
    Fixture { _dir: dir, db }
}

fn session(db: &Database) -> Session {
    db.session("tester")
}

fn run(s: &mut Session, script: &str) -> Vec<BindingTable> {
    let mut out = Vec::new();
    for stmt in parse_script(script).unwrap() {
        out.extend(s.execute(&stmt).unwrap_or_else(|e| panic!("{stmt}: {e}")));
    }
    out
}

fn try_run(s: &mut Session, script: &str) -> Result<Vec<BindingTable>, EngineError> {
    let mut out = Vec::new();
    for stmt in parse_script(script).unwrap() {
        out.extend(s.execute(&stmt)?);
    }
    Ok(out)
}

fn query(s: &mut Session, q: &str) -> BindingTable {
    s.execute(&parse_statement(q).unwrap())
        .unwrap()
        .expect("a result table")
}

fn strings(t: &BindingTable, col: &str) -> Vec<String> {
    t.column(col)
        .unwrap()
        .into_iter()
        .map(|d| d.to_string())
        .collect()
}

fn yacht_club() -> (Fixture, Session) {
    let f = fresh();
    let mut s = session(&f.db);
    run(&mut s, YACHT_CLUB);
    (f, s)
}

fn home(db: &Database) -> Session {
    session(db).with_graph(CatalogPath::root())
}

#[test]
fn yacht_club_counts() {
    let (f, _s) = yacht_club();
    let state = f.db.snapshot();
    assert_eq!(state.nodes.len(), 6);
    assert_eq!(state.edges.len(), 7);
    let jay = state
        .nodes
        .values()
        .find(|n| n.props.get("owner") == Some(&Value::Str("Jay".into())))
        .unwrap();
    assert_eq!(jay.labels, ["person", "account"]);
    assert_eq!(jay.props.len(), 3);
}

#[test]
fn yacht_club_in_one_transaction() {
    let f = fresh();
    let mut s = session(&f.db);
    run(&mut s, &format!("BEGIN;{YACHT_CLUB}"));
    assert!(f.db.snapshot().nodes.is_empty());
    run(&mut s, "COMMIT");
    assert_eq!(f.db.snapshot().nodes.len(), 6);
    assert_eq!(f.db.snapshot().edges.len(), 7);
}

#[test]
fn insert_needs_current_graph() {
    let f = fresh();
    let mut s = session(&f.db);
    let err = try_run(&mut s, "INSERT (:A)").unwrap_err();
    assert!(matches!(err, EngineError::NoCurrentGraph), "{err}");
}

#[test]
fn member_match() {
    let (_f, mut s) = yacht_club();
    let t = query(
        &mut s,
        r#"MATCH (p:Person)-[:"Member"]->(c:YachtClub {name:'Ankh-Morpork Yacht Club'}) RETURN p.name"#,
    );
    assert_eq!(t.columns, ["p.name"]);
    assert_eq!(strings(&t, "p.name"), ["Jay", "Mike"]);
}

#[test]
fn blocked_transfer() {
    let (_f, mut s) = yacht_club();
    let t = query(&mut s, "MATCH (a:Account{isBlocked:true})-[:Transfer]->(b) RETURN b.owner");
    assert_eq!(strings(&t, "b.owner"), ["Scott"]);
}

#[test]
fn return_whole_element_and_unknown_alias() {
    let (_f, mut s) = yacht_club();
    let t = query(&mut s, "MATCH (x:Person {name:'Jay'}) RETURN x, x@id");
    assert_eq!(t.columns, ["x", "x@id"]);
    let Datum::Element(el) = &t.rows[0][0] else {
        panic!("expected element");
    };
    let Datum::Value(Value::Int(id)) = t.rows[0][1] else {
        panic!("expected id");
    };
    assert_eq!(el.id, id);
    assert_eq!(
        el.to_string(),
        format!("(:person:account @{id} {{isblocked: false, name: 'Jay', owner: 'Jay'}})")
    );
    let err = try_run(&mut s, "MATCH (p:Person) RETURN q.name").unwrap_err();
    assert!(matches!(err, EngineError::UnknownAlias(_)));
}

#[test]
fn missing_property_is_null() {
    let (_f, mut s) = yacht_club();
    let t = query(&mut s, "MATCH (c:YachtClub) RETURN c.owner, c.address");
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows.iter().all(|r| r[0] == Datum::Value(Value::Null)));
}

#[test]
fn degrees_match() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, DEGREES);
    let t = query(&mut s, "MATCH (a)-[:degreeFrom]->(b)");
    assert_eq!(t.rows.len(), 2);
    assert_eq!(t.columns, ["a", "b"]);
    let state = f.db.snapshot();
    assert_eq!(state.nodes.len(), 2);
    assert_eq!(state.edges.len(), 2);
}

#[test]
fn schema_script_saturation() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, SCHEMA_SCRIPT);
    let state = f.db.snapshot();
    // the MATCH...INSERT adds one edge and no nodes
    assert_eq!(state.nodes.len(), 2);
    assert_eq!(state.edges.len(), 2);
    let t = query(&mut s, "MATCH (x)-[:degreeFrom]->(y)");
    assert_eq!(t.rows.len(), 2);
    let t = query(&mut s, r#"MATCH SCHEMA (a)-[:"=>"]->(b) RETURN a.name, b.name"#);
    let pairs: Vec<(String, String)> = t
        .rows
        .iter()
        .map(|r| (r[0].to_string(), r[1].to_string()))
        .collect();
    assert_eq!(
        pairs,
        [
            ("masterfrom".to_string(), "degreefrom".to_string()),
            ("phdfrom".to_string(), "degreefrom".to_string())
        ]
    );
}

#[test]
fn insert_schema_rules() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, SCHEMA_SCRIPT);
    let v = f.db.version();
    run(&mut s, "INSERT SCHEMA [:masterFrom=>:DegreeFrom]");
    assert_eq!(f.db.version(), v);
    let err = try_run(&mut s, "INSERT SCHEMA [:John=>:degreeFrom]").unwrap_err();
    assert!(matches!(err, EngineError::Catalog(CatalogError::NotAnEdgeLabel(_))), "{err}");
}

#[test]
fn social_schema_view() {
    let (_f, mut s) = yacht_club();
    run(&mut s, "CREATE GRAPH /yc/SocialGraph :: /yc/Social");
    let t = query(&mut s, "MATCH SCHEMA (a)-[e]->(b) RETURN a.name, e.name, b.name");
    assert_eq!(t.rows.len(), 1);
    let row: Vec<String> = t.rows[0].iter().map(|d| d.to_string()).collect();
    assert_eq!(row, ["person", "Member", "yachtclub"]);
    let t = query(&mut s, "MATCH SCHEMA (a) RETURN a.name");
    assert_eq!(t.rows.len(), 2);
}

#[test]
fn empty_graph_schema_view() {
    let f = fresh();
    let mut s = home(&f.db);
    let t = query(&mut s, "MATCH SCHEMA (a)");
    assert!(t.rows.is_empty());
}

#[test]
fn membership_across_graphs() {
    let (_f, mut s) = yacht_club();
    run(&mut s, "CREATE GRAPH /yc/SocialGraph :: /yc/Social");
    let t = query(&mut s, "MATCH (p:Person) RETURN p.name");
    assert_eq!(strings(&t, "p.name"), ["Jay", "Mike"]);
    // members through their Person label, so Account matches them too
    let t = query(&mut s, "MATCH (a:Account) RETURN a.owner");
    assert_eq!(strings(&t, "a.owner"), ["Jay", "Mike"]);
    run(&mut s, "USE GRAPH /yc/Fraud");
    let t = query(&mut s, "MATCH (p:Person) RETURN p.name");
    assert_eq!(strings(&t, "p.name"), ["Jay", "Mike"]);
    let t = query(&mut s, "MATCH (a:Account) RETURN a.owner");
    assert_eq!(t.rows.len(), 4);
}

#[test]
fn closed_graph_inserts() {
    let (_f, mut s) = yacht_club();
    run(&mut s, "CREATE GRAPH /yc/S2 :: /yc/Social");
    run(&mut s, "INSERT (:Person {name:'Ann'})-[:\"Member\"]->(:YachtClub {name:'X'})");
    let err = try_run(&mut s, "INSERT (:Account {owner:'Z'})").unwrap_err();
    assert!(matches!(
        err,
        EngineError::Catalog(CatalogError::UnknownLabelInClosedGraph { .. })
    ));
    let err = try_run(&mut s, "INSERT (:YachtClub {name:'Y'})-[:\"Member\"]->(:Person {name:'B'})")
        .unwrap_err();
    assert!(matches!(err, EngineError::Catalog(CatalogError::ConnectingViolation { .. })));
}

#[test]
fn match_insert_reuses_nodes() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, "INSERT (:John), (:DauphineUni)");
    run(&mut s, "MATCH (j:John),(u:DauphineUni) INSERT (j)-[:phdFrom]->(u)");
    let state = f.db.snapshot();
    assert_eq!(state.nodes.len(), 2);
    assert_eq!(state.edges.len(), 1);
}

#[test]
fn alias_reuse_in_insert() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, DEGREES);
    let t = query(&mut s, "MATCH (j:John) RETURN j@id");
    assert_eq!(t.rows.len(), 1);
}

#[test]
fn set_and_remove() {
    let (_f, mut s) = yacht_club();
    run(&mut s, "BEGIN");
    run(&mut s, "MATCH (a:Account{owner:'Scott'}) SET a.isBlocked = true");
    let t = query(&mut s, "MATCH (a:Account{owner:'Scott'}) RETURN a.isBlocked");
    assert_eq!(t.rows[0][0], Datum::Value(Value::Bool(true)));
    run(&mut s, "ROLLBACK");
    let t = query(&mut s, "MATCH (a:Account{owner:'Scott'}) RETURN a.isBlocked");
    assert_eq!(t.rows[0][0], Datum::Value(Value::Bool(false)));

    run(&mut s, "MATCH (a:Account{owner:'Nobody'}) SET a.isBlocked = true");
    let err = try_run(&mut s, "MATCH (a:Account) SET a.@id = 5").unwrap_err();
    assert!(matches!(err, EngineError::ReadOnlyProperty(_)));
    let err = try_run(&mut s, "MATCH (a:Account{owner:'Scott'}) SET a.isBlocked = 'no'").unwrap_err();
    assert!(matches!(err, EngineError::Catalog(CatalogError::PropertyTypeMismatch { .. })));

    run(&mut s, "MATCH (a:Account{owner:'Scott'}) SET a.rating = 3");
    run(&mut s, "MATCH (a:Account{owner:'Scott'}) REMOVE a.isBlocked");
    let t = query(&mut s, "MATCH (a:Account{owner:'Scott'}) RETURN a.isBlocked, a.rating");
    assert_eq!(
        t.rows[0],
        [Datum::Value(Value::Null), Datum::Value(Value::Int(3))]
    );
}

#[test]
fn deletes() {
    let (f, mut s) = yacht_club();
    run(&mut s, "MATCH ()-[t:Transfer {amount:350000}]->() DELETE t");
    assert_eq!(f.db.snapshot().nodes.len(), 6);
    assert_eq!(f.db.snapshot().edges.len(), 6);

    let (f, mut s) = yacht_club();
    let err = try_run(&mut s, "MATCH (a:Account {owner:'Aretha'}) DELETE a").unwrap_err();
    assert!(matches!(err, EngineError::NodeHasEdges(_)));
    run(&mut s, "MATCH (a:Account {owner:'Aretha'}) DETACH DELETE a");
    assert_eq!(f.db.snapshot().nodes.len(), 5);
    assert_eq!(f.db.snapshot().edges.len(), 5);
}

#[test]
fn rollback_discards() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, "BEGIN; INSERT (:A); ROLLBACK");
    assert!(query(&mut s, "MATCH (a:A)").rows.is_empty());
    run(&mut s, "ROLLBACK");
    assert_eq!(f.db.version(), 8);
}

#[test]
fn failed_statement_leaves_transaction_intact() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, "BEGIN; INSERT (:A {x: 1})");
    assert!(try_run(&mut s, "INSERT (:B)-[:e]->(:A {x: 'bad'})").is_err());
    run(&mut s, "COMMIT");
    let state = f.db.snapshot();
    assert_eq!(state.nodes.len(), 1);
    assert!(state.catalog.type_by_label("b").is_none());
}

#[test]
fn begin_snapshots() {
    let f = fresh();
    let a = f.db.begin("u");
    let b = f.db.begin("u");
    assert_eq!(a.base_version(), b.base_version());
    assert!(a.state().nodes.is_empty());
    let mut s = home(&f.db);
    run(&mut s, "INSERT (:A)");
    let c = f.db.begin("u");
    assert_eq!(c.base_version(), f.db.version());
    assert!(c.base_version() > a.base_version());
}

#[test]
fn concurrent_set_conflict() {
    let (f, _s) = yacht_club();
    let fraud = CatalogPath::root().child("yc").child("fraud");
    let mut t1 = f.db.begin("u1");
    let mut t2 = f.db.begin("u2");
    for t in [&mut t1, &mut t2] {
        t.use_graph(&fraud).unwrap();
    }
    t1.execute(&parse_statement("MATCH (a:Account{owner:'Scott'}) SET a.isBlocked = true").unwrap())
        .unwrap();
    t2.execute(&parse_statement("MATCH (a:Account{owner:'Scott'}) SET a.owner = 'S'").unwrap())
        .unwrap();
    t1.commit().unwrap();
    let err = t2.commit().unwrap_err();
    assert!(err.is_conflict(), "{err}");
}

#[test]
fn disjoint_inserts_commit() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, "INSERT (:A), (:B)");
    let mut t1 = f.db.begin("u1");
    let mut t2 = f.db.begin("u2");
    for t in [&mut t1, &mut t2] {
        t.use_graph(&CatalogPath::root()).unwrap();
    }
    t1.execute(&parse_statement("INSERT (:A {n: 1})").unwrap()).unwrap();
    t2.execute(&parse_statement("INSERT (:B {m: 2})").unwrap()).unwrap();
    t1.commit().unwrap();
    t2.commit().unwrap();
    assert_eq!(f.db.snapshot().nodes.len(), 4);
}

#[test]
fn empty_commit_is_noop() {
    let f = fresh();
    let v = f.db.version();
    let t = f.db.begin("u");
    assert_eq!(t.commit().unwrap(), v);
    assert_eq!(std::fs::metadata(f.db.path()).unwrap().len(), 8);
}

#[test]
fn ids_are_log_positions() {
    let f = fresh();
    let mut s = home(&f.db);
    run(&mut s, DEGREES);
    let state = f.db.snapshot();
    let store = linkgraph::store::Store::open(f.db.path(), false).unwrap();
    let mut positions = Vec::new();
    store
        .replay::<linkgraph::store::StoreError>(|pos, rec| {
            if matches!(
                rec,
                linkgraph::store::LogRecord::Node { .. } | linkgraph::store::LogRecord::Edge { .. }
            ) {
                positions.push(pos);
            }
            Ok(())
        })
        .unwrap();
    let mut live: Vec<_> = state.nodes.keys().chain(state.edges.keys()).copied().collect();
    live.sort();
    assert_eq!(live, positions);
}

#[test]
fn run_convenience() {
    let f = fresh();
    let out = f
        .db
        .run("CREATE GRAPH /g ANY; INSERT (:A {x: 1}); MATCH (a:A) RETURN a.x")
        .unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].rows[0][0], Datum::Value(Value::Int(1)));
}

#[test]
fn duplicate_graph_path() {
    let (_f, mut s) = yacht_club();
    let err = try_run(&mut s, "create graph /yc/Fraud ANY").unwrap_err();
    assert!(matches!(err, EngineError::Catalog(CatalogError::DuplicatePath(_))));
}
