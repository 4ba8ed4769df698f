use std::collections::BTreeMap;
use std::thread;

use linkgraph::engine::{Database, Datum, Transaction};
use linkgraph::frontend::{parse_statement, CatalogPath};
use linkgraph::Value;
use proptest::prelude::*;

fn begin(db: &Database) -> Transaction {
    let mut t = db.begin("worker");
    t.use_graph(&CatalogPath::root()).unwrap();
    t
}

fn exec(t: &mut Transaction, q: &str) -> Option<linkgraph::engine::BindingTable> {
    t.execute(&parse_statement(q).unwrap())
        .unwrap_or_else(|e| panic!("{q}: {e}"))
}

fn read_counter(t: &mut Transaction) -> i64 {
    let table = exec(t, "MATCH (c:counter) RETURN c.v").unwrap();
    match &table.rows[0][0] {
        Datum::Value(Value::Int(v)) => *v,
        other => panic!("{other:?}"),
    }
}

#[test]
fn increments_are_not_lost() {
    let dir = tempfile::tempdir().unwrap();
    let db = Database::open(dir.path().join("db")).unwrap();
    let mut t = begin(&db);
    exec(&mut t, "INSERT (:counter {v: 0})");
    t.commit().unwrap();

    let threads = 4;
    let per = 15;
    let handles: Vec<_> = (0..threads)
        .map(|_| {
            let db = db.clone();
            thread::spawn(move || {
                let mut conflicts = 0;
                for _ in 0..per {
                    loop {
                        let mut t = begin(&db);
                        let v = read_counter(&mut t);
                        exec(&mut t, &format!("MATCH (c:counter) SET c.v = {}", v + 1));
                        match t.commit() {
                            Ok(_) => break,
                            Err(e) if e.is_conflict() => conflicts += 1,
                            Err(e) => panic!("{e}"),
                        }
                    }
                }
                conflicts
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let mut t = begin(&db);
    assert_eq!(read_counter(&mut t), threads * per);
}

#[derive(Debug, Clone)]
enum Op {
    Insert(u8),
    Set(u8, i64),
    Delete(u8),
    Link(u8, u8),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0u8..4).prop_map(Op::Insert),
        (0u8..4, 0i64..10).prop_map(|(i, v)| Op::Set(i, v)),
        (0u8..4).prop_map(Op::Delete),
        (0u8..4, 0u8..4).prop_map(|(a, b)| Op::Link(a, b)),
    ]
}

fn op_text(op: &Op) -> String {
    match op {
        Op::Insert(i) => format!("INSERT (:item {{i: {i}, v: 0}})"),
        Op::Set(i, v) => format!("MATCH (x:item {{i: {i}}}) SET x.v = {v}"),
        Op::Delete(i) => format!("MATCH (x:item {{i: {i}}}) DETACH DELETE x"),
        Op::Link(a, b) => format!("MATCH (x:item {{i: {a}}}),(y:item {{i: {b}}}) INSERT (x)-[:link]->(y)"),
    }
}

/// Contents independent of positions: node (i, v) multiset and edge endpoint pairs.
fn contents(db: &Database) -> (BTreeMap<(i64, i64), usize>, BTreeMap<(i64, i64), usize>) {
    let mut t = begin(db);
    let int = |d: &Datum| match d {
        Datum::Value(Value::Int(v)) => *v,
        other => panic!("{other:?}"),
    };
    let mut nodes = BTreeMap::new();
    for r in exec(&mut t, "MATCH (x:item) RETURN x.i, x.v").unwrap().rows {
        *nodes.entry((int(&r[0]), int(&r[1]))).or_insert(0) += 1;
    }
    let mut edges = BTreeMap::new();
    for r in exec(&mut t, "MATCH (x)-[:link]->(y) RETURN x.i, y.i").unwrap().rows {
        *edges.entry((int(&r[0]), int(&r[1]))).or_insert(0) += 1;
    }
    (nodes, edges)
}

fn setup(db: &Database) {
    let mut t = begin(db);
    for i in 0..4 {
        exec(&mut t, &format!("INSERT (:item {{i: {i}, v: 0}})"));
    }
    exec(&mut t, "MATCH (x:item {i: 0}),(y:item {i: 1}) INSERT (x)-[:link]->(y)");
    t.commit().unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Two overlapping transactions: whatever commits must equal running the
    /// committed ones in some serial order, and the first committer wins.
    #[test]
    fn interleaved_commits_are_serializable(
        a in prop::collection::vec(op(), 1..4),
        b in prop::collection::vec(op(), 1..4),
        a_first in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let db = Database::open(dir.path().join("db")).unwrap();
        setup(&db);
        let mut ta = begin(&db);
        let mut tb = begin(&db);
        for o in &a {
            exec(&mut ta, &op_text(o));
        }
        for o in &b {
            exec(&mut tb, &op_text(o));
        }
        let (first, second, t1, t2) = if a_first { (&a, &b, ta, tb) } else { (&b, &a, tb, ta) };
        prop_assert!(t1.commit().is_ok());
        let second_ok = match t2.commit() {
            Ok(_) => true,
            Err(e) => {
                prop_assert!(e.is_conflict(), "{}", e);
                false
            }
        };

        let serial = |order: &[&Vec<Op>]| {
            let dir = tempfile::tempdir().unwrap();
            let db = Database::open(dir.path().join("db")).unwrap();
            setup(&db);
            for ops in order {
                let mut t = begin(&db);
                for o in *ops {
                    exec(&mut t, &op_text(o));
                }
                t.commit().unwrap();
            }
            contents(&db)
        };
        let got = contents(&db);
        if second_ok {
            prop_assert!(
                got == serial(&[first, second]) || got == serial(&[second, first]),
                "{:?} matches no serial order",
                got
            );
        } else {
            prop_assert_eq!(got, serial(&[first]));
        }
    }

    /// A read-only transaction never conflicts and never blocks a writer.
    #[test]
    fn readers_do_not_conflict(w in prop::collection::vec(op(), 1..4)) {
        let dir = tempfile::tempdir().unwrap();
        let db = Database::open(dir.path().join("db")).unwrap();
        setup(&db);
        let mut reader = begin(&db);
        let before = exec(&mut reader, "MATCH (x:item) RETURN x.i, x.v").unwrap();
        let mut writer = begin(&db);
        for o in &w {
            exec(&mut writer, &op_text(o));
        }
        writer.commit().unwrap();
        // the snapshot is stable inside the reader
        prop_assert_eq!(exec(&mut reader, "MATCH (x:item) RETURN x.i, x.v").unwrap(), before);
        prop_assert!(reader.commit().is_ok());
    }
}
