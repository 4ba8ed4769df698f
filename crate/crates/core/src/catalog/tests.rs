use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::frontend::{parse_statement, EdgeTypeSpec, NodeTypeSpec, Statement};

fn path(s: &str) -> CatalogPath {
    CatalogPath(
        s.split('/')
            .filter(|p| !p.is_empty())
            .map(Ident::new)
            .collect(),
    )
}

fn social_spec() -> GraphTypeSpec {
    let stmt = parse_statement(
        "create graph type /yc/Social {node Person {name string}, \
         node YachtClub {name string,address string}, \
         directed edge \"Member\" connecting (Person->YachtClub)}",
    )
    .unwrap();
    match stmt {
        Statement::CreateGraphType { spec, .. } => spec,
        other => panic!("unexpected {other:?}"),
    }
}

fn with_yc() -> StagedCatalog {
    let mut s = StagedCatalog::default();
    create_schema(&mut s, &path("/yc")).unwrap();
    s
}

fn social() -> (StagedCatalog, Position) {
    let mut s = with_yc();
    let gt = define_graph_type(&mut s, &path("/yc/Social"), &social_spec()).unwrap();
    (s, gt)
}

fn ids(names: &[&str]) -> Vec<Ident> {
    names.iter().map(|n| Ident::new(*n)).collect()
}

fn props(ps: &[(&str, Value)]) -> Vec<(Ident, Value)> {
    ps.iter().map(|(k, v)| (Ident::new(*k), v.clone())).collect()
}

fn node(s: &mut StagedCatalog, graph: Position, labels: &[&str], ps: &[(&str, Value)]) -> Typing {
    extend_open_type(s, graph, &ids(labels), &props(ps), Role::Node).unwrap()
}

fn edge_type(s: &mut StagedCatalog, graph: Position, label: &str) -> Position {
    let a = node(s, graph, &["n"], &[]);
    extend_open_type(
        s,
        graph,
        &ids(&[label]),
        &[],
        Role::Edge {
            leaving: &a.types,
            arriving: &a.types,
        },
    )
    .unwrap()
    .types[0]
}

#[test]
fn resolve_label_case_rule() {
    let mut s = StagedCatalog::default();
    let t = edge_type(&mut s, Position::HOME_GRAPH, "degreeFrom");
    let a = s.catalog.resolve_label("degreeFrom", false);
    let b = s.catalog.resolve_label("DegreeFrom", false);
    assert_eq!(a, b);
    assert_eq!(a.def_pos, Some(t));
    assert_eq!(a.display, "degreeFrom");

    let q1 = s.catalog.resolve_label("Member", true);
    let q2 = s.catalog.resolve_label("Member", true);
    assert_eq!(q1, q2);
    let u = s.catalog.resolve_label("member", false);
    assert_ne!(q1.canonical, u.canonical);
}

#[test]
fn social_graph_type() {
    let (s, gt) = social();
    let gt = s.catalog.graph_type(gt).unwrap();
    let types: Vec<_> = gt
        .types
        .iter()
        .map(|p| s.catalog.element_type(*p).unwrap())
        .collect();
    assert_eq!(types.iter().filter(|t| !t.is_edge()).count(), 2);
    let member: Vec<_> = types.iter().filter(|t| t.is_edge()).collect();
    assert_eq!(member.len(), 1);
    assert_eq!(member[0].label.canonical, "Member");
    let (src, dst) = member[0].connecting().unwrap();
    assert_eq!(s.catalog.element_type(src).unwrap().label.canonical, "person");
    assert_eq!(s.catalog.element_type(dst).unwrap().label.canonical, "yachtclub");
    let club = s.catalog.type_by_label("yachtclub").unwrap();
    assert_eq!(
        club.props.keys().cloned().collect::<Vec<_>>(),
        ["address", "name"]
    );
    assert!(!club.extensible());
}

#[test]
fn empty_graph_type() {
    let mut s = with_yc();
    let gt = define_graph_type(&mut s, &path("/yc/Empty"), &GraphTypeSpec::default()).unwrap();
    assert!(s.catalog.graph_type(gt).unwrap().types.is_empty());
}

#[test]
fn graph_type_errors() {
    let mut s = StagedCatalog::default();
    assert_eq!(
        define_graph_type(&mut s, &path("/yc/Social"), &social_spec()),
        Err(CatalogError::UnknownSchema("/yc".into()))
    );
    let mut s = with_yc();
    let spec = GraphTypeSpec {
        nodes: vec![NodeTypeSpec {
            label: Ident::new("Person"),
            props: vec![],
        }],
        edges: vec![EdgeTypeSpec {
            label: Ident::new("Member"),
            props: vec![],
            source: Ident::new("Person"),
            target: Ident::new("Club"),
        }],
    };
    assert_eq!(
        define_graph_type(&mut s, &path("/yc/Bad"), &spec),
        Err(CatalogError::UnknownLabelInConnecting("club".into()))
    );
    assert!(s.catalog.type_by_label("person").is_none());
    define_graph_type(&mut s, &path("/yc/Social"), &social_spec()).unwrap();
    assert_eq!(
        define_graph_type(&mut s, &path("/yc/Social"), &GraphTypeSpec::default()),
        Err(CatalogError::DuplicatePath("/yc/Social".into()))
    );
}

#[test]
fn create_graphs() {
    let (mut s, gt) = social();
    let fraud = create_graph(&mut s, &path("/yc/Fraud"), NewGraphKind::Open).unwrap();
    assert!(s.catalog.graph(fraud).unwrap().is_open());
    let closed =
        create_graph(&mut s, &path("/yc/Social2"), NewGraphKind::Closed(&path("/yc/Social")))
            .unwrap();
    assert_eq!(s.catalog.graph(closed).unwrap().graph_type, Some(gt));
    assert_eq!(
        create_graph(&mut s, &path("/yc/Fraud"), NewGraphKind::Open),
        Err(CatalogError::DuplicatePath("/yc/Fraud".into()))
    );
    assert_eq!(
        create_graph(&mut s, &path("/yc/X"), NewGraphKind::Closed(&path("/yc/Nope"))),
        Err(CatalogError::UnknownGraphType("/yc/Nope".into()))
    );
    assert_eq!(
        create_graph(&mut s, &path("/zz/X"), NewGraphKind::Open),
        Err(CatalogError::UnknownSchema("/zz".into()))
    );
}

#[test]
fn open_typing_transfer() {
    let (mut s, _) = social();
    let g = create_graph(&mut s, &path("/yc/Fraud"), NewGraphKind::Open).unwrap();
    let acct = node(
        &mut s,
        g,
        &["Account"],
        &[("owner", Value::Str("Scott".into())), ("isBlocked", Value::Bool(false))],
    );
    let account = acct.types[0];
    let t = extend_open_type(
        &mut s,
        g,
        &ids(&["Transfer"]),
        &props(&[("amount", Value::Int(350000))]),
        Role::Edge {
            leaving: &acct.types,
            arriving: &acct.types,
        },
    )
    .unwrap();
    let transfer = s.catalog.element_type(t.types[0]).unwrap();
    assert_eq!(transfer.connecting(), Some((account, account)));
    assert_eq!(transfer.props["amount"].tag, TypeTag::Int);

    // Person is declared by Social; Account carries the new properties
    let jay = node(
        &mut s,
        g,
        &["Person", "Account"],
        &[
            ("owner", Value::Str("Jay".into())),
            ("name", Value::Str("Jay".into())),
            ("isBlocked", Value::Bool(false)),
        ],
    );
    assert_eq!(jay.types.len(), 2);
    assert_eq!(jay.types[1], account);
    let again = extend_open_type(
        &mut s,
        g,
        &ids(&["Transfer"]),
        &props(&[("amount", Value::Int(250000))]),
        Role::Edge {
            leaving: &jay.types,
            arriving: &acct.types,
        },
    )
    .unwrap();
    assert_eq!(again.types, t.types);

    let err = extend_open_type(
        &mut s,
        g,
        &ids(&["Account"]),
        &props(&[("isBlocked", Value::Str("no".into()))]),
        Role::Node,
    )
    .unwrap_err();
    assert!(matches!(err, CatalogError::PropertyTypeMismatch { .. }), "{err:?}");
}

#[test]
fn singleton_type_idempotent() {
    let mut s = StagedCatalog::default();
    let a = node(&mut s, Position::HOME_GRAPH, &["John"], &[]);
    let b = node(&mut s, Position::HOME_GRAPH, &["john"], &[]);
    assert_eq!(a.types, b.types);
    assert_eq!(s.catalog.types().count(), 1);
    assert!(s.catalog.element_type(a.types[0]).unwrap().singleton);
}

#[test]
fn open_edge_connecting_enforced() {
    let mut s = StagedCatalog::default();
    let g = Position::HOME_GRAPH;
    let a = node(&mut s, g, &["A"], &[]);
    let b = node(&mut s, g, &["B"], &[]);
    let role = |l, r| Role::Edge {
        leaving: l,
        arriving: r,
    };
    extend_open_type(&mut s, g, &ids(&["e"]), &[], role(&a.types, &b.types)).unwrap();
    let err = extend_open_type(&mut s, g, &ids(&["e"]), &[], role(&b.types, &a.types));
    assert!(matches!(err, Err(CatalogError::ConnectingViolation { .. })));
    let err = extend_open_type(&mut s, g, &ids(&["A"]), &[], role(&a.types, &b.types));
    assert!(matches!(err, Err(CatalogError::LabelKindMismatch { .. })));
}

#[test]
fn closed_validation() {
    let (mut s, _) = social();
    let g = create_graph(&mut s, &path("/yc/Social2"), NewGraphKind::Closed(&path("/yc/Social")))
        .unwrap();
    let gdef = s.catalog.graph(g).unwrap().clone();
    let cat = &s.catalog;
    let jay = validate_closed_insert(
        cat,
        &gdef,
        &ids(&["Person"]),
        &props(&[("name", Value::Str("Jay".into()))]),
        Role::Node,
    )
    .unwrap();
    let club = validate_closed_insert(cat, &gdef, &ids(&["YachtClub"]), &[], Role::Node).unwrap();
    assert_eq!(
        validate_closed_insert(cat, &gdef, &ids(&["Account"]), &[], Role::Node),
        Err(CatalogError::UnknownLabelInClosedGraph {
            label: "account".into(),
            graph: "/yc/Social2".into()
        })
    );
    let member = [Ident::quoted("Member")];
    validate_closed_insert(
        cat,
        &gdef,
        &member,
        &[],
        Role::Edge {
            leaving: &jay.types,
            arriving: &club.types,
        },
    )
    .unwrap();
    assert!(matches!(
        validate_closed_insert(
            cat,
            &gdef,
            &member,
            &[],
            Role::Edge {
                leaving: &club.types,
                arriving: &jay.types,
            },
        ),
        Err(CatalogError::ConnectingViolation { .. })
    ));
    assert!(matches!(
        validate_closed_insert(
            cat,
            &gdef,
            &ids(&["Person"]),
            &props(&[("age", Value::Int(3))]),
            Role::Node
        ),
        Err(CatalogError::UnknownProperty { .. })
    ));
    assert!(matches!(
        validate_closed_insert(
            cat,
            &gdef,
            &ids(&["Person"]),
            &props(&[("name", Value::Int(3))]),
            Role::Node
        ),
        Err(CatalogError::PropertyTypeMismatch { .. })
    ));
}

#[test]
fn subproperty_closure() {
    let mut s = StagedCatalog::default();
    let g = Position::HOME_GRAPH;
    edge_type(&mut s, g, "masterFrom");
    edge_type(&mut s, g, "phdFrom");
    assert!(add_subproperty(&mut s, g, &Ident::new("masterFrom"), &Ident::new("DegreeFrom")).unwrap());
    assert!(add_subproperty(&mut s, g, &Ident::new("phdFrom"), &Ident::new("degreeFrom")).unwrap());
    assert!(!add_subproperty(&mut s, g, &Ident::new("phdFrom"), &Ident::new("degreeFrom")).unwrap());
    let expect: BTreeSet<String> = ["degreefrom", "masterfrom", "phdfrom"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    assert_eq!(s.catalog.label_closure("degreefrom"), expect);
    assert_eq!(
        s.catalog.label_closure("phdfrom"),
        BTreeSet::from(["phdfrom".to_string()])
    );
    let deg = s.catalog.type_by_label("degreefrom").unwrap();
    assert_eq!(deg.connecting(), None);
    assert_eq!(deg.label.display, "DegreeFrom");
}

#[test]
fn subproperty_errors() {
    let mut s = StagedCatalog::default();
    let g = Position::HOME_GRAPH;
    for l in ["a", "b", "c", "x"] {
        edge_type(&mut s, g, l);
    }
    let id = Ident::new;
    assert!(matches!(
        add_subproperty(&mut s, g, &id("x"), &id("X")),
        Err(CatalogError::SubPropertyCycle { .. })
    ));
    add_subproperty(&mut s, g, &id("a"), &id("b")).unwrap();
    add_subproperty(&mut s, g, &id("b"), &id("c")).unwrap();
    assert!(matches!(
        add_subproperty(&mut s, g, &id("c"), &id("a")),
        Err(CatalogError::SubPropertyCycle { .. })
    ));
    assert_eq!(
        s.catalog.label_closure("c"),
        ["a", "b", "c"].iter().map(|s| s.to_string()).collect()
    );
    assert_eq!(
        add_subproperty(&mut s, g, &id("n"), &id("a")),
        Err(CatalogError::NotAnEdgeLabel("n".into()))
    );
    assert_eq!(
        add_subproperty(&mut s, g, &id("nope"), &id("a")),
        Err(CatalogError::UnknownLabel("nope".into()))
    );
    assert_eq!(
        s.catalog.label_closure("unknown"),
        BTreeSet::from(["unknown".to_string()])
    );
}

fn reachable_below(edges: &[(usize, usize)], top: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([top]);
    let mut stack = vec![top];
    while let Some(x) = stack.pop() {
        for &(sub, sup) in edges {
            if sup == x && seen.insert(sub) {
                stack.push(sub);
            }
        }
    }
    seen
}

proptest! {
    #[test]
    fn closure_matches_reachability(
        n in 1usize..=8,
        raw in proptest::collection::vec((0usize..8, 0usize..8), 0..20),
    ) {
        // orient every pair low => high so the digraph is acyclic
        let edges: Vec<(usize, usize)> = raw
            .into_iter()
            .map(|(a, b)| (a % n, b % n))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        let mut s = StagedCatalog::default();
        let g = Position::HOME_GRAPH;
        let name = |i: usize| format!("l{i}");
        for i in 0..n {
            edge_type(&mut s, g, &name(i));
        }
        for (a, b) in &edges {
            add_subproperty(&mut s, g, &Ident::new(name(*a)), &Ident::new(name(*b))).unwrap();
        }
        for i in 0..n {
            let want: BTreeSet<String> = reachable_below(&edges, i).into_iter().map(name).collect();
            prop_assert_eq!(s.catalog.label_closure(&name(i)), want);
        }
        // any reversed edge closes a cycle
        for (a, b) in &edges {
            let r = add_subproperty(&mut s, g, &Ident::new(name(*b)), &Ident::new(name(*a)));
            prop_assert!(
                matches!(r, Err(CatalogError::SubPropertyCycle { .. })),
                "expected cycle error"
            );
        }
    }
}
