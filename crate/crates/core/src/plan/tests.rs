use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gen::random_program;
use super::*;
use crate::skills::ExecError;
use crate::value::Value;

#[derive(Default)]
struct Recorder {
    calls: Vec<String>,
    suspend_on: Option<String>,
    fail_on: Option<(String, String)>,
    held: bool,
}

impl Host for Recorder {
    fn call(&mut self, name: &str, args: &[Value], _kwargs: &[(String, Value)]) -> Result<Value, HostError> {
        self.calls.push(name.to_string());
        if self.suspend_on.as_deref() == Some(name) {
            return Err(HostError::Suspend);
        }
        if let Some((n, code)) = &self.fail_on {
            if n == name {
                return Err(HostError::Failed(ExecError { code: code.clone(), message: "failed".into() }));
            }
        }
        match name {
            "find" => Ok(Value::Int(3)),
            "get_all_object_ids" => Ok(Value::List(vec![Value::Int(0), Value::Int(1)])),
            "pick" => {
                if self.held {
                    return Err(HostError::Failed(ExecError { code: "GripperOccupied".into(), message: "held".into() }));
                }
                self.held = true;
                Ok(Value::None)
            }
            "start_task" | "end_task" | "place" => Ok(Value::None),
            "echo" => Ok(Value::List(args.to_vec())),
            _ => Err(HostError::Failed(ExecError { code: "UnknownFunction".into(), message: name.to_string() })),
        }
    }
}

#[test]
fn assignment_of_call() {
    let p = parse("object_id = find(\"mug\")\n").unwrap();
    assert_eq!(
        p.without_spans().body[0].kind,
        StmtKind::Assign {
            target: Target::Name("object_id".into()),
            value: Expr::Call { name: "find".into(), args: vec![Expr::Str("mug".into())], kwargs: vec![] }
        }
    );
}

#[test]
fn tuple_unpack() {
    let p = parse("open_drawer, open_drawer_doc = learn_skill(\"open_drawer\")").unwrap();
    match &p.body[0].kind {
        StmtKind::Assign { target: Target::Pair(a, b), .. } => {
            assert_eq!((a.as_str(), b.as_str()), ("open_drawer", "open_drawer_doc"));
        }
        other => panic!("{other:?}"),
    }
    assert!(parse("a, b, c = f()").is_err());
}

#[test]
fn syntax_error_at_eof() {
    let e = parse("x = (").unwrap_err();
    assert_eq!(e.line, 1);
    assert_eq!(e.token, "end of input");
    let e = parse("x = find(\"mug\"\npick(x)\n").unwrap_err();
    assert_eq!(e.token, "end of input");
}

#[test]
fn syntax_errors_name_the_token() {
    let e = parse("def f():\n    pass\n").unwrap_err();
    assert_eq!((e.line, e.column, e.token.as_str()), (1, 1, "def"));
    let e = parse("x = 1\n    y = 2\n").unwrap_err();
    assert!(e.message.contains("unexpected indent"));
    let e = parse("while True:\n    pick(1)\n").unwrap_err();
    assert_eq!(e.token, "while");
    let e = parse("obj.pick()").unwrap_err();
    assert!(e.message.contains("attribute"));
    assert!(parse("for x in y:\npick(x)\n").is_err());
    assert!(parse("if a:\n    b()\n  c()\n").is_err());
}

#[test]
fn empty_program() {
    let p = parse("").unwrap();
    assert!(p.is_empty());
    assert_eq!(unparse(&p), "");
    assert_eq!(parse("\n\n   \n").unwrap(), Program::default());
}

#[test]
fn canonical_round_trip() {
    let src = "# place every bowl\nfor i in ids:\n    for j in get_objects_contained_and_over(i):\n        pick(j)\n        place(j, get_place_position(j, i, \"to the left\"))\n    if i == 2 and not done:\n        print(\"two\", i)\n    elif i in [3, 4]:\n        pass\n    else:\n        x = find(object_label=\"mug\", candidates=[1, -2])\n";
    let p = parse(src).unwrap();
    assert_eq!(unparse(&p), src);
    assert_eq!(parse(&unparse(&p)).unwrap().without_spans(), p.without_spans());
}

#[test]
fn loose_formatting_is_accepted() {
    let src = "start_task()\nfor id in get_all_object_ids(): pick(id)\nx = [1,\n     2,]  # trailing\nif x:\n\tend_task( )\n";
    let p = parse(src).unwrap();
    assert_eq!(p.body.len(), 4);
    assert_eq!(p.body[2].span, Span { start_line: 3, end_line: 4 });
    assert_eq!(
        unparse(&p),
        "start_task()\nfor id in get_all_object_ids():\n    pick(id)\nx = [1, 2]\nif x:\n    end_task()\n"
    );
}

#[test]
fn comment_placement_follows_code() {
    let src = "for a in b:\n    f(a)\n        # deep comment ends the loop body\n# outer\ng()\n";
    let p = parse(src).unwrap();
    let StmtKind::For { body, .. } = &p.body[0].kind else { panic!() };
    assert_eq!(body.len(), 2);
    assert!(matches!(p.body[1].kind, StmtKind::Comment(_)));
    // a comment less indented than the code that follows it stays with it
    let p = parse("if a:\n# inside\n    f()\n").unwrap();
    let StmtKind::If { branches, .. } = &p.body[0].kind else { panic!() };
    assert_eq!(branches[0].1.len(), 2);
}

#[test]
fn static_names() {
    let base = parse("start_task()\nmug = find(\"mug\")\npick(mug)\nend_task()\n").unwrap();
    let names = static_call_names(&base);
    assert!(names.contains("pick") && !names.contains("learn_skill"));
    let learned =
        parse("start_task()\npick_mug_by_handle, doc = learn_skill(\"pick_mug_by_handle\")\npick_mug_by_handle(find(\"mug\"))\nend_task()\n")
            .unwrap();
    assert!(static_call_names(&learned).contains("learn_skill"));
    assert_eq!(requested_skills(&learned), vec!["pick_mug_by_handle".to_string()]);
    assert!(static_call_names(&Program::default()).is_empty());
}

#[test]
fn baseline_plan_runs_four_steps() {
    let src = "start_task()\n# find the mug\nmug_id = find(\"mug\")\npick(mug_id)\nend_task()\n";
    let p = parse(src).unwrap();
    let mut host = Recorder::default();
    let mut it = Interpreter::new(&p).with_source(src);
    let (events, susp) = it.run(&mut host);
    assert!(susp.is_none());
    assert_eq!(events.len(), 4);
    assert!(events.iter().all(|e| e.result.ok));
    assert_eq!(events[1].source, "mug_id = find(\"mug\")");
    assert_eq!(events[2].calls[0].rendered, "pick(3)");
    assert_eq!(events[2].statement, 3);
    assert_eq!(it.status(), &Status::Finished);
}

#[test]
fn unknown_function_halts() {
    let p = parse("fly(1)\nend_task()\n").unwrap();
    let mut host = Recorder::default();
    let (events, _) = Interpreter::new(&p).run(&mut host);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].result.error.as_ref().unwrap().code, "UnknownFunction");
}

#[test]
fn loop_halts_on_second_pick() {
    let p = parse("for id in get_all_object_ids(): pick(id)\nend_task()\n").unwrap();
    let mut host = Recorder::default();
    let mut it = Interpreter::new(&p);
    let (events, _) = it.run(&mut host);
    assert_eq!(events.len(), 3);
    assert!(events[1].result.ok);
    assert_eq!(events[2].result.error.as_ref().unwrap().code, "GripperOccupied");
    assert!(matches!(it.status(), Status::Failed(_)));
    assert!(!host.calls.contains(&"end_task".to_string()));
}

#[test]
fn suspension_replays_earlier_calls() {
    let src = "x = echo(find(\"mug\"), learn_skill(\"tilt_mug\"))\ntilt_mug = x[1][0]\ntilt_mug(x[0])\n";
    let p = parse(src).unwrap();
    let mut host = Recorder { suspend_on: Some("learn_skill".into()), ..Default::default() };
    let mut it = Interpreter::new(&p);
    let (events, susp) = it.run(&mut host);
    assert!(events.is_empty());
    let s = susp.unwrap();
    assert_eq!(s.function, "learn_skill");
    assert_eq!(s.args, vec![Value::Str("tilt_mug".into())]);
    it.resume(Ok(Value::Tuple(vec![Value::Skill("tilt_mug".into()), Value::Str("doc".into())])));
    host.suspend_on = None;
    host.fail_on = Some(("tilt_mug".into(), "Taught".into()));
    let (events, susp) = it.run(&mut host);
    assert!(susp.is_none());
    // find ran once; the suspended statement finished with its memoized calls
    assert_eq!(host.calls.iter().filter(|c| *c == "find").count(), 1);
    assert_eq!(events[0].calls.len(), 3);
    assert_eq!(events[2].calls[0].rendered, "tilt_mug(3)");
}

#[test]
fn resume_with_error_fails_the_statement() {
    let p = parse("a, b = learn_skill(\"x\")\nend_task()\n").unwrap();
    let mut host = Recorder { suspend_on: Some("learn_skill".into()), ..Default::default() };
    let mut it = Interpreter::new(&p);
    it.run(&mut host);
    it.resume(Err(ExecError { code: "DemoSourceUnavailable".into(), message: "no demos".into() }));
    let (events, _) = it.run(&mut host);
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].result.error.as_ref().unwrap().code, "DemoSourceUnavailable");
}

#[test]
fn expression_semantics() {
    let src = "a = [1, 2.0, \"s\"]\nb = 2 in a and len(a) == 3\nc = a[-1]\nd = None is None\ne = 1 < 2 < 2\nf = 0 or \"x\"\nprint(\"n\", len(a))\n";
    let p = parse(src).unwrap();
    let mut host = Recorder::default();
    let mut it = Interpreter::new(&p);
    let (events, _) = it.run(&mut host);
    assert!(events.iter().all(|e| e.result.ok), "{events:?}");
    let env = it.env();
    assert_eq!(env["b"], Value::Bool(true));
    assert_eq!(env["c"], Value::Str("s".into()));
    assert_eq!(env["d"], Value::Bool(true));
    assert_eq!(env["e"], Value::Bool(false));
    assert_eq!(env["f"], Value::Str("x".into()));
    assert_eq!(events[6].output, vec!["n 3".to_string()]);
    assert!(host.calls.is_empty());
}

#[test]
fn runtime_errors() {
    for (src, code) in [
        ("x = y\n", "NameError"),
        ("x = [1][5]\n", "IndexError"),
        ("a, b = [1]\n", "ValueError"),
        ("x = 1 < \"a\"\n", "TypeError"),
        ("for i in 3:\n    pass\n", "TypeError"),
    ] {
        let p = parse(src).unwrap();
        let (events, _) = Interpreter::new(&p).run(&mut Recorder::default());
        assert_eq!(events[0].result.error.as_ref().unwrap().code, code, "{src}");
    }
}

#[test]
fn statement_ids_are_preorder() {
    let src = "if False:\n    a()\n    b()\nelse:\n    find(1)\nfor i in [1, 2]:\n    find(i)\n";
    let p = parse(src).unwrap();
    let (events, _) = Interpreter::new(&p).run(&mut Recorder::default());
    let ids: Vec<usize> = events.iter().map(|e| e.statement).collect();
    assert_eq!(ids, vec![0, 3, 4, 5, 5]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn generated_programs_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_program(&mut rng, 3);
        let text = unparse(&p);
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back.without_spans(), p, "{}", text);
    }
}
