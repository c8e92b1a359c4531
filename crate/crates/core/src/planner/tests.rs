use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use proptest::prelude::*;

use super::*;
use crate::fixtures::scene;
use crate::skills::{render_api_doc, DocDetail, Robot, SkillLibrary};

fn api(hide: &[&str]) -> String {
    render_api_doc(&SkillLibrary::new(), DocDetail::NameAndDocstring, hide)
}

fn conversation(desc: &str, task: &str, hide: &[&str]) -> Conversation {
    let names: Vec<String> = documented_names(&api(hide));
    let mut c = Conversation::new(Some(&system_prompt(&names)));
    c.push(Role::User, &build_step1_prompt(desc, task)).unwrap();
    c
}

#[test]
fn step1_prompt_renders_the_mix_paragraph() {
    let mut robot = Robot::new(scene("mix_ingredients", 0).unwrap());
    let (_, desc) = robot.describe(true).unwrap();
    let prompt = build_step1_prompt(&desc.text, "mix the ingredients");
    assert_eq!(
        prompt,
        "A table has the following objects: a bowl and a spoon. At the right of all the objects on the table lies the bowl. \
The bowl is filled. To the left of the bowl lies the spoon. If you are commanding a robot, tell me in words the steps to mix the ingredients?"
    );
    assert_eq!(split_step1_prompt(&prompt), Some((desc.text.clone(), "mix the ingredients".to_string())));
}

#[test]
fn step1_prompt_accepts_both_phrasings() {
    let p = "A table has the following objects: a mug. If you are commanding a robot, tell me in the words the steps to pick up the mug? ";
    let (d, t) = split_step1_prompt(p).unwrap();
    assert_eq!(d, "A table has the following objects: a mug.");
    assert_eq!(t, "pick up the mug");
    assert!(split_step1_prompt("hello").is_none());
}

#[test]
fn step2_prompt_contains_doc_verbatim() {
    let doc = api(&[]);
    let p = build_step2_prompt(&doc);
    assert!(p.starts_with(&doc));
    for name in ["find", "pick", "place", "get_place_position", "learn_skill"] {
        assert!(p.contains(&format!("\n{name}(")) || p.starts_with(&format!("{name}(")));
    }
    let short = render_api_doc(&SkillLibrary::new(), DocDetail::NameOnly, &[]);
    assert!(!build_step2_prompt(&short).contains("Arguments"));
}

#[test]
fn role_order_is_enforced() {
    let mut c = Conversation::new(Some("sys"));
    assert!(c.push(Role::Assistant, "x").is_err());
    assert!(c.push(Role::System, "again").is_err());
    c.push(Role::User, "u").unwrap();
    assert!(c.push(Role::User, "u2").is_err());
    c.push(Role::Assistant, "a").unwrap();
    assert_eq!(c.len(), 3);
    let mut bare = Conversation::new(None);
    bare.push(Role::User, "first").unwrap();
    assert_eq!(bare.messages()[0].role, Role::User);
}

#[test]
fn feedback_is_tagged_and_appended() {
    let mut c = conversation("A table has the following objects: a mug.", "pick up the mug", &[]);
    c.push(Role::Assistant, "ok").unwrap();
    inject_feedback(&mut c, "the mug was picked up by the rim", FeedbackSource::Human).unwrap();
    let last = &c.last().unwrap().content;
    assert_eq!(last, "[human feedback] the mug was picked up by the rim");
    assert_eq!(split_feedback(last), Some((FeedbackSource::Human, "the mug was picked up by the rim")));
    assert!(inject_feedback(&mut c, "pick failed: NoGraspFound", FeedbackSource::Execution).is_err());
}

#[test]
fn window_keeps_system_and_recent_turns() {
    let mut c = Conversation::new(Some("sys"));
    for i in 0..4 {
        c.push(Role::User, &format!("question {i}")).unwrap();
        c.push(Role::Assistant, &format!("answer {i}")).unwrap();
    }
    c.push(Role::User, "last question").unwrap();
    assert_eq!(c.window().len(), c.len());
    c.budget_chars = Some(40);
    let w = c.window();
    assert_eq!(w[0].content, "sys");
    assert_eq!(w.last().unwrap().content, "last question");
    assert_eq!(w[1].role, Role::User);
    assert!(w.len() < c.len());
    c.budget_chars = Some(0);
    assert_eq!(c.window().len(), 2);
}

#[test]
fn code_extraction() {
    let fenced = "Here you go:\n```python\nstart_task()\npick(find(\"mug\"))\n```\nThat is all.";
    assert_eq!(extract_code(fenced).unwrap(), "start_task()\npick(find(\"mug\"))\n");
    let bare = "The plan follows.\nmug = find(\"mug\")\npick(mug)";
    assert_eq!(extract_code(bare).unwrap(), "mug = find(\"mug\")\npick(mug)\n");
    assert_eq!(extract_code("I would pick the mug, then place it."), Err(PlannerError::NoCodeFound));
    assert_eq!(extract_code("# just a comment"), Err(PlannerError::NoCodeFound));
    // an unterminated fence runs to the end
    assert_eq!(extract_code("```\nend_task()").unwrap(), "end_task()\n");
}

#[test]
fn documented_names_match_library() {
    let lib = SkillLibrary::new();
    assert_eq!(documented_names(&api(&[])), lib.names());
    assert!(!documented_names(&api(&["learn_skill"])).contains(&"learn_skill".to_string()));
    assert_eq!(documented_names(&render_api_doc(&lib, DocDetail::NameOnly, &[])), lib.names());
}

#[test]
fn synthesized_docstring_lists_arguments() {
    let d = synthesize_docstring("tilt_mug", 2);
    assert!(d.contains("object_id_1") && d.contains("object_id_2"));
    assert!(!synthesize_docstring("open_drawer", 1).contains("object_id_2"));
}

fn three_bowls_description() -> String {
    let mut robot = Robot::new(scene("three_bowls", 0).unwrap());
    robot.describe(true).unwrap().1.text
}

#[test]
fn scripted_stack_bowls_plan() {
    let mut port = ScriptedPlanner::default();
    let mut c = conversation(&three_bowls_description(), "stack three bowls", &[]);
    let plan = request_plan(&mut port, &mut c, &api(&[])).unwrap();
    let lines: Vec<&str> = plan.code.lines().collect();
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[0], "start_task()");
    assert_eq!(lines[8], "end_task()");
    assert!(plan.nl_steps.contains("second bowl"));
    assert_eq!(c.len(), 5);
    assert!(c.messages()[3].content.contains(&api(&[])));
}

#[test]
fn scripted_prefers_feedback_entries() {
    let mut port = ScriptedPlanner::default();
    let mut robot = Robot::new(scene("grasp_mug", 0).unwrap());
    let desc = robot.describe(true).unwrap().1.text;
    let task = "grasp the mug by the handle";
    let mut c = conversation(&desc, task, &[]);
    let first = request_plan(&mut port, &mut c, &api(&[])).unwrap();
    assert!(!first.code.contains("learn_skill"));
    let msg = format!("{}\n{}", feedback_message("the mug was picked up by the rim", FeedbackSource::Human), build_step1_prompt(&desc, task));
    c.push(Role::User, &msg).unwrap();
    let second = request_plan(&mut port, &mut c, &api(&[])).unwrap();
    assert!(second.code.contains("learn_skill(\"pick_mug_by_handle\")"));
    let doc = request_docstring(&mut port, &mut c, "pick_mug_by_handle").unwrap();
    assert!(doc.contains("object_id_1"));
}

#[test]
fn scripted_respects_hidden_functions() {
    let mut port = ScriptedPlanner::default();
    let desc = "A table has the following objects: a mug.";
    let task = "grasp the mug by the handle";
    let hidden = ["learn_skill"];
    let mut c = conversation(desc, task, &hidden);
    request_plan(&mut port, &mut c, &api(&hidden)).unwrap();
    let msg = format!("{}\n{}", feedback_message("it was grasped by the rim", FeedbackSource::Human), build_step1_prompt(desc, task));
    c.push(Role::User, &msg).unwrap();
    let plan = request_plan(&mut port, &mut c, &api(&hidden)).unwrap();
    assert!(!plan.code.contains("learn_skill"));
}

#[test]
fn scripted_unknown_task_yields_no_code() {
    let mut port = ScriptedPlanner::default();
    let mut c = conversation("A table has the following objects: a mug.", "juggle three oranges", &[]);
    assert_eq!(request_plan(&mut port, &mut c, &api(&[])), Err(PlannerError::NoCodeFound));
    let mut empty = Conversation::new(None);
    empty.push(Role::User, "hello").unwrap();
    assert!(matches!(port.respond(&empty), Err(PlannerError::Config(_))));
}

#[test]
fn bundled_table_loads_and_rejects_bad_files() {
    let t = PlanTable::bundled();
    assert!(t.plans.len() > 30);
    assert!(PlanTable::from_json("{\"schema\": \"plans.v0\", \"plans\": []}").is_err());
    let bad = r#"{"schema": "plans.v1", "plans": [{"id": "x", "task": "a", "nl_steps": "", "code": "def f():"}]}"#;
    assert!(PlanTable::from_json(bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn scripted_answers_are_pure(task_ix in 0usize..6, fb in proptest::option::of("[a-z ]{0,20}")) {
        let tasks = ["stack three bowls", "empty the sink", "grasp the mug by the handle", "open the drawer", "fetch the bottle", "put away the book"];
        let mut c = conversation("A table has the following objects: a mug and a bowl.", tasks[task_ix], &[]);
        if let Some(f) = fb {
            c.push(Role::Assistant, "steps").unwrap();
            inject_feedback(&mut c, &f, FeedbackSource::Human).unwrap();
        }
        let before = c.clone();
        let a = ScriptedPlanner::default().respond(&c);
        let b = ScriptedPlanner::default().respond(&c);
        prop_assert_eq!(a, b);
        prop_assert_eq!(c, before);
    }
}

/// Serves `responses` in order, one per connection, and returns the bodies
/// it received.
fn serve(responses: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = vec![];
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
        bodies
    });
    (url, handle)
}

fn http_port(endpoint: String, timeout: Duration) -> HttpPlanner {
    HttpPlanner::new(HttpPlannerConfig { endpoint, model: "m".into(), api_key: Some("k".into()), timeout }).unwrap()
}

#[test]
fn http_port_round_trip() {
    let answer = |s: &str| serde_json::json!({"choices": [{"message": {"role": "assistant", "content": s}}]}).to_string();
    let (url, server) = serve(vec![(200, answer("1. pick the mug")), (200, answer("```\npick(find(\"mug\"))\n```"))]);
    let mut port = http_port(url, DEFAULT_TIMEOUT);
    let mut c = conversation("A table has the following objects: a mug.", "pick up the mug", &[]);
    let plan = request_plan(&mut port, &mut c, &api(&[])).unwrap();
    assert_eq!(plan.code, "pick(find(\"mug\"))\n");
    let bodies = server.join().unwrap();
    let first: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(first["model"], "m");
    assert_eq!(first["messages"][0]["role"], "system");
    assert_eq!(first["messages"].as_array().unwrap().len(), 2);
}

#[test]
fn http_port_errors() {
    let (url, server) = serve(vec![(500, "{}".into()), (200, "{\"choices\": []}".into())]);
    let mut port = http_port(url, DEFAULT_TIMEOUT);
    let c = conversation("", "pick up the mug", &[]);
    assert_eq!(port.respond(&c), Err(PlannerError::PortHttpError(500)));
    assert!(matches!(port.respond(&c), Err(PlannerError::Transport(_))));
    server.join().unwrap();

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    let mut slow = http_port(url, Duration::from_millis(200));
    assert_eq!(slow.respond(&c), Err(PlannerError::PortTimeout));
    drop(listener);
}
