//! Parse a plan, print its canonical form and step through it against a
//! host that only logs calls.

use skillplan::plan::{parse, unparse, Host, HostError, Interpreter, Step};
use skillplan::value::Value;

const PLAN: &str = r#"
start_task()
ids = get_all_object_ids()
for i in ids:
    if i != 2:
        pick(i)
        place(i, get_place_position(i, 2, "to the left"))
print("looked at", len(ids), "objects")
end_task()
"#;

struct Logger;

impl Host for Logger {
    fn call(&mut self, name: &str, _args: &[Value], _kwargs: &[(String, Value)]) -> Result<Value, HostError> {
        Ok(match name {
            "get_all_object_ids" => Value::List((1..=3).map(Value::Int).collect()),
            "get_place_position" => Value::position([0.25, 0.0, 0.05]),
            _ => Value::None,
        })
    }
}

fn main() {
    let program = parse(PLAN).unwrap();
    println!("{}", unparse(&program));
    let mut interp = Interpreter::new(&program).with_source(PLAN);
    while let Step::Event(e) = interp.step(&mut Logger) {
        let calls: Vec<&str> = e.calls.iter().map(|c| c.rendered.as_str()).collect();
        println!("#{:<2} stmt {:<2} {:<50} {}", e.seq, e.statement, e.source.trim(), calls.join(" "));
        for line in &e.output {
            println!("    > {line}");
        }
    }
    println!("{:?}", interp.status());
    if let Err(e) = parse("pick(mug_id") {
        println!("syntax error: {e}");
    }
}
