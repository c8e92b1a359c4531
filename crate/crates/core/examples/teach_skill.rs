//! Fit a skill template from expert demonstrations and replay it on new
//! layouts.
//!
//!     cargo run --example teach_skill -- tilt_mug 5

use skillplan::fixtures::{expert_demos, skill_succeeded, skill_world, TAUGHT_SKILLS};
use skillplan::learning::{execute_template, fit_template, DemoFile};

fn main() {
    let mut args = std::env::args().skip(1);
    let skill = args.next().unwrap_or_else(|| "pick_mug_by_handle".into());
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    if !TAUGHT_SKILLS.contains(&skill.as_str()) {
        eprintln!("no demonstrator for {skill}; try one of {}", TAUGHT_SKILLS.join(", "));
        std::process::exit(2);
    }
    let demos = expert_demos(&skill, n, 0, 0.002);
    let model = fit_template(&demos).unwrap();
    println!("{} from {} demos, arity {}", model.skill, model.demo_count, model.arity);
    for k in &model.keyframes {
        println!("  {:?} in {:?} frame at {:?}", k.phase, k.anchor, k.relative.position.as_slice());
    }
    let mut ok = 0;
    for seed in 1000..1010 {
        let (mut world, a, b) = skill_world(&skill, seed).unwrap();
        let done = execute_template(&model, &mut world, a, b).is_ok() && skill_succeeded(&skill, &world, a, b);
        ok += usize::from(done);
    }
    println!("succeeded on {ok}/10 new layouts");
    let file = DemoFile::new(&skill, &demos);
    println!("demos.v1 document is {} bytes", file.to_json().len());
}
