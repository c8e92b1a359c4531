//! Describe a bundled scene, with and without relations, and resolve the
//! noun phrases back to object ids.
//!
//!     cargo run --example describe_scene -- sink

use skillplan::description::resolve_mention;
use skillplan::fixtures::{scene, SCENE_NAMES};
use skillplan::skills::Robot;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sink".into());
    let Some(world) = scene(&name, 0) else {
        eprintln!("unknown scene {name}; try one of {}", SCENE_NAMES.join(", "));
        std::process::exit(2);
    };
    let mut robot = Robot::new(world);
    let (graph, desc) = robot.describe(true).unwrap();
    println!("{}\n", desc.text);
    for e in &graph.edges {
        println!("edge {e:?}");
    }
    for phrase in desc.mentions.keys() {
        println!("{phrase:<20} -> {}", resolve_mention(&desc, phrase).unwrap());
    }
    let (_, plain) = robot.describe(false).unwrap();
    println!("\nwithout relations: {}", plain.text);
}
