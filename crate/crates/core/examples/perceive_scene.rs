//! Perceive a small scene and print the relations between objects.

use std::time::Instant;

use skillplan::perception::{perceive, Sensor};
use skillplan::thresholds::Thresholds;
use skillplan::world::{ObjectSpec, Shape, WorldState};

fn main() {
    let mut world = WorldState::new(0);
    let tray = world.spawn_object(ObjectSpec::new("tray", Shape::container([0.3, 0.2, 0.04], 0.01), 0.2, 0.0), true).unwrap();
    world.spawn_object(ObjectSpec::new("apple", Shape::Cylinder { radius: 0.03, height: 0.024 }, 0.2, 0.0), true).unwrap();
    world
        .spawn_object(ObjectSpec::new("mug", Shape::mug([0.08, 0.08, 0.1], 0.005, [0.02, 0.01, 0.06]), -0.2, 0.1), true)
        .unwrap();
    let t = Instant::now();
    let p = perceive(&world, &Sensor::default(), &Thresholds::default()).unwrap();
    println!("perceived {} objects in {:?}", p.infos.len(), t.elapsed());
    for info in &p.infos {
        println!("{} {:<6} {} points", info.id, info.label, info.cloud.len());
    }
    for r in p.relations.iter() {
        println!("{} {} {}", r.subject, r.kind, r.object);
    }
    let _ = tray;
}
