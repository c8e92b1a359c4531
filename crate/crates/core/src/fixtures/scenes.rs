use std::f64::consts::FRAC_PI_2;

use crate::world::shape::Shape;
use crate::world::{ObjectId, ObjectSpec, WorldError, WorldState};

pub fn mug_shape() -> Shape {
    Shape::mug([0.08, 0.08, 0.09], 0.006, [0.03, 0.014, 0.05])
}

pub fn bowl_shape() -> Shape {
    Shape::container([0.12, 0.12, 0.05], 0.006)
}

/// Shallow tray; also stands in for a trash container.
pub fn tray_shape() -> Shape {
    Shape::container([0.3, 0.2, 0.04], 0.01)
}

pub fn sink_shape() -> Shape {
    Shape::container([0.32, 0.28, 0.14], 0.01)
}

pub fn bottle_shape() -> Shape {
    Shape::Cylinder { radius: 0.03, height: 0.2 }
}

pub fn banana_shape() -> Shape {
    Shape::Box { extents: [0.06, 0.03, 0.05] }
}

pub fn spoon_shape() -> Shape {
    Shape::Box { extents: [0.15, 0.03, 0.015] }
}

pub fn apple_shape() -> Shape {
    let r = 0.035;
    let mut points = vec![];
    for i in 0..6 {
        for j in 1..6 {
            let (th, ph) = (i as f64 * std::f64::consts::PI / 3.0, j as f64 * std::f64::consts::PI / 6.0);
            points.push([r * ph.sin() * th.cos(), r * ph.sin() * th.sin(), r * ph.cos()]);
        }
    }
    points.push([0.0, 0.0, r]);
    points.push([0.0, 0.0, -r]);
    Shape::MeshLite { points }
}

/// Names of the bundled scenes, in a fixed order.
pub const SCENE_NAMES: [&str; 10] = [
    "bowls_mug_tray",
    "box_over_mug",
    "mix_ingredients",
    "grasp_mug",
    "bottle_tray",
    "sink",
    "apple_in_tray",
    "three_cubes",
    "three_bowls",
    "blocks",
];

fn spawn(w: &mut WorldState, specs: Vec<ObjectSpec>) -> Result<Vec<ObjectId>, WorldError> {
    specs.into_iter().map(|s| w.spawn_object(s, true)).collect()
}

/// Builds a bundled scene.
pub fn scene(name: &str, seed: u64) -> Option<WorldState> {
    let mut w = WorldState::new(seed);
    let specs = match name {
        "bowls_mug_tray" => vec![
            ObjectSpec::new("mug", mug_shape(), 0.35, 0.05),
            ObjectSpec::new("bowl", bowl_shape(), 0.12, 0.0),
            ObjectSpec::new("bowl", bowl_shape(), -0.1, -0.05),
            ObjectSpec::new("tray", tray_shape(), -0.38, 0.05),
        ],
        "box_over_mug" => vec![
            ObjectSpec::new("mug", mug_shape(), 0.15, 0.0),
            ObjectSpec::new("box", Shape::Box { extents: [0.085, 0.085, 0.04] }, 0.15, 0.0),
            ObjectSpec::new("bowl", bowl_shape(), -0.15, 0.05),
        ],
        "mix_ingredients" => vec![
            ObjectSpec::new("bowl", bowl_shape(), 0.2, 0.0).with_attributes(&["filled"]),
            ObjectSpec::new("spoon", spoon_shape(), -0.1, 0.02),
        ],
        "grasp_mug" => vec![
            ObjectSpec::new("mug", mug_shape(), 0.2, 0.0),
            ObjectSpec::new("tray", tray_shape(), -0.2, 0.0),
        ],
        "bottle_tray" => vec![
            ObjectSpec::new("bottle", bottle_shape(), 0.25, 0.0),
            ObjectSpec::new("tray", tray_shape(), -0.15, 0.0),
        ],
        "sink" => vec![
            ObjectSpec::new("sink", sink_shape(), 0.0, 0.0),
            ObjectSpec::new("mug", mug_shape(), -0.02, 0.0),
            ObjectSpec::new("banana", banana_shape(), -0.02, 0.0),
            ObjectSpec::new("tray", tray_shape(), -0.4, 0.1).yaw(FRAC_PI_2),
        ],
        "apple_in_tray" => vec![
            ObjectSpec::new("tray", Shape::container([0.26, 0.2, 0.09], 0.01), -0.2, 0.0),
            ObjectSpec::new("apple", apple_shape(), -0.2, 0.0).with_attributes(&["red"]),
            ObjectSpec::new("mug", mug_shape(), 0.2, 0.1),
        ],
        "three_cubes" => vec![
            ObjectSpec::new("cube", Shape::cube(0.05), 0.3, 0.0),
            ObjectSpec::new("cube", Shape::cube(0.05), 0.0, 0.1),
            ObjectSpec::new("cube", Shape::cube(0.05), -0.3, -0.05),
        ],
        "three_bowls" => vec![
            ObjectSpec::new("bowl", bowl_shape(), 0.3, 0.0),
            ObjectSpec::new("bowl", bowl_shape(), 0.0, 0.1),
            ObjectSpec::new("bowl", bowl_shape(), -0.3, -0.05),
        ],
        "blocks" => vec![
            ObjectSpec::new("block", Shape::cube(0.05), 0.25, 0.0).with_attributes(&["blue"]),
            ObjectSpec::new("block", Shape::cube(0.05), 0.0, -0.05).with_attributes(&["red"]),
            ObjectSpec::new("block", Shape::cube(0.05), -0.25, 0.05).with_attributes(&["green"]),
        ],
        _ => return None,
    };
    spawn(&mut w, specs).expect("bundled scenes are valid");
    Some(w)
}
