//! Scripted demonstrators for the bundled learned skills, random layouts
//! to teach and test them on, and per-skill success checks.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scenes::{banana_shape, bottle_shape, mug_shape, tray_shape};
use crate::geometry::Pose;
use crate::learning::{DemoObject, Demonstration, Keyframe, Phase};
use crate::skills::grasp::gripper_pose;
use crate::world::{ObjectId, ObjectSpec, WorldState};

type V3 = Vector3<f64>;

pub const TAUGHT_SKILLS: [&str; 3] = ["pick_mug_by_handle", "tilt_mug", "place_bottle_sideways_in_tray"];

/// Height above the tray at which a mug is tipped out.
const POUR_HEIGHT: f64 = 0.25;
const POUR_ANGLE: f64 = 2.0 * PI / 3.0;

/// Gripper pose in the mug frame for a side grasp across the handle.
pub fn handle_grasp() -> Pose {
    let shape = mug_shape();
    let reach = shape.body_half_extents().x + 0.015;
    gripper_pose(V3::new(reach, 0.0, 0.0), V3::y(), -V3::x()).expect("orthogonal axes")
}

/// Gripper pose in the bottle frame for a side grasp below the neck.
pub fn bottle_side_grasp() -> Pose {
    gripper_pose(V3::new(0.0, 0.0, 0.03), V3::x(), V3::y()).expect("orthogonal axes")
}

fn bottle_lying_in_tray() -> Pose {
    let floor_top = tray_shape().cavity().expect("tray is open").floor_z;
    Pose::from_axis_angle(V3::new(0.0, 0.0, floor_top + 0.03 + 0.005), V3::y(), FRAC_PI_2)
}

/// Expert keyframes for a taught skill on the objects' current poses.
pub fn expert_keyframes(skill: &str, world: &WorldState, a: ObjectId, b: Option<ObjectId>) -> Option<Vec<Keyframe>> {
    let pa = world.object(a).ok()?.pose;
    let pb = match b {
        Some(b) => Some(world.object(b).ok()?.pose),
        None => None,
    };
    let kf = |phase, pose| Keyframe { phase, pose };
    let frames = match skill {
        "pick_mug_by_handle" => {
            let g = pa.compose(&handle_grasp());
            vec![
                kf(Phase::Approach, g.translated(&V3::new(0.0, 0.0, 0.1))),
                kf(Phase::Grasp, g),
                kf(Phase::Transit, g.translated(&V3::new(0.0, 0.0, 0.15))),
            ]
        }
        "tilt_mug" => {
            let pb = pb?;
            let g = pa.compose(&handle_grasp());
            let over = Pose::from_translation(0.0, 0.0, POUR_HEIGHT);
            let tipped = Pose::from_axis_angle(V3::new(0.0, 0.0, POUR_HEIGHT), V3::x(), POUR_ANGLE);
            let hold = |mug_in_b: &Pose| pb.compose(mug_in_b).compose(&handle_grasp());
            vec![
                kf(Phase::Approach, g.translated(&V3::new(0.0, 0.0, 0.1))),
                kf(Phase::Grasp, g),
                kf(Phase::Transit, hold(&over)),
                kf(Phase::Reorient, hold(&tipped)),
                kf(Phase::Reorient, hold(&over)),
            ]
        }
        "place_bottle_sideways_in_tray" => {
            let pb = pb?;
            let grasp = bottle_side_grasp();
            let g = pa.compose(&grasp);
            let hold = |bottle_in_b: &Pose| pb.compose(bottle_in_b).compose(&grasp);
            let lying = bottle_lying_in_tray();
            vec![
                kf(Phase::Approach, pa.compose(&grasp.translated(&V3::new(0.0, -0.1, 0.0)))),
                kf(Phase::Grasp, g),
                kf(Phase::Transit, hold(&Pose::from_translation(0.0, 0.0, 0.3))),
                kf(Phase::Reorient, hold(&lying.translated(&V3::new(0.0, 0.0, 0.12)))),
                kf(Phase::Release, hold(&lying)),
            ]
        }
        _ => return None,
    };
    Some(frames)
}

/// Labels of the objects a taught skill acts on.
pub fn skill_labels(skill: &str) -> Option<(&'static str, Option<&'static str>)> {
    match skill {
        "pick_mug_by_handle" => Some(("mug", None)),
        "tilt_mug" => Some(("mug", Some("tray"))),
        "place_bottle_sideways_in_tray" => Some(("bottle", Some("tray"))),
        _ => None,
    }
}

/// A random layout for a taught skill: the acted-on object in the right
/// half of the table, the reference container in the left half.
pub fn skill_world(skill: &str, seed: u64) -> Option<(WorldState, ObjectId, Option<ObjectId>)> {
    let (la, lb) = skill_labels(skill)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_de30);
    let mut w = WorldState::new(seed);
    let b = match lb {
        Some(label) => {
            let spec = ObjectSpec::new(label, tray_shape(), rng.random_range(-0.4..-0.28), rng.random_range(-0.2..0.2))
                .yaw(rng.random_range(0.0..PI));
            Some(w.spawn_object(spec, true).ok()?)
        }
        None => None,
    };
    let (x, y, yaw) = (rng.random_range(0.12..0.42), rng.random_range(-0.3..0.3), rng.random_range(0.0..TAU));
    let shape = if la == "mug" { mug_shape() } else { bottle_shape() };
    let a = w.spawn_object(ObjectSpec::new(la, shape, x, y).yaw(yaw), true).ok()?;
    if skill == "tilt_mug" {
        let p = w.object(a).ok()?.pose.position;
        let banana = ObjectSpec::new("banana", banana_shape(), p.x, p.y).yaw(yaw);
        w.spawn_object(banana, true).ok()?;
    }
    Some((w, a, b))
}

/// `n` demonstrations on independent random layouts; keyframe positions
/// get isotropic Gaussian noise of `sigma` meters.
pub fn expert_demos(skill: &str, n: usize, seed: u64, sigma: f64) -> Vec<Demonstration> {
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x0dd5));
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    (0..n as u64)
        .filter_map(|k| {
            let (w, a, b) = skill_world(skill, seed.wrapping_mul(1000).wrapping_add(k))?;
            let mut keyframes = expert_keyframes(skill, &w, a, b)?;
            if sigma > 0.0 {
                for kf in &mut keyframes {
                    kf.pose.position += V3::from_fn(|_, _| normal.sample(&mut noise_rng));
                }
            }
            let objects = [Some(a), b]
                .into_iter()
                .flatten()
                .map(|id| {
                    let o = w.object(id).expect("spawned");
                    DemoObject { label: o.label.clone(), pose: o.pose, id: Some(id) }
                })
                .collect();
            Some(Demonstration { skill: skill.to_string(), objects, keyframes })
        })
        .collect()
}

/// Whether `obj`'s center lies over `container`'s cavity with its lowest
/// point below the rim, from ground-truth poses.
pub fn rests_inside(world: &WorldState, obj: ObjectId, container: ObjectId) -> bool {
    let (Ok(o), Ok(c)) = (world.object(obj), world.object(container)) else { return false };
    let Some(cavity) = c.shape.cavity() else { return false };
    let local = c.pose.inverse_transform_point(&o.pose.position);
    let rot = o.pose.orientation.to_rotation_matrix();
    let h = o.shape.body_half_extents();
    let drop = (0..3).map(|i| rot[(2, i)].abs() * h[i]).sum::<f64>();
    local.x.abs() <= cavity.half_xy.x && local.y.abs() <= cavity.half_xy.y && local.z - drop < cavity.top_z
}

/// Whether the gripper holds `mug` with its jaws on the handle.
pub fn holds_by_handle(world: &WorldState, mug: ObjectId) -> bool {
    let (Some(held), Ok(obj)) = (world.held(), world.object(mug)) else { return false };
    if held.object != mug {
        return false;
    }
    let Some(k) = obj.shape.handle_solid() else { return false };
    let grasp = held.grasp.inverse();
    obj.shape.solids()[k].sdf(&grasp.position) <= 1e-6
}

/// Whether a taught skill's goal holds in `world`.
pub fn skill_succeeded(skill: &str, world: &WorldState, a: ObjectId, b: Option<ObjectId>) -> bool {
    match skill {
        "pick_mug_by_handle" => holds_by_handle(world, a),
        "tilt_mug" => {
            let Some(tray) = b else { return false };
            let bananas: Vec<ObjectId> =
                world.objects().filter(|o| o.label == "banana").map(|o| o.id).collect();
            holds_by_handle(world, a)
                && world.object(a).is_ok_and(|o| o.is_upright())
                && !bananas.is_empty()
                && bananas.iter().all(|id| rests_inside(world, *id, tray))
        }
        "place_bottle_sideways_in_tray" => {
            let Some(tray) = b else { return false };
            world.held().is_none()
                && world.object(a).is_ok_and(|o| o.pose.up_axis().z.abs() < 0.1)
                && rests_inside(world, a, tray)
                && world.unsupported_objects().is_empty()
        }
        _ => false,
    }
}
