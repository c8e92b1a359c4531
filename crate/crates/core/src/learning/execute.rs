use nalgebra::Vector3;
use serde::Serialize;

use super::{Keyframe, LearnError, Phase, TemplateModel};
use crate::geometry::Pose;
use crate::skills::grasp::{gripper_collides, GRIPPER_MAX_WIDTH, OPEN_MARGIN};
use crate::world::{ObjectId, WorldState};

type V3 = Vector3<f64>;

/// Grasp centers farther than this from the object's surface close on air.
const GRASP_REACH: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExecutionTrace {
    /// Commanded end-effector keyframes, in order.
    pub keyframes: Vec<Keyframe>,
    /// Gripper pose in the acted-on object's frame when it was grasped.
    pub grasp_in_object: Option<Pose>,
    pub released: bool,
    /// Largest tilt of the object's up axis from vertical, radians.
    pub max_tilt: f64,
}

/// Jaw width needed at a grasp: the span, along the closing axis, of the
/// object solid nearest the grasp center.
fn jaw_width(world: &WorldState, a: ObjectId, grasp: &Pose) -> Result<f64, LearnError> {
    let obj = world.object(a)?;
    let local = obj.pose.inverse().compose(grasp);
    let solids = obj.shape.solids();
    let (k, d) = solids
        .iter()
        .enumerate()
        .map(|(k, s)| (k, s.sdf(&local.position)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or(LearnError::GraspInfeasible)?;
    if d > GRASP_REACH {
        return Err(LearnError::GraspInfeasible);
    }
    let axis = local.transform_vector(&V3::y());
    let proj: Vec<f64> = solids[k].polytope().vertices.iter().map(|v| v.dot(&axis)).collect();
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(hi - lo)
}

/// Replays a template on the objects' current poses. A pose the gripper
/// already holds `a` in skips the approach and grasp keyframes. On error
/// the world may be partly changed; callers run this on a copy.
pub fn execute_template(
    model: &TemplateModel,
    world: &mut WorldState,
    a: ObjectId,
    b: Option<ObjectId>,
) -> Result<ExecutionTrace, LearnError> {
    let obj = world.object(a)?;
    if obj.label != model.category {
        return Err(LearnError::CategoryMismatch { expected: model.category.clone(), found: obj.label.clone() });
    }
    let pose_a = obj.pose;
    let pose_b = match b {
        Some(b) => Some(world.object(b)?.pose),
        None => None,
    };
    let frames = model.instantiate(&pose_a, pose_b.as_ref())?;
    let held = world.held().map(|h| h.object);
    let last_grasp = frames.iter().rposition(|k| k.phase == Phase::Grasp);
    let skip = match (held, last_grasp) {
        (Some(h), Some(g)) if h == a => g + 1,
        (Some(h), Some(_)) => return Err(crate::world::WorldError::GripperOccupied(h).into()),
        _ => 0,
    };
    let mut trace = ExecutionTrace { keyframes: frames.clone(), grasp_in_object: None, released: false, max_tilt: 0.0 };
    let tilt = |w: &WorldState| w.object(a).map(|o| o.pose.up_axis().z.clamp(-1.0, 1.0).acos()).unwrap_or(0.0);
    for k in &frames[skip..] {
        match k.phase {
            Phase::Approach => {
                if world.held().is_none() && gripper_collides(world, &k.pose, OPEN_MARGIN + 0.01, &[]) {
                    return Err(LearnError::GraspInfeasible);
                }
                world.move_gripper(k.pose);
            }
            Phase::Grasp => {
                let w = jaw_width(world, a, &k.pose)?;
                if w > GRIPPER_MAX_WIDTH || gripper_collides(world, &k.pose, w + OPEN_MARGIN, &[]) {
                    return Err(LearnError::GraspInfeasible);
                }
                let grasp = world.object(a)?.pose.inverse().compose(&k.pose);
                world.attach(a, grasp)?;
                trace.grasp_in_object = Some(grasp);
            }
            Phase::Transit | Phase::Reorient => {
                world.move_gripper(k.pose);
            }
            Phase::Release => {
                world.move_gripper(k.pose);
                trace.max_tilt = trace.max_tilt.max(tilt(world));
                let target = world.object(a)?.pose.position;
                world.detach_and_settle(target)?;
                trace.released = true;
            }
        }
        trace.max_tilt = trace.max_tilt.max(tilt(world));
    }
    Ok(trace)
}
