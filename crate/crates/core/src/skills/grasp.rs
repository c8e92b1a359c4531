//! Antipodal grasp candidates on an object cloud, and the parallel-jaw
//! gripper's collision volume.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::Serialize;

use crate::geometry::polytope::penetration;
use crate::geometry::{ConvexPolytope, Pose};
use crate::world::{ObjectId, PointCloud, WorldState, PENETRATION_TOL};

type V3 = Vector3<f64>;

pub const GRIPPER_MAX_WIDTH: f64 = 0.14;
pub const MIN_WIDTH: f64 = 0.002;
/// Jaw opening beyond the contact width while approaching.
pub const OPEN_MARGIN: f64 = 0.02;
pub const MAX_SEEDS: usize = 400;

const FINGER_HALF: [f64; 3] = [0.01, 0.005, 0.025];
const FINGER_Z: f64 = -0.015;
const PALM_HALF_X: f64 = 0.02;
const PALM_HALF_Z: f64 = 0.01;
const PALM_Z: f64 = -0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraspCandidate {
    /// Gripper pose in the world: y closes the jaws, z is the approach
    /// direction, the origin sits between the fingertips.
    pub pose: Pose,
    pub width: f64,
    pub score: f64,
    pub contacts: [[f64; 3]; 2],
}

/// Antipodality (alignment of both outward normals with the closing line)
/// times a width margin; None past the gripper's reach.
pub fn grasp_score(p1: &V3, n1: &V3, p2: &V3, n2: &V3) -> Option<(f64, f64)> {
    let d = p2 - p1;
    let w = d.norm();
    if !(MIN_WIDTH..=GRIPPER_MAX_WIDTH).contains(&w) {
        return None;
    }
    let dir = d / w;
    let anti = (-n1.dot(&dir)).min(n2.dot(&dir)).max(0.0);
    let margin = 1.0 - 0.5 * (w / GRIPPER_MAX_WIDTH).powi(2);
    Some((anti * margin, w))
}

/// Gripper frame from the closing axis and an approach direction
/// (projected to be orthogonal to it).
pub fn gripper_pose(center: V3, closing: V3, approach: V3) -> Option<Pose> {
    let y = closing.try_normalize(1e-12)?;
    let z = (approach - y * approach.dot(&y)).try_normalize(1e-6)?;
    let x = y.cross(&z);
    let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
    Some(Pose::new(center, UnitQuaternion::from_rotation_matrix(&rot)))
}

/// Finger and palm boxes for a gripper opened to `opening` meters.
pub fn gripper_volume(pose: &Pose, opening: f64) -> Vec<ConvexPolytope> {
    let [fx, fy, fz] = FINGER_HALF;
    let off = opening / 2.0 + fy;
    let mut boxes = vec![
        ConvexPolytope::cuboid(V3::new(0.0, off, FINGER_Z), V3::new(fx, fy, fz)),
        ConvexPolytope::cuboid(V3::new(0.0, -off, FINGER_Z), V3::new(fx, fy, fz)),
    ];
    boxes.push(ConvexPolytope::cuboid(V3::new(0.0, 0.0, PALM_Z), V3::new(PALM_HALF_X, off + fy, PALM_HALF_Z)));
    boxes.iter().map(|b| b.transformed(pose)).collect()
}

/// Whether the open gripper at `pose` would cut into the table or any
/// object not listed in `ignore`.
pub fn gripper_collides(world: &WorldState, pose: &Pose, opening: f64, ignore: &[ObjectId]) -> bool {
    let vol = gripper_volume(pose, opening);
    let table = world.table().polytope();
    if vol.iter().any(|v| penetration(v, &table) > PENETRATION_TOL) {
        return true;
    }
    for o in world.objects() {
        if ignore.contains(&o.id) {
            continue;
        }
        for p in o.polytopes() {
            if vol.iter().any(|v| penetration(v, &p) > PENETRATION_TOL) {
                return true;
            }
        }
    }
    false
}

fn quantize(score: f64) -> i64 {
    (score * 100.0 + 1e-9).floor() as i64
}

/// Candidates from up to `MAX_SEEDS` evenly strided seed points, each
/// paired with its best partner, in preference order: quantized score,
/// then top-down approach, then height.
pub fn sample_grasps(cloud: &PointCloud) -> Vec<GraspCandidate> {
    let n = cloud.len();
    if n < 2 {
        return vec![];
    }
    let centroid = cloud.centroid().unwrap_or_else(V3::zeros);
    let stride = n.div_ceil(MAX_SEEDS).max(1);
    let mut out = vec![];
    for i in (0..n).step_by(stride) {
        let (p1, n1) = (cloud.points[i], cloud.normals[i]);
        let mut best: Option<(f64, f64, usize)> = None;
        for j in 0..n {
            if j == i {
                continue;
            }
            if let Some((s, w)) = grasp_score(&p1, &n1, &cloud.points[j], &cloud.normals[j]) {
                if best.is_none_or(|(bs, _, _)| s > bs) {
                    best = Some((s, w, j));
                }
            }
        }
        let Some((score, width, j)) = best else { continue };
        if score <= 0.0 {
            continue;
        }
        let p2 = cloud.points[j];
        let center = (p1 + p2) / 2.0;
        let closing = p2 - p1;
        let mut approaches = vec![-V3::z()];
        let side = closing.cross(&V3::z());
        if side.norm() > 1e-6 {
            let s = side.normalize();
            approaches.extend([s, -s]);
        } else {
            approaches.extend([V3::x(), -V3::x(), V3::y(), -V3::y()]);
        }
        for a in approaches {
            // side approaches come from outside the object
            if a.z.abs() < 0.5 && a.xy().dot(&(centroid - center).xy()) < -1e-9 {
                continue;
            }
            if let Some(pose) = gripper_pose(center, closing, a) {
                out.push(GraspCandidate { pose, width, score, contacts: [p1.into(), p2.into()] });
            }
        }
    }
    out.sort_by(|a, b| {
        let down = |c: &GraspCandidate| -c.pose.transform_vector(&V3::z()).z;
        quantize(b.score)
            .cmp(&quantize(a.score))
            .then(down(b).total_cmp(&down(a)))
            .then(b.pose.position.z.total_cmp(&a.pose.position.z))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Solid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube_cloud(edge: f64) -> PointCloud {
        let s = Solid::Cuboid { center: V3::new(0.0, 0.0, edge / 2.0), half: V3::repeat(edge / 2.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut c = PointCloud::default();
        for (p, n) in s.sample_surface(&mut rng, 20_000.0) {
            c.push(p, n, 0);
        }
        c
    }

    #[test]
    fn cube_faces_score_by_formula() {
        // opposite faces of a 0.05 cube: antipodality 1, width 0.05
        let (s, w) = grasp_score(&V3::new(-0.025, 0.0, 0.02), &-V3::x(), &V3::new(0.025, 0.0, 0.02), &V3::x()).unwrap();
        assert!((w - 0.05).abs() < 1e-12);
        assert!((s - (1.0 - 0.5 * (0.05f64 / 0.14).powi(2))).abs() < 1e-12);
        assert!(s >= 0.8);
        // beyond the jaw width
        assert!(grasp_score(&V3::zeros(), &-V3::x(), &V3::new(0.2, 0.0, 0.0), &V3::x()).is_none());
        // the width margin crosses 0.8 just under 0.0886 m
        let limit = GRIPPER_MAX_WIDTH * (0.4f64).sqrt();
        let (s, _) = grasp_score(&V3::zeros(), &-V3::x(), &V3::new(limit - 1e-4, 0.0, 0.0), &V3::x()).unwrap();
        assert!(s > 0.8);
    }

    #[test]
    fn top_down_first_on_a_cube() {
        let g = sample_grasps(&cube_cloud(0.05));
        let best = g[0];
        assert!(best.score >= 0.8);
        let approach = best.pose.transform_vector(&V3::z());
        assert!(approach.z < -0.99);
        assert!((best.width - 0.05).abs() < 1e-3);
    }

    #[test]
    fn frame_is_orthonormal() {
        let p = gripper_pose(V3::zeros(), V3::new(1.0, 1.0, 0.0), -V3::z()).unwrap();
        let y = p.transform_vector(&V3::y());
        assert!((y - V3::new(1.0, 1.0, 0.0).normalize()).norm() < 1e-12);
        assert!(gripper_pose(V3::zeros(), V3::z(), V3::z()).is_none());
    }
}
