use std::ops::Mul;

use nalgebra::{Isometry3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Rigid 6-DoF transform: a position in meters and a unit quaternion
/// (Hamilton convention, serialized as `[w, x, y, z]`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    /// Pose at `position` rotated by `yaw` radians about world +z.
    pub fn from_xyz_yaw(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self::new(
            Vector3::new(x, y, z),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        )
    }

    pub fn from_axis_angle(position: Vector3<f64>, axis: Vector3<f64>, angle: f64) -> Self {
        let axis = Unit::new_normalize(axis);
        Self::new(position, UnitQuaternion::from_axis_angle(&axis, angle))
    }

    /// Builds a pose from raw `[w, x, y, z]` components, normalizing them.
    pub fn from_wxyz(position: [f64; 3], wxyz: [f64; 4]) -> Self {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        Self::new(
            Vector3::new(position[0], position[1], position[2]),
            UnitQuaternion::from_quaternion(q),
        )
    }

    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.position + self.orientation * other.position,
            orientation: self.orientation * other.orientation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: -(inv * self.position),
            orientation: inv,
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation * p
    }

    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * (p - self.position)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * v
    }

    pub fn inverse_transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse() * v
    }

    pub fn translated(&self, delta: &Vector3<f64>) -> Pose {
        Pose::new(self.position + delta, self.orientation)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self::new(iso.translation.vector, iso.rotation)
    }

    /// The body +z axis expressed in the world frame.
    pub fn up_axis(&self) -> Vector3<f64> {
        self.orientation * Vector3::z()
    }

    /// Translation distance and rotation angle (radians) to `other`.
    pub fn distance_to(&self, other: &Pose) -> (f64, f64) {
        let dt = (self.position - other.position).norm();
        let dr = self.orientation.angle_to(&other.orientation);
        (dt, dr)
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    orientation: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            position: [self.position.x, self.position.y, self.position.z],
            orientation: self.wxyz(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        let norm = repr.orientation.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 1e-9) || repr.position.iter().any(|c| !c.is_finite()) {
            return Err(serde::de::Error::custom("pose must be finite with a nonzero quaternion"));
        }
        Ok(Pose::from_wxyz(repr.position, repr.orientation))
    }
}

/// Rounds to the nearest multiple of 1e-6, mapping negative zero to zero.
pub fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Quantizes a pose to a 1e-6 grid such that normalizing the stored
/// quaternion and quantizing again reproduces the same components.
pub fn quantize_pose(pose: &Pose) -> ([f64; 3], [f64; 4]) {
    let p = pose.position;
    let position = [round6(p.x), round6(p.y), round6(p.z)];
    let mut q = pose.wxyz();
    // canonical hemisphere
    if q[0] < 0.0 || (q[0] == 0.0 && q.iter().find(|c| **c != 0.0).copied().unwrap_or(1.0) < 0.0) {
        q = q.map(|c| -c);
    }
    let mut r = q.map(round6);
    for _ in 0..16 {
        let n = r.iter().map(|c| c * c).sum::<f64>().sqrt();
        let next = r.map(|c| round6(c / n));
        if next == r {
            break;
        }
        r = next;
    }
    (position, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            prop::array::uniform3(-2.0f64..2.0),
            prop::array::uniform4(-1.0f64..1.0),
        )
            .prop_filter("nonzero quaternion", |(_, q)| {
                q.iter().map(|c| c * c).sum::<f64>() > 1e-3
            })
            .prop_map(|(p, q)| Pose::from_wxyz(p, q))
    }

    #[test]
    fn yaw_rotates_x_to_y() {
        let pose = Pose::from_xyz_yaw(1.0, 0.0, 0.0, PI / 2.0);
        let p = pose.transform_point(&Vector3::new(1.0, 0.0, 0.0));
        assert!((p - Vector3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn serde_uses_wxyz_order() {
        let pose = Pose::from_xyz_yaw(0.1, 0.2, 0.3, PI);
        let json = serde_json::to_value(pose).unwrap();
        let q = json["orientation"].as_array().unwrap();
        assert!(q[0].as_f64().unwrap().abs() < 1e-12);
        assert!((q[3].as_f64().unwrap().abs() - 1.0).abs() < 1e-12);
        let back: Pose = serde_json::from_value(json).unwrap();
        let (dt, dr) = back.distance_to(&pose);
        assert!(dt < 1e-12 && dr < 1e-9);
    }

    #[test]
    fn zero_quaternion_is_rejected() {
        let err = serde_json::from_str::<Pose>(r#"{"position":[0,0,0],"orientation":[0,0,0,0]}"#);
        assert!(err.is_err());
    }

    proptest! {
        #[test]
        fn orientation_is_unit(pose in arb_pose()) {
            prop_assert!((pose.orientation.quaternion().norm() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn inverse_composes_to_identity(pose in arb_pose()) {
            let id = pose.inverse().compose(&pose);
            let (dt, dr) = id.distance_to(&Pose::identity());
            prop_assert!(dt < 1e-9 && dr < 1e-7);
        }

        #[test]
        fn composition_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            let (dt, dr) = left.distance_to(&right);
            prop_assert!(dt < 1e-9 && dr < 1e-7);
        }

        #[test]
        fn quantization_is_idempotent(pose in arb_pose()) {
            let (p, q) = quantize_pose(&pose);
            let reloaded = Pose::from_wxyz(p, q);
            prop_assert_eq!(quantize_pose(&reloaded), (p, q));
        }
    }
}
