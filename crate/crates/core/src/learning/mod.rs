//! Few-shot skills: demonstrations are stored as end-effector keyframes
//! in the frame of the object they act on, averaged into a template and
//! replayed against the objects' current poses.

mod execute;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Pose;
use crate::world::{ObjectId, WorldError, WorldState};

pub use execute::{execute_template, ExecutionTrace};

pub const MAX_DEMOS: usize = 10;
pub const DEMOS_SCHEMA: &str = "demos.v1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("no skill is waiting for demonstrations")]
    NoPendingSkill,
    #[error("skill {0} already has the maximum of 10 demonstrations")]
    TooManyDemos(String),
    #[error("no demonstrations")]
    EmptyDemos,
    #[error("demonstrations mix one- and two-object skills")]
    MixedArity,
    #[error("demonstrations belong to different skills")]
    MixedSkill,
    #[error("demonstrations disagree on the keyframe phases")]
    PhaseMismatch,
    #[error("demonstrations were recorded on different object categories")]
    MixedCategory,
    #[error("invalid demonstration: {0}")]
    InvalidDemo(String),
    #[error("skill was taught on a {expected}, not a {found}")]
    CategoryMismatch { expected: String, found: String },
    #[error("skill takes {expected} object ids, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("no feasible grasp at the taught pose")]
    GraspInfeasible,
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Approach,
    Grasp,
    Transit,
    Release,
    Reorient,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub phase: Phase,
    /// End-effector pose in the world.
    pub pose: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoObject {
    pub label: String,
    pub pose: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<ObjectId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub skill: String,
    /// The acted-on object, then the optional reference object.
    pub objects: Vec<DemoObject>,
    pub keyframes: Vec<Keyframe>,
}

/// Which object a template keyframe is anchored to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateKeyframe {
    pub phase: Phase,
    pub anchor: Anchor,
    /// End-effector pose in the anchor object's frame.
    pub relative: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateModel {
    pub skill: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_b: Option<String>,
    pub arity: usize,
    pub demo_count: usize,
    pub keyframes: Vec<TemplateKeyframe>,
    /// Final pose of the acted-on object in the reference object's frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_a_in_b: Option<Pose>,
}

impl Demonstration {
    pub fn arity(&self) -> usize {
        self.objects.len()
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        if self.keyframes.is_empty() {
            return Err(LearnError::InvalidDemo("no keyframes".into()));
        }
        if !(1..=2).contains(&self.objects.len()) {
            return Err(LearnError::InvalidDemo(format!("{} objects; skills act on one or two", self.objects.len())));
        }
        let moves = self.keyframes.iter().any(|k| matches!(k.phase, Phase::Transit | Phase::Release | Phase::Reorient));
        if moves && !self.keyframes.iter().any(|k| k.phase == Phase::Grasp) {
            return Err(LearnError::InvalidDemo("manipulation without a grasp keyframe".into()));
        }
        let finite = |p: &Pose| p.position.iter().all(|c| c.is_finite()) && p.orientation.coords.iter().all(|c| c.is_finite());
        if !self.keyframes.iter().all(|k| finite(&k.pose)) || !self.objects.iter().all(|o| finite(&o.pose)) {
            return Err(LearnError::InvalidDemo("non-finite pose".into()));
        }
        Ok(())
    }

    fn anchors(&self) -> Vec<Anchor> {
        let last_grasp = self.keyframes.iter().rposition(|k| k.phase == Phase::Grasp);
        self.keyframes
            .iter()
            .enumerate()
            .map(|(i, _)| match last_grasp {
                Some(g) if i > g && self.arity() == 2 => Anchor::B,
                _ => Anchor::A,
            })
            .collect()
    }

    /// Keyframes in their anchor frames.
    pub fn relative_keyframes(&self) -> Vec<TemplateKeyframe> {
        self.keyframes
            .iter()
            .zip(self.anchors())
            .map(|(k, anchor)| {
                let frame = match anchor {
                    Anchor::A => self.objects[0].pose,
                    Anchor::B => self.objects[1].pose,
                };
                TemplateKeyframe { phase: k.phase, anchor, relative: frame.inverse().compose(&k.pose) }
            })
            .collect()
    }

    /// Where object a ends up in b's frame, following the gripper from the
    /// last grasp to the last release.
    pub fn final_a_in_b(&self) -> Option<Pose> {
        if self.arity() != 2 {
            return None;
        }
        let g = self.keyframes.iter().rposition(|k| k.phase == Phase::Grasp)?;
        let r = self.keyframes.iter().rposition(|k| k.phase == Phase::Release)?;
        let a_in_gripper = self.keyframes[g].pose.inverse().compose(&self.objects[0].pose);
        let a_final = self.keyframes[r].pose.compose(&a_in_gripper);
        Some(self.objects[1].pose.inverse().compose(&a_final))
    }
}

/// Sign-aligned, normalized arithmetic mean of unit quaternions.
pub fn mean_rotation(qs: &[UnitQuaternion<f64>]) -> Option<UnitQuaternion<f64>> {
    let first = qs.first()?;
    let mut sum = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    for q in qs {
        let c = q.quaternion();
        sum += if c.dot(first.quaternion()) < 0.0 { -c } else { *c };
    }
    if sum.norm() < 1e-12 {
        return None;
    }
    Some(UnitQuaternion::from_quaternion(sum))
}

pub fn mean_pose(poses: &[Pose]) -> Option<Pose> {
    if poses.is_empty() {
        return None;
    }
    let t = poses.iter().map(|p| p.position).sum::<Vector3<f64>>() / poses.len() as f64;
    let qs: Vec<UnitQuaternion<f64>> = poses.iter().map(|p| p.orientation).collect();
    Some(Pose::new(t, mean_rotation(&qs)?))
}

pub fn fit_template(demos: &[Demonstration]) -> Result<TemplateModel, LearnError> {
    let first = demos.first().ok_or(LearnError::EmptyDemos)?;
    if demos.len() > MAX_DEMOS {
        return Err(LearnError::TooManyDemos(first.skill.clone()));
    }
    for d in demos {
        d.validate()?;
        if d.skill != first.skill {
            return Err(LearnError::MixedSkill);
        }
        if d.arity() != first.arity() {
            return Err(LearnError::MixedArity);
        }
        if d.objects[0].label != first.objects[0].label {
            return Err(LearnError::MixedCategory);
        }
        let phases = |d: &Demonstration| d.keyframes.iter().map(|k| k.phase).collect::<Vec<_>>();
        if phases(d) != phases(first) {
            return Err(LearnError::PhaseMismatch);
        }
    }
    let rel: Vec<Vec<TemplateKeyframe>> = demos.iter().map(Demonstration::relative_keyframes).collect();
    let mut keyframes = vec![];
    for (i, k) in rel[0].iter().enumerate() {
        let poses: Vec<Pose> = rel.iter().map(|r| r[i].relative).collect();
        let relative = mean_pose(&poses).ok_or(LearnError::InvalidDemo("rotations cancel out".into()))?;
        keyframes.push(TemplateKeyframe { phase: k.phase, anchor: k.anchor, relative });
    }
    let finals: Vec<Pose> = demos.iter().filter_map(Demonstration::final_a_in_b).collect();
    Ok(TemplateModel {
        skill: first.skill.clone(),
        category: first.objects[0].label.clone(),
        category_b: first.objects.get(1).map(|o| o.label.clone()),
        arity: first.arity(),
        demo_count: demos.len(),
        keyframes,
        final_a_in_b: if finals.len() == demos.len() { mean_pose(&finals) } else { None },
    })
}

impl TemplateModel {
    /// End-effector keyframes for objects at `a` (and `b`).
    pub fn instantiate(&self, a: &Pose, b: Option<&Pose>) -> Result<Vec<Keyframe>, LearnError> {
        let found = 1 + usize::from(b.is_some());
        if found != self.arity {
            return Err(LearnError::ArityMismatch { expected: self.arity, found });
        }
        Ok(self
            .keyframes
            .iter()
            .map(|k| {
                let frame = match (k.anchor, b) {
                    (Anchor::B, Some(b)) => b,
                    _ => a,
                };
                Keyframe { phase: k.phase, pose: frame.compose(&k.relative) }
            })
            .collect())
    }
}

/// Skill name waiting for demonstrations, and those received so far.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PendingSkill {
    pub name: String,
    pub demos: Vec<Demonstration>,
}

/// Collects demonstrations for at most one requested skill at a time.
#[derive(Clone, Debug, Default)]
pub struct Teacher {
    pending: Option<PendingSkill>,
}

impl Teacher {
    pub fn request(&mut self, name: &str) {
        self.pending = Some(PendingSkill { name: name.to_string(), demos: vec![] });
    }

    pub fn pending(&self) -> Option<&PendingSkill> {
        self.pending.as_ref()
    }

    pub fn cancel(&mut self) -> Option<PendingSkill> {
        self.pending.take()
    }

    /// Records a demonstration from the objects' current poses in `world`.
    pub fn record_demo(
        &mut self,
        world: &WorldState,
        objects: &[ObjectId],
        keyframes: Vec<Keyframe>,
    ) -> Result<&Demonstration, LearnError> {
        let name = self.pending.as_ref().ok_or(LearnError::NoPendingSkill)?.name.clone();
        let mut objs = vec![];
        for id in objects {
            let o = world.object(*id)?;
            objs.push(DemoObject { label: o.label.clone(), pose: o.pose, id: Some(*id) });
        }
        self.add_demo(Demonstration { skill: name, objects: objs, keyframes })
    }

    pub fn add_demo(&mut self, mut demo: Demonstration) -> Result<&Demonstration, LearnError> {
        let p = self.pending.as_mut().ok_or(LearnError::NoPendingSkill)?;
        if p.demos.len() >= MAX_DEMOS {
            return Err(LearnError::TooManyDemos(p.name.clone()));
        }
        demo.skill = p.name.clone();
        demo.validate()?;
        if let Some(first) = p.demos.first() {
            if first.arity() != demo.arity() {
                return Err(LearnError::MixedArity);
            }
        }
        p.demos.push(demo);
        Ok(p.demos.last().expect("just pushed"))
    }

    pub fn fit(&self) -> Result<TemplateModel, LearnError> {
        let p = self.pending.as_ref().ok_or(LearnError::NoPendingSkill)?;
        fit_template(&p.demos)
    }
}

/// One demonstration as stored in a `demos.v1` file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoDoc {
    pub object_poses: Vec<DemoObject>,
    pub keyframes: Vec<Keyframe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoFile {
    pub schema: String,
    pub skill: String,
    pub arity: usize,
    pub demos: Vec<DemoDoc>,
}

impl DemoFile {
    pub fn new(skill: &str, demos: &[Demonstration]) -> Self {
        Self {
            schema: DEMOS_SCHEMA.into(),
            skill: skill.into(),
            arity: demos.first().map_or(1, Demonstration::arity),
            demos: demos
                .iter()
                .map(|d| DemoDoc { object_poses: d.objects.clone(), keyframes: d.keyframes.clone() })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let f: DemoFile = serde_json::from_str(text).map_err(|e| LearnError::InvalidDemo(e.to_string()))?;
        if f.schema != DEMOS_SCHEMA {
            return Err(LearnError::InvalidDemo(format!("schema {:?}, expected {DEMOS_SCHEMA:?}", f.schema)));
        }
        if f.demos.len() > MAX_DEMOS {
            return Err(LearnError::TooManyDemos(f.skill));
        }
        for d in f.demonstrations() {
            d.validate()?;
            if d.arity() != f.arity {
                return Err(LearnError::MixedArity);
            }
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("demo file serializes")
    }

    pub fn demonstrations(&self) -> Vec<Demonstration> {
        self.demos
            .iter()
            .map(|d| Demonstration { skill: self.skill.clone(), objects: d.object_poses.clone(), keyframes: d.keyframes.clone() })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn demo(a: Pose) -> Demonstration {
        let local = [
            (Phase::Approach, Pose::from_translation(0.0, 0.0, 0.15)),
            (Phase::Grasp, Pose::from_translation(0.0, 0.0, 0.05)),
            (Phase::Transit, Pose::from_translation(0.0, 0.0, 0.2)),
        ];
        Demonstration {
            skill: "lift_cube".into(),
            objects: vec![DemoObject { label: "cube".into(), pose: a, id: None }],
            keyframes: local.iter().map(|(phase, p)| Keyframe { phase: *phase, pose: a.compose(p) }).collect(),
        }
    }

    #[test]
    fn one_demo_template_is_that_demo() {
        let a = Pose::from_xyz_yaw(0.1, -0.2, 0.025, 0.7);
        let d = demo(a);
        let m = fit_template(std::slice::from_ref(&d)).unwrap();
        assert_eq!(m.demo_count, 1);
        let k = m.instantiate(&a, None).unwrap();
        for (x, y) in k.iter().zip(&d.keyframes) {
            let (dt, dr) = x.pose.distance_to(&y.pose);
            assert!(dt < 1e-12 && dr < 1e-9);
        }
    }

    #[test]
    fn duplicated_rotation_averages_to_itself() {
        let q = UnitQuaternion::from_euler_angles(0.3, -0.2, 1.1);
        let m = mean_rotation(&[q, q]).unwrap();
        assert!(m.angle_to(&q) < 1e-12);
        // sign flip is the same rotation
        let flipped = UnitQuaternion::new_unchecked(-q.into_inner());
        assert!(mean_rotation(&[q, flipped]).unwrap().angle_to(&q) < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(fit_template(&[]), Err(LearnError::EmptyDemos));
        let mut t = Teacher::default();
        assert_eq!(t.add_demo(demo(Pose::identity())).unwrap_err(), LearnError::NoPendingSkill);
        t.request("lift_cube");
        for _ in 0..MAX_DEMOS {
            t.add_demo(demo(Pose::identity())).unwrap();
        }
        assert!(matches!(t.add_demo(demo(Pose::identity())), Err(LearnError::TooManyDemos(_))));
        let mut two = demo(Pose::identity());
        two.objects.push(DemoObject { label: "tray".into(), pose: Pose::identity(), id: None });
        assert_eq!(fit_template(&[demo(Pose::identity()), two]), Err(LearnError::MixedArity));
        let m = fit_template(&[demo(Pose::identity())]).unwrap();
        assert!(matches!(m.instantiate(&Pose::identity(), Some(&Pose::identity())), Err(LearnError::ArityMismatch { .. })));
    }

    #[test]
    fn relational_final_pose() {
        let a = Pose::from_xyz_yaw(0.2, 0.0, 0.05, 0.0);
        let b = Pose::from_xyz_yaw(-0.2, 0.1, 0.02, PI / 2.0);
        let grasp = a.compose(&Pose::from_translation(0.0, 0.0, 0.05));
        let goal_a_in_b = Pose::from_translation(0.0, 0.0, 0.1);
        let release = b.compose(&goal_a_in_b).compose(&Pose::from_translation(0.0, 0.0, 0.05));
        let d = Demonstration {
            skill: "put".into(),
            objects: vec![
                DemoObject { label: "cube".into(), pose: a, id: None },
                DemoObject { label: "tray".into(), pose: b, id: None },
            ],
            keyframes: vec![Keyframe { phase: Phase::Grasp, pose: grasp }, Keyframe { phase: Phase::Release, pose: release }],
        };
        let f = d.final_a_in_b().unwrap();
        assert!(f.distance_to(&goal_a_in_b).0 < 1e-12);
        assert_eq!(d.relative_keyframes()[1].anchor, Anchor::B);
    }

    proptest! {
        #[test]
        fn template_is_equivariant(
            t in prop::array::uniform3(-1.0f64..1.0),
            r in prop::array::uniform3(-PI..PI),
        ) {
            let m = fit_template(&[demo(Pose::identity())]).unwrap();
            let g = Pose::new(Vector3::from(t), UnitQuaternion::from_euler_angles(r[0], r[1], r[2]));
            let base = m.instantiate(&Pose::identity(), None).unwrap();
            let moved = m.instantiate(&g, None).unwrap();
            for (x, y) in base.iter().zip(&moved) {
                let (dt, dr) = g.compose(&x.pose).distance_to(&y.pose);
                prop_assert!(dt < 1e-9 && dr < 1e-6);
            }
        }
    }
}
