use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::pose::{quantize_pose, round6};
use crate::geometry::Pose;

use super::{Gripper, Held, ObjectId, RigidObject, Rider, Shape, TableBounds, WorldError, WorldState};

pub const SCENE_SCHEMA: &str = "scene.v1";

/// Pose with components quantized to 1e-6.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseDoc {
    pub position: [f64; 3],
    pub orientation: [f64; 4],
}

impl From<&Pose> for PoseDoc {
    fn from(p: &Pose) -> Self {
        let (position, orientation) = quantize_pose(p);
        Self { position, orientation }
    }
}

impl PoseDoc {
    fn to_pose(self) -> Result<Pose, WorldError> {
        let norm = self.orientation.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 1e-9) || self.position.iter().chain(self.orientation.iter()).any(|c| !c.is_finite()) {
            return Err(WorldError::InvalidDocument("pose must be finite with a nonzero quaternion".into()));
        }
        Ok(Pose::from_wxyz(self.position, self.orientation))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectDoc {
    pub id: ObjectId,
    pub label: String,
    pub shape: Shape,
    pub pose: PoseDoc,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_confidence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiderDoc {
    pub object: ObjectId,
    pub relative: PoseDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldDoc {
    pub object: ObjectId,
    pub grasp: PoseDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub riders: Vec<RiderDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperDoc {
    pub pose: PoseDoc,
    pub held: Option<HeldDoc>,
}

/// Canonical serialized world (`scene.v1`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneDoc {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub table_bounds: TableBounds,
    pub objects: Vec<ObjectDoc>,
    #[serde(default)]
    pub gripper: Option<GripperDoc>,
}

fn default_schema() -> String {
    SCENE_SCHEMA.to_string()
}

pub fn snapshot(world: &WorldState) -> SceneDoc {
    let objects = world
        .objects()
        .map(|o| ObjectDoc {
            id: o.id,
            label: o.label.clone(),
            shape: o.shape.round(round6),
            pose: PoseDoc::from(&o.pose),
            attributes: o.attributes.iter().cloned().collect(),
            detection_confidence: (o.detection_confidence != 1.0).then(|| round6(o.detection_confidence)),
        })
        .collect();
    let g = world.gripper();
    SceneDoc {
        schema: SCENE_SCHEMA.to_string(),
        seed: world.seed(),
        table_bounds: TableBounds { x: world.table().x.map(round6), y: world.table().y.map(round6) },
        objects,
        gripper: Some(GripperDoc {
            pose: PoseDoc::from(&g.pose),
            held: g.held.as_ref().map(|h| HeldDoc {
                object: h.object,
                grasp: PoseDoc::from(&h.grasp),
                riders: h.riders.iter().map(|r| RiderDoc { object: r.object, relative: PoseDoc::from(&r.relative) }).collect(),
            }),
        }),
    }
}

pub fn snapshot_json(world: &WorldState) -> String {
    serde_json::to_string_pretty(&snapshot(world)).expect("scene documents always serialize")
}

/// Rebuilds a world from a document, taking poses as given (no settling).
pub fn load(doc: &SceneDoc) -> Result<WorldState, WorldError> {
    if doc.schema != SCENE_SCHEMA {
        return Err(WorldError::InvalidDocument(format!("unsupported schema {:?}", doc.schema)));
    }
    let mut world = WorldState::with_table(doc.seed, doc.table_bounds);
    let mut seen = BTreeSet::new();
    for o in &doc.objects {
        if !seen.insert(o.id) {
            return Err(WorldError::InvalidDocument(format!("duplicate object id {}", o.id)));
        }
        o.shape.validate()?;
        world.insert_raw(RigidObject {
            id: o.id,
            label: o.label.trim().to_lowercase(),
            pose: o.pose.to_pose()?,
            shape: o.shape.clone(),
            attributes: o.attributes.iter().map(|a| a.trim().to_lowercase()).collect(),
            detection_confidence: o.detection_confidence.unwrap_or(1.0),
        });
    }
    if let Some(g) = &doc.gripper {
        let held = match &g.held {
            Some(h) => {
                for id in std::iter::once(h.object).chain(h.riders.iter().map(|r| r.object)) {
                    world.object(id)?;
                }
                Some(Held {
                    object: h.object,
                    grasp: h.grasp.to_pose()?,
                    riders: h
                        .riders
                        .iter()
                        .map(|r| Ok(Rider { object: r.object, relative: r.relative.to_pose()? }))
                        .collect::<Result<_, WorldError>>()?,
                })
            }
            None => None,
        };
        world.set_gripper_raw(Gripper { pose: g.pose.to_pose()?, held });
    }
    Ok(world)
}

pub fn load_json(text: &str) -> Result<WorldState, WorldError> {
    let doc: SceneDoc = serde_json::from_str(text).map_err(|e| WorldError::InvalidDocument(e.to_string()))?;
    load(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::ObjectSpec;

    fn scene() -> WorldState {
        let mut w = WorldState::new(42);
        w.spawn_object(ObjectSpec::new("bowl", Shape::container([0.15, 0.15, 0.06], 0.006), -0.1, 0.1).yaw(0.4), true)
            .unwrap();
        w.spawn_object(ObjectSpec::new("mug", Shape::cube(0.05), 0.2, -0.1).yaw(1.234567891).with_attributes(&["Red"]), true)
            .unwrap();
        w
    }

    #[test]
    fn empty_world_has_no_objects() {
        let doc = snapshot(&WorldState::new(0));
        assert!(doc.objects.is_empty());
        assert_eq!(doc.schema, "scene.v1");
    }

    #[test]
    fn load_then_snapshot_is_identity() {
        let w = scene();
        let text = snapshot_json(&w);
        let w2 = load_json(&text).unwrap();
        assert_eq!(snapshot_json(&w2), text);
        assert_eq!(snapshot_json(&w), text);
    }

    #[test]
    fn rejects_duplicate_ids_and_garbage() {
        let mut doc = snapshot(&scene());
        doc.objects[1].id = doc.objects[0].id;
        assert!(load(&doc).is_err());
        assert!(load_json("{not json").is_err());
    }
}
