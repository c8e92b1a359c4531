//! The skill library and the builtin robot skills.

mod api_doc;
pub mod grasp;
mod robot;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grounding::GroundingError;
use crate::learning::{LearnError, TemplateModel};
use crate::value::Value;
use crate::world::{ObjectId, WorldError};

pub use api_doc::{builtin_docs, render_api_doc, BuiltinDoc, DocDetail};
pub use robot::{bind_args, lateral_place_position, GraspRegion, GraspReport, PlaceRelation, Robot, TaskPhase, CLEARANCE, DROP_HEIGHT, LIFT_HEIGHT};

pub const SKILLS_SCHEMA: &str = "skills.v1";

pub const BUILTINS: [&str; 11] = [
    "start_task",
    "end_task",
    "get_all_object_ids",
    "get_container_id",
    "get_objects_contained_and_over",
    "find",
    "get_location",
    "pick",
    "get_place_position",
    "place",
    "learn_skill",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkillError {
    #[error("{0}")]
    OutOfOrder(String),
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("gripper already holds object {0}")]
    GripperOccupied(ObjectId),
    #[error("no grasp for object {0} scores at or above the threshold")]
    NoGraspFound(ObjectId),
    #[error("no placement matches {0:?}")]
    UnknownRelation(String),
    #[error("the gripper is empty")]
    NothingHeld,
    #[error("object {0} is not the one in the gripper")]
    NotHeld(ObjectId),
    #[error("target position is off the table")]
    TargetOutOfBounds,
    #[error("the object slipped out of the gripper")]
    GraspSlipped,
    #[error("the object toppled while being placed")]
    PlaceToppled,
    #[error("a skill named {0} already exists")]
    DuplicateName(String),
    #[error("no skill named {0}")]
    UnknownSkill(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{0}")]
    ArityError(String),
    #[error("{0}")]
    TypeError(String),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error(transparent)]
    Learn(LearnError),
    #[error("{0}")]
    World(WorldError),
}

impl SkillError {
    /// Stable error code for logs and feedback.
    pub fn code(&self) -> String {
        match self {
            SkillError::OutOfOrder(_) => "OutOfOrder".into(),
            SkillError::UnknownObject(_) => "UnknownObject".into(),
            SkillError::GripperOccupied(_) => "GripperOccupied".into(),
            SkillError::NoGraspFound(_) => "NoGraspFound".into(),
            SkillError::UnknownRelation(_) => "UnknownRelation".into(),
            SkillError::NothingHeld => "NothingHeld".into(),
            SkillError::NotHeld(_) => "NotHeld".into(),
            SkillError::TargetOutOfBounds => "TargetOutOfBounds".into(),
            SkillError::GraspSlipped => "GraspSlipped".into(),
            SkillError::PlaceToppled => "PlaceToppled".into(),
            SkillError::DuplicateName(_) => "DuplicateName".into(),
            SkillError::UnknownSkill(_) => "UnknownSkill".into(),
            SkillError::InvalidArgument(_) => "InvalidArgument".into(),
            SkillError::ArityError(_) => "ArityError".into(),
            SkillError::TypeError(_) => "TypeError".into(),
            SkillError::Grounding(GroundingError::NoArguments) => "NoArguments".into(),
            SkillError::Grounding(GroundingError::NotFound) => "NotFound".into(),
            SkillError::Grounding(GroundingError::Provider(_)) => "ProviderError".into(),
            SkillError::Learn(e) => match e {
                LearnError::CategoryMismatch { .. } => "CategoryMismatch".into(),
                LearnError::GraspInfeasible => "GraspInfeasible".into(),
                LearnError::ArityMismatch { .. } => "ArityError".into(),
                other => format!("{other:?}").split(['(', ' ', '{']).next().unwrap_or("LearnError").to_string(),
            },
            SkillError::World(e) => format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("WorldError").to_string(),
        }
    }
}

impl From<WorldError> for SkillError {
    fn from(e: WorldError) -> Self {
        match e {
            WorldError::UnknownObject(id) => SkillError::UnknownObject(id),
            WorldError::GripperOccupied(id) => SkillError::GripperOccupied(id),
            WorldError::NothingHeld => SkillError::NothingHeld,
            WorldError::TargetOutOfBounds => SkillError::TargetOutOfBounds,
            WorldError::GraspSlipped => SkillError::GraspSlipped,
            WorldError::PlaceToppled => SkillError::PlaceToppled,
            other => SkillError::World(other),
        }
    }
}

impl From<LearnError> for SkillError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::World(w) => w.into(),
            other => SkillError::Learn(other),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExecError {
    pub code: String,
    pub message: String,
}

/// Outcome of one skill call: either a value or an error, never both.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecResult {
    pub ok: bool,
    pub value: Option<Value>,
    pub error: Option<ExecError>,
}

impl ExecResult {
    pub fn ok(value: Value) -> Self {
        Self { ok: true, value: Some(value), error: None }
    }

    pub fn err(e: &SkillError) -> Self {
        Self { ok: false, value: None, error: Some(ExecError { code: e.code(), message: e.to_string() }) }
    }

    pub fn from_result(r: &Result<Value, SkillError>) -> Self {
        match r {
            Ok(v) => Self::ok(v.clone()),
            Err(e) => Self::err(e),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        m.insert("ok".into(), self.ok.into());
        if let Some(v) = &self.value {
            m.insert("value".into(), v.to_json());
        }
        if let Some(e) = &self.error {
            m.insert("error".into(), serde_json::to_value(e).expect("error serializes"));
        }
        serde_json::Value::Object(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamType {
    ObjectId,
    ObjectIdList,
    Position3,
    String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
    #[serde(default)]
    pub optional: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillKind {
    Builtin,
    Learned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkillRecord {
    pub name: String,
    pub kind: SkillKind,
    pub signature: Vec<Param>,
    pub docstring: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateModel>,
    /// Library version at which the skill was added.
    #[serde(default)]
    pub created_at: u64,
    #[serde(default)]
    pub usage_count: u64,
}

impl SkillRecord {
    /// A learned skill over one or two object ids.
    pub fn learned(name: &str, template: TemplateModel, docstring: &str) -> Self {
        let signature = (1..=template.arity)
            .map(|i| Param { name: format!("object_id_{i}"), ty: ParamType::ObjectId, optional: false })
            .collect();
        Self {
            name: name.into(),
            kind: SkillKind::Learned,
            signature,
            docstring: docstring.into(),
            template: Some(template),
            created_at: 0,
            usage_count: 0,
        }
    }

    /// A learned skill known only by name and docstring, with no template.
    /// It can be documented to a planner but not executed.
    pub fn declared(name: &str, arity: usize, docstring: &str) -> Self {
        let signature = (1..=arity)
            .map(|i| Param { name: format!("object_id_{i}"), ty: ParamType::ObjectId, optional: false })
            .collect();
        Self {
            name: name.into(),
            kind: SkillKind::Learned,
            signature,
            docstring: docstring.into(),
            template: None,
            created_at: 0,
            usage_count: 0,
        }
    }
}

/// True for names usable as plan identifiers: letters and underscores.
pub fn valid_skill_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphabetic() || c == '_')
}

/// Append-only registry of skills.
#[derive(Clone, Debug, PartialEq)]
pub struct SkillLibrary {
    records: IndexMap<String, SkillRecord>,
    version: u64,
}

impl Default for SkillLibrary {
    fn default() -> Self {
        Self::new()
    }
}

impl SkillLibrary {
    /// The builtin library.
    pub fn new() -> Self {
        let mut records = IndexMap::new();
        for d in builtin_docs() {
            records.insert(
                d.name.clone(),
                SkillRecord {
                    name: d.name.clone(),
                    kind: SkillKind::Builtin,
                    signature: d.params.clone(),
                    docstring: d.body.clone(),
                    template: None,
                    created_at: 0,
                    usage_count: 0,
                },
            );
        }
        Self { records, version: 0 }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn records(&self) -> impl Iterator<Item = &SkillRecord> {
        self.records.values()
    }

    pub fn names(&self) -> Vec<String> {
        self.records.keys().cloned().collect()
    }

    pub fn get(&self, name: &str) -> Option<&SkillRecord> {
        self.records.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.records.contains_key(name)
    }

    pub fn learned(&self) -> impl Iterator<Item = &SkillRecord> {
        self.records.values().filter(|r| r.kind == SkillKind::Learned)
    }

    pub fn register(&mut self, mut record: SkillRecord) -> Result<&SkillRecord, SkillError> {
        if self.records.contains_key(&record.name) {
            return Err(SkillError::DuplicateName(record.name));
        }
        if !valid_skill_name(&record.name) {
            return Err(SkillError::InvalidArgument(format!("{:?} is not a valid skill name", record.name)));
        }
        if record.kind == SkillKind::Learned {
            let arity = record.signature.len();
            if !(1..=2).contains(&arity) || record.signature.iter().any(|p| p.ty != ParamType::ObjectId) {
                return Err(SkillError::InvalidArgument("learned skills take one or two object ids".into()));
            }
        }
        self.version += 1;
        record.created_at = self.version;
        let name = record.name.clone();
        self.records.insert(name.clone(), record);
        Ok(&self.records[&name])
    }

    pub fn note_use(&mut self, name: &str) {
        if let Some(r) = self.records.get_mut(name) {
            r.usage_count += 1;
        }
    }

    /// `skills.v1`: a JSON array of every record.
    pub fn to_json(&self) -> String {
        let all: Vec<&SkillRecord> = self.records.values().collect();
        serde_json::to_string_pretty(&all).expect("records serialize")
    }

    pub fn parse_records(text: &str) -> Result<Vec<SkillRecord>, SkillError> {
        serde_json::from_str(text).map_err(|e| SkillError::InvalidArgument(format!("bad {SKILLS_SCHEMA} file: {e}")))
    }

    /// Adds the learned skills from a `skills.v1` document. Builtins are
    /// skipped, as are learned records identical to ones already present.
    /// Returns the names added.
    pub fn import_json(&mut self, text: &str) -> Result<Vec<String>, SkillError> {
        let recs = Self::parse_records(text)?;
        let mut staged = self.clone();
        let mut added = vec![];
        for r in recs {
            if r.kind == SkillKind::Builtin {
                continue;
            }
            if let Some(existing) = staged.get(&r.name) {
                if existing.template == r.template && existing.docstring == r.docstring {
                    continue;
                }
            }
            let (usage, name) = (r.usage_count, r.name.clone());
            staged.register(r)?;
            staged.records.get_mut(&name).expect("registered").usage_count = usage;
            added.push(name);
        }
        *self = staged;
        Ok(added)
    }

    pub fn from_json(text: &str) -> Result<Self, SkillError> {
        let mut lib = Self::new();
        lib.import_json(text)?;
        Ok(lib)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose;
    use crate::learning::{Anchor, Phase, TemplateKeyframe};

    fn template(arity: usize) -> TemplateModel {
        TemplateModel {
            skill: "pick_mug_by_handle".into(),
            category: "mug".into(),
            category_b: None,
            arity,
            demo_count: 5,
            keyframes: vec![TemplateKeyframe { phase: Phase::Grasp, anchor: Anchor::A, relative: Pose::identity() }],
            final_a_in_b: None,
        }
    }

    #[test]
    fn builtins_present() {
        let lib = SkillLibrary::new();
        assert_eq!(lib.names(), BUILTINS);
        assert_eq!(lib.version(), 0);
    }

    #[test]
    fn register_and_round_trip() {
        let mut lib = SkillLibrary::new();
        lib.register(SkillRecord::learned("pick_mug_by_handle", template(1), "Picks a mug by its handle.")).unwrap();
        assert_eq!(lib.version(), 1);
        let doc = render_api_doc(&lib, DocDetail::NameAndDocstring, &[]);
        assert!(doc.ends_with("pick_mug_by_handle(object_id_1)\n    Picks a mug by its handle.\n"));
        let err = lib.register(SkillRecord::learned("pick_mug_by_handle", template(1), "")).unwrap_err();
        assert_eq!(err.code(), "DuplicateName");
        let back = SkillLibrary::from_json(&lib.to_json()).unwrap();
        assert_eq!(back.names(), lib.names());
        assert_eq!(back.get("pick_mug_by_handle"), lib.get("pick_mug_by_handle"));
        // importing the same file again changes nothing
        let mut again = back.clone();
        assert!(again.import_json(&lib.to_json()).unwrap().is_empty());
        assert_eq!(again.version(), back.version());
    }

    #[test]
    fn rejects_bad_records() {
        let mut lib = SkillLibrary::new();
        assert!(lib.register(SkillRecord::learned("tilt mug", template(1), "")).is_err());
        let mut r = SkillRecord::learned("three_way", template(1), "");
        r.signature = (0..3).map(|i| Param { name: format!("o{i}"), ty: ParamType::ObjectId, optional: false }).collect();
        assert!(lib.register(r).is_err());
        assert_eq!(lib.version(), 0);
    }
}
