use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::grasp::{gripper_collides, sample_grasps, OPEN_MARGIN};
use super::{ParamType, SkillError, SkillKind, SkillLibrary, SkillRecord};
use crate::description::{describe_perception, SceneDescription, SceneGraph};
use crate::geometry::Pose;
use crate::grounding::{find, FindContext, FindQuery, LexicalSimilarity, SimilarityProvider};
use crate::learning::{execute_template, ExecutionTrace, LearnError};
use crate::perception::{perceive, Perception, PerceptionError, Sensor};
use crate::thresholds::Thresholds;
use crate::value::Value;
use crate::world::{ObjectId, WorldState};

type V3 = Vector3<f64>;

/// Gripper lift after a pick, meters.
pub const LIFT_HEIGHT: f64 = 0.15;
/// Gap between neighbors for lateral placements.
pub const CLEARANCE: f64 = 0.02;
/// Release height above a support.
pub const DROP_HEIGHT: f64 = 0.005;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskPhase {
    #[default]
    Idle,
    Running,
    Ended,
}

/// Part of the object the jaws closed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraspRegion {
    Handle,
    Rim,
    Body,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspReport {
    pub object: ObjectId,
    pub region: GraspRegion,
    pub score: Option<f64>,
    /// Gripper pose in the object's frame.
    pub grasp_in_object: Pose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaceRelation {
    Left,
    Right,
    Front,
    Behind,
    Inside,
    Above,
}

impl PlaceRelation {
    pub const VOCABULARY: [(&'static str, PlaceRelation); 7] = [
        ("to the left", PlaceRelation::Left),
        ("to the right", PlaceRelation::Right),
        ("in front", PlaceRelation::Front),
        ("behind", PlaceRelation::Behind),
        ("inside", PlaceRelation::Inside),
        ("above", PlaceRelation::Above),
        ("on top", PlaceRelation::Above),
    ];
}

/// Executes skills against a world. Builtins either succeed or leave the
/// world as it was.
#[derive(Clone)]
pub struct Robot {
    world: WorldState,
    thresholds: Thresholds,
    sensor: Sensor,
    provider: Arc<dyn SimilarityProvider>,
    description: SceneDescription,
    perception: Option<Perception>,
    phase: TaskPhase,
    pick_offset: Option<(ObjectId, V3)>,
    last_grasp: Option<GraspReport>,
}

impl std::fmt::Debug for Robot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Robot").field("phase", &self.phase).field("objects", &self.world.len()).finish()
    }
}

fn perception_error(e: PerceptionError) -> SkillError {
    match e {
        PerceptionError::World(w) => w.into(),
        other => SkillError::InvalidArgument(other.to_string()),
    }
}

impl Robot {
    pub fn new(world: WorldState) -> Self {
        Self {
            world,
            thresholds: Thresholds::default(),
            sensor: Sensor::default(),
            provider: Arc::new(LexicalSimilarity),
            description: SceneDescription::default(),
            perception: None,
            phase: TaskPhase::Idle,
            pick_offset: None,
            last_grasp: None,
        }
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Self {
        self.thresholds = thresholds;
        self.perception = None;
        self
    }

    pub fn with_sensor(mut self, sensor: Sensor) -> Self {
        self.sensor = sensor;
        self.perception = None;
        self
    }

    pub fn with_provider(mut self, provider: Arc<dyn SimilarityProvider>) -> Self {
        self.provider = provider;
        self
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    /// Direct world access; cached perception is dropped.
    pub fn world_mut(&mut self) -> &mut WorldState {
        self.perception = None;
        &mut self.world
    }

    pub fn into_world(self) -> WorldState {
        self.world
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn phase(&self) -> TaskPhase {
        self.phase
    }

    /// Back to the idle phase for a fresh task (after a failure or replan).
    pub fn reset_phase(&mut self) {
        self.phase = TaskPhase::Idle;
    }

    pub fn last_grasp(&self) -> Option<&GraspReport> {
        self.last_grasp.as_ref()
    }

    pub fn description(&self) -> &SceneDescription {
        &self.description
    }

    /// Names the planner was told; `find` matches labels against them.
    pub fn set_description(&mut self, desc: SceneDescription) {
        self.description = desc;
    }

    pub fn perception(&mut self) -> Result<&Perception, SkillError> {
        if self.perception.is_none() {
            let p = perceive(&self.world, &self.sensor, &self.thresholds).map_err(perception_error)?;
            self.perception = Some(p);
        }
        Ok(self.perception.as_ref().expect("just computed"))
    }

    /// Perceives and describes the scene, keeping the description's names
    /// for later `find` calls.
    pub fn describe(&mut self, grounded: bool) -> Result<(SceneGraph, SceneDescription), SkillError> {
        let (g, d) = describe_perception(self.perception()?, grounded);
        self.description = d.clone();
        Ok((g, d))
    }

    fn require_running(&self, name: &str) -> Result<(), SkillError> {
        match self.phase {
            TaskPhase::Running => Ok(()),
            TaskPhase::Idle => Err(SkillError::OutOfOrder(format!("{name} called before start_task"))),
            TaskPhase::Ended => Err(SkillError::OutOfOrder(format!("{name} called after end_task"))),
        }
    }

    fn check_object(&self, id: ObjectId) -> Result<(), SkillError> {
        self.world.object(id).map(|_| ()).map_err(SkillError::from)
    }

    pub fn start_task(&mut self) -> Result<(), SkillError> {
        if self.phase == TaskPhase::Running {
            return Err(SkillError::OutOfOrder("start_task called twice".into()));
        }
        self.phase = TaskPhase::Running;
        Ok(())
    }

    pub fn end_task(&mut self) -> Result<(), SkillError> {
        self.require_running("end_task")?;
        self.phase = TaskPhase::Ended;
        Ok(())
    }

    pub fn get_all_object_ids(&mut self) -> Result<Vec<ObjectId>, SkillError> {
        self.require_running("get_all_object_ids")?;
        let mut ids = self.perception()?.ids();
        ids.sort();
        Ok(ids)
    }

    pub fn get_container_id(&mut self, id: ObjectId) -> Result<Option<ObjectId>, SkillError> {
        self.require_running("get_container_id")?;
        self.check_object(id)?;
        Ok(self.perception()?.relations.container_of(id))
    }

    pub fn get_objects_contained_and_over(&mut self, id: ObjectId) -> Result<Vec<ObjectId>, SkillError> {
        self.require_running("get_objects_contained_and_over")?;
        self.check_object(id)?;
        let mut v = self.perception()?.relations.contents_and_over(id);
        v.sort();
        Ok(v)
    }

    pub fn find(&mut self, query: &FindQuery) -> Result<ObjectId, SkillError> {
        self.require_running("find")?;
        self.perception()?;
        let p = self.perception.as_ref().expect("perceived");
        let ctx = FindContext {
            infos: &p.infos,
            relations: &p.relations,
            description: &self.description,
            thresholds: &self.thresholds,
            provider: self.provider.as_ref(),
        };
        Ok(find(query, &ctx)?)
    }

    fn location_of(&mut self, id: ObjectId) -> Result<V3, SkillError> {
        self.check_object(id)?;
        let fallback = self.world.object(id)?.pose.position;
        Ok(self.perception()?.info(id).map(|i| i.centroid).unwrap_or(fallback))
    }

    pub fn get_location(&mut self, id: ObjectId) -> Result<[f64; 3], SkillError> {
        self.require_running("get_location")?;
        Ok(self.location_of(id)?.into())
    }

    fn region_of(&self, id: ObjectId, grasp_in_object: &Pose) -> GraspRegion {
        let Ok(obj) = self.world.object(id) else { return GraspRegion::Body };
        let c = grasp_in_object.position;
        let solids = obj.shape.solids();
        let nearest = (0..solids.len()).min_by(|&a, &b| solids[a].sdf(&c).total_cmp(&solids[b].sdf(&c)));
        match (nearest, obj.shape.handle_solid(), obj.shape.cavity()) {
            (Some(k), Some(h), _) if k == h => GraspRegion::Handle,
            (Some(k), _, Some(_)) if (1..=4).contains(&k) => GraspRegion::Rim,
            _ => GraspRegion::Body,
        }
    }

    pub fn pick(&mut self, id: ObjectId) -> Result<(), SkillError> {
        self.require_running("pick")?;
        if let Some(h) = self.world.held() {
            return Err(SkillError::GripperOccupied(h.object));
        }
        self.check_object(id)?;
        let info = self.perception()?.info(id).cloned().ok_or(SkillError::NoGraspFound(id))?;
        let threshold = self.thresholds.grasp;
        let chosen = sample_grasps(&info.cloud)
            .into_iter()
            .take_while(|g| g.score >= threshold)
            .take(400)
            .find(|g| !gripper_collides(&self.world, &g.pose, g.width + OPEN_MARGIN, &[]));
        let g = chosen.ok_or(SkillError::NoGraspFound(id))?;
        let obj_pose = self.world.object(id)?.pose;
        let grasp_in_object = obj_pose.inverse().compose(&g.pose);
        self.world.attach(id, grasp_in_object)?;
        self.world.move_gripper(g.pose.translated(&V3::new(0.0, 0.0, LIFT_HEIGHT)));
        self.perception = None;
        self.pick_offset = Some((id, obj_pose.position - info.centroid));
        self.last_grasp =
            Some(GraspReport { object: id, region: self.region_of(id, &grasp_in_object), score: Some(g.score), grasp_in_object });
        Ok(())
    }

    /// Best vocabulary entry for a placement phrase.
    pub fn match_relation(&self, description: &str) -> Result<PlaceRelation, SkillError> {
        let mut best: Option<(f64, PlaceRelation)> = None;
        for (phrase, rel) in PlaceRelation::VOCABULARY {
            let s = self.provider.score(description, phrase)?;
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, rel));
            }
        }
        match best {
            Some((s, rel)) if s >= self.thresholds.place_desc => Ok(rel),
            _ => Err(SkillError::UnknownRelation(description.to_string())),
        }
    }

    fn half_extents(&mut self, id: ObjectId) -> Result<V3, SkillError> {
        if let Some(i) = self.perception()?.info(id) {
            return Ok(i.half_extents());
        }
        let polys = self.world.object(id)?.polytopes();
        let (mut lo, mut hi) = polys[0].aabb();
        for p in &polys[1..] {
            let (a, b) = p.aabb();
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        Ok((hi - lo) / 2.0)
    }

    pub fn get_place_position(&mut self, id: ObjectId, reference: ObjectId, description: &str) -> Result<[f64; 3], SkillError> {
        self.require_running("get_place_position")?;
        self.check_object(id)?;
        self.check_object(reference)?;
        let rel = self.match_relation(description)?;
        let oh = self.half_extents(id)?;
        let rh = self.half_extents(reference)?;
        let rc = self.location_of(reference)?;
        let top = |me: &mut Self| -> Result<f64, SkillError> {
            Ok(me.perception()?.info(reference).map(|i| i.z_range().1).unwrap_or(rc.z + rh.z))
        };
        let p = match rel {
            PlaceRelation::Left | PlaceRelation::Right | PlaceRelation::Front | PlaceRelation::Behind => {
                lateral_place_position(rel, rc, rh, oh)
            }
            PlaceRelation::Inside => {
                let r = self.world.object(reference)?;
                match r.shape.cavity() {
                    Some(c) => {
                        let floor = r.pose.transform_point(&V3::new(0.0, 0.0, c.floor_z));
                        V3::new(floor.x, floor.y, floor.z + oh.z + DROP_HEIGHT)
                    }
                    None => V3::new(rc.x, rc.y, top(self)? + oh.z + DROP_HEIGHT),
                }
            }
            PlaceRelation::Above => V3::new(rc.x, rc.y, top(self)? + oh.z + DROP_HEIGHT),
        };
        Ok(p.into())
    }

    pub fn place(&mut self, id: ObjectId, position: [f64; 3]) -> Result<(), SkillError> {
        self.require_running("place")?;
        self.check_object(id)?;
        let held = self.world.held().map(|h| h.object).ok_or(SkillError::NothingHeld)?;
        if held != id {
            return Err(SkillError::NotHeld(id));
        }
        let offset = match self.pick_offset {
            Some((o, off)) if o == id => off,
            _ => V3::zeros(),
        };
        let target = V3::from(position) + offset;
        self.world.detach_and_settle(target)?;
        self.perception = None;
        self.pick_offset = None;
        Ok(())
    }

    /// Runs a learned skill. The world is only changed when every keyframe
    /// executes.
    pub fn run_learned(&mut self, record: &SkillRecord, objects: &[ObjectId]) -> Result<ExecutionTrace, SkillError> {
        self.require_running(&record.name)?;
        let model = record.template.as_ref().ok_or_else(|| SkillError::UnknownSkill(record.name.clone()))?;
        if objects.len() != model.arity {
            return Err(LearnError::ArityMismatch { expected: model.arity, found: objects.len() }.into());
        }
        for id in objects {
            self.check_object(*id)?;
        }
        let a = objects[0];
        let centroid = self.perception()?.info(a).map(|i| i.centroid);
        let before = self.world.object(a)?.pose;
        let was_held = self.world.held().map(|h| h.object);
        let mut trial = self.world.clone();
        match execute_template(model, &mut trial, a, objects.get(1).copied()) {
            Ok(trace) => {
                self.world = trial;
                self.perception = None;
                if let Some(g) = trace.grasp_in_object {
                    if was_held != Some(a) {
                        self.pick_offset = Some((a, before.position - centroid.unwrap_or(before.position)));
                    }
                    self.last_grasp =
                        Some(GraspReport { object: a, region: self.region_of(a, &g), score: None, grasp_in_object: g });
                }
                if self.world.held().is_none() {
                    self.pick_offset = None;
                }
                Ok(trace)
            }
            Err(e) => {
                self.world.sync_failure_draws(&trial);
                Err(e.into())
            }
        }
    }

    /// Calls a library skill by name with plan values. `learn_skill` is not
    /// handled here; the caller owns teaching.
    pub fn call(
        &mut self,
        library: &SkillLibrary,
        name: &str,
        args: &[Value],
        kwargs: &[(String, Value)],
    ) -> Result<Value, SkillError> {
        let record = library.get(name).ok_or_else(|| SkillError::UnknownSkill(name.to_string()))?;
        let bound = bind_args(record, args, kwargs)?;
        if record.kind == SkillKind::Learned {
            let ids: Vec<ObjectId> = bound.iter().flatten().map(as_object_id).collect::<Result<_, _>>()?;
            self.run_learned(record, &ids)?;
            return Ok(Value::None);
        }
        let id = |i: usize| -> Result<ObjectId, SkillError> {
            as_object_id(bound[i].as_ref().expect("required argument bound"))
        };
        let string = |i: usize| -> Option<String> {
            match &bound[i] {
                Some(Value::Str(s)) => Some(s.clone()),
                _ => None,
            }
        };
        match name {
            "start_task" => self.start_task().map(|_| Value::None),
            "end_task" => self.end_task().map(|_| Value::None),
            "get_all_object_ids" => {
                Ok(Value::List(self.get_all_object_ids()?.into_iter().map(Value::object_id).collect()))
            }
            "get_container_id" => Ok(self.get_container_id(id(0)?)?.map(Value::object_id).unwrap_or(Value::None)),
            "get_objects_contained_and_over" => Ok(Value::List(
                self.get_objects_contained_and_over(id(0)?)?.into_iter().map(Value::object_id).collect(),
            )),
            "find" => {
                let candidates = match &bound[3] {
                    Some(Value::List(v)) => Some(v.iter().map(as_object_id).collect::<Result<Vec<_>, _>>()?),
                    _ => None,
                };
                let mut q = FindQuery { label: string(0), visual: string(1), location: string(2), candidates };
                // a lone positional phrase that describes a location is
                // also scored as one
                if q.visual.is_none() && q.location.is_none() {
                    if let Some(l) = q.label.as_ref().filter(|l| l.contains(" that ")) {
                        q.location = Some(l.clone());
                    }
                }
                Ok(Value::object_id(self.find(&q)?))
            }
            "get_location" => Ok(Value::position(self.get_location(id(0)?)?)),
            "pick" => self.pick(id(0)?).map(|_| Value::None),
            "get_place_position" => {
                let desc = string(2).unwrap_or_default();
                Ok(Value::position(self.get_place_position(id(0)?, id(1)?, &desc)?))
            }
            "place" => {
                let pos = as_position(bound[1].as_ref().expect("required argument bound"))?;
                self.place(id(0)?, pos).map(|_| Value::None)
            }
            other => Err(SkillError::UnknownSkill(other.to_string())),
        }
    }
}

/// Centroid target beside a reference: its half extent, the object's and
/// the clearance along the relation's axis, resting height above the table.
pub fn lateral_place_position(rel: PlaceRelation, ref_center: V3, ref_half: V3, obj_half: V3) -> V3 {
    let (axis, r, o) = match rel {
        PlaceRelation::Left => (-V3::x(), ref_half.x, obj_half.x),
        PlaceRelation::Right => (V3::x(), ref_half.x, obj_half.x),
        PlaceRelation::Front => (V3::y(), ref_half.y, obj_half.y),
        _ => (-V3::y(), ref_half.y, obj_half.y),
    };
    let p = ref_center + axis * (r + o + CLEARANCE);
    V3::new(p.x, p.y, obj_half.z + DROP_HEIGHT)
}

pub(crate) fn as_object_id(v: &Value) -> Result<ObjectId, SkillError> {
    match v {
        Value::Int(i) if *i >= 0 && *i <= i64::from(u32::MAX) => Ok(ObjectId(*i as u32)),
        Value::Int(i) => Err(SkillError::TypeError(format!("{i} is not an object id"))),
        other => Err(SkillError::TypeError(format!("expected an object id (int), got {}", other.type_name()))),
    }
}

fn as_position(v: &Value) -> Result<[f64; 3], SkillError> {
    match v {
        Value::List(xs) | Value::Tuple(xs) if xs.len() == 3 => {
            let mut p = [0.0; 3];
            for (k, x) in xs.iter().enumerate() {
                p[k] = x.as_f64().ok_or_else(|| SkillError::TypeError(format!("position entry {x} is not a number")))?;
            }
            Ok(p)
        }
        other => Err(SkillError::TypeError(format!("expected a 3D position, got {other}"))),
    }
}

fn check_type(name: &str, ty: ParamType, v: &Value) -> Result<(), SkillError> {
    let ok = match ty {
        ParamType::ObjectId => return as_object_id(v).map(|_| ()),
        ParamType::Position3 => return as_position(v).map(|_| ()),
        ParamType::String => matches!(v, Value::Str(_)),
        ParamType::ObjectIdList => match v {
            Value::List(xs) | Value::Tuple(xs) => xs.iter().all(|x| as_object_id(x).is_ok()),
            _ => false,
        },
    };
    if ok {
        Ok(())
    } else {
        Err(SkillError::TypeError(format!("argument {name} has the wrong type ({})", v.type_name())))
    }
}

/// Binds call arguments to a signature. `location_description` is an
/// alias of `place_description`.
pub fn bind_args(record: &SkillRecord, args: &[Value], kwargs: &[(String, Value)]) -> Result<Vec<Option<Value>>, SkillError> {
    let sig = &record.signature;
    if args.len() > sig.len() {
        return Err(SkillError::ArityError(format!(
            "{} takes at most {} arguments, got {}",
            record.name,
            sig.len(),
            args.len()
        )));
    }
    let mut bound: Vec<Option<Value>> = vec![None; sig.len()];
    for (k, a) in args.iter().enumerate() {
        bound[k] = Some(a.clone());
    }
    for (key, v) in kwargs {
        let key = if key == "location_description" { "place_description" } else { key.as_str() };
        let k = sig
            .iter()
            .position(|p| p.name == key)
            .ok_or_else(|| SkillError::ArityError(format!("{} has no argument {key}", record.name)))?;
        if bound[k].is_some() {
            return Err(SkillError::ArityError(format!("{} got {key} twice", record.name)));
        }
        bound[k] = Some(v.clone());
    }
    for (p, b) in sig.iter().zip(bound.iter_mut()) {
        if matches!(b, Some(Value::None)) && p.optional {
            *b = None;
        }
        match b {
            Some(v) => check_type(&p.name, p.ty, v)?,
            None if p.optional => {}
            None => return Err(SkillError::ArityError(format!("{} is missing argument {}", record.name, p.name))),
        }
    }
    Ok(bound)
}
