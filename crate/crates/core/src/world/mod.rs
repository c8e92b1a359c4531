//! Deterministic kinematic tabletop world: rigid objects resting on a
//! table, a gripper that carries one object at a time, quasi-static
//! settling along −z, and seeded failure injection.

pub mod sampling;
pub mod shape;
pub mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::hull2d;
use crate::geometry::polytope::{drop_interval, penetration};
use crate::geometry::{ConvexPolytope, Pose};

pub use sampling::{default_views, look_at, sample_point_cloud, sample_scene, PointCloud, DEFAULT_DENSITY};
pub use shape::{Cavity, Handle, Shape};

type V3 = Vector3<f64>;

/// Interpenetration tolerated between free objects, meters.
pub const PENETRATION_TOL: f64 = 1e-4;
/// Fraction of a footprint that must hang over a cavity for a rim landing
/// to slide into the cavity.
pub const CAVITY_FOOTPRINT_FRACTION: f64 = 0.6;
const TABLE_THICKNESS: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(pub u32);

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("object collides with the scene at spawn")]
    CollisionAtSpawn,
    #[error("object footprint lies outside the table")]
    OutOfTableBounds,
    #[error("unknown object {0}")]
    UnknownObject(ObjectId),
    #[error("gripper is already holding object {0}")]
    GripperOccupied(ObjectId),
    #[error("gripper is not holding anything")]
    NothingHeld,
    #[error("target position puts the object outside the table")]
    TargetOutOfBounds,
    #[error("object slipped out of the gripper")]
    GraspSlipped,
    #[error("object toppled while being placed")]
    PlaceToppled,
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("at least one view is required")]
    NoViews,
    #[error("invalid scene document: {0}")]
    InvalidDocument(String),
}

/// What an object needs in order to be spawned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub label: String,
    pub shape: Shape,
    pub pose: Pose,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_confidence: Option<f64>,
}

impl ObjectSpec {
    pub fn new(label: &str, shape: Shape, x: f64, y: f64) -> Self {
        Self {
            label: label.to_string(),
            shape,
            pose: Pose::from_translation(x, y, 0.0),
            attributes: vec![],
            detection_confidence: None,
        }
    }

    pub fn yaw(mut self, yaw: f64) -> Self {
        self.pose.orientation = UnitQuaternion::from_axis_angle(&V3::z_axis(), yaw);
        self
    }

    pub fn pose(mut self, pose: Pose) -> Self {
        self.pose = pose;
        self
    }

    pub fn with_attributes(mut self, attrs: &[&str]) -> Self {
        self.attributes = attrs.iter().map(|s| s.to_string()).collect();
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RigidObject {
    pub id: ObjectId,
    pub label: String,
    pub pose: Pose,
    pub shape: Shape,
    pub attributes: BTreeSet<String>,
    pub detection_confidence: f64,
}

impl RigidObject {
    /// World-frame convex pieces, in the order of `Shape::solids`.
    pub fn polytopes(&self) -> Vec<ConvexPolytope> {
        self.shape.solids().iter().map(|s| s.polytope().transformed(&self.pose)).collect()
    }

    pub fn is_upright(&self) -> bool {
        self.pose.up_axis().z > 0.9
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableBounds {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Default for TableBounds {
    fn default() -> Self {
        Self { x: [-0.6, 0.6], y: [-0.45, 0.45] }
    }
}

impl TableBounds {
    pub fn contains_box(&self, lo: &V3, hi: &V3) -> bool {
        const EPS: f64 = 1e-9;
        lo.x >= self.x[0] - EPS && hi.x <= self.x[1] + EPS && lo.y >= self.y[0] - EPS && hi.y <= self.y[1] + EPS
    }

    pub fn polytope(&self) -> ConvexPolytope {
        let center = V3::new(
            (self.x[0] + self.x[1]) / 2.0,
            (self.y[0] + self.y[1]) / 2.0,
            -TABLE_THICKNESS / 2.0,
        );
        let half = V3::new((self.x[1] - self.x[0]) / 2.0, (self.y[1] - self.y[0]) / 2.0, TABLE_THICKNESS / 2.0);
        ConvexPolytope::cuboid(center, half)
    }
}

/// An object carried along with the held one (resting on or inside it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rider {
    pub object: ObjectId,
    /// Rider pose in the held object's frame.
    pub relative: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Held {
    pub object: ObjectId,
    /// Object pose in the gripper frame: `object = gripper ∘ grasp`.
    pub grasp: Pose,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub riders: Vec<Rider>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    pub pose: Pose,
    pub held: Option<Held>,
}

impl Gripper {
    /// Parked above the table center, fingers pointing down.
    pub fn home() -> Self {
        Self {
            pose: Pose::from_axis_angle(V3::new(0.0, 0.0, 0.5), V3::x(), std::f64::consts::PI),
            held: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    GraspSlip,
    PlaceTopple,
}

/// What a settled object came to rest on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Support {
    Table,
    Object { id: ObjectId, solid: usize },
}

#[derive(Clone, Debug)]
pub struct WorldState {
    seed: u64,
    table: TableBounds,
    objects: BTreeMap<ObjectId, RigidObject>,
    gripper: Gripper,
    grasp_slip: f64,
    place_topple: f64,
    draws: u64,
    next_id: u32,
}

impl WorldState {
    pub fn new(seed: u64) -> Self {
        Self::with_table(seed, TableBounds::default())
    }

    pub fn with_table(seed: u64, table: TableBounds) -> Self {
        Self {
            seed,
            table,
            objects: BTreeMap::new(),
            gripper: Gripper::home(),
            grasp_slip: 0.0,
            place_topple: 0.0,
            draws: 0,
            next_id: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Reseeds failure draws, restarting the draw sequence.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.draws = 0;
    }

    pub fn table(&self) -> TableBounds {
        self.table
    }

    pub fn gripper(&self) -> &Gripper {
        &self.gripper
    }

    pub fn held(&self) -> Option<&Held> {
        self.gripper.held.as_ref()
    }

    pub fn object(&self, id: ObjectId) -> Result<&RigidObject, WorldError> {
        self.objects.get(&id).ok_or(WorldError::UnknownObject(id))
    }

    pub fn objects(&self) -> impl Iterator<Item = &RigidObject> {
        self.objects.values()
    }

    pub fn object_ids(&self) -> Vec<ObjectId> {
        self.objects.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Ids moving with the gripper: the held object followed by its riders.
    pub fn carried(&self) -> Vec<ObjectId> {
        match &self.gripper.held {
            Some(h) => std::iter::once(h.object).chain(h.riders.iter().map(|r| r.object)).collect(),
            None => vec![],
        }
    }

    pub fn inject_failure(&mut self, kind: FailureKind, probability: f64) -> Result<(), WorldError> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(WorldError::InvalidProbability(probability));
        }
        match kind {
            FailureKind::GraspSlip => self.grasp_slip = probability,
            FailureKind::PlaceTopple => self.place_topple = probability,
        }
        Ok(())
    }

    pub fn failure_probability(&self, kind: FailureKind) -> f64 {
        match kind {
            FailureKind::GraspSlip => self.grasp_slip,
            FailureKind::PlaceTopple => self.place_topple,
        }
    }

    /// Adopts `other`'s failure-draw counter, so draws made on a
    /// discarded copy of this world are not repeated.
    pub fn sync_failure_draws(&mut self, other: &WorldState) {
        self.draws = self.draws.max(other.draws);
    }

    fn draw_failure(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_word_pos(u128::from(self.draws) * 2);
        self.draws += 1;
        rng.random::<f64>() < p
    }

    pub fn spawn_object(&mut self, spec: ObjectSpec, settle: bool) -> Result<ObjectId, WorldError> {
        spec.shape.validate()?;
        let id = ObjectId(self.next_id);
        let obj = RigidObject {
            id,
            label: spec.label.trim().to_lowercase(),
            pose: spec.pose,
            shape: spec.shape,
            attributes: spec.attributes.iter().map(|a| a.trim().to_lowercase()).collect(),
            detection_confidence: spec.detection_confidence.unwrap_or(1.0),
        };
        let polys = obj.polytopes();
        let (lo, hi) = aabb_of(&polys);
        if !self.table.contains_box(&lo, &hi) {
            return Err(WorldError::OutOfTableBounds);
        }
        let mut obj = obj;
        if settle {
            let top = self
                .objects
                .values()
                .flat_map(|o| o.polytopes())
                .map(|p| p.aabb().1.z)
                .fold(0.0, f64::max);
            obj.pose.position.z += top + 0.01 - lo.z;
        } else {
            let table = self.table.polytope();
            let others: Vec<ConvexPolytope> = self.objects.values().flat_map(|o| o.polytopes()).collect();
            for p in &polys {
                if penetration(p, &table) > PENETRATION_TOL
                    || others.iter().any(|q| penetration(p, q) > PENETRATION_TOL)
                {
                    return Err(WorldError::CollisionAtSpawn);
                }
            }
        }
        self.objects.insert(id, obj);
        self.next_id += 1;
        self.settle(&[id], &[])?;
        Ok(id)
    }

    /// Inserts an object verbatim (used when loading documents).
    pub(crate) fn insert_raw(&mut self, obj: RigidObject) {
        self.next_id = self.next_id.max(obj.id.0 + 1);
        self.objects.insert(obj.id, obj);
    }

    pub(crate) fn set_gripper_raw(&mut self, gripper: Gripper) {
        self.gripper = gripper;
    }

    /// Grasps `object` with the gripper placed at `grasp` (gripper pose in
    /// the object frame). Objects resting on or inside it become riders.
    pub fn attach(&mut self, object: ObjectId, grasp: Pose) -> Result<(), WorldError> {
        if let Some(h) = &self.gripper.held {
            return Err(WorldError::GripperOccupied(h.object));
        }
        let obj_pose = self.object(object)?.pose;
        if self.draw_failure(self.grasp_slip) {
            return Err(WorldError::GraspSlipped);
        }
        let riders = self
            .riders_of(object)
            .into_iter()
            .map(|r| Rider { object: r, relative: obj_pose.inverse().compose(&self.objects[&r].pose) })
            .collect();
        self.gripper.pose = obj_pose.compose(&grasp);
        self.gripper.held = Some(Held { object, grasp: grasp.inverse(), riders });
        Ok(())
    }

    /// Objects transitively resting on `base`.
    pub fn riders_of(&self, base: ObjectId) -> Vec<ObjectId> {
        let mut found: Vec<ObjectId> = vec![];
        let mut frontier = vec![base];
        while let Some(b) = frontier.pop() {
            let b_polys = self.objects[&b].polytopes();
            for (id, o) in &self.objects {
                if *id == base || found.contains(id) {
                    continue;
                }
                if rest_gap(&o.polytopes(), &b_polys).is_some_and(|g| g.abs() <= PENETRATION_TOL) {
                    found.push(*id);
                    frontier.push(*id);
                }
            }
        }
        found.sort();
        found
    }

    /// Moves the gripper; a held object and its riders follow rigidly.
    /// Riders of a container turned past horizontal fall out through the
    /// opening and settle below it.
    pub fn move_gripper(&mut self, pose: Pose) {
        self.gripper.pose = pose;
        let Some(held) = self.gripper.held.clone() else { return };
        let obj_pose = pose.compose(&held.grasp);
        self.objects.get_mut(&held.object).unwrap().pose = obj_pose;
        for r in &held.riders {
            self.objects.get_mut(&r.object).unwrap().pose = obj_pose.compose(&r.relative);
        }
        let container = &self.objects[&held.object];
        if held.riders.is_empty() || container.pose.up_axis().z > 0.0 {
            return;
        }
        let Some(cavity) = container.shape.cavity() else { return };
        let opening = container.pose.transform_point(&V3::new(0.0, 0.0, cavity.top_z));
        if let Some(h) = self.gripper.held.as_mut() {
            h.riders.clear();
        }
        for r in &held.riders {
            let o = self.objects.get_mut(&r.object).unwrap();
            o.pose.position = V3::new(opening.x, opening.y, opening.z.max(0.0));
            let (lo, _) = aabb_of(&self.objects[&r.object].polytopes());
            if lo.z < 0.0 {
                self.objects.get_mut(&r.object).unwrap().pose.position.z -= lo.z;
            }
            // a spill over empty floor space still has the table below
            let _ = self.settle(&[r.object], &[held.object]);
        }
    }

    /// Opens the gripper with the held object's origin at `target`, drops
    /// it along −z to its first support and returns its resting pose.
    pub fn detach_and_settle(&mut self, target: V3) -> Result<Pose, WorldError> {
        let held = self.gripper.held.clone().ok_or(WorldError::NothingHeld)?;
        let obj = &self.objects[&held.object];
        let delta = target - obj.pose.position;
        let (lo, hi) = aabb_of(&obj.polytopes());
        if !self.table.contains_box(&(lo + delta), &(hi + delta)) {
            return Err(WorldError::TargetOutOfBounds);
        }
        if self.draw_failure(self.place_topple) {
            return Err(WorldError::PlaceToppled);
        }
        let group = self.carried();
        for id in &group {
            self.objects.get_mut(id).unwrap().pose.position += delta;
        }
        self.settle(&group, &[])?;
        let pose = self.objects[&held.object].pose;
        self.gripper.pose = pose.compose(&held.grasp.inverse());
        self.gripper.held = None;
        Ok(pose)
    }

    /// Drops `group` (first id is the primary) along −z onto the first
    /// support, excluding `ignore` from the obstacles, then applies the
    /// cavity rule once.
    fn settle(&mut self, group: &[ObjectId], ignore: &[ObjectId]) -> Result<Support, WorldError> {
        let support = self.drop_group(group, ignore)?;
        if let Support::Object { id, solid } = support {
            let container = &self.objects[&id];
            let on_wall = (1..=4).contains(&solid);
            if let (true, true, Some(cavity)) = (on_wall, container.is_upright(), container.shape.cavity()) {
                let frame = container.pose;
                let local: Vec<Vector2<f64>> = self.objects[&group[0]]
                    .polytopes()
                    .iter()
                    .flat_map(|p| p.vertices.iter().map(|v| frame.inverse_transform_point(v).xy()).collect::<Vec<_>>())
                    .collect();
                let foot = hull2d::convex_hull(&local);
                let rect = hull2d::rect(-cavity.half_xy, cavity.half_xy);
                let area = hull2d::area(&foot);
                if area > 0.0 && hull2d::area(&hull2d::clip(&foot, &rect)) / area >= CAVITY_FOOTPRINT_FRACTION {
                    let (mut flo, mut fhi) = (local[0], local[0]);
                    for p in &local {
                        flo = flo.inf(p);
                        fhi = fhi.sup(p);
                    }
                    let c = (flo + fhi) / 2.0;
                    let shift = frame.transform_vector(&V3::new(-c.x, -c.y, 0.0));
                    for g in group {
                        self.objects.get_mut(g).unwrap().pose.position += V3::new(shift.x, shift.y, 0.0);
                    }
                    return self.drop_group(group, ignore);
                }
            }
        }
        Ok(support)
    }

    fn drop_group(&mut self, group: &[ObjectId], ignore: &[ObjectId]) -> Result<Support, WorldError> {
        let moving: Vec<ConvexPolytope> = group.iter().flat_map(|g| self.objects[g].polytopes()).collect();
        let mut best: Option<(f64, Support)> = None;
        let mut consider = |fixed: &ConvexPolytope, support: Support| {
            for m in &moving {
                if let Some((t0, t1)) = drop_interval(m, fixed) {
                    if t1 > 1e-9 && best.is_none_or(|(b, _)| t0 < b - 1e-12) {
                        best = Some((t0, support));
                    }
                }
            }
        };
        consider(&self.table.polytope(), Support::Table);
        for (id, o) in &self.objects {
            if group.contains(id) || ignore.contains(id) {
                continue;
            }
            for (k, p) in o.polytopes().iter().enumerate() {
                consider(p, Support::Object { id: *id, solid: k });
            }
        }
        let (gap, support) = best.ok_or(WorldError::TargetOutOfBounds)?;
        for g in group {
            self.objects.get_mut(g).unwrap().pose.position.z -= gap;
        }
        Ok(support)
    }

    /// Objects not carried by the gripper.
    pub fn free_objects(&self) -> Vec<ObjectId> {
        let carried = self.carried();
        self.objects.keys().copied().filter(|id| !carried.contains(id)).collect()
    }

    /// Free objects hovering more than the tolerance above every support.
    pub fn unsupported_objects(&self) -> Vec<ObjectId> {
        let table = vec![self.table.polytope()];
        let mut out = vec![];
        for id in self.free_objects() {
            let polys = self.objects[&id].polytopes();
            let mut gap = rest_gap(&polys, &table);
            for (other, o) in &self.objects {
                if *other == id {
                    continue;
                }
                if let Some(g) = rest_gap(&polys, &o.polytopes()) {
                    gap = Some(gap.map_or(g, |x| x.min(g)));
                }
            }
            if gap.is_none_or(|g| g > PENETRATION_TOL) {
                out.push(id);
            }
        }
        out
    }

    /// Largest pairwise penetration depth between distinct objects.
    pub fn max_interpenetration(&self) -> f64 {
        let polys: Vec<(ObjectId, Vec<ConvexPolytope>)> =
            self.objects.iter().map(|(id, o)| (*id, o.polytopes())).collect();
        let mut worst: f64 = 0.0;
        for i in 0..polys.len() {
            for j in i + 1..polys.len() {
                for a in &polys[i].1 {
                    for b in &polys[j].1 {
                        worst = worst.max(penetration(a, b));
                    }
                }
            }
        }
        worst
    }
}

fn aabb_of(polys: &[ConvexPolytope]) -> (V3, V3) {
    let mut lo = V3::repeat(f64::INFINITY);
    let mut hi = V3::repeat(f64::NEG_INFINITY);
    for p in polys {
        let (a, b) = p.aabb();
        lo = lo.inf(&a);
        hi = hi.sup(&b);
    }
    (lo, hi)
}

/// Free drop distance of `moving` onto `fixed`, ignoring bodies above it.
fn rest_gap(moving: &[ConvexPolytope], fixed: &[ConvexPolytope]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for m in moving {
        for f in fixed {
            if let Some((t0, t1)) = drop_interval(m, f) {
                if t1 > 1e-9 {
                    best = Some(best.map_or(t0, |b| b.min(t0)));
                }
            }
        }
    }
    best
}
