//! Object clouds from simulated views, and the pairwise spatial relations
//! between them.

mod relations;

use std::collections::BTreeMap;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{hull2d, ConvexHull3, Pose};
use crate::thresholds::Thresholds;
use crate::world::{sample_scene, ObjectId, PointCloud, WorldError, WorldState};

pub use relations::{
    classify_pair, compute_relations, directional_relation, overlap_test, Relation, RelationKind, RelationSet,
};

type V3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceptionError {
    #[error("no clouds to merge")]
    EmptyInput,
    #[error("object {0} has a degenerate top-down hull")]
    DegenerateHull(ObjectId),
    #[error("objects {0} and {1} have coincident centroids")]
    CoincidentCentroids(ObjectId, ObjectId),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Running sums for the mean per-axis standard deviation of a cloud.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    sum: V3,
    sq: V3,
}

impl Moments {
    fn of(c: &PointCloud) -> Self {
        let mut m = Moments::default();
        for p in &c.points {
            m.n += 1.0;
            m.sum += p;
            m.sq += p.component_mul(p);
        }
        m
    }

    fn union(&self, o: &Moments) -> Moments {
        Moments { n: self.n + o.n, sum: self.sum + o.sum, sq: self.sq + o.sq }
    }

    fn sigma(&self) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        let mean = self.sum / self.n;
        let var = self.sq / self.n - mean.component_mul(&mean);
        var.iter().map(|v| v.max(0.0).sqrt()).sum::<f64>() / 3.0
    }
}

/// Mean of the per-axis (population) standard deviations, in meters.
pub fn cloud_sigma(c: &PointCloud) -> f64 {
    Moments::of(c).sigma()
}

/// Greedy pairwise merge: the first pair (in input order) whose union
/// changes the spread by less than `threshold` is merged, until no pair
/// qualifies. Clouds that never merge stay separate. Empty clouds are
/// dropped.
pub fn merge_view_clouds(clouds: &[PointCloud], threshold: f64) -> Result<Vec<PointCloud>, PerceptionError> {
    if clouds.is_empty() {
        return Err(PerceptionError::EmptyInput);
    }
    let mut parts: Vec<(PointCloud, Moments)> =
        clouds.iter().filter(|c| !c.is_empty()).map(|c| (c.clone(), Moments::of(c))).collect();
    'outer: loop {
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let (mi, mj) = (parts[i].1, parts[j].1);
                let change = (mi.union(&mj).sigma() - mi.sigma().max(mj.sigma())).abs();
                if change < threshold {
                    let (cj, _) = parts.remove(j);
                    parts[i].0.extend(&cj);
                    parts[i].1 = mi.union(&mj);
                    continue 'outer;
                }
            }
        }
        break;
    }
    Ok(parts.into_iter().map(|(c, _)| c).collect())
}

/// A perceived object: its merged cloud, hulls and descriptors.
#[derive(Clone, Debug)]
pub struct ObjectInfo {
    pub id: ObjectId,
    pub label: String,
    pub attributes: Vec<String>,
    pub cloud: PointCloud,
    pub centroid: V3,
    pub hull: ConvexHull3,
    /// Counter-clockwise top-down hull.
    pub footprint: Vec<Vector2<f64>>,
}

impl ObjectInfo {
    pub fn new(id: ObjectId, label: &str, attributes: Vec<String>, cloud: PointCloud) -> Self {
        let centroid = cloud.centroid().unwrap_or_else(V3::zeros);
        let hull = ConvexHull3::build(&cloud.points);
        let xy: Vec<Vector2<f64>> = cloud.points.iter().map(|p| p.xy()).collect();
        let footprint = hull2d::convex_hull(&xy);
        Self { id, label: label.to_string(), attributes, cloud, centroid, hull, footprint }
    }

    /// Vertical extent of the hull.
    pub fn z_range(&self) -> (f64, f64) {
        self.hull.z_extent().unwrap_or((self.centroid.z, self.centroid.z))
    }

    /// Half extents of the cloud's axis-aligned box.
    pub fn half_extents(&self) -> V3 {
        self.cloud.aabb().map(|(lo, hi)| (hi - lo) / 2.0).unwrap_or_else(V3::zeros)
    }

    pub fn aabb_center(&self) -> V3 {
        self.cloud.aabb().map(|(lo, hi)| (lo + hi) / 2.0).unwrap_or(self.centroid)
    }
}

/// Perception output for one moment in time.
#[derive(Clone, Debug, Default)]
pub struct Perception {
    pub infos: Vec<ObjectInfo>,
    pub relations: RelationSet,
}

impl Perception {
    pub fn info(&self, id: ObjectId) -> Option<&ObjectInfo> {
        self.infos.iter().find(|i| i.id == id)
    }

    pub fn ids(&self) -> Vec<ObjectId> {
        self.infos.iter().map(|i| i.id).collect()
    }
}

/// Camera and sampling setup for perception.
#[derive(Clone, Debug)]
pub struct Sensor {
    pub views: Vec<Pose>,
    pub density: f64,
}

impl Default for Sensor {
    fn default() -> Self {
        Self { views: crate::world::default_views(), density: crate::world::DEFAULT_DENSITY }
    }
}

/// Samples every view, merges per-object clouds and computes relations.
/// Objects below the detection threshold or not visible at all are left
/// out.
pub fn perceive(world: &WorldState, sensor: &Sensor, thresholds: &Thresholds) -> Result<Perception, PerceptionError> {
    let scene = sample_scene(world, &sensor.views, sensor.density)?;
    let mut infos = vec![];
    let mut by_id: BTreeMap<ObjectId, PointCloud> = BTreeMap::new();
    for (id, clouds) in scene {
        let obj = world.object(id)?;
        if obj.detection_confidence < thresholds.detection {
            continue;
        }
        let merged = merge_view_clouds(&clouds, thresholds.pcd_merge)?;
        // fragments share a ground-truth segment, so they remain one object
        let mut cloud = PointCloud::default();
        for m in &merged {
            cloud.extend(m);
        }
        if cloud.is_empty() {
            continue;
        }
        by_id.insert(id, cloud);
    }
    for (id, cloud) in by_id {
        let obj = world.object(id)?;
        infos.push(ObjectInfo::new(id, &obj.label, obj.attributes.iter().cloned().collect(), cloud));
    }
    let relations = compute_relations(&infos, thresholds);
    Ok(Perception { infos, relations })
}

/// Serializable per-object summary (used in state documents).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSummary {
    pub id: ObjectId,
    pub label: String,
    pub centroid: [f64; 3],
    pub points: usize,
}

impl From<&ObjectInfo> for ObjectSummary {
    fn from(i: &ObjectInfo) -> Self {
        let r = crate::geometry::pose::round6;
        Self { id: i.id, label: i.label.clone(), centroid: [r(i.centroid.x), r(i.centroid.y), r(i.centroid.z)], points: i.cloud.len() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Solid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cube_cloud(center: V3, edge: f64, seed: u64) -> PointCloud {
        let s = Solid::Cuboid { center, half: V3::repeat(edge / 2.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = PointCloud::default();
        for (p, n) in s.sample_surface(&mut rng, 200_000.0) {
            c.push(p, n, 0);
        }
        c
    }

    fn split(c: &PointCloud, pred: impl Fn(&V3) -> bool) -> (PointCloud, PointCloud) {
        let (mut a, mut b) = (PointCloud::default(), PointCloud::default());
        for i in 0..c.len() {
            let t = if pred(&c.points[i]) { &mut a } else { &mut b };
            t.push(c.points[i], c.normals[i], c.views[i]);
        }
        (a, b)
    }

    #[test]
    fn halves_of_one_cube_merge() {
        let c = cube_cloud(V3::zeros(), 0.05, 1);
        let (a, b) = split(&c, |p| p.x < 0.0);
        // oracle: spread of the halves vs the whole, straight from the definition
        let change = cloud_sigma(&c) - cloud_sigma(&a).max(cloud_sigma(&b));
        assert!(change.abs() < 0.03);
        let merged = merge_view_clouds(&[a, b], 0.03).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!(merged[0].len(), c.len());
    }

    #[test]
    fn distant_cubes_stay_apart() {
        let a = cube_cloud(V3::zeros(), 0.05, 1);
        let b = cube_cloud(V3::new(0.5, 0.0, 0.0), 0.05, 2);
        let mut u = a.clone();
        u.extend(&b);
        // x-spread of two clusters 0.5 apart is 0.25, averaged over 3 axes
        assert!(cloud_sigma(&u) - cloud_sigma(&a) > 0.03);
        assert_eq!(merge_view_clouds(&[a, b], 0.03).unwrap().len(), 2);
    }

    #[test]
    fn single_and_empty_inputs() {
        let a = cube_cloud(V3::zeros(), 0.05, 3);
        assert_eq!(merge_view_clouds(std::slice::from_ref(&a), 0.03).unwrap(), vec![a]);
        assert_eq!(merge_view_clouds(&[], 0.03), Err(PerceptionError::EmptyInput));
    }
}
