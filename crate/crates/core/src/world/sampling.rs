use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Solid};

use super::{ObjectId, WorldError, WorldState};

type V3 = Vector3<f64>;

/// Surface samples per square meter used by default.
pub const DEFAULT_DENSITY: f64 = 15_000.0;
/// Angular cell of the per-view depth buffer, degrees.
pub const ANGULAR_CELL_DEG: f64 = 0.2;

/// Points seen by one or more cameras, with outward surface normals and
/// the index of the view each point came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<V3>,
    pub normals: Vec<V3>,
    pub views: Vec<usize>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: V3, n: V3, view: usize) {
        self.points.push(p);
        self.normals.push(n);
        self.views.push(view);
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
        self.normals.extend_from_slice(&other.normals);
        self.views.extend_from_slice(&other.views);
    }

    pub fn centroid(&self) -> Option<V3> {
        (!self.points.is_empty()).then(|| self.points.iter().sum::<V3>() / self.points.len() as f64)
    }

    pub fn aabb(&self) -> Option<(V3, V3)> {
        let first = *self.points.first()?;
        Some(self.points.iter().fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p))))
    }
}

/// Camera pose at `eye` whose +z axis points at `target` and whose +x axis
/// stays horizontal.
pub fn look_at(eye: V3, target: V3) -> Pose {
    let z = (target - eye).normalize();
    let mut x = z.cross(&V3::z());
    if x.norm() < 1e-9 {
        x = V3::x();
    }
    let x = x.normalize();
    let y = z.cross(&x);
    let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
    Pose::new(eye, UnitQuaternion::from_rotation_matrix(&rot))
}

/// Four cameras above the table corners, looking at its center.
pub fn default_views() -> Vec<Pose> {
    [(0.9, 0.7, 1.1), (-0.9, 0.7, 1.15), (-0.9, -0.7, 1.1), (0.9, -0.7, 1.2)]
        .iter()
        .map(|&(x, y, z)| look_at(V3::new(x, y, z), V3::zeros()))
        .collect()
}

/// Surface samples of one object in its own frame, with seams between its
/// pieces removed. Deterministic in (world seed, object id, density).
/// Each entry is `(solid index, point, outward normal)`.
pub fn object_surface_samples(world: &WorldState, id: ObjectId, density: f64) -> Result<Vec<(usize, V3, V3)>, WorldError> {
    let obj = world.object(id)?;
    let solids = obj.shape.solids();
    let mut out = Vec::new();
    for (k, s) in solids.iter().enumerate() {
        let seed = world
            .seed()
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(u64::from(id.0) << 16)
            .wrapping_add(k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (p, n) in s.sample_surface(&mut rng, density) {
            let glued = solids.iter().enumerate().any(|(j, other)| j != k && other.sdf(&p) < 1e-7);
            if !glued {
                out.push((k, p, n));
            }
        }
    }
    Ok(out)
}

struct Occluder {
    object: ObjectId,
    solid_index: usize,
    solid: Solid,
    pose: Pose,
    center: V3,
    radius: f64,
}

fn occluders(world: &WorldState) -> Vec<Occluder> {
    let mut out = vec![];
    for o in world.objects() {
        for (k, s) in o.shape.solids().into_iter().enumerate() {
            let (lo, hi) = s.aabb();
            out.push(Occluder {
                object: o.id,
                solid_index: k,
                center: o.pose.transform_point(&((lo + hi) / 2.0)),
                radius: (hi - lo).norm() / 2.0,
                solid: s,
                pose: o.pose,
            });
        }
    }
    out
}

fn occluded(occ: &[Occluder], own: (ObjectId, usize), p: &V3, to_cam: &V3, dist: f64) -> bool {
    occ.iter().any(|o| {
        if (o.object, o.solid_index) == own {
            return false;
        }
        // segment-vs-bounding-sphere reject
        let w = o.center - p;
        let t = w.dot(to_cam).clamp(0.0, dist);
        if (w - to_cam * t).norm() > o.radius + 1e-9 {
            return false;
        }
        let origin = o.pose.inverse_transform_point(p);
        let dir = o.pose.inverse_transform_vector(to_cam);
        o.solid.ray_hit(&origin, &dir, 1e-7, dist).is_some()
    })
}

fn visible_cloud(
    world: &WorldState,
    id: ObjectId,
    views: &[Pose],
    density: f64,
    occ: &[Occluder],
) -> Result<Vec<PointCloud>, WorldError> {
    if views.is_empty() {
        return Err(WorldError::NoViews);
    }
    let obj = world.object(id)?;
    let samples: Vec<(usize, V3, V3)> = object_surface_samples(world, id, density)?
        .into_iter()
        .map(|(k, p, n)| (k, obj.pose.transform_point(&p), obj.pose.transform_vector(&n)))
        .collect();
    let cell = ANGULAR_CELL_DEG.to_radians();
    let mut clouds = Vec::with_capacity(views.len());
    for (vi, cam) in views.iter().enumerate() {
        let mut zbuf: HashMap<(i64, i64), (f64, usize)> = HashMap::new();
        for (si, (k, p, n)) in samples.iter().enumerate() {
            let d = cam.position - p;
            let dist = d.norm();
            let to_cam = d / dist;
            if n.dot(&to_cam) <= 1e-9 {
                continue;
            }
            let c = cam.inverse_transform_point(p);
            if c.z <= 0.0 {
                continue;
            }
            if occluded(occ, (id, *k), p, &to_cam, dist) {
                continue;
            }
            let key = ((c.x.atan2(c.z) / cell).floor() as i64, (c.y.atan2(c.z) / cell).floor() as i64);
            let entry = zbuf.entry(key).or_insert((f64::INFINITY, usize::MAX));
            if dist < entry.0 {
                *entry = (dist, si);
            }
        }
        let mut kept: Vec<usize> = zbuf.values().map(|(_, i)| *i).collect();
        kept.sort_unstable();
        let mut cloud = PointCloud::default();
        for i in kept {
            cloud.push(samples[i].1, samples[i].2, vi);
        }
        clouds.push(cloud);
    }
    Ok(clouds)
}

/// Per-view clouds of the visible surface of `object`.
pub fn sample_point_cloud(
    world: &WorldState,
    object: ObjectId,
    views: &[Pose],
    density: f64,
) -> Result<Vec<PointCloud>, WorldError> {
    visible_cloud(world, object, views, density, &occluders(world))
}

/// Per-view clouds of every object, keyed by object id.
pub fn sample_scene(world: &WorldState, views: &[Pose], density: f64) -> Result<BTreeMap<ObjectId, Vec<PointCloud>>, WorldError> {
    let occ = occluders(world);
    world
        .object_ids()
        .into_iter()
        .map(|id| Ok((id, visible_cloud(world, id, views, density, &occ)?)))
        .collect()
}
