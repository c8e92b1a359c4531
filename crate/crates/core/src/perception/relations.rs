use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::hull2d;
use crate::thresholds::Thresholds;
use crate::world::ObjectId;

use super::{ObjectInfo, PerceptionError};

/// Clearance allowed between the bottom decile of an object and the top
/// of the object under it for an "above" relation, meters.
pub const ABOVE_SLACK: f64 = 0.01;
/// Tolerance for hull containment tests, meters.
pub const HULL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationKind {
    ContainedIn,
    Above,
    Left,
    Right,
    Front,
    Behind,
}

impl RelationKind {
    pub fn is_vertical(self) -> bool {
        matches!(self, RelationKind::ContainedIn | RelationKind::Above)
    }

    /// The relation seen from the other object.
    pub fn mirror(self) -> Option<RelationKind> {
        match self {
            RelationKind::Left => Some(RelationKind::Right),
            RelationKind::Right => Some(RelationKind::Left),
            RelationKind::Front => Some(RelationKind::Behind),
            RelationKind::Behind => Some(RelationKind::Front),
            _ => None,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelationKind::ContainedIn => "contained-in",
            RelationKind::Above => "above",
            RelationKind::Left => "left",
            RelationKind::Right => "right",
            RelationKind::Front => "front",
            RelationKind::Behind => "behind",
        };
        f.write_str(s)
    }
}

/// `subject` is `kind` of `object` (e.g. subject contained-in object,
/// subject left of object).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub subject: ObjectId,
    pub object: ObjectId,
    pub kind: RelationKind,
}

/// Relations over one set of perceived objects. Vertical relations
/// (contained-in, above) are stored as found; each unordered pair without
/// a vertical relation carries one directional relation with the smaller
/// id as subject.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationSet {
    pub relations: Vec<Relation>,
    #[serde(skip)]
    volumes: BTreeMap<ObjectId, f64>,
}

impl RelationSet {
    pub fn new(relations: Vec<Relation>, volumes: BTreeMap<ObjectId, f64>) -> Self {
        let mut relations = relations;
        relations.sort();
        Self { relations, volumes }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn has(&self, subject: ObjectId, kind: RelationKind, object: ObjectId) -> bool {
        self.relations.iter().any(|r| r.subject == subject && r.object == object && r.kind == kind)
    }

    /// Relations that mention `id` on either side.
    pub fn involving(&self, id: ObjectId) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| r.subject == id || r.object == id)
    }

    /// The vertical relation between an unordered pair, if any.
    pub fn vertical_between(&self, a: ObjectId, b: ObjectId) -> Option<&Relation> {
        self.relations.iter().find(|r| {
            r.kind.is_vertical() && ((r.subject == a && r.object == b) || (r.subject == b && r.object == a))
        })
    }

    /// Directional relation of `a` relative to `b`, mirrored if stored the
    /// other way round.
    pub fn direction(&self, a: ObjectId, b: ObjectId) -> Option<RelationKind> {
        self.relations.iter().find_map(|r| {
            if r.kind.is_vertical() {
                None
            } else if r.subject == a && r.object == b {
                Some(r.kind)
            } else if r.subject == b && r.object == a {
                r.kind.mirror()
            } else {
                None
            }
        })
    }

    /// Innermost container of `id` (smallest hull volume among all objects
    /// it is contained in).
    pub fn container_of(&self, id: ObjectId) -> Option<ObjectId> {
        self.relations
            .iter()
            .filter(|r| r.subject == id && r.kind == RelationKind::ContainedIn)
            .map(|r| r.object)
            .min_by(|a, b| self.volume(*a).total_cmp(&self.volume(*b)).then(a.cmp(b)))
    }

    /// Objects inside or resting over `id`.
    pub fn contents_and_over(&self, id: ObjectId) -> Vec<ObjectId> {
        let mut out: Vec<ObjectId> =
            self.relations.iter().filter(|r| r.object == id && r.kind.is_vertical()).map(|r| r.subject).collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn volume(&self, id: ObjectId) -> f64 {
        self.volumes.get(&id).copied().unwrap_or(0.0)
    }
}

/// Number of `a`'s points whose top-down projection lies inside `b`'s
/// top-down hull.
pub fn overlap_test(a: &ObjectInfo, b: &ObjectInfo) -> Result<usize, PerceptionError> {
    for o in [a, b] {
        if !hull2d::is_proper(&o.footprint) {
            return Err(PerceptionError::DegenerateHull(o.id));
        }
    }
    Ok(a.cloud.points.iter().filter(|p| hull2d::contains(&b.footprint, &p.xy(), 1e-9)).count())
}

fn lower_decile_z(a: &ObjectInfo) -> f64 {
    let mut z: Vec<f64> = a.cloud.points.iter().map(|p| p.z).collect();
    z.sort_by(f64::total_cmp);
    z.get((z.len().saturating_sub(1)) / 10).copied().unwrap_or(a.centroid.z)
}

/// Vertical relation of `a` to `b` for a pair that passed the overlap
/// test: contained-in when fewer than `contained` of a's points fall
/// outside b's hull and a's centroid is within b's height, otherwise
/// above when a's lowest decile sits at or over b's top.
pub fn classify_pair(a: &ObjectInfo, b: &ObjectInfo, thresholds: &Thresholds) -> Option<RelationKind> {
    if a.cloud.is_empty() {
        return None;
    }
    let outside = a.cloud.points.iter().filter(|p| !b.hull.contains(p, HULL_TOL)).count();
    let frac = outside as f64 / a.cloud.len() as f64;
    let (zlo, zhi) = b.z_range();
    if frac < thresholds.contained && a.centroid.z >= zlo && a.centroid.z <= zhi {
        return Some(RelationKind::ContainedIn);
    }
    if lower_decile_z(a) >= zhi - ABOVE_SLACK {
        return Some(RelationKind::Above);
    }
    None
}

/// Dominant horizontal axis of `a.centroid - b.centroid`; ties go to x.
pub fn directional_relation(a: &ObjectInfo, b: &ObjectInfo) -> Result<RelationKind, PerceptionError> {
    let d = a.centroid - b.centroid;
    if d.x.abs() < 1e-6 && d.y.abs() < 1e-6 {
        return Err(PerceptionError::CoincidentCentroids(a.id, b.id));
    }
    Ok(if d.x.abs() >= d.y.abs() {
        if d.x > 0.0 {
            RelationKind::Right
        } else {
            RelationKind::Left
        }
    } else if d.y > 0.0 {
        RelationKind::Front
    } else {
        RelationKind::Behind
    })
}

/// All relations over `infos`.
pub fn compute_relations(infos: &[ObjectInfo], thresholds: &Thresholds) -> RelationSet {
    let volumes: BTreeMap<ObjectId, f64> = infos.iter().map(|i| (i.id, i.hull.volume())).collect();
    let mut vertical: BTreeMap<(ObjectId, ObjectId), Vec<Relation>> = BTreeMap::new();
    for a in infos {
        for b in infos {
            if a.id == b.id {
                continue;
            }
            let count = overlap_test(a, b).unwrap_or(0);
            if count < thresholds.overlap_pts {
                continue;
            }
            if let Some(kind) = classify_pair(a, b, thresholds) {
                let key = (a.id.min(b.id), a.id.max(b.id));
                vertical.entry(key).or_default().push(Relation { subject: a.id, object: b.id, kind });
            }
        }
    }
    let mut relations = vec![];
    for (_, mut cands) in vertical.iter().map(|(k, v)| (k, v.clone())) {
        // one vertical relation per pair: containment of the smaller body
        // first, then "above" with the higher subject
        cands.sort_by(|x, y| {
            let rank = |r: &Relation| if r.kind == RelationKind::ContainedIn { 0 } else { 1 };
            rank(x).cmp(&rank(y)).then_with(|| match x.kind {
                RelationKind::ContainedIn => volumes[&x.subject].total_cmp(&volumes[&y.subject]),
                _ => {
                    let zx = infos.iter().find(|i| i.id == x.subject).map(|i| i.centroid.z).unwrap_or(0.0);
                    let zy = infos.iter().find(|i| i.id == y.subject).map(|i| i.centroid.z).unwrap_or(0.0);
                    zy.total_cmp(&zx)
                }
            })
        });
        relations.push(cands[0]);
    }
    for (i, a) in infos.iter().enumerate() {
        for b in &infos[i + 1..] {
            let key = (a.id.min(b.id), a.id.max(b.id));
            if vertical.contains_key(&key) {
                continue;
            }
            let (first, second) = if a.id < b.id { (a, b) } else { (b, a) };
            if let Ok(kind) = directional_relation(first, second) {
                relations.push(Relation { subject: first.id, object: second.id, kind });
            }
        }
    }
    RelationSet::new(relations, volumes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Solid;
    use crate::world::PointCloud;
    use nalgebra::Vector3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type V3 = Vector3<f64>;

    fn info(id: u32, solids: &[Solid], seed: u64) -> ObjectInfo {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = PointCloud::default();
        for s in solids {
            for (p, n) in s.sample_surface(&mut rng, 100_000.0) {
                c.push(p, n, 0);
            }
        }
        ObjectInfo::new(ObjectId(id), "thing", vec![], c)
    }

    fn cube(id: u32, center: V3, edge: f64) -> ObjectInfo {
        info(id, &[Solid::Cuboid { center, half: V3::repeat(edge / 2.0) }], u64::from(id) + 10)
    }

    #[test]
    fn disjoint_cubes_do_not_overlap() {
        let a = cube(0, V3::new(0.0, 0.0, 0.025), 0.05);
        let b = cube(1, V3::new(0.3, 0.0, 0.025), 0.05);
        assert_eq!(overlap_test(&a, &b).unwrap(), 0);
    }

    #[test]
    fn cube_on_tray_counts_every_point() {
        let tray = info(0, &[Solid::Cuboid { center: V3::new(0.0, 0.0, 0.01), half: V3::new(0.15, 0.15, 0.01) }], 5);
        let c = cube(1, V3::new(0.02, -0.03, 0.045), 0.05);
        // brute-force oracle: every cube point lies within the tray's xy box
        let expected = c.cloud.points.iter().filter(|p| p.x.abs() <= 0.15 && p.y.abs() <= 0.15).count();
        assert_eq!(overlap_test(&c, &tray).unwrap(), expected);
        assert_eq!(expected, c.cloud.len());
        assert_eq!(classify_pair(&c, &tray, &Thresholds::default()), Some(RelationKind::Above));
    }

    #[test]
    fn two_points_are_degenerate() {
        let mut c = PointCloud::default();
        c.push(V3::zeros(), V3::z(), 0);
        c.push(V3::x(), V3::z(), 0);
        let a = ObjectInfo::new(ObjectId(0), "x", vec![], c);
        let b = cube(1, V3::zeros(), 0.05);
        assert_eq!(overlap_test(&a, &b), Err(PerceptionError::DegenerateHull(ObjectId(0))));
    }

    #[test]
    fn directional_examples() {
        let a = cube(0, V3::new(0.0, 0.0, 0.025), 0.05);
        let right = cube(1, V3::new(0.2, 0.0, 0.025), 0.05);
        let front = cube(2, V3::new(0.0, 0.2, 0.025), 0.05);
        let diag = cube(3, V3::new(0.1, 0.1, 0.025), 0.05);
        assert_eq!(directional_relation(&a, &right).unwrap(), RelationKind::Left);
        assert_eq!(directional_relation(&a, &front).unwrap(), RelationKind::Behind);
        let mut diag = diag;
        diag.centroid = a.centroid + V3::new(0.1, 0.1, 0.0);
        assert_eq!(directional_relation(&diag, &a).unwrap(), RelationKind::Right);
        assert!(directional_relation(&a, &a).is_err());
    }

    #[test]
    fn contained_set_grows_with_threshold() {
        // bottle poking out of a shallow tray
        let tray = info(
            0,
            &[Solid::Cuboid { center: V3::new(0.0, 0.0, 0.03), half: V3::new(0.15, 0.15, 0.03) }],
            3,
        );
        let bottle = info(1, &[Solid::Cylinder { center: V3::new(0.0, 0.0, 0.07), radius: 0.03, half_height: 0.06 }], 4);
        let mut t = Thresholds::default();
        let mut last = false;
        for k in 0..=10 {
            t.contained = k as f64 / 10.0;
            let now = classify_pair(&bottle, &tray, &t) == Some(RelationKind::ContainedIn);
            assert!(now || !last);
            last = now;
        }
        t.contained = 0.1;
        assert_ne!(classify_pair(&bottle, &tray, &t), Some(RelationKind::ContainedIn));
    }
}
