//! Grouped object graph and the templated scene description built from it.

mod text;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{ObjectInfo, Perception, Relation, RelationKind, RelationSet};
use crate::world::ObjectId;

pub use text::{article, number_word, plural};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescriptionError {
    #[error("no object is called {0:?}")]
    UnknownMention(String),
}

/// A cluster of objects tied together by containment or support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// The member the group is named by (parentless, rightmost).
    pub root: ObjectId,
    /// Members in traversal order, root first.
    pub members: Vec<ObjectId>,
    /// Vertical relations inside the group that the description states.
    pub internal: Vec<Relation>,
}

/// Link from an already placed vertex to a newly reached one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Direction of the `to` root relative to the `from` root.
    pub kind: Option<RelationKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    /// Vertices in traversal order; the first is the rightmost.
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

/// Attributes describing an object's state, stated as "The X is Y.".
pub const STATE_WORDS: &[&str] = &["filled", "empty", "full", "open", "closed"];

fn parent_links(infos: &[ObjectInfo], rels: &RelationSet) -> BTreeMap<ObjectId, Relation> {
    let top = |id: ObjectId| infos.iter().find(|i| i.id == id).map(|i| i.z_range().1).unwrap_or(0.0);
    let mut parent: BTreeMap<ObjectId, Relation> = BTreeMap::new();
    for info in infos {
        let id = info.id;
        if let Some(c) = rels.container_of(id) {
            parent.insert(id, Relation { subject: id, object: c, kind: RelationKind::ContainedIn });
            continue;
        }
        let support = rels
            .iter()
            .filter(|r| r.subject == id && r.kind == RelationKind::Above)
            .max_by(|a, b| top(a.object).total_cmp(&top(b.object)).then(b.object.cmp(&a.object)));
        if let Some(r) = support {
            parent.insert(id, *r);
        }
    }
    // drop links that would close a cycle
    let ids: Vec<ObjectId> = parent.keys().copied().collect();
    for id in ids {
        let mut seen = BTreeSet::new();
        let mut cur = id;
        while let Some(r) = parent.get(&cur) {
            if !seen.insert(cur) {
                parent.remove(&id);
                break;
            }
            cur = r.object;
        }
    }
    parent
}

fn find(uf: &mut BTreeMap<ObjectId, ObjectId>, x: ObjectId) -> ObjectId {
    let p = uf[&x];
    if p == x {
        return x;
    }
    let r = find(uf, p);
    uf.insert(x, r);
    r
}

/// Groups objects along vertical relations, then spans the groups with a
/// nearest-neighbor tree grown from the rightmost group.
pub fn build_scene_graph(infos: &[ObjectInfo], rels: &RelationSet) -> SceneGraph {
    if infos.is_empty() {
        return SceneGraph::default();
    }
    let info = |id: ObjectId| infos.iter().find(|i| i.id == id).expect("relation over known objects");
    let known: BTreeSet<ObjectId> = infos.iter().map(|i| i.id).collect();
    let mut uf: BTreeMap<ObjectId, ObjectId> = infos.iter().map(|i| (i.id, i.id)).collect();
    for r in rels.iter().filter(|r| r.kind.is_vertical()) {
        if known.contains(&r.subject) && known.contains(&r.object) {
            let (a, b) = (find(&mut uf, r.subject), find(&mut uf, r.object));
            if a != b {
                uf.insert(a.max(b), a.min(b));
            }
        }
    }
    let parent = parent_links(infos, rels);
    let mut groups: BTreeMap<ObjectId, Vec<ObjectId>> = BTreeMap::new();
    for i in infos {
        let r = find(&mut uf, i.id);
        groups.entry(r).or_default().push(i.id);
    }
    let rightmost = |ids: &[ObjectId]| -> ObjectId {
        *ids.iter()
            .max_by(|a, b| info(**a).centroid.x.total_cmp(&info(**b).centroid.x).then(b.cmp(a)))
            .expect("nonempty")
    };
    let mut vertices: Vec<Vertex> = vec![];
    for members in groups.values() {
        let mut roots: Vec<ObjectId> = members.iter().copied().filter(|m| !parent.contains_key(m)).collect();
        if roots.is_empty() {
            roots = members.clone();
        }
        let root = rightmost(&roots);
        let mut order: Vec<ObjectId> = vec![];
        let mut internal: Vec<Relation> = vec![];
        let mut starts = vec![root];
        starts.extend(roots.iter().copied().filter(|r| *r != root));
        for start in starts {
            if order.contains(&start) {
                continue;
            }
            if start != root {
                // extra parentless member: state how it joins the group
                if let Some(r) = rels
                    .iter()
                    .find(|r| r.kind.is_vertical() && (r.object == start || r.subject == start) && order.contains(&if r.object == start { r.subject } else { r.object }))
                {
                    internal.push(*r);
                }
            }
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                if order.contains(&x) {
                    continue;
                }
                order.push(x);
                let mut children: Vec<ObjectId> =
                    members.iter().copied().filter(|m| parent.get(m).is_some_and(|r| r.object == x)).collect();
                children.sort();
                for c in children {
                    internal.push(parent[&c]);
                    queue.push_back(c);
                }
            }
        }
        for m in members {
            if !order.contains(m) {
                order.push(*m);
            }
        }
        vertices.push(Vertex { root, members: order, internal });
    }
    // Prim's tree from the rightmost root
    let start = (0..vertices.len())
        .max_by(|&a, &b| {
            let (ra, rb) = (vertices[a].root, vertices[b].root);
            info(ra).centroid.x.total_cmp(&info(rb).centroid.x).then(rb.cmp(&ra))
        })
        .expect("nonempty");
    let mut placed: Vec<Vertex> = vec![vertices[start].clone()];
    let mut rest: Vec<Vertex> = vertices.into_iter().enumerate().filter(|(i, _)| *i != start).map(|(_, v)| v).collect();
    let mut edges = vec![];
    while !rest.is_empty() {
        let mut best: Option<(f64, usize, usize)> = None;
        for (u, pv) in placed.iter().enumerate() {
            for (k, rv) in rest.iter().enumerate() {
                let d = (info(pv.root).centroid - info(rv.root).centroid).norm();
                let better = match best {
                    None => true,
                    Some((bd, bu, bk)) => {
                        d < bd - 1e-12 || ((d - bd).abs() <= 1e-12 && (u, rv.root) < (bu, rest[bk].root))
                    }
                };
                if better {
                    best = Some((d, u, k));
                }
            }
        }
        let (_, u, k) = best.expect("rest nonempty");
        let v = rest.remove(k);
        let kind = rels.direction(v.root, placed[u].root);
        edges.push(Edge { from: u, to: placed.len(), kind });
        placed.push(v);
    }
    SceneGraph { vertices: placed, edges }
}

/// Description text plus the noun phrase used for every object.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub text: String,
    /// Normalized noun phrase ("the second bowl") to object.
    pub mentions: IndexMap<String, ObjectId>,
}

impl SceneDescription {
    pub fn name_of(&self, id: ObjectId) -> Option<&str> {
        self.mentions.iter().find(|(_, v)| **v == id).map(|(k, _)| k.as_str())
    }
}

pub fn normalize_phrase(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Exact lookup of a mention, case- and whitespace-insensitive, with or
/// without the leading article.
pub fn resolve_mention(desc: &SceneDescription, phrase: &str) -> Result<ObjectId, DescriptionError> {
    let norm = normalize_phrase(phrase);
    let with_the = if norm.starts_with("the ") { norm.clone() } else { format!("the {norm}") };
    desc.mentions
        .get(&with_the)
        .copied()
        .ok_or_else(|| DescriptionError::UnknownMention(phrase.to_string()))
}

/// Renders the description. With `grounded == false` only the object
/// count sentence is produced.
pub fn describe_scene(graph: &SceneGraph, infos: &[ObjectInfo], grounded: bool) -> SceneDescription {
    if infos.is_empty() || graph.vertices.is_empty() {
        return SceneDescription { text: "A table has no objects.".into(), mentions: IndexMap::new() };
    }
    let info = |id: ObjectId| infos.iter().find(|i| i.id == id).expect("graph over known objects");
    let order: Vec<ObjectId> = graph.vertices.iter().flat_map(|v| v.members.iter().copied()).collect();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for id in &order {
        *counts.entry(info(*id).label.as_str()).or_default() += 1;
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut names: BTreeMap<ObjectId, String> = BTreeMap::new();
    let mut mentions = IndexMap::new();
    for id in &order {
        let label = info(*id).label.as_str();
        let k = seen.entry(label).or_default();
        *k += 1;
        let name = if counts[label] > 1 {
            format!("the {} {}", text::ordinal(*k), label)
        } else {
            format!("the {label}")
        };
        mentions.insert(normalize_phrase(&name), *id);
        names.insert(*id, name);
    }
    let parts: Vec<String> = counts
        .iter()
        .map(|(label, n)| {
            if *n == 1 {
                format!("{} {}", article(label), label)
            } else {
                format!("{} {}", number_word(*n), plural(label))
            }
        })
        .collect();
    let mut sentences = vec![format!("A table has the following objects: {}.", text::join_and(&parts))];
    if grounded {
        let name = |id: ObjectId| names[&id].clone();
        let states = |id: ObjectId| -> Vec<String> {
            info(id)
                .attributes
                .iter()
                .filter(|a| STATE_WORDS.contains(&a.as_str()))
                .map(|a| format!("{} is {}.", text::capitalize(&name(id)), a))
                .collect()
        };
        let first = graph.vertices[0].root;
        sentences.push(format!("At the right of all the objects on the table lies {}.", name(first)));
        sentences.extend(states(first));
        for e in &graph.edges {
            let from = name(graph.vertices[e.from].root);
            let to_id = graph.vertices[e.to].root;
            let to = name(to_id);
            let s = match e.kind {
                Some(RelationKind::Left) => format!("To the left of {from} lies {to}."),
                Some(RelationKind::Right) => format!("To the right of {from} lies {to}."),
                Some(RelationKind::Front) => format!("In front of {from} lies {to}."),
                Some(RelationKind::Behind) => format!("Behind {from} lies {to}."),
                _ => format!("Next to {from} lies {to}."),
            };
            sentences.push(s);
            sentences.extend(states(to_id));
        }
        for v in &graph.vertices {
            for r in &v.internal {
                let s = match r.kind {
                    RelationKind::ContainedIn => {
                        format!("{} is inside {}.", text::capitalize(&name(r.subject)), name(r.object))
                    }
                    _ => format!("{} lies over {}.", text::capitalize(&name(r.subject)), name(r.object)),
                };
                sentences.push(s);
            }
            for m in v.members.iter().skip(1) {
                sentences.extend(states(*m));
            }
        }
    }
    SceneDescription { text: sentences.join(" "), mentions }
}

/// Graph and description in one step.
pub fn describe_perception(p: &Perception, grounded: bool) -> (SceneGraph, SceneDescription) {
    let g = build_scene_graph(&p.infos, &p.relations);
    let d = describe_scene(&g, &p.infos, grounded);
    (g, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::PointCloud;
    use nalgebra::Vector3;
    use std::collections::BTreeMap;

    fn obj(id: u32, label: &str, x: f64, y: f64, z: f64) -> ObjectInfo {
        let mut c = PointCloud::default();
        // a small tetrahedron-ish cloud around the centroid
        for (dx, dy, dz) in [(0.01, 0.0, 0.0), (-0.01, 0.01, 0.0), (-0.01, -0.01, 0.0), (0.0, 0.0, 0.02)] {
            c.push(Vector3::new(x + dx, y + dy, z + dz), Vector3::z(), 0);
        }
        let mut i = ObjectInfo::new(ObjectId(id), label, vec![], c);
        i.centroid = Vector3::new(x, y, z);
        i
    }

    fn rels(infos: &[ObjectInfo], vertical: Vec<Relation>) -> RelationSet {
        let mut all = vertical.clone();
        for (k, a) in infos.iter().enumerate() {
            for b in &infos[k + 1..] {
                let joined = vertical.iter().any(|r| {
                    (r.subject == a.id && r.object == b.id) || (r.subject == b.id && r.object == a.id)
                });
                if !joined {
                    let kind = crate::perception::directional_relation(a, b).unwrap();
                    all.push(Relation { subject: a.id, object: b.id, kind });
                }
            }
        }
        let volumes: BTreeMap<ObjectId, f64> = infos.iter().map(|i| (i.id, 1.0 + i.id.0 as f64)).collect();
        RelationSet::new(all, volumes)
    }

    #[test]
    fn empty_scene() {
        let g = build_scene_graph(&[], &RelationSet::default());
        assert!(g.vertices.is_empty());
        assert_eq!(describe_scene(&g, &[], true).text, "A table has no objects.");
    }

    #[test]
    fn three_distant_cubes_form_a_chain() {
        let infos = vec![obj(0, "cube", -0.3, 0.0, 0.02), obj(1, "cube", 0.0, 0.0, 0.02), obj(2, "cube", 0.3, 0.0, 0.02)];
        let g = build_scene_graph(&infos, &rels(&infos, vec![]));
        assert_eq!(g.vertices.len(), 3);
        assert_eq!(g.edges.len(), 2);
        let d = describe_scene(&g, &infos, true);
        assert_eq!(
            d.text,
            "A table has the following objects: three cubes. At the right of all the objects on the table lies the first cube. \
To the left of the first cube lies the second cube. To the left of the second cube lies the third cube."
        );
        assert_eq!(resolve_mention(&d, "THE  Second cube").unwrap(), ObjectId(1));
        assert_eq!(resolve_mention(&d, "third cube").unwrap(), ObjectId(0));
        assert!(resolve_mention(&d, "the fourth cube").is_err());
    }

    #[test]
    fn contained_object_joins_its_container() {
        let infos = vec![obj(0, "tray", 0.0, 0.0, 0.01), obj(1, "apple", 0.0, 0.01, 0.03), obj(2, "mug", -0.3, 0.1, 0.05)];
        let r = rels(&infos, vec![Relation { subject: ObjectId(1), object: ObjectId(0), kind: RelationKind::ContainedIn }]);
        let g = build_scene_graph(&infos, &r);
        assert_eq!(g.vertices.len(), 2);
        let d = describe_scene(&g, &infos, true);
        assert_eq!(
            d.text,
            "A table has the following objects: an apple, a mug and a tray. At the right of all the objects on the table lies the tray. \
To the left of the tray lies the mug. The apple is inside the tray."
        );
        let ungrounded = describe_scene(&g, &infos, false);
        assert_eq!(ungrounded.text, "A table has the following objects: an apple, a mug and a tray.");
        assert_eq!(ungrounded.mentions.len(), 3);
    }
}
