use nalgebra::{Vector2, Vector3};

use super::hull2d;

type V3 = Vector3<f64>;

#[derive(Clone, Debug)]
pub struct HullFace {
    pub vertices: [usize; 3],
    /// Outward unit normal.
    pub normal: V3,
    /// Plane offset: points on the face satisfy `normal · p = offset`.
    pub offset: f64,
}

/// Convex hull of a 3D point set. Flat or lower-dimensional inputs are
/// kept in a reduced representation so containment still works.
#[derive(Clone, Debug)]
pub enum ConvexHull3 {
    Empty,
    /// All points within tolerance of a segment (or a single point).
    Segment { a: V3, b: V3 },
    /// All points within tolerance of a plane.
    Planar {
        origin: V3,
        normal: V3,
        u: V3,
        v: V3,
        polygon: Vec<Vector2<f64>>,
    },
    Solid { points: Vec<V3>, faces: Vec<HullFace> },
}

impl ConvexHull3 {
    pub fn build(input: &[V3]) -> ConvexHull3 {
        let pts: Vec<V3> = input.iter().copied().filter(|p| p.iter().all(|c| c.is_finite())).collect();
        if pts.is_empty() {
            return ConvexHull3::Empty;
        }
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in &pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let scale = (hi - lo).norm().max(1e-9);
        let eps = 1e-10 * scale.max(1.0);

        // initial simplex from extreme points
        let i0 = (0..pts.len()).min_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x)).unwrap();
        let i1 = farthest(&pts, |p| (p - pts[i0]).norm());
        let (a, b) = (pts[i0], pts[i1]);
        if (b - a).norm() <= eps {
            return ConvexHull3::Segment { a, b: a };
        }
        let dir = (b - a).normalize();
        let line_dist = |p: &V3| {
            let w = p - a;
            (w - dir * w.dot(&dir)).norm()
        };
        let i2 = farthest(&pts, line_dist);
        if line_dist(&pts[i2]) <= eps {
            let (mut tmin, mut tmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in &pts {
                let t = (p - a).dot(&dir);
                tmin = tmin.min(t);
                tmax = tmax.max(t);
            }
            return ConvexHull3::Segment { a: a + dir * tmin, b: a + dir * tmax };
        }
        let c = pts[i2];
        let plane_n = (b - a).cross(&(c - a)).normalize();
        let plane_dist = |p: &V3| (p - a).dot(&plane_n);
        let i3 = farthest(&pts, |p| plane_dist(p).abs());
        if plane_dist(&pts[i3]).abs() <= eps {
            let u = dir;
            let v = plane_n.cross(&u);
            let proj: Vec<Vector2<f64>> = pts.iter().map(|p| Vector2::new((p - a).dot(&u), (p - a).dot(&v))).collect();
            return ConvexHull3::Planar {
                origin: a,
                normal: plane_n,
                u,
                v,
                polygon: hull2d::convex_hull(&proj),
            };
        }

        let seed = [i0, i1, i2, i3];
        let interior = seed.iter().map(|&i| pts[i]).sum::<V3>() / 4.0;
        let mut faces: Vec<Option<HullFace>> = Vec::new();
        let add_face = |faces: &mut Vec<Option<HullFace>>, i: usize, j: usize, k: usize| {
            let n = (pts[j] - pts[i]).cross(&(pts[k] - pts[i]));
            let len = n.norm();
            let (mut idx, mut n) = ([i, j, k], if len > 0.0 { n / len } else { n });
            if n.dot(&(interior - pts[i])) > 0.0 {
                idx = [i, k, j];
                n = -n;
            }
            let offset = n.dot(&pts[idx[0]]);
            faces.push(Some(HullFace { vertices: idx, normal: n, offset }));
        };
        add_face(&mut faces, i0, i1, i2);
        add_face(&mut faces, i0, i1, i3);
        add_face(&mut faces, i0, i2, i3);
        add_face(&mut faces, i1, i2, i3);

        for (pi, p) in pts.iter().enumerate() {
            if seed.contains(&pi) {
                continue;
            }
            let visible: Vec<usize> = faces
                .iter()
                .enumerate()
                .filter_map(|(fi, f)| f.as_ref().filter(|f| f.normal.dot(p) - f.offset > eps).map(|_| fi))
                .collect();
            if visible.is_empty() {
                continue;
            }
            let mut edges: Vec<(usize, usize)> = Vec::with_capacity(visible.len() * 3);
            for &fi in &visible {
                let v = faces[fi].as_ref().unwrap().vertices;
                edges.push((v[0], v[1]));
                edges.push((v[1], v[2]));
                edges.push((v[2], v[0]));
            }
            let edge_set: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
            for &fi in &visible {
                faces[fi] = None;
            }
            for &(ea, eb) in &edges {
                if !edge_set.contains(&(eb, ea)) {
                    add_face(&mut faces, ea, eb, pi);
                }
            }
            if faces.len() > 4 * pts.len() + 64 {
                faces.retain(|f| f.is_some());
            }
        }

        let faces: Vec<HullFace> = faces.into_iter().flatten().collect();
        let mut used: Vec<usize> = faces.iter().flat_map(|f| f.vertices).collect();
        used.sort_unstable();
        used.dedup();
        let mut remap = vec![usize::MAX; pts.len()];
        for (new, &old) in used.iter().enumerate() {
            remap[old] = new;
        }
        let points: Vec<V3> = used.iter().map(|&i| pts[i]).collect();
        let faces = faces
            .into_iter()
            .map(|f| HullFace {
                vertices: f.vertices.map(|i| remap[i]),
                ..f
            })
            .collect();
        ConvexHull3::Solid { points, faces }
    }

    /// Boundary-inclusive containment within `tol` meters.
    pub fn contains(&self, p: &V3, tol: f64) -> bool {
        match self {
            ConvexHull3::Empty => false,
            ConvexHull3::Segment { a, b } => {
                let d = b - a;
                let len2 = d.norm_squared();
                let t = if len2 > 0.0 { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
                (a + d * t - p).norm() <= tol
            }
            ConvexHull3::Planar { origin, normal, u, v, polygon } => {
                let w = p - origin;
                if w.dot(normal).abs() > tol {
                    return false;
                }
                let q = Vector2::new(w.dot(u), w.dot(v));
                if polygon.len() < 3 {
                    let a = polygon.first().copied().unwrap_or(q);
                    let b = polygon.last().copied().unwrap_or(q);
                    let d = b - a;
                    let len2 = d.norm_squared();
                    let t = if len2 > 0.0 { ((q - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
                    return (a + d * t - q).norm() <= tol;
                }
                hull2d::contains(polygon, &q, tol)
            }
            ConvexHull3::Solid { faces, .. } => faces.iter().all(|f| f.normal.dot(p) - f.offset <= tol),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ConvexHull3::Solid { points, faces } => {
                let o = points.iter().sum::<V3>() / points.len() as f64;
                faces
                    .iter()
                    .map(|f| {
                        let [a, b, c] = f.vertices.map(|i| points[i] - o);
                        a.dot(&b.cross(&c)).abs() / 6.0
                    })
                    .sum()
            }
            _ => 0.0,
        }
    }

    pub fn vertices(&self) -> Vec<V3> {
        match self {
            ConvexHull3::Empty => vec![],
            ConvexHull3::Segment { a, b } => vec![*a, *b],
            ConvexHull3::Planar { origin, u, v, polygon, .. } => {
                polygon.iter().map(|q| origin + u * q.x + v * q.y).collect()
            }
            ConvexHull3::Solid { points, .. } => points.clone(),
        }
    }

    pub fn z_extent(&self) -> Option<(f64, f64)> {
        let vs = self.vertices();
        if vs.is_empty() {
            return None;
        }
        let lo = vs.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        let hi = vs.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

fn farthest(pts: &[V3], f: impl Fn(&V3) -> f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::NEG_INFINITY;
    for (i, p) in pts.iter().enumerate() {
        let d = f(p);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    best
}
