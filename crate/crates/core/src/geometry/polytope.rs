use nalgebra::{Vector2, Vector3};

use super::hull3d::ConvexHull3;
use super::pose::Pose;

type V3 = Vector3<f64>;

/// Convex polytope in half-space form (`n · x <= d`) with its vertex and
/// edge lists kept alongside for support and contact queries.
#[derive(Clone, Debug)]
pub struct ConvexPolytope {
    pub vertices: Vec<V3>,
    pub planes: Vec<(V3, f64)>,
    pub edges: Vec<(usize, usize)>,
}

impl ConvexPolytope {
    pub fn cuboid(center: V3, half: V3) -> Self {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8 {
            let s = V3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            vertices.push(center + half.component_mul(&s));
        }
        let mut planes = Vec::with_capacity(6);
        for axis in 0..3 {
            let mut n = V3::zeros();
            n[axis] = 1.0;
            planes.push((n, center[axis] + half[axis]));
            planes.push((-n, -(center[axis] - half[axis])));
        }
        let mut edges = Vec::with_capacity(12);
        for i in 0..8usize {
            for bit in [1usize, 2, 4] {
                if i & bit == 0 {
                    edges.push((i, i | bit));
                }
            }
        }
        Self { vertices, planes, edges }
    }

    /// Prism whose polygon circumscribes a circle of `radius` (axis along z).
    pub fn prism(center: V3, radius: f64, half_height: f64, segments: usize) -> Self {
        let n = segments.max(3);
        let step = std::f64::consts::TAU / n as f64;
        let r_out = radius / (step / 2.0).cos();
        let mut vertices = Vec::with_capacity(2 * n);
        for z in [-half_height, half_height] {
            for k in 0..n {
                let a = (k as f64 + 0.5) * step;
                vertices.push(center + V3::new(r_out * a.cos(), r_out * a.sin(), z));
            }
        }
        let mut planes = Vec::with_capacity(n + 2);
        planes.push((V3::z(), center.z + half_height));
        planes.push((-V3::z(), -(center.z - half_height)));
        for k in 0..n {
            let a = (k as f64 + 1.0) * step;
            let nrm = V3::new(a.cos(), a.sin(), 0.0);
            planes.push((nrm, nrm.dot(&center) + radius));
        }
        let mut edges = Vec::with_capacity(3 * n);
        for k in 0..n {
            let k1 = (k + 1) % n;
            edges.push((k, k1));
            edges.push((n + k, n + k1));
            edges.push((k, n + k));
        }
        Self { vertices, planes, edges }
    }

    /// Polytope from the convex hull of `points`; `None` if the points do
    /// not span a volume.
    pub fn from_points(points: &[V3]) -> Option<Self> {
        match ConvexHull3::build(points) {
            ConvexHull3::Solid { points, faces } => {
                let mut planes: Vec<(V3, f64)> = Vec::new();
                for f in &faces {
                    if !planes.iter().any(|(n, d)| (n - f.normal).norm() < 1e-9 && (d - f.offset).abs() < 1e-9) {
                        planes.push((f.normal, f.offset));
                    }
                }
                let mut edges: Vec<(usize, usize)> = faces
                    .iter()
                    .flat_map(|f| {
                        let v = f.vertices;
                        [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]
                    })
                    .map(|(a, b)| (a.min(b), a.max(b)))
                    .collect();
                edges.sort_unstable();
                edges.dedup();
                Some(Self { vertices: points, planes, edges })
            }
            _ => None,
        }
    }

    pub fn transformed(&self, pose: &Pose) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| pose.transform_point(v)).collect(),
            planes: self
                .planes
                .iter()
                .map(|(n, d)| {
                    let n2 = pose.transform_vector(n);
                    (n2, d + n2.dot(&pose.position))
                })
                .collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn translated(&self, delta: &V3) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + delta).collect(),
            planes: self.planes.iter().map(|(n, d)| (*n, d + n.dot(delta))).collect(),
            edges: self.edges.clone(),
        }
    }

    pub fn aabb(&self) -> (V3, V3) {
        let mut lo = V3::repeat(f64::INFINITY);
        let mut hi = V3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn contains(&self, p: &V3, tol: f64) -> bool {
        self.planes.iter().all(|(n, d)| n.dot(p) - d <= tol)
    }

    /// Signed distance lower bound: max over planes of `n · p - d`.
    /// Exact outside along face normals and exact inside.
    pub fn plane_distance(&self, p: &V3) -> f64 {
        self.planes.iter().map(|(n, d)| n.dot(p) - d).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Interval of z for which `(x, y, z)` lies inside, boundary inclusive
    /// within `tol`.
    pub fn vertical_span_at(&self, x: f64, y: f64, tol: f64) -> Option<(f64, f64)> {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (n, d) in &self.planes {
            let rhs = d - n.x * x - n.y * y;
            if n.z > 1e-12 {
                hi = hi.min(rhs / n.z);
            } else if n.z < -1e-12 {
                lo = lo.max(rhs / n.z);
            } else if rhs < -tol {
                return None;
            }
        }
        (lo <= hi + tol && lo.is_finite() && hi.is_finite()).then_some((lo, hi.max(lo)))
    }

    /// Entry parameter of the ray `origin + t·dir` (t in (t_min, t_max)).
    pub fn ray_hit(&self, origin: &V3, dir: &V3, t_min: f64, t_max: f64) -> Option<f64> {
        let (mut t0, mut t1) = (t_min, t_max);
        for (n, d) in &self.planes {
            let denom = n.dot(dir);
            let dist = d - n.dot(origin);
            if denom.abs() < 1e-15 {
                if dist < 0.0 {
                    return None;
                }
                continue;
            }
            let t = dist / denom;
            if denom > 0.0 {
                t1 = t1.min(t);
            } else {
                t0 = t0.max(t);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }

    fn project(&self, axis: &V3) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.vertices {
            let s = v.dot(axis);
            lo = lo.min(s);
            hi = hi.max(s);
        }
        (lo, hi)
    }

    fn edge_dirs(&self) -> Vec<V3> {
        let mut dirs: Vec<V3> = Vec::new();
        for &(a, b) in &self.edges {
            let d = self.vertices[b] - self.vertices[a];
            let len = d.norm();
            if len < 1e-12 {
                continue;
            }
            let d = d / len;
            if !dirs.iter().any(|e| e.cross(&d).norm() < 1e-9) {
                dirs.push(d);
            }
        }
        dirs
    }
}

/// Penetration depth by the separating-axis test. Positive values are the
/// minimal overlap along any candidate axis; zero or negative means the
/// polytopes are separated (or touching).
pub fn penetration(a: &ConvexPolytope, b: &ConvexPolytope) -> f64 {
    let (alo, ahi) = a.aabb();
    let (blo, bhi) = b.aabb();
    for k in 0..3 {
        if ahi[k] < blo[k] || bhi[k] < alo[k] {
            return -(blo[k] - ahi[k]).max(alo[k] - bhi[k]);
        }
    }
    let mut axes: Vec<V3> = a.planes.iter().chain(b.planes.iter()).map(|(n, _)| *n).collect();
    for ea in a.edge_dirs() {
        for eb in b.edge_dirs() {
            let c = ea.cross(&eb);
            let len = c.norm();
            if len > 1e-9 {
                axes.push(c / len);
            }
        }
    }
    let mut depth = f64::INFINITY;
    for axis in axes {
        let (a0, a1) = a.project(&axis);
        let (b0, b1) = b.project(&axis);
        let overlap = a1.min(b1) - a0.max(b0);
        if overlap <= 0.0 {
            return overlap;
        }
        depth = depth.min(overlap);
    }
    depth
}

/// Interval `[t0, t1]` of downward translations `t` (along −z) for which
/// `moving` touches or overlaps `fixed`. `t0` is the free drop distance;
/// a negative `t0` with positive `t1` means they overlap now. `None` when
/// their vertical projections do not overlap.
pub fn drop_interval(moving: &ConvexPolytope, fixed: &ConvexPolytope) -> Option<(f64, f64)> {
    const TOL: f64 = 1e-9;
    let (mlo, mhi) = moving.aabb();
    let (flo, fhi) = fixed.aabb();
    if mhi.x < flo.x - TOL || fhi.x < mlo.x - TOL || mhi.y < flo.y - TOL || fhi.y < mlo.y - TOL {
        return None;
    }
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |g: f64| {
        best = Some(best.map_or((g, g), |(lo, hi): (f64, f64)| (lo.min(g), hi.max(g))));
    };
    for v in &moving.vertices {
        if let Some((_, hi)) = fixed.vertical_span_at(v.x, v.y, TOL) {
            consider(v.z - hi);
        }
    }
    for w in &fixed.vertices {
        if let Some((lo, _)) = moving.vertical_span_at(w.x, w.y, TOL) {
            consider(lo - w.z);
        }
    }
    for &(a, b) in &moving.edges {
        let (p0, p1) = (moving.vertices[a], moving.vertices[b]);
        for &(c, d) in &fixed.edges {
            let (q0, q1) = (fixed.vertices[c], fixed.vertices[d]);
            if let Some((s, t)) = segment_cross_xy(&p0, &p1, &q0, &q1) {
                let zp = p0.z + s * (p1.z - p0.z);
                let zq = q0.z + t * (q1.z - q0.z);
                consider(zp - zq);
            }
        }
    }
    best
}

/// Parameters of a proper crossing of two segments projected to xy.
fn segment_cross_xy(p0: &V3, p1: &V3, q0: &V3, q1: &V3) -> Option<(f64, f64)> {
    let r = Vector2::new(p1.x - p0.x, p1.y - p0.y);
    let s = Vector2::new(q1.x - q0.x, q1.y - q0.y);
    let denom = r.x * s.y - r.y * s.x;
    if denom.abs() < 1e-14 {
        return None;
    }
    let w = Vector2::new(q0.x - p0.x, q0.y - p0.y);
    let t_p = (w.x * s.y - w.y * s.x) / denom;
    let t_q = (w.x * r.y - w.y * r.x) / denom;
    ((0.0..=1.0).contains(&t_p) && (0.0..=1.0).contains(&t_q)).then_some((t_p, t_q))
}
