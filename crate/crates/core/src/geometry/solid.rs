use nalgebra::Vector3;
use rand::Rng;

use super::hull3d::ConvexHull3;
use super::polytope::ConvexPolytope;

type V3 = Vector3<f64>;

/// Segment count of the prism standing in for a cylinder in contact and
/// drop queries.
pub const CYLINDER_SEGMENTS: usize = 32;

/// Convex primitive expressed in its owning object's frame.
#[derive(Clone, Debug)]
pub enum Solid {
    Cuboid { center: V3, half: V3 },
    /// Axis along local z.
    Cylinder { center: V3, radius: f64, half_height: f64 },
    Hull { poly: ConvexPolytope, triangles: Vec<[V3; 3]> },
}

impl Solid {
    pub fn hull(points: &[V3]) -> Option<Solid> {
        let poly = ConvexPolytope::from_points(points)?;
        let triangles = match ConvexHull3::build(points) {
            ConvexHull3::Solid { points, faces } => faces.iter().map(|f| f.vertices.map(|i| points[i])).collect(),
            _ => return None,
        };
        Some(Solid::Hull { poly, triangles })
    }

    pub fn polytope(&self) -> ConvexPolytope {
        match self {
            Solid::Cuboid { center, half } => ConvexPolytope::cuboid(*center, *half),
            Solid::Cylinder { center, radius, half_height } => {
                ConvexPolytope::prism(*center, *radius, *half_height, CYLINDER_SEGMENTS)
            }
            Solid::Hull { poly, .. } => poly.clone(),
        }
    }

    /// Signed distance (negative inside). Exact for cuboids and cylinders;
    /// for hulls exact inside and on the surface, a lower bound outside.
    pub fn sdf(&self, p: &V3) -> f64 {
        match self {
            Solid::Cuboid { center, half } => {
                let q = (p - center).abs() - half;
                let outside = q.sup(&V3::zeros()).norm();
                outside + q.max().min(0.0)
            }
            Solid::Cylinder { center, radius, half_height } => {
                let d = p - center;
                let dr = (d.x * d.x + d.y * d.y).sqrt() - radius;
                let dz = d.z.abs() - half_height;
                let outside = (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                outside + dr.max(dz).min(0.0)
            }
            Solid::Hull { poly, .. } => poly.plane_distance(p),
        }
    }

    /// First intersection parameter of `origin + t·dir` with t in
    /// `[t_min, t_max]`, exact for every variant.
    pub fn ray_hit(&self, origin: &V3, dir: &V3, t_min: f64, t_max: f64) -> Option<f64> {
        match self {
            Solid::Cuboid { center, half } => ConvexPolytope::cuboid(*center, *half).ray_hit(origin, dir, t_min, t_max),
            Solid::Hull { poly, .. } => poly.ray_hit(origin, dir, t_min, t_max),
            Solid::Cylinder { center, radius, half_height } => {
                let o = origin - center;
                let (mut t0, mut t1) = (t_min, t_max);
                // slab in z
                if dir.z.abs() < 1e-15 {
                    if o.z.abs() > *half_height {
                        return None;
                    }
                } else {
                    let a = (-half_height - o.z) / dir.z;
                    let b = (half_height - o.z) / dir.z;
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
                // infinite cylinder
                let qa = dir.x * dir.x + dir.y * dir.y;
                let qb = 2.0 * (o.x * dir.x + o.y * dir.y);
                let qc = o.x * o.x + o.y * o.y - radius * radius;
                if qa < 1e-15 {
                    if qc > 0.0 {
                        return None;
                    }
                } else {
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc < 0.0 {
                        return None;
                    }
                    let sq = disc.sqrt();
                    t0 = t0.max((-qb - sq) / (2.0 * qa));
                    t1 = t1.min((-qb + sq) / (2.0 * qa));
                }
                (t0 <= t1).then_some(t0)
            }
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Solid::Cuboid { half, .. } => 8.0 * (half.x * half.y + half.y * half.z + half.x * half.z),
            Solid::Cylinder { radius, half_height, .. } => {
                let tau = std::f64::consts::TAU;
                tau * radius * 2.0 * half_height + tau * radius * radius
            }
            Solid::Hull { triangles, .. } => triangles.iter().map(tri_area).sum(),
        }
    }

    /// Random surface samples with outward normals; the expected count is
    /// `area · density`.
    pub fn sample_surface<R: Rng>(&self, rng: &mut R, density: f64) -> Vec<(V3, V3)> {
        let mut out = Vec::new();
        match self {
            Solid::Cuboid { center, half } => {
                for axis in 0..3 {
                    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                    let face_area = 4.0 * half[u] * half[v];
                    for sign in [-1.0, 1.0] {
                        let n = count(rng, face_area * density);
                        let mut normal = V3::zeros();
                        normal[axis] = sign;
                        for _ in 0..n {
                            let mut p = *center;
                            p[axis] += sign * half[axis];
                            p[u] += rng.random_range(-half[u]..=half[u]);
                            p[v] += rng.random_range(-half[v]..=half[v]);
                            out.push((p, normal));
                        }
                    }
                }
            }
            Solid::Cylinder { center, radius, half_height } => {
                let tau = std::f64::consts::TAU;
                let side = count(rng, tau * radius * 2.0 * half_height * density);
                for _ in 0..side {
                    let a = rng.random_range(0.0..tau);
                    let z = rng.random_range(-*half_height..=*half_height);
                    let n = V3::new(a.cos(), a.sin(), 0.0);
                    out.push((center + n * *radius + V3::new(0.0, 0.0, z), n));
                }
                for sign in [-1.0, 1.0] {
                    let cap = count(rng, std::f64::consts::PI * radius * radius * density);
                    for _ in 0..cap {
                        let a = rng.random_range(0.0..tau);
                        let r = radius * rng.random::<f64>().sqrt();
                        let p = center + V3::new(r * a.cos(), r * a.sin(), sign * half_height);
                        out.push((p, V3::new(0.0, 0.0, sign)));
                    }
                }
            }
            Solid::Hull { triangles, .. } => {
                for t in triangles {
                    let n = count(rng, tri_area(t) * density);
                    let normal = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
                    for _ in 0..n {
                        let (mut a, mut b): (f64, f64) = (rng.random(), rng.random());
                        if a + b > 1.0 {
                            a = 1.0 - a;
                            b = 1.0 - b;
                        }
                        out.push((t[0] + (t[1] - t[0]) * a + (t[2] - t[0]) * b, normal));
                    }
                }
            }
        }
        out
    }

    /// Local-frame bounding box.
    pub fn aabb(&self) -> (V3, V3) {
        match self {
            Solid::Cuboid { center, half } => (center - half, center + half),
            Solid::Cylinder { center, radius, half_height } => {
                let h = V3::new(*radius, *radius, *half_height);
                (center - h, center + h)
            }
            Solid::Hull { poly, .. } => poly.aabb(),
        }
    }
}

fn tri_area(t: &[V3; 3]) -> f64 {
    0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()
}

/// Integer count with expectation `x` (floor plus a Bernoulli remainder).
fn count<R: Rng>(rng: &mut R, x: f64) -> usize {
    let base = x.floor();
    let extra = if rng.random::<f64>() < x - base { 1 } else { 0 };
    base as usize + extra
}
