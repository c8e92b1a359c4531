use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Solid;

use super::WorldError;

type V3 = Vector3<f64>;

/// Handle attached to the +x outer wall of an open container, centered on
/// the wall at mid-height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Handle {
    pub extents: [f64; 3],
}

/// Object geometry in its own frame. The frame origin is the center of the
/// body's bounding box (a container handle sticks out past it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Box {
        extents: [f64; 3],
    },
    Cylinder {
        radius: f64,
        height: f64,
    },
    OpenContainer {
        extents: [f64; 3],
        wall: f64,
        cavity_depth: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        handle: Option<Handle>,
    },
    MeshLite {
        points: Vec<[f64; 3]>,
    },
}

/// Cavity of an open container in the container frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cavity {
    pub half_xy: Vector2<f64>,
    pub floor_z: f64,
    pub top_z: f64,
}

impl Shape {
    pub fn cube(edge: f64) -> Shape {
        Shape::Box { extents: [edge; 3] }
    }

    /// Open container whose floor is as thick as its walls.
    pub fn container(extents: [f64; 3], wall: f64) -> Shape {
        Shape::OpenContainer { extents, wall, cavity_depth: extents[2] - wall, handle: None }
    }

    pub fn mug(extents: [f64; 3], wall: f64, handle: [f64; 3]) -> Shape {
        Shape::OpenContainer {
            extents,
            wall,
            cavity_depth: extents[2] - wall,
            handle: Some(Handle { extents: handle }),
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidShape(m.to_string()));
        let pos = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x > 0.0);
        match self {
            Shape::Box { extents } => {
                if !pos(extents) {
                    return bad("box extents must be positive");
                }
            }
            Shape::Cylinder { radius, height } => {
                if !pos(&[*radius, *height]) {
                    return bad("cylinder radius and height must be positive");
                }
            }
            Shape::OpenContainer { extents, wall, cavity_depth, handle } => {
                if !pos(extents) || !pos(&[*wall, *cavity_depth]) {
                    return bad("container dimensions must be positive");
                }
                if *cavity_depth >= extents[2] {
                    return bad("cavity depth must be less than outer height");
                }
                if 2.0 * wall >= extents[0].min(extents[1]) {
                    return bad("walls leave no cavity");
                }
                if let Some(h) = handle {
                    if !pos(&h.extents) || h.extents[2] > extents[2] {
                        return bad("handle extents must be positive and no taller than the body");
                    }
                }
            }
            Shape::MeshLite { points } => {
                let pts: Vec<V3> = points.iter().map(|p| V3::from(*p)).collect();
                if pts.iter().any(|p| !p.iter().all(|c| c.is_finite())) || Solid::hull(&pts).is_none() {
                    return bad("mesh_lite points must span a volume");
                }
            }
        }
        Ok(())
    }

    /// Convex solids making up the shape. For containers index 0 is the
    /// floor, 1..=4 the walls, and 5 the handle when present.
    pub fn solids(&self) -> Vec<Solid> {
        match self {
            Shape::Box { extents } => vec![Solid::Cuboid { center: V3::zeros(), half: V3::from(*extents) / 2.0 }],
            Shape::Cylinder { radius, height } => {
                vec![Solid::Cylinder { center: V3::zeros(), radius: *radius, half_height: height / 2.0 }]
            }
            Shape::OpenContainer { extents, wall, cavity_depth, handle } => {
                let [x, y, z] = *extents;
                let (hx, hy, hz) = (x / 2.0, y / 2.0, z / 2.0);
                let floor_t = z - cavity_depth;
                let wall_h = *cavity_depth;
                let wall_cz = -hz + floor_t + wall_h / 2.0;
                let mut out = vec![
                    Solid::Cuboid { center: V3::new(0.0, 0.0, -hz + floor_t / 2.0), half: V3::new(hx, hy, floor_t / 2.0) },
                    Solid::Cuboid { center: V3::new(hx - wall / 2.0, 0.0, wall_cz), half: V3::new(wall / 2.0, hy, wall_h / 2.0) },
                    Solid::Cuboid { center: V3::new(-hx + wall / 2.0, 0.0, wall_cz), half: V3::new(wall / 2.0, hy, wall_h / 2.0) },
                    Solid::Cuboid {
                        center: V3::new(0.0, hy - wall / 2.0, wall_cz),
                        half: V3::new(hx - wall, wall / 2.0, wall_h / 2.0),
                    },
                    Solid::Cuboid {
                        center: V3::new(0.0, -hy + wall / 2.0, wall_cz),
                        half: V3::new(hx - wall, wall / 2.0, wall_h / 2.0),
                    },
                ];
                if let Some(h) = handle {
                    let he = V3::from(h.extents) / 2.0;
                    out.push(Solid::Cuboid { center: V3::new(hx + he.x, 0.0, 0.0), half: he });
                }
                out
            }
            Shape::MeshLite { points } => {
                let pts: Vec<V3> = points.iter().map(|p| V3::from(*p)).collect();
                Solid::hull(&pts).into_iter().collect()
            }
        }
    }

    pub fn cavity(&self) -> Option<Cavity> {
        match self {
            Shape::OpenContainer { extents, wall, cavity_depth, .. } => Some(Cavity {
                half_xy: Vector2::new(extents[0] / 2.0 - wall, extents[1] / 2.0 - wall),
                floor_z: extents[2] / 2.0 - cavity_depth,
                top_z: extents[2] / 2.0,
            }),
            _ => None,
        }
    }

    /// Index of the handle solid, if any.
    pub fn handle_solid(&self) -> Option<usize> {
        match self {
            Shape::OpenContainer { handle: Some(_), .. } => Some(5),
            _ => None,
        }
    }

    /// Body bounding box in the object frame (handle excluded).
    pub fn body_half_extents(&self) -> V3 {
        match self {
            Shape::Box { extents } | Shape::OpenContainer { extents, .. } => V3::from(*extents) / 2.0,
            Shape::Cylinder { radius, height } => V3::new(*radius, *radius, height / 2.0),
            Shape::MeshLite { points } => {
                let mut h = V3::zeros();
                for p in points {
                    h = h.sup(&V3::from(*p).abs());
                }
                h
            }
        }
    }

    pub fn round(&self, f: impl Fn(f64) -> f64) -> Shape {
        let r3 = |a: &[f64; 3]| a.map(&f);
        match self {
            Shape::Box { extents } => Shape::Box { extents: r3(extents) },
            Shape::Cylinder { radius, height } => Shape::Cylinder { radius: f(*radius), height: f(*height) },
            Shape::OpenContainer { extents, wall, cavity_depth, handle } => Shape::OpenContainer {
                extents: r3(extents),
                wall: f(*wall),
                cavity_depth: f(*cavity_depth),
                handle: handle.as_ref().map(|h| Handle { extents: r3(&h.extents) }),
            },
            Shape::MeshLite { points } => Shape::MeshLite { points: points.iter().map(r3).collect() },
        }
    }
}
