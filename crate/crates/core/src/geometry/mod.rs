//! Rigid transforms, convex hulls and convex solids.

pub mod hull2d;
pub mod hull3d;
pub mod polytope;
pub mod pose;
pub mod solid;

pub use hull3d::ConvexHull3;
pub use polytope::ConvexPolytope;
pub use pose::Pose;
pub use solid::Solid;
