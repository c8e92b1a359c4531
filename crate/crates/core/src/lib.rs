pub mod geometry;
pub mod world;
pub mod perception;
pub mod thresholds;
pub mod description;
pub mod grounding;
pub mod learning;
pub mod skills;
pub mod plan;
pub mod planner;
pub mod session;
pub mod value;
pub mod fixtures;
