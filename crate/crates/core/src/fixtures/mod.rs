//! Bundled scenes, expert demonstrations, scripted plans and evaluation
//! suites.

mod experts;
mod scenes;
mod tasks;

pub use experts::*;
pub use scenes::*;
pub use tasks::*;
