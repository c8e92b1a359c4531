//! Pick the mug with the built-in antipodal grasp and place it left of the
//! tray; prints the grasp region and score.

use skillplan::fixtures::{labelled, scene};
use skillplan::skills::Robot;

fn main() {
    let mut robot = Robot::new(scene("grasp_mug", 0).unwrap());
    let mug = labelled(robot.world(), "mug").unwrap();
    let tray = labelled(robot.world(), "tray").unwrap();
    robot.start_task().unwrap();
    robot.pick(mug).unwrap();
    let g = robot.last_grasp().unwrap();
    println!("grasped {mug} at the {:?} (score {:?})", g.region, g.score);
    let target = robot.get_place_position(mug, tray, "to the left of").unwrap();
    robot.place(mug, target).unwrap();
    println!("placed at {:?}", robot.get_location(mug).unwrap());
    robot.end_task().unwrap();
    let (_, desc) = robot.describe(true).unwrap();
    println!("{}", desc.text);
}
