//! Ground label, visual and location queries against a perceived scene.

use skillplan::fixtures::scene;
use skillplan::grounding::FindQuery;
use skillplan::skills::Robot;

fn main() {
    let mut robot = Robot::new(scene("sink", 0).unwrap());
    robot.start_task().unwrap();
    let queries = [
        FindQuery::label("mug"),
        FindQuery::label("the banana"),
        FindQuery::location("inside the sink"),
        FindQuery::location("to the left of the sink"),
        FindQuery::label("giraffe"),
    ];
    for q in &queries {
        match robot.find(q) {
            Ok(id) => println!("{q:?} -> {id} ({})", robot.world().object(id).unwrap().label),
            Err(e) => println!("{q:?} -> {e}"),
        }
    }
    robot.end_task().unwrap();
}
