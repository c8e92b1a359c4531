use approx::assert_abs_diff_eq;
use nalgebra::Vector3 as V3;
use skillplan::fixtures::{labelled, scene};
use skillplan::grounding::FindQuery;
use skillplan::skills::{lateral_place_position, GraspRegion, PlaceRelation, Robot, SkillError, SkillLibrary};
use skillplan::thresholds::Thresholds;
use skillplan::value::Value;
use skillplan::world::{ObjectSpec, Shape, WorldState};

fn running(world: WorldState) -> Robot {
    let mut r = Robot::new(world);
    r.start_task().unwrap();
    r
}

fn cube_world(edge: f64) -> WorldState {
    let mut w = WorldState::new(0);
    w.spawn_object(ObjectSpec::new("cube", Shape::cube(edge), 0.2, 0.0), true).unwrap();
    w.spawn_object(ObjectSpec::new("tray", Shape::container([0.26, 0.2, 0.05], 0.01), -0.2, 0.0), true).unwrap();
    w
}

#[test]
fn pick_then_place_at_its_location_restores_the_pose() {
    let mut r = running(cube_world(0.05));
    let id = labelled(r.world(), "cube").unwrap();
    let before = r.world().object(id).unwrap().pose;
    let loc = r.get_location(id).unwrap();
    r.pick(id).unwrap();
    assert_eq!(r.world().held().map(|h| h.object), Some(id));
    r.place(id, loc).unwrap();
    let after = r.world().object(id).unwrap().pose;
    assert!((after.position - before.position).norm() <= 1e-3, "{:?} vs {:?}", after.position, before.position);
    assert!(r.world().held().is_none());
}

#[test]
fn second_pick_reports_occupied_gripper() {
    let mut w = cube_world(0.05);
    let other = w.spawn_object(ObjectSpec::new("cube", Shape::cube(0.05), 0.0, 0.2), true).unwrap();
    let mut r = running(w);
    let first = r.world().object_ids()[0];
    r.pick(first).unwrap();
    let world_before = r.world().clone();
    assert_eq!(r.pick(other), Err(SkillError::GripperOccupied(first)));
    assert_eq!(r.world().object(other).unwrap().pose, world_before.object(other).unwrap().pose);
}

#[test]
fn oversized_object_has_no_grasp() {
    let mut r = running(cube_world(0.2));
    let id = labelled(r.world(), "cube").unwrap();
    assert_eq!(r.pick(id), Err(SkillError::NoGraspFound(id)));
    assert!(r.world().held().is_none());
}

#[test]
fn raising_the_grasp_threshold_rejects_every_candidate() {
    let th = Thresholds { grasp: 0.999, ..Thresholds::default() };
    let mut r = Robot::new(cube_world(0.05)).with_thresholds(th);
    r.start_task().unwrap();
    let id = labelled(r.world(), "cube").unwrap();
    assert_eq!(r.pick(id), Err(SkillError::NoGraspFound(id)));
}

#[test]
fn lateral_position_to_the_left() {
    let p = lateral_place_position(
        PlaceRelation::Left,
        V3::new(0.4, 0.2, 0.05),
        V3::new(0.1, 0.1, 0.05),
        V3::new(0.05, 0.05, 0.05),
    );
    assert_abs_diff_eq!(p.x, 0.23, epsilon = 1e-12);
    assert_abs_diff_eq!(p.y, 0.2, epsilon = 1e-12);
}

#[test]
fn place_phrase_outside_the_vocabulary() {
    let mut r = running(cube_world(0.05));
    let ids = r.world().object_ids();
    assert!(matches!(
        r.get_place_position(ids[0], ids[1], "beneath the table"),
        Err(SkillError::UnknownRelation(_))
    ));
    assert_eq!(r.match_relation("to the left of").unwrap(), PlaceRelation::Left);
}

#[test]
fn place_without_pick() {
    let mut r = running(cube_world(0.05));
    let id = r.world().object_ids()[0];
    assert_eq!(r.place(id, [0.0, 0.0, 0.05]), Err(SkillError::NothingHeld));
}

#[test]
fn place_of_an_object_not_held() {
    let mut r = running(cube_world(0.05));
    let ids = r.world().object_ids();
    r.pick(ids[0]).unwrap();
    assert_eq!(r.place(ids[1], [0.0, 0.0, 0.05]), Err(SkillError::NotHeld(ids[1])));
}

#[test]
fn skills_outside_a_task_are_out_of_order() {
    let mut r = Robot::new(cube_world(0.05));
    assert!(matches!(r.get_all_object_ids(), Err(SkillError::OutOfOrder(_))));
    assert!(matches!(r.end_task(), Err(SkillError::OutOfOrder(_))));
    r.start_task().unwrap();
    assert!(matches!(r.start_task(), Err(SkillError::OutOfOrder(_))));
    r.end_task().unwrap();
    assert!(matches!(r.pick(r.world().object_ids()[0]), Err(SkillError::OutOfOrder(_))));
}

#[test]
fn banana_container_is_the_mug() {
    let mut r = running(scene("sink", 0).unwrap());
    let banana = labelled(r.world(), "banana").unwrap();
    let mug = labelled(r.world(), "mug").unwrap();
    let sink = labelled(r.world(), "sink").unwrap();
    assert_eq!(r.get_container_id(banana).unwrap(), Some(mug));
    assert_eq!(r.get_container_id(mug).unwrap(), Some(sink));
    let inside = r.get_objects_contained_and_over(sink).unwrap();
    assert!(inside.contains(&mug));
}

#[test]
fn find_by_label_and_by_visual_attribute() {
    let mut r = running(scene("blocks", 0).unwrap());
    let ids = r.get_all_object_ids().unwrap();
    assert_eq!(ids.len(), 3);
    let red = r.find(&FindQuery::visual("red block")).unwrap();
    assert!(r.world().object(red).unwrap().attributes.iter().any(|a| a == "red"));
    let only = r.find(&FindQuery { candidates: Some(vec![ids[2]]), ..FindQuery::label("block") }).unwrap();
    assert_eq!(only, ids[2]);
}

#[test]
fn find_unknown_label_is_an_error() {
    let mut r = running(scene("blocks", 0).unwrap());
    assert!(matches!(r.find(&FindQuery::label("giraffe")), Err(SkillError::Grounding(_))));
}

#[test]
fn top_down_grasp_on_the_mug_is_not_on_the_handle() {
    let mut r = running(scene("grasp_mug", 0).unwrap());
    let mug = labelled(r.world(), "mug").unwrap();
    r.pick(mug).unwrap();
    let g = r.last_grasp().unwrap();
    assert_eq!(g.object, mug);
    assert_eq!(g.region, GraspRegion::Rim);
}

#[test]
fn call_dispatches_builtins_by_name() {
    let lib = SkillLibrary::new();
    let mut r = Robot::new(cube_world(0.05));
    r.call(&lib, "start_task", &[], &[]).unwrap();
    let Value::List(ids) = r.call(&lib, "get_all_object_ids", &[], &[]).unwrap() else { panic!("not a list") };
    assert_eq!(ids.len(), 2);
    assert!(matches!(r.call(&lib, "pick", &[], &[]), Err(SkillError::ArityError(_))));
    assert!(matches!(r.call(&lib, "pick", &[Value::Str("x".into())], &[]), Err(SkillError::TypeError(_))));
    assert!(matches!(r.call(&lib, "fly", &[], &[]), Err(SkillError::UnknownSkill(_))));
}
