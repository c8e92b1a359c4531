//! Build a skill library, render the API documentation the planner sees,
//! and round-trip it through skills.v1.

use skillplan::fixtures::taught_skill;
use skillplan::skills::{render_api_doc, DocDetail, SkillLibrary};

fn main() {
    let mut library = SkillLibrary::new();
    library.register(taught_skill("pick_mug_by_handle").unwrap()).unwrap();
    library.register(taught_skill("tilt_mug").unwrap()).unwrap();
    println!("version {} with {:?}", library.version(), library.names());
    if let Err(e) = library.register(taught_skill("tilt_mug").unwrap()) {
        println!("second registration: {e}");
    }
    println!("--- name only ---\n{}", render_api_doc(&library, DocDetail::NameOnly, &["learn_skill"]));
    println!("--- with docstrings ---\n{}", render_api_doc(&library, DocDetail::NameAndDocstring, &[]));
    let json = library.to_json();
    let mut copy = SkillLibrary::new();
    let added = copy.import_json(&json).unwrap();
    println!("imported {added:?}; again: {:?}", copy.import_json(&json).unwrap());
}
