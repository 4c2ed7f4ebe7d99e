//! Nested collections, private by default; grants flow down to descendants.
//!
//! cargo run -p lore-examples --example permissions

use std::sync::Arc;

use lore_core::model::{Model, PermissionLevel};
use lore_core::Database;

fn main() {
    let model = Model::new(Arc::new(Database::open_in_memory().unwrap()));
    let ada = model.ensure_principal("ada").unwrap().id;
    let grace = model.ensure_principal("grace").unwrap().id;
    let linus = model.ensure_principal("linus").unwrap().id;

    let lab = model.create_collection("lab", ada, None).unwrap().id;
    let y2024 = model.create_collection("2024", ada, Some(lab)).unwrap().id;
    let drafts = model.create_collection("drafts", ada, Some(y2024)).unwrap().id;

    let show = |when: &str| {
        println!("{when}:");
        for (name, p) in [("ada", ada), ("grace", grace), ("linus", linus)] {
            let levels: Vec<String> = [lab, y2024, drafts]
                .iter()
                .map(|&c| format!("{:?}", model.effective_permission(p, c).unwrap()))
                .collect();
            println!("  {name:<6} lab={:<5} 2024={:<5} drafts={}", levels[0], levels[1], levels[2]);
        }
    };
    show("fresh tree");

    model.grant_permission(lab, grace, PermissionLevel::View, ada).unwrap();
    model.grant_permission(drafts, linus, PermissionLevel::Edit, ada).unwrap();
    show("grace may view lab, linus may edit drafts");

    // linus can add below drafts, but not move drafts itself elsewhere
    let notes = model.create_collection("linus notes", linus, Some(drafts)).unwrap();
    println!("linus created {:?} under drafts", notes.name);
    match model.grant_permission(lab, linus, PermissionLevel::View, grace) {
        Err(e) => println!("grace cannot share ada's collection: {e}"),
        Ok(_) => unreachable!(),
    }
    match model.move_collection(lab, Some(drafts), ada) {
        Err(e) => println!("moving lab under its own descendant: {e}"),
        Ok(_) => unreachable!(),
    }

    model.revoke_permission(lab, grace, ada).unwrap();
    show("after revoking grace");
    let visible: Vec<String> = model.visible_collections(linus).unwrap().into_iter().map(|c| c.name).collect();
    println!("linus sees {visible:?}");
}
