//! Effective permissions against an ancestor-walk oracle on random forests.

use std::sync::Arc;

use lore_core::model::{Model, ModelError, PermissionLevel};
use lore_core::{CollectionId, Database, PrincipalId};
use lore_testkit::oracle::PermissionWorld;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Plan {
    principals: usize,
    /// (parent index below own index, owner)
    nodes: Vec<(Option<usize>, usize)>,
    grants: Vec<(usize, usize, bool)>,
}

fn plan() -> impl Strategy<Value = Plan> {
    (1usize..=10, 1usize..=50).prop_flat_map(|(principals, n)| {
        let nodes = (0..n)
            .map(|i| {
                let parent = if i == 0 {
                    Just(None).boxed()
                } else {
                    prop::option::weighted(0.8, 0..i).boxed()
                };
                (parent, 0..principals)
            })
            .collect::<Vec<_>>();
        let grants = prop::collection::vec((0..n, 0..principals, any::<bool>()), 0..=30);
        (Just(principals), nodes, grants).prop_map(|(principals, nodes, grants)| Plan {
            principals,
            nodes,
            grants,
        })
    })
}

fn level(l: PermissionLevel) -> u8 {
    match l {
        PermissionLevel::None => 0,
        PermissionLevel::View => 1,
        PermissionLevel::Edit => 2,
    }
}

/// Builds the forest through the public API: every node starts as a root of
/// its owner, then moves under its parent with a temporary EDIT grant.
fn build(plan: &Plan) -> (Model, Vec<PrincipalId>, Vec<CollectionId>, PermissionWorld) {
    let model = Model::new(Arc::new(Database::open_in_memory().unwrap()));
    let people: Vec<PrincipalId> = (0..plan.principals)
        .map(|i| model.ensure_principal(&format!("p{i}")).unwrap().id)
        .collect();
    let ids: Vec<CollectionId> = plan
        .nodes
        .iter()
        .enumerate()
        .map(|(i, &(_, owner))| model.create_collection(&format!("c{i}"), people[owner], None).unwrap().id)
        .collect();
    let mut world = PermissionWorld {
        parent: vec![None; ids.len()],
        owner: plan.nodes.iter().map(|&(_, o)| o).collect(),
        ..Default::default()
    };
    for (i, &(parent, owner)) in plan.nodes.iter().enumerate() {
        let Some(p) = parent else { continue };
        let parent_owner = plan.nodes[p].1;
        let temporary = parent_owner != owner && world.effective(owner, p) < 2;
        if temporary {
            model
                .grant_permission(ids[p], people[owner], PermissionLevel::Edit, people[parent_owner])
                .unwrap();
        }
        model.move_collection(ids[i], Some(ids[p]), people[owner]).unwrap();
        if temporary {
            model.revoke_permission(ids[p], people[owner], people[parent_owner]).unwrap();
        }
        world.parent[i] = Some(p);
    }
    for &(c, who, edit) in &plan.grants {
        let owner = world.owner[c];
        let lvl = if edit { PermissionLevel::Edit } else { PermissionLevel::View };
        let res = model.grant_permission(ids[c], people[who], lvl, people[owner]);
        if who == owner {
            assert!(matches!(res, Err(ModelError::Invalid(_))), "self grant must be rejected");
        } else {
            res.unwrap();
            world.grants.insert((c, who), level(lvl));
        }
    }
    (model, people, ids, world)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matches_ancestor_walk_oracle(plan in plan()) {
        let (model, people, ids, world) = build(&plan);
        for (pi, &p) in people.iter().enumerate() {
            let visible: Vec<CollectionId> = model.visible_collections(p).unwrap().into_iter().map(|c| c.id).collect();
            let mut expected_visible = Vec::new();
            for (ci, &c) in ids.iter().enumerate() {
                let got = level(model.effective_permission(p, c).unwrap());
                prop_assert_eq!(got, world.effective(pi, ci), "principal {} collection {}", pi, ci);
                if got > 0 {
                    expected_visible.push(c);
                }
            }
            prop_assert_eq!(visible, expected_visible);
        }
    }

    #[test]
    fn private_by_default(plan in plan()) {
        let (model, people, ids, world) = build(&plan);
        for (ci, &c) in ids.iter().enumerate() {
            let chain_has_grant_or_owner = |pi: usize| {
                let mut node = Some(ci);
                while let Some(n) = node {
                    if world.owner[n] == pi || world.grants.contains_key(&(n, pi)) {
                        return true;
                    }
                    node = world.parent[n];
                }
                false
            };
            for (pi, &p) in people.iter().enumerate() {
                if !chain_has_grant_or_owner(pi) {
                    prop_assert_eq!(model.effective_permission(p, c).unwrap(), PermissionLevel::None);
                }
            }
        }
    }

    #[test]
    fn forest_survives_random_moves(plan in plan(), moves in prop::collection::vec((0usize..50, prop::option::of(0usize..50)), 0..40)) {
        let (model, people, ids, mut world) = build(&plan);
        for (a, b) in moves {
            let (a, b) = (a % ids.len(), b.map(|b| b % ids.len()));
            // the owner of `a` acting, with EDIT on the target required
            let actor = world.owner[a];
            let res = model.move_collection(ids[a], b.map(|b| ids[b]), people[actor]);
            let creates_cycle = b.is_some_and(|b| {
                let mut node = Some(b);
                while let Some(n) = node {
                    if n == a {
                        return true;
                    }
                    node = world.parent[n];
                }
                false
            });
            let allowed = b.map_or(true, |b| world.effective(actor, b) == 2);
            match res {
                Ok(_) => {
                    prop_assert!(allowed && !creates_cycle);
                    world.parent[a] = b;
                }
                Err(ModelError::CycleDetected(_)) => prop_assert!(creates_cycle && allowed),
                Err(ModelError::PermissionDenied) => prop_assert!(!allowed),
                Err(ModelError::DuplicateSiblingName(_)) => {}
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }
        for (ci, &c) in ids.iter().enumerate() {
            let chain = model.ancestors(c).unwrap();
            prop_assert!(chain.len() < ids.len());
            let mut expected = Vec::new();
            let mut node = world.parent[ci];
            while let Some(n) = node {
                expected.push(ids[n]);
                node = world.parent[n];
            }
            prop_assert_eq!(chain, expected);
            for (pi, &p) in people.iter().enumerate() {
                prop_assert_eq!(level(model.effective_permission(p, c).unwrap()), world.effective(pi, ci));
            }
        }
    }
}
