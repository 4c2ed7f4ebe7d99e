use std::sync::Arc;

use lore_core::ingest::Source;
use lore_core::model::DocumentKind;
use lore_llm::{ScriptedProvider, Turn};
use reqwest::{Method, StatusCode};
use serde_json::json;

use super::{build_world, split, start};

/// `nodes[i] = (parent index below i, owner)`; `grants = (collection, principal, edit)`.
#[derive(Debug, Clone)]
pub struct Plan {
    pub principals: usize,
    pub nodes: Vec<(Option<usize>, usize)>,
    pub grants: Vec<(usize, usize, bool)>,
}

fn expect(allowed: bool, ok: StatusCode) -> StatusCode {
    if allowed {
        ok
    } else {
        StatusCode::FORBIDDEN
    }
}

/// Probes every endpoint as every principal on every collection of a world
/// built from `plan`, and panics on the first status the oracle disagrees with.
pub async fn check(plan: Plan) {
    let s = start(super::app(Arc::new(ScriptedProvider::always(Turn::text("ok"))), None, 8)).await;
    let users: Vec<_> = (0..plan.principals).map(|i| s.user(&format!("p{i}"))).collect();
    let outsider = s.model().ensure_principal("outsider").unwrap().id;
    let world = build_world(s.model(), users.iter().map(|u| u.0).collect(), &plan.nodes, &plan.grants);
    let ing = &s.app.ingestor;
    let mut docs = Vec::new();
    for (ci, &c) in world.ids.iter().enumerate() {
        let owner = world.people[world.oracle.owner[ci]];
        let source = Source::Upload {
            bytes: format!("resident document of collection {ci}").into_bytes(),
            kind: DocumentKind::Note,
            media_type: None,
        };
        docs.push(ing.ingest_document(source, c, None, owner).await.unwrap().document.id);
    }

    // listings first, before any probe adds collections
    for (pi, (_, token)) in users.iter().enumerate() {
        let (status, body) = split(s.req(Method::GET, "/collections", Some(token)).send().await.unwrap()).await;
        assert_eq!(status, StatusCode::OK);
        let got: Vec<(i64, String)> = body["collections"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (c["id"].as_i64().unwrap(), c["permission"].as_str().unwrap().to_owned()))
            .collect();
        let want: Vec<(i64, String)> = world
            .ids
            .iter()
            .enumerate()
            .filter_map(|(ci, c)| match world.oracle.effective(pi, ci) {
                0 => None,
                1 => Some((c.0, "VIEW".to_owned())),
                _ => Some((c.0, "EDIT".to_owned())),
            })
            .collect();
        assert_eq!(got, want, "listing for p{pi}");
    }

    let mut serial = 0;
    for (pi, (_, token)) in users.iter().enumerate() {
        let token = Some(token.as_str());
        for (ci, &c) in world.ids.iter().enumerate() {
            serial += 1;
            let level = world.oracle.effective(pi, ci);
            let (view, edit, owner) = (level >= 1, level == 2, world.oracle.owner[ci] == pi);
            let doc = docs[ci];
            let probes: Vec<(&str, reqwest::RequestBuilder, StatusCode)> = vec![
                ("get collection", s.req(Method::GET, &format!("/collections/{c}"), token), expect(view, StatusCode::OK)),
                (
                    "search",
                    s.req(Method::POST, "/search", token).json(&json!({"query": "resident", "collection_ids": [c.0]})),
                    expect(view, StatusCode::OK),
                ),
                ("get document", s.req(Method::GET, &format!("/documents/{doc}"), token), expect(view, StatusCode::OK)),
                ("get blob", s.req(Method::GET, &format!("/documents/{doc}/blob"), token), expect(view, StatusCode::OK)),
                (
                    "create child",
                    s.req(Method::POST, "/collections", token).json(&json!({"name": format!("probe{serial}"), "parent_id": c.0})),
                    expect(edit, StatusCode::CREATED),
                ),
                (
                    "grant",
                    s.req(Method::POST, &format!("/collections/{c}/grants"), token)
                        .json(&json!({"principal": outsider.0, "level": "VIEW"})),
                    expect(owner, StatusCode::OK),
                ),
            ];
            for (what, req, want) in probes {
                let (status, body) = split(req.send().await.unwrap()).await;
                assert_eq!(status, want, "{what} by p{pi} on c{ci} (level {level}): {body}");
                if status == StatusCode::FORBIDDEN {
                    assert_eq!(body["code"], "PERMISSION_DENIED");
                }
            }

            let form = reqwest::multipart::Form::new()
                .part("file", reqwest::multipart::Part::bytes(format!("upload {serial}").into_bytes()).file_name("n.txt"))
                .text("kind", "note")
                .text("collection_id", c.to_string());
            let (status, body) = split(s.req(Method::POST, "/documents", token).multipart(form).send().await.unwrap()).await;
            assert_eq!(status, expect(edit, StatusCode::CREATED), "upload by p{pi} on c{ci}: {body}");

            // a throwaway document to delete
            let owner_id = world.people[world.oracle.owner[ci]];
            let victim = ing
                .ingest_document(
                    Source::Upload {
                        bytes: format!("victim {serial}").into_bytes(),
                        kind: DocumentKind::Note,
                        media_type: None,
                    },
                    c,
                    None,
                    owner_id,
                )
                .await
                .unwrap()
                .document
                .id;
            let (status, _) = split(s.req(Method::DELETE, &format!("/documents/{victim}"), token).send().await.unwrap()).await;
            assert_eq!(status, expect(edit, StatusCode::OK), "delete by p{pi} on c{ci}");

            // moving one of the caller's own roots under c needs EDIT on c
            let mine = s.model().create_collection(&format!("mover{serial}"), users[pi].0, None).unwrap().id;
            let (status, _) = split(
                s.req(Method::POST, &format!("/collections/{mine}/move"), token)
                    .json(&json!({"parent_id": c.0}))
                    .send()
                    .await
                    .unwrap(),
            )
            .await;
            assert_eq!(status, expect(edit, StatusCode::OK), "move under c{ci} by p{pi}");
        }
    }

    // the model agrees with the oracle after all probes
    for (pi, &p) in world.people.iter().enumerate() {
        for (ci, &c) in world.ids.iter().enumerate() {
            assert_eq!(super::level(s.model().effective_permission(p, c).unwrap()), world.oracle.effective(pi, ci));
        }
    }
    assert!(s.model().orphan_chunks().unwrap().is_empty());
}
