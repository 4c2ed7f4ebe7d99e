use std::collections::BTreeSet;

use rusqlite::{params, Connection, OptionalExtension, Row};

use super::{Collection, Model, ModelError, PermissionGrant, PermissionLevel, Principal, Result};
use crate::db::{is_unique_violation, now_rfc3339};
use crate::ids::{CollectionId, PrincipalId};

const ANCESTORS_CTE: &str = "WITH RECURSIVE anc(id, parent, owner) AS (
        SELECT id, parent, owner FROM collections WHERE id = ?1
        UNION ALL
        SELECT c.id, c.parent, c.owner FROM collections c JOIN anc ON c.id = anc.parent
    )";

fn collection_from_row(row: &Row<'_>) -> rusqlite::Result<Collection> {
    Ok(Collection {
        id: row.get(0)?,
        name: row.get(1)?,
        owner: row.get(2)?,
        parent: row.get(3)?,
        created_at: row.get(4)?,
    })
}

pub(crate) fn get_collection(conn: &Connection, id: CollectionId) -> Result<Option<Collection>> {
    Ok(conn
        .query_row(
            "SELECT id, name, owner, parent, created_at FROM collections WHERE id = ?1",
            [id],
            collection_from_row,
        )
        .optional()?)
}

fn principal_exists(conn: &Connection, id: PrincipalId) -> Result<bool> {
    Ok(conn
        .query_row("SELECT 1 FROM principals WHERE id = ?1", [id], |_| Ok(()))
        .optional()?
        .is_some())
}

pub(crate) fn effective_permission(
    conn: &Connection,
    principal: PrincipalId,
    collection: CollectionId,
) -> Result<PermissionLevel> {
    if get_collection(conn, collection)?.is_none() {
        return Err(ModelError::CollectionNotFound(collection));
    }
    let owns: bool = conn.query_row(
        &format!("{ANCESTORS_CTE} SELECT EXISTS (SELECT 1 FROM anc WHERE owner = ?2)"),
        params![collection, principal],
        |r| r.get(0),
    )?;
    if owns {
        return Ok(PermissionLevel::Edit);
    }
    let mut stmt = conn.prepare(&format!(
        "{ANCESTORS_CTE} SELECT g.level FROM grants g JOIN anc ON g.collection = anc.id
         WHERE g.principal = ?2"
    ))?;
    let mut best = PermissionLevel::None;
    for level in stmt.query_map(params![collection, principal], |r| r.get::<_, String>(0))? {
        best = best.max(level?.parse()?);
    }
    Ok(best)
}

pub(crate) fn require(
    conn: &Connection,
    principal: PrincipalId,
    collection: CollectionId,
    needed: PermissionLevel,
) -> Result<()> {
    if effective_permission(conn, principal, collection)? >= needed {
        Ok(())
    } else {
        Err(ModelError::PermissionDenied)
    }
}

/// `ancestor` is `node` itself or lies on its parent chain.
fn is_ancestor_or_self(conn: &Connection, ancestor: CollectionId, node: CollectionId) -> Result<bool> {
    Ok(conn.query_row(
        &format!("{ANCESTORS_CTE} SELECT EXISTS (SELECT 1 FROM anc WHERE id = ?2)"),
        params![node, ancestor],
        |r| r.get(0),
    )?)
}

pub(crate) fn with_descendants(
    conn: &Connection,
    roots: &BTreeSet<CollectionId>,
) -> Result<BTreeSet<CollectionId>> {
    let mut out = BTreeSet::new();
    let mut stmt = conn.prepare(
        "WITH RECURSIVE sub(id) AS (
            SELECT ?1
            UNION
            SELECT c.id FROM collections c JOIN sub ON c.parent = sub.id
         ) SELECT id FROM sub",
    )?;
    for root in roots {
        for id in stmt.query_map([root], |r| r.get::<_, CollectionId>(0))? {
            out.insert(id?);
        }
    }
    Ok(out)
}

fn map_name_conflict(err: rusqlite::Error, name: &str) -> ModelError {
    if is_unique_violation(&err) {
        ModelError::DuplicateSiblingName(name.to_owned())
    } else {
        ModelError::Db(err)
    }
}

impl Model {
    /// Creates a principal, or returns the existing one with that display name.
    pub fn ensure_principal(&self, display_name: &str) -> Result<Principal> {
        let name = display_name.trim();
        if name.is_empty() {
            return Err(ModelError::Invalid("display name must not be empty".into()));
        }
        self.db.write(|tx| {
            tx.execute(
                "INSERT INTO principals (display_name) VALUES (?1) ON CONFLICT(display_name) DO NOTHING",
                [name],
            )?;
            let id = tx.query_row(
                "SELECT id FROM principals WHERE display_name = ?1",
                [name],
                |r| r.get(0),
            )?;
            Ok(Principal {
                id,
                display_name: name.to_owned(),
            })
        })
    }

    pub fn principal(&self, id: PrincipalId) -> Result<Principal> {
        self.db.read(|c| {
            c.query_row(
                "SELECT id, display_name FROM principals WHERE id = ?1",
                [id],
                |r| {
                    Ok(Principal {
                        id: r.get(0)?,
                        display_name: r.get(1)?,
                    })
                },
            )
            .optional()?
            .ok_or_else(|| ModelError::PrincipalNotFound(id.to_string()))
        })
    }

    pub fn principal_by_name(&self, display_name: &str) -> Result<Principal> {
        self.db.read(|c| {
            c.query_row(
                "SELECT id, display_name FROM principals WHERE display_name = ?1",
                [display_name.trim()],
                |r| {
                    Ok(Principal {
                        id: r.get(0)?,
                        display_name: r.get(1)?,
                    })
                },
            )
            .optional()?
            .ok_or_else(|| ModelError::PrincipalNotFound(display_name.to_owned()))
        })
    }

    pub fn create_collection(
        &self,
        name: &str,
        owner: PrincipalId,
        parent: Option<CollectionId>,
    ) -> Result<Collection> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ModelError::Invalid("collection name must not be empty".into()));
        }
        self.db.write(|tx| {
            if !principal_exists(tx, owner)? {
                return Err(ModelError::PrincipalNotFound(owner.to_string()));
            }
            if let Some(p) = parent {
                if get_collection(tx, p)?.is_none() {
                    return Err(ModelError::ParentNotFound(p));
                }
                require(tx, owner, p, PermissionLevel::Edit)?;
            }
            let created_at = now_rfc3339();
            tx.execute(
                "INSERT INTO collections (name, owner, parent, created_at) VALUES (?1, ?2, ?3, ?4)",
                params![name, owner, parent, created_at],
            )
            .map_err(|e| map_name_conflict(e, name))?;
            Ok(Collection {
                id: CollectionId(tx.last_insert_rowid()),
                name: name.to_owned(),
                owner,
                parent,
                created_at,
            })
        })
    }

    pub fn collection(&self, id: CollectionId) -> Result<Collection> {
        self.db
            .read(|c| get_collection(c, id)?.ok_or(ModelError::CollectionNotFound(id)))
    }

    pub fn children(&self, id: CollectionId) -> Result<Vec<Collection>> {
        self.db.read(|c| {
            let mut stmt = c.prepare(
                "SELECT id, name, owner, parent, created_at FROM collections WHERE parent = ?1 ORDER BY id",
            )?;
            let rows = stmt.query_map([id], collection_from_row)?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }

    /// Every collection on which `principal` has at least VIEW, in id order.
    pub fn visible_collections(&self, principal: PrincipalId) -> Result<Vec<Collection>> {
        self.db.read(|c| {
            let mut stmt = c.prepare(
                "WITH RECURSIVE vis(id) AS (
                    SELECT id FROM collections WHERE owner = ?1
                    UNION
                    SELECT collection FROM grants WHERE principal = ?1
                    UNION
                    SELECT c.id FROM collections c JOIN vis ON c.parent = vis.id
                 )
                 SELECT c.id, c.name, c.owner, c.parent, c.created_at
                 FROM collections c JOIN vis ON vis.id = c.id ORDER BY c.id",
            )?;
            let rows = stmt.query_map([principal], collection_from_row)?;
            Ok(rows.collect::<rusqlite::Result<Vec<_>>>()?)
        })
    }

    /// Parent chain of `id`, nearest first, excluding `id` itself.
    pub fn ancestors(&self, id: CollectionId) -> Result<Vec<CollectionId>> {
        self.db.read(|c| {
            if get_collection(c, id)?.is_none() {
                return Err(ModelError::CollectionNotFound(id));
            }
            let mut stmt = c.prepare(&format!("{ANCESTORS_CTE} SELECT id FROM anc"))?;
            let rows = stmt.query_map([id], |r| r.get::<_, CollectionId>(0))?;
            let mut all = rows.collect::<rusqlite::Result<Vec<_>>>()?;
            all.remove(0);
            Ok(all)
        })
    }

    /// `roots` together with every collection nested beneath them.
    pub fn with_descendants(&self, roots: &BTreeSet<CollectionId>) -> Result<BTreeSet<CollectionId>> {
        self.db.read(|c| with_descendants(c, roots))
    }

    pub fn move_collection(
        &self,
        id: CollectionId,
        new_parent: Option<CollectionId>,
        caller: PrincipalId,
    ) -> Result<Collection> {
        self.db.write(|tx| {
            let current = get_collection(tx, id)?.ok_or(ModelError::CollectionNotFound(id))?;
            require(tx, caller, id, PermissionLevel::Edit)?;
            if let Some(p) = new_parent {
                if get_collection(tx, p)?.is_none() {
                    return Err(ModelError::ParentNotFound(p));
                }
                require(tx, caller, p, PermissionLevel::Edit)?;
                if is_ancestor_or_self(tx, id, p)? {
                    return Err(ModelError::CycleDetected(id));
                }
            }
            tx.execute(
                "UPDATE collections SET parent = ?2 WHERE id = ?1",
                params![id, new_parent],
            )
            .map_err(|e| map_name_conflict(e, &current.name))?;
            Ok(Collection {
                parent: new_parent,
                ..current
            })
        })
    }

    /// Records (or replaces) `principal`'s grant on `collection`. Only the
    /// collection's owner may grant; EDIT does not confer granting.
    pub fn grant_permission(
        &self,
        collection: CollectionId,
        principal: PrincipalId,
        level: PermissionLevel,
        caller: PrincipalId,
    ) -> Result<PermissionGrant> {
        if level == PermissionLevel::None {
            return Err(ModelError::Invalid("grant level must be VIEW or EDIT".into()));
        }
        self.db.write(|tx| {
            let c = get_collection(tx, collection)?
                .ok_or(ModelError::CollectionNotFound(collection))?;
            if c.owner != caller {
                return Err(ModelError::PermissionDenied);
            }
            if !principal_exists(tx, principal)? {
                return Err(ModelError::PrincipalNotFound(principal.to_string()));
            }
            if principal == c.owner {
                return Err(ModelError::Invalid("the owner already holds EDIT".into()));
            }
            tx.execute(
                "INSERT INTO grants (collection, principal, level) VALUES (?1, ?2, ?3)
                 ON CONFLICT(collection, principal) DO UPDATE SET level = excluded.level",
                params![collection, principal, level.as_str()],
            )?;
            Ok(PermissionGrant {
                collection,
                principal,
                level,
            })
        })
    }

    /// Removes a grant; returns whether one existed. Owner only.
    pub fn revoke_permission(
        &self,
        collection: CollectionId,
        principal: PrincipalId,
        caller: PrincipalId,
    ) -> Result<bool> {
        self.db.write(|tx| {
            let c = get_collection(tx, collection)?
                .ok_or(ModelError::CollectionNotFound(collection))?;
            if c.owner != caller {
                return Err(ModelError::PermissionDenied);
            }
            let n = tx.execute(
                "DELETE FROM grants WHERE collection = ?1 AND principal = ?2",
                params![collection, principal],
            )?;
            Ok(n > 0)
        })
    }

    pub fn grants(&self, collection: CollectionId) -> Result<Vec<PermissionGrant>> {
        self.db.read(|c| {
            let mut stmt = c.prepare(
                "SELECT collection, principal, level FROM grants WHERE collection = ?1 ORDER BY principal",
            )?;
            let rows = stmt.query_map([collection], |r| {
                Ok((r.get(0)?, r.get(1)?, r.get::<_, String>(2)?))
            })?;
            rows.map(|row| {
                let (collection, principal, level) = row?;
                Ok(PermissionGrant {
                    collection,
                    principal,
                    level: level.parse()?,
                })
            })
            .collect()
        })
    }

    pub fn effective_permission(
        &self,
        principal: PrincipalId,
        collection: CollectionId,
    ) -> Result<PermissionLevel> {
        self.db.read(|c| effective_permission(c, principal, collection))
    }
}
