//! Bearer tokens. Only the SHA-256 of a token is stored.

use std::sync::Arc;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use lore_core::{Database, Digest, PrincipalId};
use rand::RngCore;
use rusqlite::{params, OptionalExtension};
use thiserror::Error;

const MIGRATION: &str = "
CREATE TABLE IF NOT EXISTS api_tokens (
    id         INTEGER PRIMARY KEY AUTOINCREMENT,
    token_hash BLOB NOT NULL UNIQUE,
    principal  INTEGER NOT NULL REFERENCES principals(id) ON DELETE CASCADE,
    created_at TEXT NOT NULL,
    revoked    INTEGER NOT NULL DEFAULT 0
);
";

pub const TOKEN_BYTES: usize = 32;

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("missing, unknown or revoked bearer token")]
    Unauthorized,
    #[error("database error: {0}")]
    Db(#[from] rusqlite::Error),
}

/// A token record without its secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiToken {
    pub id: i64,
    pub principal: PrincipalId,
    pub created_at: String,
    pub revoked: bool,
}

#[derive(Debug, Clone)]
pub struct TokenStore {
    db: Arc<Database>,
}

fn hash(token: &str) -> Vec<u8> {
    Digest::of_text(token).0.to_vec()
}

impl TokenStore {
    pub fn new(db: Arc<Database>) -> Result<Self, AuthError> {
        db.migrate(MIGRATION)?;
        Ok(TokenStore { db })
    }

    /// Issues a fresh token for `principal` and returns its secret, which is
    /// not recoverable afterwards.
    pub fn create(&self, principal: PrincipalId) -> Result<String, AuthError> {
        let mut secret = [0u8; TOKEN_BYTES];
        rand::thread_rng().fill_bytes(&mut secret);
        let token = URL_SAFE_NO_PAD.encode(secret);
        let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
        self.db.write(|tx| {
            tx.execute(
                "INSERT INTO api_tokens (token_hash, principal, created_at) VALUES (?1, ?2, ?3)",
                params![hash(&token), principal, created_at],
            )
        })?;
        Ok(token)
    }

    pub fn authenticate(&self, token: &str) -> Result<PrincipalId, AuthError> {
        let found: Option<PrincipalId> = self.db.read(|c| {
            c.query_row(
                "SELECT principal FROM api_tokens WHERE token_hash = ?1 AND revoked = 0",
                [hash(token.trim())],
                |r| r.get(0),
            )
            .optional()
        })?;
        found.ok_or(AuthError::Unauthorized)
    }

    /// Marks the token revoked; false when it was unknown or already revoked.
    pub fn revoke(&self, token: &str) -> Result<bool, AuthError> {
        let n = self.db.write(|tx| {
            tx.execute(
                "UPDATE api_tokens SET revoked = 1 WHERE token_hash = ?1 AND revoked = 0",
                [hash(token.trim())],
            )
        })?;
        Ok(n == 1)
    }

    pub fn tokens_of(&self, principal: PrincipalId) -> Result<Vec<ApiToken>, AuthError> {
        Ok(self.db.read(|c| {
            let mut stmt =
                c.prepare("SELECT id, principal, created_at, revoked FROM api_tokens WHERE principal = ?1 ORDER BY id")?;
            let rows = stmt.query_map([principal], |r| {
                Ok(ApiToken {
                    id: r.get(0)?,
                    principal: r.get(1)?,
                    created_at: r.get(2)?,
                    revoked: r.get(3)?,
                })
            })?;
            rows.collect::<rusqlite::Result<Vec<_>>>()
        })?)
    }
}

/// The token of an `Authorization: Bearer <token>` header value.
pub fn bearer(header: &str) -> Option<&str> {
    let (scheme, rest) = header.trim().split_once(' ')?;
    let token = rest.trim();
    (scheme.eq_ignore_ascii_case("bearer") && !token.is_empty()).then_some(token)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lore_core::model::Model;

    fn store() -> (TokenStore, PrincipalId, Arc<Database>) {
        let db = Arc::new(Database::open_in_memory().unwrap());
        let alice = Model::new(db.clone()).ensure_principal("alice").unwrap().id;
        (TokenStore::new(db.clone()).unwrap(), alice, db)
    }

    #[test]
    fn issue_authenticate_revoke() {
        let (tokens, alice, _) = store();
        let t = tokens.create(alice).unwrap();
        assert_eq!(URL_SAFE_NO_PAD.decode(&t).unwrap().len(), TOKEN_BYTES);
        assert_eq!(tokens.authenticate(&t).unwrap(), alice);
        assert!(matches!(tokens.authenticate("nope"), Err(AuthError::Unauthorized)));
        assert!(tokens.revoke(&t).unwrap());
        assert!(!tokens.revoke(&t).unwrap());
        assert!(matches!(tokens.authenticate(&t), Err(AuthError::Unauthorized)));
        assert!(tokens.tokens_of(alice).unwrap()[0].revoked);
    }

    #[test]
    fn only_the_hash_is_stored() {
        let (tokens, alice, db) = store();
        let t = tokens.create(alice).unwrap();
        let stored: Vec<Vec<u8>> = db
            .read(|c| {
                let mut s = c.prepare("SELECT token_hash FROM api_tokens")?;
                let rows = s.query_map([], |r| r.get(0))?;
                rows.collect::<rusqlite::Result<Vec<_>>>()
            })
            .unwrap();
        assert_eq!(stored, vec![Digest::of_text(&t).0.to_vec()]);
        let dump = format!("{stored:?}");
        assert!(!dump.contains(&t));
    }

    #[test]
    fn migration_is_idempotent() {
        let (tokens, alice, db) = store();
        let t = tokens.create(alice).unwrap();
        let again = TokenStore::new(db).unwrap();
        assert_eq!(again.authenticate(&t).unwrap(), alice);
    }

    #[test]
    fn bearer_header_parsing() {
        assert_eq!(bearer("Bearer abc"), Some("abc"));
        assert_eq!(bearer("bearer   abc "), Some("abc"));
        assert_eq!(bearer("Basic abc"), None);
        assert_eq!(bearer("Bearer "), None);
        assert_eq!(bearer("abc"), None);
    }
}
