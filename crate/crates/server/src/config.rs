//! Flat key/value service configuration.
//!
//! Values come from a TOML file of top-level scalar keys; a `LORE_<KEY>`
//! environment variable overrides the key of the same name. Any value of the
//! form `env:NAME` is replaced by the environment variable `NAME`, so secrets
//! need not be written to the file.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use lore_core::index::FusionWeights;
use lore_core::ingest::{ChunkPolicy, ARXIV_ENDPOINT};
use lore_core::storage::S3Config;
use thiserror::Error;

/// Every accepted key with its default, if it has one.
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("bind", None),
    ("database_url", None),
    ("blob_backend", None),
    ("blob_root", None),
    ("s3_endpoint", None),
    ("s3_bucket", None),
    ("s3_region", Some("us-east-1")),
    ("s3_access_key", None),
    ("s3_secret_key", None),
    ("embedder", None),
    ("embedder_dim", Some("64")),
    ("embedder_url", None),
    ("embedder_model", None),
    ("embedder_key", None),
    ("provider", None),
    ("provider_script", None),
    ("provider_base_url", None),
    ("provider_model", None),
    ("provider_key", None),
    ("provider_timeout_secs", Some("120")),
    ("provider_stream", Some("true")),
    ("chunk_size", Some("1600")),
    ("chunk_overlap", Some("200")),
    ("fusion_alpha", Some("0.7")),
    ("fusion_k", Some("8")),
    ("fusion_n_vec", Some("50")),
    ("fusion_n_lex", Some("50")),
    ("max_tool_rounds", Some("8")),
    ("arxiv_endpoint", Some(ARXIV_ENDPOINT)),
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("config file is not valid TOML: {0}")]
    Parse(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing required config field `{0}`")]
    Missing(String),
    #[error("config field `{field}` refers to unset environment variable {var}")]
    UnsetVariable { field: String, var: String },
    #[error("invalid value for config field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlobConfig {
    Fs { root: PathBuf },
    S3(S3Config),
    Memory,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedderConfig {
    Hash {
        dim: usize,
    },
    Http {
        url: String,
        model: String,
        key: Option<String>,
        dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderConfig {
    /// Replays a JSON script file.
    Scripted { script: PathBuf },
    OpenAi {
        base_url: String,
        model: String,
        key: Option<String>,
        timeout: Duration,
        stream: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub bind: SocketAddr,
    pub database_url: String,
    pub blob: BlobConfig,
    pub embedder: EmbedderConfig,
    pub provider: ProviderConfig,
    pub chunk_policy: ChunkPolicy,
    pub weights: FusionWeights,
    pub max_tool_rounds: usize,
    pub arxiv_endpoint: String,
}

impl Config {
    /// Reads `path` (when given) and applies the process environment.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| ConfigError::Read {
                path: p.display().to_string(),
                reason: e.to_string(),
            })?),
            None => None,
        };
        Self::from_sources(text.as_deref(), &|k| std::env::var(k).ok())
    }

    /// Builds a config from file text and an environment lookup.
    pub fn from_sources(file: Option<&str>, env: &dyn Fn(&str) -> Option<String>) -> Result<Config, ConfigError> {
        let mut raw = BTreeMap::new();
        if let Some(text) = file {
            let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_owned()))?;
            for (key, value) in table {
                if !KEYS.iter().any(|(k, _)| *k == key) {
                    return Err(ConfigError::UnknownKey(key));
                }
                let s = match value {
                    toml::Value::String(s) => s,
                    toml::Value::Integer(i) => i.to_string(),
                    toml::Value::Float(f) => f.to_string(),
                    toml::Value::Boolean(b) => b.to_string(),
                    _ => {
                        return Err(ConfigError::Invalid {
                            field: key,
                            reason: "expected a string, number or boolean".into(),
                        })
                    }
                };
                raw.insert(key, s);
            }
        }
        for (key, _) in KEYS {
            if let Some(v) = env(&format!("LORE_{}", key.to_ascii_uppercase())) {
                raw.insert((*key).to_owned(), v);
            }
        }
        let mut values = BTreeMap::new();
        for (key, default) in KEYS {
            let value = match raw.remove(*key) {
                Some(v) => match v.strip_prefix("env:") {
                    Some(var) => Some(env(var).ok_or_else(|| ConfigError::UnsetVariable {
                        field: (*key).to_owned(),
                        var: var.to_owned(),
                    })?),
                    None => Some(v),
                },
                None => default.map(str::to_owned),
            };
            if let Some(v) = value {
                values.insert(*key, v);
            }
        }
        Values(values).build()
    }
}

struct Values(BTreeMap<&'static str, String>);

impl Values {
    fn opt(&self, key: &str) -> Option<String> {
        self.0.get(key).filter(|v| !v.trim().is_empty()).cloned()
    }

    fn req(&self, key: &str) -> Result<String, ConfigError> {
        self.opt(key).ok_or_else(|| ConfigError::Missing(key.to_owned()))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.req(key)?.trim().parse().map_err(|e: T::Err| ConfigError::Invalid {
            field: key.to_owned(),
            reason: e.to_string(),
        })
    }

    fn build(self) -> Result<Config, ConfigError> {
        let bind = self.parse("bind")?;
        let database_url = self.req("database_url")?;
        let blob = match self.req("blob_backend")?.as_str() {
            "fs" => BlobConfig::Fs {
                root: PathBuf::from(self.req("blob_root")?),
            },
            "s3" => BlobConfig::S3(S3Config {
                endpoint: self.req("s3_endpoint")?,
                bucket: self.req("s3_bucket")?,
                region: self.req("s3_region")?,
                access_key: self.req("s3_access_key")?,
                secret_key: self.req("s3_secret_key")?,
            }),
            "memory" => BlobConfig::Memory,
            other => return Err(invalid("blob_backend", format!("{other:?} is not one of fs, s3, memory"))),
        };
        let dim: usize = self.parse("embedder_dim")?;
        if dim == 0 {
            return Err(invalid("embedder_dim", "must be positive".into()));
        }
        let embedder = match self.req("embedder")?.as_str() {
            "hash" => EmbedderConfig::Hash { dim },
            "http" => EmbedderConfig::Http {
                url: self.req("embedder_url")?,
                model: self.req("embedder_model")?,
                key: self.opt("embedder_key"),
                dim,
            },
            other => return Err(invalid("embedder", format!("{other:?} is not one of hash, http"))),
        };
        let provider = match self.req("provider")?.as_str() {
            "scripted" => ProviderConfig::Scripted {
                script: PathBuf::from(self.req("provider_script")?),
            },
            "openai" => ProviderConfig::OpenAi {
                base_url: self.req("provider_base_url")?,
                model: self.req("provider_model")?,
                key: self.opt("provider_key"),
                timeout: Duration::from_secs(self.parse("provider_timeout_secs")?),
                stream: self.parse("provider_stream")?,
            },
            other => return Err(invalid("provider", format!("{other:?} is not one of scripted, openai"))),
        };
        let chunk_policy = ChunkPolicy::new(self.parse("chunk_size")?, self.parse("chunk_overlap")?)
            .map_err(|e| invalid("chunk_overlap", e.to_string()))?;
        let weights = FusionWeights {
            alpha: self.parse("fusion_alpha")?,
            k: self.parse("fusion_k")?,
            n_vec: self.parse("fusion_n_vec")?,
            n_lex: self.parse("fusion_n_lex")?,
        };
        if !(0.0..=1.0).contains(&weights.alpha) {
            return Err(invalid("fusion_alpha", "must lie in [0, 1]".into()));
        }
        weights.validate().map_err(|e| invalid("fusion_k", e.to_string()))?;
        let max_tool_rounds = self.parse("max_tool_rounds")?;
        if max_tool_rounds == 0 {
            return Err(invalid("max_tool_rounds", "must be positive".into()));
        }
        Ok(Config {
            bind,
            database_url,
            blob,
            embedder,
            provider,
            chunk_policy,
            weights,
            max_tool_rounds,
            arxiv_endpoint: self.req("arxiv_endpoint")?,
        })
    }
}

fn invalid(field: &str, reason: String) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
bind = "127.0.0.1:8080"
database_url = "sqlite::memory:"
blob_backend = "memory"
embedder = "hash"
provider = "scripted"
provider_script = "script.json"
"#;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn minimal_file_gets_defaults() {
        let c = Config::from_sources(Some(MINIMAL), &no_env).unwrap();
        assert_eq!(c.bind.port(), 8080);
        assert_eq!(c.embedder, EmbedderConfig::Hash { dim: 64 });
        assert_eq!(c.chunk_policy, ChunkPolicy::default());
        assert_eq!(c.weights, FusionWeights::default());
        assert_eq!(c.max_tool_rounds, 8);
        assert_eq!(c.arxiv_endpoint, ARXIV_ENDPOINT);
    }

    #[test]
    fn each_missing_required_field_is_named() {
        for key in ["bind", "database_url", "blob_backend", "embedder", "provider", "provider_script"] {
            let text: String = MINIMAL.lines().filter(|l| !l.starts_with(&format!("{key} "))).collect::<Vec<_>>().join("\n");
            let err = Config::from_sources(Some(&text), &no_env).unwrap_err();
            assert_eq!(err, ConfigError::Missing(key.into()));
            assert!(err.to_string().contains(key));
        }
    }

    #[test]
    fn backend_specific_fields_are_required() {
        let fs = MINIMAL.replace("\"memory\"", "\"fs\"");
        assert_eq!(Config::from_sources(Some(&fs), &no_env).unwrap_err(), ConfigError::Missing("blob_root".into()));
        let s3 = format!("{}\ns3_endpoint = \"http://x\"\ns3_bucket = \"b\"\ns3_access_key = \"a\"", MINIMAL.replace("\"memory\"", "\"s3\""));
        assert_eq!(Config::from_sources(Some(&s3), &no_env).unwrap_err(), ConfigError::Missing("s3_secret_key".into()));
        let oa = MINIMAL.replace("\"scripted\"", "\"openai\"");
        assert_eq!(
            Config::from_sources(Some(&oa), &no_env).unwrap_err(),
            ConfigError::Missing("provider_base_url".into())
        );
    }

    #[test]
    fn environment_overrides_and_indirection() {
        let text = format!("{MINIMAL}\nchunk_size = 500\nembedder_key = \"env:EMBED_SECRET\"");
        let env = |k: &str| match k {
            "LORE_CHUNK_SIZE" => Some("300".to_owned()),
            "LORE_BIND" => Some("0.0.0.0:9".to_owned()),
            "EMBED_SECRET" => Some("s3cr3t".to_owned()),
            _ => None,
        };
        let c = Config::from_sources(Some(&text), &env).unwrap();
        assert_eq!(c.chunk_policy.size, 300);
        assert_eq!(c.bind.port(), 9);

        let http = text.replace("\"hash\"", "\"http\"") + "\nembedder_url = \"http://e\"\nembedder_model = \"m\"";
        match Config::from_sources(Some(&http), &env).unwrap().embedder {
            EmbedderConfig::Http { key, .. } => assert_eq!(key.as_deref(), Some("s3cr3t")),
            e => panic!("{e:?}"),
        }
        let err = Config::from_sources(Some(&http), &no_env).unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnsetVariable {
                field: "embedder_key".into(),
                var: "EMBED_SECRET".into()
            }
        );
    }

    #[test]
    fn env_alone_is_enough() {
        let env = |k: &str| {
            let v = match k {
                "LORE_BIND" => "127.0.0.1:1",
                "LORE_DATABASE_URL" => "sqlite::memory:",
                "LORE_BLOB_BACKEND" => "memory",
                "LORE_EMBEDDER" => "hash",
                "LORE_PROVIDER" => "scripted",
                "LORE_PROVIDER_SCRIPT" => "s.json",
                _ => return None,
            };
            Some(v.to_owned())
        };
        assert!(Config::from_sources(None, &env).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let cases = [
            ("bind = \"nowhere\"", "bind"),
            ("chunk_overlap = 1600", "chunk_overlap"),
            ("fusion_alpha = 1.5", "fusion_alpha"),
            ("fusion_k = 101", "fusion_k"),
            ("max_tool_rounds = 0", "max_tool_rounds"),
            ("embedder_dim = 0", "embedder_dim"),
        ];
        for (line, field) in cases {
            let key = line.split(' ').next().unwrap();
            let text: String = MINIMAL.lines().filter(|l| !l.starts_with(&format!("{key} "))).collect::<Vec<_>>().join("\n");
            match Config::from_sources(Some(&format!("{text}\n{line}")), &no_env).unwrap_err() {
                ConfigError::Invalid { field: f, .. } => assert_eq!(f, field, "{line}"),
                e => panic!("{line}: {e:?}"),
            }
        }
        assert_eq!(
            Config::from_sources(Some(&format!("{MINIMAL}\ncolour = \"blue\"")), &no_env).unwrap_err(),
            ConfigError::UnknownKey("colour".into())
        );
        assert!(matches!(
            Config::from_sources(Some(&format!("{MINIMAL}\n[db]\nx = 1")), &no_env).unwrap_err(),
            ConfigError::UnknownKey(_)
        ));
    }
}
