use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use edi_van::InterconnectRoute;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// A password given inline or, preferably, through an environment variable.
#[derive(Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Secret {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub password: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub password_env: Option<String>,
}

impl std::fmt::Debug for Secret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Secret")
            .field("password", &self.password.as_ref().map(|_| "<redacted>"))
            .field("password_env", &self.password_env)
            .finish()
    }
}

impl Secret {
    pub fn inline(password: impl Into<String>) -> Self {
        Self {
            password: Some(password.into()),
            password_env: None,
        }
    }

    pub fn from_env(var: impl Into<String>) -> Self {
        Self {
            password: None,
            password_env: Some(var.into()),
        }
    }

    pub fn resolve(&self) -> Result<String, ServiceError> {
        if let Some(var) = &self.password_env {
            if let Ok(v) = std::env::var(var) {
                return Ok(v);
            }
        }
        self.password.clone().ok_or_else(|| {
            ServiceError::Config(match &self.password_env {
                Some(var) => format!("environment variable {var} is not set"),
                None => "no password or password_env given".into(),
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdminConfig {
    pub id: String,
    #[serde(flatten)]
    pub secret: Secret,
}

/// Credentials this VAN presents when relaying to a peer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeerConfig {
    pub endpoint: String,
    pub partner_id: String,
    #[serde(flatten)]
    pub secret: Secret,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteConfig {
    pub pattern: String,
    pub endpoint: String,
    #[serde(default)]
    pub max_hops: Option<u32>,
}

fn default_listen() -> SocketAddr {
    "127.0.0.1:7430".parse().unwrap()
}
fn default_van_id() -> String {
    "VAN".into()
}
fn default_ttl() -> u64 {
    3600
}
fn default_interval() -> u64 {
    1000
}
fn default_max_hops() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_van_id")]
    pub van_id: String,
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    #[serde(default = "default_ttl")]
    pub session_ttl_secs: u64,
    #[serde(default = "default_interval")]
    pub delivery_interval_ms: u64,
    /// Hop limit for routes that do not set their own.
    #[serde(default = "default_max_hops")]
    pub max_hops: u32,
    #[serde(default)]
    pub admin: Option<AdminConfig>,
    #[serde(default)]
    pub routes: Vec<RouteConfig>,
    #[serde(default)]
    pub peers: Vec<PeerConfig>,
    /// Timeout for pushes, relays and webhooks.
    #[serde(default = "default_http_timeout")]
    pub http_timeout_ms: u64,
}

fn default_http_timeout() -> u64 {
    10_000
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            van_id: default_van_id(),
            listen: default_listen(),
            data_dir: data_dir.into(),
            session_ttl_secs: default_ttl(),
            delivery_interval_ms: default_interval(),
            max_hops: default_max_hops(),
            admin: None,
            routes: Vec::new(),
            peers: Vec::new(),
            http_timeout_ms: default_http_timeout(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Self =
            toml::from_str(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        if config.data_dir.is_relative() {
            if let Some(base) = path.parent() {
                config.data_dir = base.join(&config.data_dir);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.delivery_interval_ms == 0 {
            return Err(ServiceError::Config("delivery_interval_ms must be positive".into()));
        }
        if self.session_ttl_secs == 0 {
            return Err(ServiceError::Config("session_ttl_secs must be positive".into()));
        }
        if self.max_hops == 0 {
            return Err(ServiceError::Config("max_hops must be positive".into()));
        }
        for r in self.interconnect_routes() {
            r.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn interconnect_routes(&self) -> Vec<InterconnectRoute> {
        self.routes
            .iter()
            .map(|r| {
                InterconnectRoute::new(r.pattern.clone(), r.endpoint.clone())
                    .with_max_hops(r.max_hops.unwrap_or(self.max_hops))
            })
            .collect()
    }

    pub fn peer_for(&self, endpoint: &str) -> Option<&PeerConfig> {
        let norm = |s: &str| s.trim_end_matches('/').to_owned();
        self.peers.iter().find(|p| norm(&p.endpoint) == norm(endpoint))
    }

    pub fn delivery_interval(&self) -> Duration {
        Duration::from_millis(self.delivery_interval_ms)
    }

    pub fn http_timeout(&self) -> Duration {
        Duration::from_millis(self.http_timeout_ms)
    }
}
