use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use edi_core::secenv::Keystore;
use edi_core::translator::{load_map, MappingSpec};
use edi_service::{ClientError, VanClient};

use super::config::ClientConfig;
use super::error::{CliError, CliResult};
use super::state;

/// A loaded client config plus the files that live beside it.
pub struct Context {
    pub config: ClientConfig,
    dir: PathBuf,
    /// Password supplied by the caller instead of the environment or a prompt.
    password: Option<String>,
}

impl Context {
    pub fn load(path: &Path) -> CliResult<Self> {
        let config = ClientConfig::load(path)?;
        let dir = path.parent().unwrap_or(Path::new(".")).to_owned();
        Ok(Self::new(config, dir))
    }

    pub fn new(config: ClientConfig, dir: PathBuf) -> Self {
        Self {
            config,
            dir,
            password: None,
        }
    }

    pub fn with_password(mut self, password: impl Into<String>) -> Self {
        self.password = Some(password.into());
        self
    }

    pub fn session_path(&self) -> PathBuf {
        self.config.session_cache.clone().unwrap_or_else(|| self.dir.join("session.json"))
    }

    pub fn control_path(&self) -> PathBuf {
        self.config.control_file.clone().unwrap_or_else(|| self.dir.join("control"))
    }

    pub fn keystore(&self) -> CliResult<Keystore> {
        Keystore::open(&self.config.keystore).map_err(CliError::local)
    }

    /// `path` if given, else `<maps>/<doctype>.map.json` when it exists.
    pub fn map_for(&self, path: Option<&Path>, doc_type: &str) -> CliResult<Option<MappingSpec>> {
        let path = match path {
            Some(p) => p.to_owned(),
            None => {
                let p = self.config.maps.join(format!("{}.map.json", doc_type.to_lowercase()));
                if !p.exists() {
                    return Ok(None);
                }
                p
            }
        };
        let bytes = std::fs::read(&path).map_err(|e| CliError::Local(format!("{}: {e}", path.display())))?;
        load_map(&bytes)
            .map(Some)
            .map_err(|e| CliError::Local(format!("{}: {e}", path.display())))
    }

    pub fn password(&self) -> CliResult<String> {
        if let Some(p) = &self.password {
            return Ok(p.clone());
        }
        if let Ok(p) = std::env::var(&self.config.password_env) {
            return Ok(p);
        }
        if !std::io::stdin().is_terminal() {
            return Err(CliError::Denied(format!(
                "no password: set {} or run interactively",
                self.config.password_env
            )));
        }
        rpassword::prompt_password(format!("Password for {}: ", self.config.partner_id)).map_err(CliError::local)
    }

    pub async fn login(&self) -> CliResult<VanClient> {
        let mut client = VanClient::new(&self.config.van);
        let session = client.login(&self.config.partner_id, &self.password()?).await?;
        if let Err(e) = state::save_session(&self.session_path(), &self.config.van, &session) {
            eprintln!("edi: warning: cannot cache session: {e}");
        }
        Ok(client)
    }

    /// A client with a cached session, or a fresh login.
    pub async fn client(&self) -> CliResult<VanClient> {
        match state::load_session(&self.session_path(), &self.config.van, &self.config.partner_id) {
            Some(token) => {
                let mut c = VanClient::new(&self.config.van);
                c.set_token(Some(token));
                Ok(c)
            }
            None => self.login().await,
        }
    }

    /// Run `f` with a session, logging in again once if the cached one has
    /// expired on the VAN.
    pub async fn call<T>(&self, f: impl AsyncFn(&VanClient) -> Result<T, ClientError>) -> CliResult<T> {
        let client = self.client().await?;
        match f(&client).await {
            Err(e) if e.code() == Some("SESSION_INVALID") => {
                state::clear_session(&self.session_path());
                let client = self.login().await?;
                Ok(f(&client).await?)
            }
            other => Ok(other?),
        }
    }
}
