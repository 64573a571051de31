use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::error::{CliError, CliResult};

fn default_password_env() -> String {
    "EDI_PASSWORD".into()
}
fn default_keystore() -> PathBuf {
    "keys".into()
}
fn default_maps() -> PathBuf {
    "maps".into()
}
fn default_quarantine() -> PathBuf {
    "quarantine".into()
}
fn default_suite() -> String {
    "PUB-1".into()
}
fn yes() -> bool {
    true
}

/// Client settings, read from a TOML file. Relative paths are resolved
/// against the file's directory. Passwords are never read from this file.
///
/// ```toml
/// van = "http://127.0.0.1:7430"
/// partner_id = "BUYER"
/// password_env = "EDI_PASSWORD"
/// keystore = "keys"
/// maps = "maps"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    /// Base URL of the VAN.
    pub van: String,
    pub partner_id: String,
    /// Environment variable holding the password; prompted for if unset.
    #[serde(default = "default_password_env")]
    pub password_env: String,
    #[serde(default = "default_keystore")]
    pub keystore: PathBuf,
    #[serde(default = "default_maps")]
    pub maps: PathBuf,
    #[serde(default = "default_quarantine")]
    pub quarantine: PathBuf,
    /// Default cipher suite for `send`.
    #[serde(default = "default_suite")]
    pub suite: String,
    /// Ask recipients for a functional acknowledgment.
    #[serde(default = "yes")]
    pub ack_requested: bool,
    /// Acknowledge messages after `fetch` verifies them.
    #[serde(default = "yes")]
    pub acknowledge: bool,
    #[serde(default)]
    pub session_cache: Option<PathBuf>,
    /// Last interchange control number issued by this client.
    #[serde(default)]
    pub control_file: Option<PathBuf>,
}

impl ClientConfig {
    pub fn new(van: impl Into<String>, partner_id: impl Into<String>) -> Self {
        Self {
            van: van.into(),
            partner_id: partner_id.into(),
            password_env: default_password_env(),
            keystore: default_keystore(),
            maps: default_maps(),
            quarantine: default_quarantine(),
            suite: default_suite(),
            ack_requested: true,
            acknowledge: true,
            session_cache: None,
            control_file: None,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Local(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| CliError::Local(format!("{}: {e}", path.display())))
    }

    /// Parse and resolve relative paths against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(key) = table.keys().find(|k| k.contains("password") && *k != "password_env") {
            return Err(format!(
                "`{key}` is not allowed: passwords are never stored in the config file; \
                 set the variable named by password_env instead"
            ));
        }
        let mut c: Self = table.try_into().map_err(|e: toml::de::Error| e.to_string())?;
        let base = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        base(&mut c.keystore);
        base(&mut c.maps);
        base(&mut c.quarantine);
        c.session_cache.as_mut().map(base);
        c.control_file.as_mut().map(base);
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// `$EDI_CONFIG`, else `$XDG_CONFIG_HOME/edi/config.toml`, else
/// `~/.config/edi/config.toml`.
pub fn default_config_path() -> PathBuf {
    if let Some(p) = std::env::var_os("EDI_CONFIG") {
        return p.into();
    }
    let dir = std::env::var_os("XDG_CONFIG_HOME")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".config")))
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join("edi").join("config.toml")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_paths_follow_the_file() {
        let c = ClientConfig::parse("van = \"http://v\"\npartner_id = \"BUYER\"\n", Path::new("/etc/edi")).unwrap();
        assert_eq!(c.keystore, Path::new("/etc/edi/keys"));
        assert_eq!(c.maps, Path::new("/etc/edi/maps"));
        assert_eq!(c.password_env, "EDI_PASSWORD");
        assert!(c.ack_requested && c.acknowledge);
    }

    #[test]
    fn plaintext_passwords_are_refused() {
        for key in ["password", "admin_password"] {
            let text = format!("van = \"http://v\"\npartner_id = \"B\"\n{key} = \"hunter2\"\n");
            let e = ClientConfig::parse(&text, Path::new(".")).unwrap_err();
            assert!(e.contains("never stored"), "{e}");
        }
    }

    #[test]
    fn written_config_has_no_secret() {
        let c = ClientConfig::new("http://v", "B");
        let text = c.to_toml();
        assert!(!text.contains("password ="));
        assert_eq!(ClientConfig::parse(&text, Path::new("")).unwrap(), c);
    }
}
