//! Key records and the on-disk keystore.
//!
//! Layout of a keystore directory:
//!
//! ```text
//! keys/
//!   suites.json        primitive choices, must match SUITE_REGISTRY
//!   ACME.pub           64 bytes: Ed25519 verifying key || X25519 public key
//!   ACME.priv          64 bytes: Ed25519 seed || X25519 secret
//!   ACME+GLOBEX.psk    32 bytes, shared by the two partners
//! ```
//!
//! Keypairs are named after their owner's partner id, so a `.pub`/`.priv`
//! pair shares its file stem. Pre-shared keys are named `<a>+<b>` with the
//! two partner ids in sorted order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::SystemTime;

use ed25519_dalek::{SigningKey, VerifyingKey};
use x25519_dalek::StaticSecret;

use super::{Result, SecEnvError};

pub const SUITE_REGISTRY: &str = r#"{
  "PSK-1": {
    "cipher": "AES-256-GCM",
    "digest": "SHA-256",
    "kdf": "HKDF-SHA256",
    "mac": "HMAC-SHA256"
  },
  "PUB-1": {
    "cipher": "AES-256-GCM",
    "digest": "SHA-256",
    "kdf": "HKDF-SHA256",
    "keyAgreement": "X25519",
    "signature": "Ed25519"
  }
}
"#;

const SUITES_FILE: &str = "suites.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyKind {
    Psk,
    Public,
    Private,
}

impl KeyKind {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Psk => "psk",
            Self::Public => "pub",
            Self::Private => "priv",
        }
    }

    fn from_extension(ext: &str) -> Option<Self> {
        match ext {
            "psk" => Some(Self::Psk),
            "pub" => Some(Self::Public),
            "priv" => Some(Self::Private),
            _ => None,
        }
    }

    fn material_len(self) -> usize {
        match self {
            Self::Psk => 32,
            Self::Public | Self::Private => 64,
        }
    }
}

#[derive(Clone)]
pub struct KeyRecord {
    pub key_id: String,
    pub owner: String,
    pub kind: KeyKind,
    pub material: Vec<u8>,
    pub created: SystemTime,
}

impl std::fmt::Debug for KeyRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyRecord")
            .field("key_id", &self.key_id)
            .field("owner", &self.owner)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl KeyRecord {
    pub fn new(key_id: impl Into<String>, kind: KeyKind, material: Vec<u8>) -> Result<Self> {
        let key_id = key_id.into();
        if !is_key_id(&key_id) {
            return Err(SecEnvError::InvalidKey(format!("bad key id {key_id:?}")));
        }
        if material.len() != kind.material_len() {
            return Err(SecEnvError::InvalidKey(format!(
                "{key_id}.{}: expected {} bytes, found {}",
                kind.extension(),
                kind.material_len(),
                material.len()
            )));
        }
        let owner = match kind {
            KeyKind::Psk => {
                let (a, b) = key_id.split_once('+').ok_or_else(|| {
                    SecEnvError::InvalidKey(format!("psk id {key_id:?} must be <a>+<b>"))
                })?;
                if a >= b {
                    return Err(SecEnvError::InvalidKey(format!(
                        "psk id {key_id:?} must list the partners in sorted order"
                    )));
                }
                a.to_owned()
            }
            KeyKind::Public | KeyKind::Private => {
                if key_id.contains('+') {
                    return Err(SecEnvError::InvalidKey(format!(
                        "keypair id {key_id:?} may not contain '+'"
                    )));
                }
                key_id.clone()
            }
        };
        if kind == KeyKind::Public {
            PublicKey::from_bytes(&material)?;
        }
        Ok(Self {
            key_id,
            owner,
            kind,
            material,
            created: SystemTime::now(),
        })
    }
}

fn is_key_id(s: &str) -> bool {
    !s.is_empty()
        && s.len() <= 80
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-' | b'+'))
        && !s.starts_with('.')
}

/// Key id of the pre-shared key between two partners.
pub fn psk_key_id(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}+{b}")
    } else {
        format!("{b}+{a}")
    }
}

/// Signing and key-agreement halves of one partner identity.
pub struct KeyPair {
    pub(crate) signing: SigningKey,
    pub(crate) agreement: StaticSecret,
}

impl KeyPair {
    pub fn generate() -> Self {
        let mut seed = [0u8; 32];
        let mut secret = [0u8; 32];
        rand::fill(&mut seed);
        rand::fill(&mut secret);
        Self {
            signing: SigningKey::from_bytes(&seed),
            agreement: StaticSecret::from(secret),
        }
    }

    pub fn from_bytes(material: &[u8]) -> Result<Self> {
        let (seed, secret) = split_64(material)?;
        Ok(Self {
            signing: SigningKey::from_bytes(&seed),
            agreement: StaticSecret::from(secret),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.signing.to_bytes().to_vec();
        out.extend_from_slice(self.agreement.as_bytes());
        out
    }

    pub fn public(&self) -> PublicKey {
        PublicKey {
            verifying: self.signing.verifying_key(),
            agreement: x25519_dalek::PublicKey::from(&self.agreement),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublicKey {
    pub(crate) verifying: VerifyingKey,
    pub(crate) agreement: x25519_dalek::PublicKey,
}

impl PublicKey {
    pub fn from_bytes(material: &[u8]) -> Result<Self> {
        let (verifying, agreement) = split_64(material)?;
        Ok(Self {
            verifying: VerifyingKey::from_bytes(&verifying)
                .map_err(|e| SecEnvError::InvalidKey(format!("verifying key: {e}")))?,
            agreement: x25519_dalek::PublicKey::from(agreement),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.verifying.to_bytes().to_vec();
        out.extend_from_slice(self.agreement.as_bytes());
        out
    }
}

fn split_64(material: &[u8]) -> Result<([u8; 32], [u8; 32])> {
    if material.len() != 64 {
        return Err(SecEnvError::InvalidKey(format!(
            "expected 64 bytes of key material, found {}",
            material.len()
        )));
    }
    let mut a = [0u8; 32];
    let mut b = [0u8; 32];
    a.copy_from_slice(&material[..32]);
    b.copy_from_slice(&material[32..]);
    Ok((a, b))
}

/// An immutable-by-convention set of key records, optionally backed by a
/// directory.
#[derive(Debug, Clone, Default)]
pub struct Keystore {
    records: BTreeMap<(String, KeyKind), KeyRecord>,
}

impl Keystore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Load every `<key_id>.{psk|pub|priv}` file in `dir`. A `suites.json`,
    /// if present, must pin the same primitives as this build.
    pub fn open(dir: &Path) -> Result<Self> {
        let io = |e: std::io::Error| SecEnvError::Keystore(format!("{}: {e}", dir.display()));
        let mut store = Self::new();
        if !dir.exists() {
            return Ok(store);
        }
        check_suites_file(dir)?;
        for entry in fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            let (Some(stem), Some(ext)) = (
                path.file_stem().and_then(|s| s.to_str()),
                path.extension().and_then(|s| s.to_str()),
            ) else {
                continue;
            };
            let Some(kind) = KeyKind::from_extension(ext) else {
                continue;
            };
            let material = fs::read(&path).map_err(io)?;
            let mut record = KeyRecord::new(stem, kind, material)?;
            if let Ok(modified) = fs::metadata(&path).and_then(|m| m.modified()) {
                record.created = modified;
            }
            store.insert(record)?;
        }
        Ok(store)
    }

    /// Write every record (and `suites.json`) to `dir`. Private and
    /// pre-shared keys are created with mode 0600 on unix.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| SecEnvError::Keystore(format!("{}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        let suites = dir.join(SUITES_FILE);
        if !suites.exists() {
            fs::write(&suites, SUITE_REGISTRY).map_err(io)?;
        }
        for record in self.records.values() {
            let path = dir.join(format!("{}.{}", record.key_id, record.kind.extension()));
            write_key_file(&path, &record.material, record.kind != KeyKind::Public).map_err(io)?;
        }
        Ok(())
    }

    pub fn insert(&mut self, record: KeyRecord) -> Result<()> {
        let counterpart = match record.kind {
            KeyKind::Public => Some(KeyKind::Private),
            KeyKind::Private => Some(KeyKind::Public),
            KeyKind::Psk => None,
        };
        if let Some(other) = counterpart.and_then(|k| self.records.get(&(record.key_id.clone(), k))) {
            let (private, public) = if record.kind == KeyKind::Private {
                (&record, other)
            } else {
                (other, &record)
            };
            if KeyPair::from_bytes(&private.material)?.public().to_bytes() != public.material {
                return Err(SecEnvError::InvalidKey(format!(
                    "{}.pub does not match {}.priv",
                    record.key_id, record.key_id
                )));
            }
        }
        self.records.insert((record.key_id.clone(), record.kind), record);
        Ok(())
    }

    /// Generate a keypair for `owner` and insert both halves.
    pub fn generate_pair(&mut self, owner: &str) -> Result<PublicKey> {
        let pair = KeyPair::generate();
        self.insert_pair(owner, &pair)?;
        Ok(pair.public())
    }

    /// Insert both halves of an existing keypair under `owner`.
    pub fn insert_pair(&mut self, owner: &str, pair: &KeyPair) -> Result<()> {
        self.insert(KeyRecord::new(owner, KeyKind::Private, pair.to_bytes())?)?;
        self.insert(KeyRecord::new(owner, KeyKind::Public, pair.public().to_bytes())?)
    }

    /// Generate a pre-shared key for the pair and return its key id.
    pub fn generate_psk(&mut self, a: &str, b: &str) -> Result<String> {
        let mut material = vec![0u8; 32];
        rand::fill(&mut material[..]);
        let id = psk_key_id(a, b);
        self.insert(KeyRecord::new(id.clone(), KeyKind::Psk, material)?)?;
        Ok(id)
    }

    pub fn add_public(&mut self, owner: &str, public: &PublicKey) -> Result<()> {
        self.insert(KeyRecord::new(owner, KeyKind::Public, public.to_bytes())?)
    }

    pub fn get(&self, key_id: &str, kind: KeyKind) -> Option<&KeyRecord> {
        self.records.get(&(key_id.to_owned(), kind))
    }

    pub fn records(&self) -> impl Iterator<Item = &KeyRecord> {
        self.records.values()
    }

    fn require(&self, key_id: &str, kind: KeyKind) -> Result<&KeyRecord> {
        self.get(key_id, kind)
            .ok_or_else(|| SecEnvError::MissingKey(format!("{key_id}.{}", kind.extension())))
    }

    pub fn keypair(&self, key_id: &str) -> Result<KeyPair> {
        KeyPair::from_bytes(&self.require(key_id, KeyKind::Private)?.material)
    }

    pub fn public_key(&self, key_id: &str) -> Result<PublicKey> {
        PublicKey::from_bytes(&self.require(key_id, KeyKind::Public)?.material)
    }

    pub fn psk(&self, key_id: &str) -> Result<[u8; 32]> {
        let record = self.require(key_id, KeyKind::Psk)?;
        let mut out = [0u8; 32];
        out.copy_from_slice(&record.material);
        Ok(out)
    }
}

fn check_suites_file(dir: &Path) -> Result<()> {
    let path = dir.join(SUITES_FILE);
    let Ok(text) = fs::read_to_string(&path) else {
        return Ok(());
    };
    let found: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| SecEnvError::Keystore(format!("{}: {e}", path.display())))?;
    let pinned: serde_json::Value = serde_json::from_str(SUITE_REGISTRY).expect("registry is json");
    if found != pinned {
        return Err(SecEnvError::Keystore(format!(
            "{} pins different primitives than this build supports",
            path.display()
        )));
    }
    Ok(())
}

fn write_key_file(path: &Path, material: &[u8], secret: bool) -> std::io::Result<()> {
    #[cfg(unix)]
    {
        use std::io::Write;
        use std::os::unix::fs::OpenOptionsExt;
        let mut f = fs::OpenOptions::new()
            .write(true)
            .create(true)
            .truncate(true)
            .mode(if secret { 0o600 } else { 0o644 })
            .open(path)?;
        f.write_all(material)?;
        f.sync_all()
    }
    #[cfg(not(unix))]
    {
        let _ = secret;
        fs::write(path, material)
    }
}
