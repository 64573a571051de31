use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use argon2::{Argon2, PasswordHasher, PasswordVerifier};
use chrono::{DateTime, Utc};
use edi_core::interchange::{is_code, is_partner_id};
use edi_core::secenv::PublicKey;
use serde::{Deserialize, Serialize};

use crate::{Result, VanError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    User,
    Admin,
    /// Another VAN. May deposit on behalf of senders it hosts.
    Peer,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum DeliveryMode {
    #[default]
    Retrieve,
    Forward { endpoint: String },
}

/// Webhook registration. An empty filter matches every doc type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Notification {
    pub endpoint: String,
    #[serde(default)]
    pub doc_types: BTreeSet<String>,
}

impl Notification {
    pub fn matches(&self, doc_types: &BTreeSet<String>) -> bool {
        self.doc_types.is_empty() || !self.doc_types.is_disjoint(doc_types)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartnerProfile {
    pub partner_id: String,
    /// Argon2id PHC string.
    pub password_hash: String,
    #[serde(default)]
    pub role: Role,
    #[serde(default)]
    pub authorized_senders: BTreeSet<String>,
    #[serde(default)]
    pub allowed_doc_types: BTreeSet<String>,
    #[serde(default)]
    pub delivery_mode: DeliveryMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notification: Option<Notification>,
    #[serde(default)]
    pub auto_ack: bool,
    /// Hex of the partner's 64-byte public key; needed for VAN-built acknowledgments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub public_key: Option<String>,
}

impl PartnerProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(VanError::InvalidProfile(m));
        if !is_partner_id(&self.partner_id) {
            return bad(format!("bad partner id {:?}", self.partner_id));
        }
        if !self.password_hash.starts_with("$argon2") {
            return bad("password hash is not an argon2 PHC string".into());
        }
        if let Some(s) = self.authorized_senders.iter().find(|s| !is_partner_id(s)) {
            return bad(format!("bad authorized sender {s:?}"));
        }
        if let Some(d) = self.allowed_doc_types.iter().find(|d| !is_code(d)) {
            return bad(format!("bad doc type {d:?}"));
        }
        if let DeliveryMode::Forward { endpoint } = &self.delivery_mode {
            if endpoint.trim().is_empty() {
                return bad("forward mode requires an endpoint".into());
            }
        }
        if let Some(n) = &self.notification {
            if n.endpoint.trim().is_empty() {
                return bad("notification requires an endpoint".into());
            }
            if let Some(d) = n.doc_types.iter().find(|d| !is_code(d)) {
                return bad(format!("bad notification doc type {d:?}"));
            }
        }
        if self.public_key.is_some() {
            self.decoded_public_key()?;
        }
        Ok(())
    }

    pub fn decoded_public_key(&self) -> Result<Option<PublicKey>> {
        let Some(text) = &self.public_key else {
            return Ok(None);
        };
        let bytes = hex::decode(text).map_err(|e| VanError::InvalidProfile(format!("public key: {e}")))?;
        PublicKey::from_bytes(&bytes)
            .map(Some)
            .map_err(|e| VanError::InvalidProfile(format!("public key: {e}")))
    }

    pub fn check_password(&self, password: &str) -> bool {
        verify_password(password, &self.password_hash)
    }
}

/// A partner as submitted by an administrator, with a cleartext password
/// that is hashed on the way in.
#[derive(Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NewPartner {
    pub partner_id: String,
    pub password: String,
    #[serde(default)]
    pub role: Role,
    #[serde(default)]
    pub authorized_senders: BTreeSet<String>,
    #[serde(default)]
    pub allowed_doc_types: BTreeSet<String>,
    #[serde(default)]
    pub delivery_mode: DeliveryMode,
    #[serde(default)]
    pub notification: Option<Notification>,
    #[serde(default)]
    pub auto_ack: bool,
    #[serde(default)]
    pub public_key: Option<String>,
}

impl fmt::Debug for NewPartner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NewPartner")
            .field("partner_id", &self.partner_id)
            .field("role", &self.role)
            .finish_non_exhaustive()
    }
}

impl NewPartner {
    pub fn new(partner_id: impl Into<String>, password: impl Into<String>) -> Self {
        Self {
            partner_id: partner_id.into(),
            password: password.into(),
            ..Self::default()
        }
    }

    pub fn role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn accepts_from<I: IntoIterator<Item = S>, S: Into<String>>(mut self, senders: I) -> Self {
        self.authorized_senders.extend(senders.into_iter().map(Into::into));
        self
    }

    pub fn allows<I: IntoIterator<Item = S>, S: Into<String>>(mut self, doc_types: I) -> Self {
        self.allowed_doc_types.extend(doc_types.into_iter().map(Into::into));
        self
    }

    pub fn forward_to(mut self, endpoint: impl Into<String>) -> Self {
        self.delivery_mode = DeliveryMode::Forward {
            endpoint: endpoint.into(),
        };
        self
    }

    pub fn notify(mut self, endpoint: impl Into<String>, doc_types: &[&str]) -> Self {
        self.notification = Some(Notification {
            endpoint: endpoint.into(),
            doc_types: doc_types.iter().map(|d| d.to_string()).collect(),
        });
        self
    }

    pub fn auto_ack(mut self, on: bool) -> Self {
        self.auto_ack = on;
        self
    }

    pub fn public_key(mut self, key: &PublicKey) -> Self {
        self.public_key = Some(hex::encode(key.to_bytes()));
        self
    }

    pub fn into_profile(self) -> Result<PartnerProfile> {
        if self.password.is_empty() {
            return Err(VanError::InvalidProfile("empty password".into()));
        }
        let profile = PartnerProfile {
            password_hash: hash_password(&self.password)?,
            partner_id: self.partner_id,
            role: self.role,
            authorized_senders: self.authorized_senders,
            allowed_doc_types: self.allowed_doc_types,
            delivery_mode: self.delivery_mode,
            notification: self.notification,
            auto_ack: self.auto_ack,
            public_key: self.public_key,
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// Partial profile change. `role` is honored only for administrators.
#[derive(Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ProfileUpdate {
    pub password: Option<String>,
    pub role: Option<Role>,
    pub authorized_senders: Option<BTreeSet<String>>,
    pub allowed_doc_types: Option<BTreeSet<String>>,
    pub delivery_mode: Option<DeliveryMode>,
    pub notification: Option<Notification>,
    #[serde(default)]
    pub clear_notification: bool,
    pub auto_ack: Option<bool>,
    pub public_key: Option<String>,
}

impl fmt::Debug for ProfileUpdate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProfileUpdate")
            .field("password", &self.password.as_ref().map(|_| "<redacted>"))
            .field("role", &self.role)
            .field("authorized_senders", &self.authorized_senders)
            .field("allowed_doc_types", &self.allowed_doc_types)
            .finish_non_exhaustive()
    }
}

impl ProfileUpdate {
    pub(crate) fn apply(self, mut profile: PartnerProfile) -> Result<PartnerProfile> {
        if let Some(pw) = self.password {
            if pw.is_empty() {
                return Err(VanError::InvalidProfile("empty password".into()));
            }
            profile.password_hash = hash_password(&pw)?;
        }
        if let Some(role) = self.role {
            profile.role = role;
        }
        if let Some(s) = self.authorized_senders {
            profile.authorized_senders = s;
        }
        if let Some(d) = self.allowed_doc_types {
            profile.allowed_doc_types = d;
        }
        if let Some(m) = self.delivery_mode {
            profile.delivery_mode = m;
        }
        if self.clear_notification {
            profile.notification = None;
        }
        if let Some(n) = self.notification {
            profile.notification = Some(n);
        }
        if let Some(a) = self.auto_ack {
            profile.auto_ack = a;
        }
        if let Some(k) = self.public_key {
            profile.public_key = Some(k);
        }
        profile.validate()?;
        Ok(profile)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionToken {
    /// 32 random bytes, hex encoded.
    pub token: String,
    pub partner_id: String,
    pub expires: DateTime<Utc>,
}

pub fn hash_password(password: &str) -> Result<String> {
    Argon2::default()
        .hash_password(password.as_bytes())
        .map(|h| h.to_string())
        .map_err(|e| VanError::InvalidProfile(format!("password hashing failed: {e}")))
}

pub(crate) fn verify_password(password: &str, hash: &str) -> bool {
    Argon2::default()
        .verify_password(password.as_bytes(), hash)
        .is_ok()
}

/// Burns the same work as a real check so unknown ids take as long as bad passwords.
pub(crate) fn verify_against_dummy(password: &str) {
    static DUMMY: OnceLock<String> = OnceLock::new();
    let hash = DUMMY.get_or_init(|| hash_password("not a real password").expect("hashing works"));
    let _ = verify_password(password, hash);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_never_contains_the_password() {
        let p = NewPartner::new("BUYER", "hunter22").into_profile().unwrap();
        assert!(!p.password_hash.contains("hunter22"));
        assert!(p.check_password("hunter22"));
        assert!(!p.check_password("hunter23"));
        let json = serde_json::to_string(&p).unwrap();
        assert!(!json.contains("hunter22"));
    }

    #[test]
    fn forward_mode_needs_endpoint() {
        let err = NewPartner::new("B", "pw").forward_to(" ").into_profile();
        assert!(matches!(err, Err(VanError::InvalidProfile(_))));
    }

    #[test]
    fn notification_filter() {
        let n = Notification {
            endpoint: "http://x".into(),
            doc_types: ["PO".to_string()].into(),
        };
        assert!(n.matches(&["PO".to_string()].into()));
        assert!(!n.matches(&["INV".to_string()].into()));
        let all = Notification {
            endpoint: "http://x".into(),
            doc_types: BTreeSet::new(),
        };
        assert!(all.matches(&["INV".to_string()].into()));
    }

    #[test]
    fn delivery_mode_json_shape() {
        let m = DeliveryMode::Forward {
            endpoint: "http://h/in".into(),
        };
        assert_eq!(
            serde_json::to_string(&m).unwrap(),
            r#"{"mode":"forward","endpoint":"http://h/in"}"#
        );
        let r: DeliveryMode = serde_json::from_str(r#"{"mode":"retrieve"}"#).unwrap();
        assert_eq!(r, DeliveryMode::Retrieve);
    }

    #[test]
    fn debug_redacts_passwords() {
        let p = NewPartner::new("B", "sekrit");
        assert!(!format!("{p:?}").contains("sekrit"));
        let u = ProfileUpdate {
            password: Some("sekrit".into()),
            ..Default::default()
        };
        assert!(!format!("{u:?}").contains("sekrit"));
    }
}
