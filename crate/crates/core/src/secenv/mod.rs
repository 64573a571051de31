//! The security envelope.
//!
//! Two suites are supported, both pinned in [`SUITE_REGISTRY`]:
//!
//! | suite   | content cipher | key transport                  | signature      |
//! |---------|----------------|--------------------------------|----------------|
//! | `PSK-1` | AES-256-GCM    | none (pre-shared 32-byte key)  | HMAC-SHA256    |
//! | `PUB-1` | AES-256-GCM    | X25519 + HKDF-SHA256, AES-GCM  | Ed25519        |
//!
//! Every envelope carries the SHA-256 digest of the plaintext. The signature
//! covers the canonical signing input
//! `"1\n<suite>\n<sender_key_id>\n<recipient_key_id>\n" || digest`, which is
//! also bound into the content cipher as associated data.
//!
//! `PSK-1` authenticates the pair, not the individual: either holder of the
//! key can produce a valid MAC, so it gives no third-party non-repudiation.

mod authz;
mod digest;
mod envelope;
mod keys;
mod seal;
mod sign;

pub use authz::{check_authorization, AuthorizationOutcome, AuthorizationPolicy, Countersignature, RefusalReason};
pub use digest::{compute_digest, Digest};
pub use envelope::{SecureEnvelope, ENVELOPE_MAGIC};
pub use keys::{psk_key_id, KeyKind, KeyPair, KeyRecord, Keystore, PublicKey, SUITE_REGISTRY};
pub use seal::{unwrap, unwrap_bytes, wrap, Rejected, VerificationReport};
pub use sign::{sign_detached, verify_detached};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SecEnvError {
    #[error("MissingKey({0})")]
    MissingKey(String),

    #[error("UnknownSuite({0})")]
    UnknownSuite(String),

    #[error("DecryptFailure")]
    DecryptFailure,

    #[error("DigestMismatch")]
    DigestMismatch,

    #[error("SignatureInvalid")]
    SignatureInvalid,

    #[error("MalformedEnvelope({0})")]
    MalformedEnvelope(String),

    #[error("InvalidKey({0})")]
    InvalidKey(String),

    #[error("keystore: {0}")]
    Keystore(String),

    #[error("UnknownSigner({0})")]
    UnknownSigner(String),

    #[error("InvalidCountersignature({0})")]
    InvalidCountersignature(String),

    #[error("InvalidPolicy({0})")]
    InvalidPolicy(String),
}

pub type Result<T> = std::result::Result<T, SecEnvError>;

/// Envelope format version.
pub const ENVELOPE_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CipherSuiteId {
    Psk1,
    Pub1,
}

impl CipherSuiteId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Psk1 => "PSK-1",
            Self::Pub1 => "PUB-1",
        }
    }
}

impl fmt::Display for CipherSuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CipherSuiteId {
    type Err = SecEnvError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PSK-1" => Ok(Self::Psk1),
            "PUB-1" => Ok(Self::Pub1),
            other => Err(SecEnvError::UnknownSuite(other.to_owned())),
        }
    }
}

/// `"1\n<suite>\n<sender_key_id>\n<recipient_key_id>\n"` followed by the raw digest.
pub fn signing_input(
    suite: CipherSuiteId,
    sender_key_id: &str,
    recipient_key_id: &str,
    digest: &Digest,
) -> Vec<u8> {
    let mut out =
        format!("{ENVELOPE_VERSION}\n{suite}\n{sender_key_id}\n{recipient_key_id}\n").into_bytes();
    out.extend_from_slice(digest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_ids_are_closed() {
        assert_eq!("PSK-1".parse::<CipherSuiteId>().unwrap(), CipherSuiteId::Psk1);
        assert_eq!("PUB-1".parse::<CipherSuiteId>().unwrap().to_string(), "PUB-1");
        assert_eq!(
            "PUB-9".parse::<CipherSuiteId>(),
            Err(SecEnvError::UnknownSuite("PUB-9".into()))
        );
    }

    #[test]
    fn signing_input_layout() {
        let input = signing_input(CipherSuiteId::Pub1, "A", "B", &[7u8; 32]);
        assert_eq!(&input[..14], b"1\nPUB-1\nA\nB\n\x07\x07");
        assert_eq!(input.len(), 12 + 32);
    }
}
