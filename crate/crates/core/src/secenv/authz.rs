//! Spending-limit authorization with supervisor countersignatures.
//!
//! Each signer has a limit in integer cents. An order within the signer's
//! limit (inclusive) is authorized by the signature alone; anything above
//! needs a valid countersignature from someone up the signer's supervisor
//! chain whose own limit covers the amount.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::keys::Keystore;
use super::sign::verify_detached;
use super::{Result, SecEnvError};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy", into = "RawPolicy")]
pub struct AuthorizationPolicy {
    limits: BTreeMap<String, u64>,
    supervisors: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct RawPolicy {
    limits: BTreeMap<String, u64>,
    #[serde(default)]
    supervisors: BTreeMap<String, String>,
}

impl TryFrom<RawPolicy> for AuthorizationPolicy {
    type Error = SecEnvError;

    fn try_from(raw: RawPolicy) -> Result<Self> {
        Self::new(raw.limits, raw.supervisors)
    }
}

impl From<AuthorizationPolicy> for RawPolicy {
    fn from(p: AuthorizationPolicy) -> Self {
        Self {
            limits: p.limits,
            supervisors: p.supervisors,
        }
    }
}

impl AuthorizationPolicy {
    /// Limits are unsigned cents; the supervisor map must be acyclic.
    pub fn new(limits: BTreeMap<String, u64>, supervisors: BTreeMap<String, String>) -> Result<Self> {
        for start in supervisors.keys() {
            let mut seen = BTreeSet::from([start.as_str()]);
            let mut cur = start.as_str();
            while let Some(next) = supervisors.get(cur) {
                if !seen.insert(next.as_str()) {
                    return Err(SecEnvError::InvalidPolicy(format!(
                        "supervisor chain from {start} loops back to {next}"
                    )));
                }
                cur = next;
            }
        }
        Ok(Self { limits, supervisors })
    }

    pub fn limit(&self, signer: &str) -> Option<u64> {
        self.limits.get(signer).copied()
    }

    /// Supervisors of `signer`, nearest first.
    pub fn chain<'a>(&'a self, signer: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        let mut cur = signer;
        std::iter::from_fn(move || {
            let next = self.supervisors.get(cur)?;
            cur = next;
            Some(next.as_str())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Countersignature {
    pub signer_key_id: String,
    #[serde(with = "hex_bytes")]
    pub signature: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefusalReason {
    LimitExceeded,
}

impl fmt::Display for RefusalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("LIMIT_EXCEEDED")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuthorizationOutcome {
    /// `by` is the signer whose limit covered the amount.
    Authorized { by: String },
    Refused(RefusalReason),
}

impl AuthorizationOutcome {
    pub fn is_authorized(&self) -> bool {
        matches!(self, Self::Authorized { .. })
    }
}

/// Decide whether `signer` may commit to `amount_cents`.
///
/// Every countersignature must verify over `signed_input` (the same
/// canonical input the primary signature covers), or the whole check fails
/// with `InvalidCountersignature`.
pub fn check_authorization(
    amount_cents: u64,
    signer: &str,
    countersigs: &[Countersignature],
    policy: &AuthorizationPolicy,
    signed_input: &[u8],
    keystore: &Keystore,
) -> Result<AuthorizationOutcome> {
    let own_limit = policy
        .limit(signer)
        .ok_or_else(|| SecEnvError::UnknownSigner(signer.to_owned()))?;

    for cs in countersigs {
        let valid = keystore
            .public_key(&cs.signer_key_id)
            .is_ok_and(|pk| verify_detached(signed_input, &cs.signature, &pk));
        if !valid {
            return Err(SecEnvError::InvalidCountersignature(cs.signer_key_id.clone()));
        }
    }

    if amount_cents <= own_limit {
        return Ok(AuthorizationOutcome::Authorized {
            by: signer.to_owned(),
        });
    }
    for supervisor in policy.chain(signer) {
        let covers = policy.limit(supervisor).is_some_and(|l| amount_cents <= l);
        if covers && countersigs.iter().any(|cs| cs.signer_key_id == supervisor) {
            return Ok(AuthorizationOutcome::Authorized {
                by: supervisor.to_owned(),
            });
        }
    }
    Ok(AuthorizationOutcome::Refused(RefusalReason::LimitExceeded))
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        hex::decode(text).map_err(serde::de::Error::custom)
    }
}
