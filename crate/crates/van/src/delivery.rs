use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::{DepositHeader, MessageId};

/// Waits after the first, second and third failed push or relay. A fourth
/// failure parks the message: it stays QUEUED and retrievable but is no
/// longer pushed automatically.
pub const PUSH_BACKOFF: [Duration; 3] = [
    Duration::from_secs(5),
    Duration::from_secs(25),
    Duration::from_secs(125),
];

/// Notifications get one retry, after this long.
pub(crate) const NOTIFY_RETRY: Duration = Duration::from_secs(5);
pub(crate) const NOTIFY_ATTEMPTS: u32 = 2;

/// Work for the host to carry out. Report the result with
/// `complete_push`, `complete_relay` or `complete_notify`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeliveryAction {
    /// POST the payload to a forward-mode recipient.
    Push {
        message_id: MessageId,
        endpoint: String,
        header: DepositHeader,
        payload: Arc<[u8]>,
    },
    /// Deposit at a peer VAN. `header.hop_count` is already incremented.
    Relay {
        message_id: MessageId,
        endpoint: String,
        header: DepositHeader,
        payload: Arc<[u8]>,
    },
    /// POST `notice` as JSON to a notification webhook.
    Notify {
        message_id: MessageId,
        endpoint: String,
        notice: Notice,
    },
}

impl DeliveryAction {
    pub fn message_id(&self) -> MessageId {
        match self {
            Self::Push { message_id, .. } | Self::Relay { message_id, .. } | Self::Notify { message_id, .. } => {
                *message_id
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Notice {
    pub message_id: MessageId,
    pub sender: String,
    pub doc_types: BTreeSet<String>,
    pub queued_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelayOutcome {
    /// The peer stored and queued the message.
    Accepted,
    /// The peer took custody but rejected it (screening, hop limit, duplicate).
    Refused(String),
    /// The peer could not be reached or refused our credentials.
    Failed(String),
}

#[derive(Debug, Clone, Default)]
pub(crate) struct DeliveryState {
    pub attempts: u32,
    pub next_at: Option<DateTime<Utc>>,
    pub in_flight: bool,
    pub notified: bool,
    pub notify_attempts: u32,
    pub notify_next_at: Option<DateTime<Utc>>,
    pub notify_in_flight: bool,
}

impl DeliveryState {
    pub fn parked(&self) -> bool {
        self.attempts as usize > PUSH_BACKOFF.len()
    }

    pub fn push_due(&self, now: DateTime<Utc>) -> bool {
        !self.in_flight && !self.parked() && self.next_at.is_none_or(|t| now >= t)
    }

    pub fn record_failure(&mut self, at: DateTime<Utc>) {
        self.in_flight = false;
        self.attempts += 1;
        self.next_at = PUSH_BACKOFF
            .get(self.attempts as usize - 1)
            .map(|d| at + TimeDelta::from_std(*d).unwrap());
    }

    pub fn notify_due(&self, now: DateTime<Utc>) -> bool {
        !self.notified
            && !self.notify_in_flight
            && self.notify_attempts < NOTIFY_ATTEMPTS
            && self.notify_next_at.is_none_or(|t| now >= t)
    }

    pub fn record_notify_failure(&mut self, at: DateTime<Utc>) {
        self.notify_in_flight = false;
        self.notify_attempts += 1;
        self.notify_next_at = Some(at + TimeDelta::from_std(NOTIFY_RETRY).unwrap());
    }
}
