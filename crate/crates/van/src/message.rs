use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use edi_core::interchange::{is_code, is_partner_id};
use serde::{Deserialize, Serialize};

use crate::{MessageId, Result, VanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageStatus {
    Received,
    Rejected,
    Queued,
    ForwardedRemote,
    Delivered,
    Acknowledged,
}

impl MessageStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Received => "RECEIVED",
            Self::Rejected => "REJECTED",
            Self::Queued => "QUEUED",
            Self::ForwardedRemote => "FORWARDED_REMOTE",
            Self::Delivered => "DELIVERED",
            Self::Acknowledged => "ACKNOWLEDGED",
        }
    }

    /// The only edges a message may take.
    pub fn can_move_to(self, next: Self) -> bool {
        use MessageStatus::*;
        matches!(
            (self, next),
            (Received, Rejected)
                | (Received, Queued)
                | (Queued, Delivered)
                | (Queued, ForwardedRemote)
                | (Delivered, Acknowledged)
                | (ForwardedRemote, Acknowledged)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Rejected | Self::Acknowledged)
    }
}

impl fmt::Display for MessageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    UnauthorizedPartner,
    DocTypeNotAllowed,
    MalformedEnvelope,
    NoSuchMailbox,
    HopLimit,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::UnauthorizedPartner => "UNAUTHORIZED_PARTNER",
            Self::DocTypeNotAllowed => "DOC_TYPE_NOT_ALLOWED",
            Self::MalformedEnvelope => "MALFORMED_ENVELOPE",
            Self::NoSuchMailbox => "NO_SUCH_MAILBOX",
            Self::HopLimit => "HOP_LIMIT",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The cleartext routing frame a depositor sends alongside the envelope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DepositHeader {
    pub sender: String,
    pub recipient: String,
    /// Interchange control number, 9 digits.
    pub control: String,
    pub doc_types: BTreeSet<String>,
    #[serde(default)]
    pub ack_requested: bool,
    /// Relays already taken. Only peer sessions may set this above zero.
    #[serde(default)]
    pub hop_count: u32,
}

impl DepositHeader {
    pub fn new<I, S>(sender: &str, recipient: &str, control: &str, doc_types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            sender: sender.into(),
            recipient: recipient.into(),
            control: control.into(),
            doc_types: doc_types.into_iter().map(Into::into).collect(),
            ack_requested: false,
            hop_count: 0,
        }
    }

    pub fn with_ack_requested(mut self, on: bool) -> Self {
        self.ack_requested = on;
        self
    }

    pub fn with_hop_count(mut self, hops: u32) -> Self {
        self.hop_count = hops;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(VanError::InvalidHeader(m));
        if !is_partner_id(&self.sender) {
            return bad(format!("bad sender {:?}", self.sender));
        }
        if !is_partner_id(&self.recipient) {
            return bad(format!("bad recipient {:?}", self.recipient));
        }
        if self.control.len() != 9 || !self.control.bytes().all(|b| b.is_ascii_digit()) {
            return bad(format!("control {:?} is not 9 digits", self.control));
        }
        if self.doc_types.is_empty() {
            return bad("no doc types".into());
        }
        if let Some(d) = self.doc_types.iter().find(|d| !is_code(d)) {
            return bad(format!("bad doc type {d:?}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VanMessage {
    pub message_id: MessageId,
    pub sender_id: String,
    pub recipient_id: String,
    pub interchange_control: String,
    pub doc_types: BTreeSet<String>,
    pub bytes: u64,
    pub status: MessageStatus,
    pub hop_count: u32,
    pub ack_requested: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reject_reason: Option<RejectReason>,
    /// Peer endpoint for messages queued for relay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relay_endpoint: Option<String>,
    /// Set on acknowledgments: the message being acknowledged.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ack_of: Option<MessageId>,
    pub timestamps: BTreeMap<MessageStatus, DateTime<Utc>>,
}

impl VanMessage {
    pub fn queued_at(&self) -> Option<DateTime<Utc>> {
        self.timestamps.get(&MessageStatus::Queued).copied()
    }

    pub fn is_relay(&self) -> bool {
        self.relay_endpoint.is_some()
    }
}
