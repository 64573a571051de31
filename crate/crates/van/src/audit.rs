use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{MessageId, MessageStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AuditAction {
    Received,
    Queued,
    Rejected,
    Delivered,
    ForwardedRemote,
    Acknowledged,
    DuplicateRejected,
    PushFailed,
    RelayFailed,
    NotifySent,
    NotifyFailed,
    LoginOk,
    LoginFail,
    PartnerAdded,
    PartnerUpdated,
    RouteAdded,
}

impl AuditAction {
    /// The status this action moves a message into, if it is a transition.
    pub fn transition(self) -> Option<MessageStatus> {
        Some(match self {
            Self::Received => MessageStatus::Received,
            Self::Queued => MessageStatus::Queued,
            Self::Rejected => MessageStatus::Rejected,
            Self::Delivered => MessageStatus::Delivered,
            Self::ForwardedRemote => MessageStatus::ForwardedRemote,
            Self::Acknowledged => MessageStatus::Acknowledged,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Received => "RECEIVED",
            Self::Queued => "QUEUED",
            Self::Rejected => "REJECTED",
            Self::Delivered => "DELIVERED",
            Self::ForwardedRemote => "FORWARDED_REMOTE",
            Self::Acknowledged => "ACKNOWLEDGED",
            Self::DuplicateRejected => "DUPLICATE_REJECTED",
            Self::PushFailed => "PUSH_FAILED",
            Self::RelayFailed => "RELAY_FAILED",
            Self::NotifySent => "NOTIFY_SENT",
            Self::NotifyFailed => "NOTIFY_FAILED",
            Self::LoginOk => "LOGIN_OK",
            Self::LoginFail => "LOGIN_FAIL",
            Self::PartnerAdded => "PARTNER_ADDED",
            Self::PartnerUpdated => "PARTNER_UPDATED",
            Self::RouteAdded => "ROUTE_ADDED",
        }
    }
}

impl fmt::Display for AuditAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Structured detail. Which fields are set depends on the action; a
/// `RECEIVED` event carries everything needed to rebuild the message.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditDetail {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sender: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipient: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub doc_types: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hop_count: Option<u32>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub ack_requested: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<u32>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub relay: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_of: Option<MessageId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ack_message_id: Option<MessageId>,
    /// Subject of profile and route events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditEvent {
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message_id: Option<MessageId>,
    pub actor: String,
    pub action: AuditAction,
    #[serde(default)]
    pub detail: AuditDetail,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditQuery {
    pub message_id: Option<MessageId>,
    pub partner_id: Option<String>,
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
}

impl AuditQuery {
    pub fn message(id: MessageId) -> Self {
        Self {
            message_id: Some(id),
            ..Self::default()
        }
    }

    pub fn partner(id: impl Into<String>) -> Self {
        Self {
            partner_id: Some(id.into()),
            ..Self::default()
        }
    }

    pub fn between(mut self, from: DateTime<Utc>, to: DateTime<Utc>) -> Self {
        self.from = Some(from);
        self.to = Some(to);
        self
    }

    pub(crate) fn in_period(&self, at: DateTime<Utc>) -> bool {
        self.from.is_none_or(|f| at >= f) && self.to.is_none_or(|t| at <= t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AccountingReport {
    pub partner_id: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub messages_in: u64,
    pub messages_out: u64,
    pub bytes_in: u64,
    pub bytes_out: u64,
}

/// Usage for `partner` over `[start, end]`, from audit events alone.
///
/// Outbound traffic is every deposit the partner made (`RECEIVED` with the
/// partner as sender). Inbound traffic is every message queued into the
/// partner's local mailbox (`QUEUED` with the partner as recipient, not a
/// relay).
pub fn accounting_from_events<'a>(
    partner: &str,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
    events: impl IntoIterator<Item = &'a AuditEvent>,
) -> AccountingReport {
    let mut report = AccountingReport {
        partner_id: partner.to_owned(),
        start,
        end,
        messages_in: 0,
        messages_out: 0,
        bytes_in: 0,
        bytes_out: 0,
    };
    for ev in events {
        if ev.at < start || ev.at > end {
            continue;
        }
        let d = &ev.detail;
        let bytes = d.bytes.unwrap_or(0);
        match ev.action {
            AuditAction::Received if d.sender.as_deref() == Some(partner) => {
                report.messages_out += 1;
                report.bytes_out += bytes;
            }
            AuditAction::Queued if !d.relay && d.recipient.as_deref() == Some(partner) => {
                report.messages_in += 1;
                report.bytes_in += bytes;
            }
            _ => {}
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detail_omits_empty_fields() {
        let ev = AuditEvent {
            seq: 1,
            at: DateTime::from_timestamp(0, 0).unwrap(),
            message_id: None,
            actor: "A".into(),
            action: AuditAction::LoginFail,
            detail: AuditDetail::default(),
        };
        let json = serde_json::to_string(&ev).unwrap();
        assert_eq!(
            json,
            r#"{"seq":1,"at":"1970-01-01T00:00:00Z","actor":"A","action":"LOGIN_FAIL","detail":{}}"#
        );
        assert_eq!(serde_json::from_str::<AuditEvent>(&json).unwrap(), ev);
    }
}
