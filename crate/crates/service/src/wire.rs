//! JSON bodies and header names shared by the API and the client.

use chrono::{DateTime, Utc};
use edi_van::{MessageId, MessageStatus};
use serde::{Deserialize, Serialize};

pub const SESSION: &str = "x-edi-session";
pub const SENDER: &str = "x-edi-sender";
pub const RECIPIENT: &str = "x-edi-recipient";
pub const CONTROL: &str = "x-edi-control";
pub const DOC_TYPES: &str = "x-edi-doctypes";
pub const ACK: &str = "x-edi-ack";
pub const HOPS: &str = "x-edi-hops";
pub const MESSAGE_ID: &str = "x-edi-message-id";
pub const ACK_OF: &str = "x-edi-ack-of";
pub const QUEUED_AT: &str = "x-edi-queued-at";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LoginRequest {
    pub partner_id: String,
    pub password: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DepositResponse {
    pub message_id: MessageId,
    pub status: MessageStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AckResponse {
    pub message_id: MessageId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fa_message_id: Option<MessageId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_message_id: Option<MessageId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VanInfo {
    pub van_id: String,
    /// Hex of the VAN's public key bundle.
    pub public_key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RouteRequest {
    pub pattern: String,
    pub endpoint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_hops: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MailboxQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub since: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_type: Option<String>,
    #[serde(default)]
    pub redeliver: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AccountingQuery {
    pub partner: String,
    pub from: DateTime<Utc>,
    pub to: DateTime<Utc>,
}
