//! Async HTTP client for the VAN API.

use std::collections::BTreeSet;
use std::time::Duration;

use chrono::{DateTime, Utc};
use edi_van::{
    AccountingReport, AuditEvent, AuditQuery, DepositHeader, MessageId, MessageStatus, NewPartner, ProfileUpdate,
    SessionToken,
};
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::multipart;
use crate::wire::{self, *};

#[derive(Debug, Error)]
pub enum ClientError {
    /// The VAN answered with an error status.
    #[error("{code}: {message}")]
    Api {
        status: u16,
        code: String,
        message: String,
        original_message_id: Option<MessageId>,
    },

    #[error("cannot reach VAN: {0}")]
    Network(String),

    #[error("unexpected response: {0}")]
    Protocol(String),

    #[error("not logged in")]
    NoSession,
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            Self::Api { status, .. } => Some(*status),
            _ => None,
        }
    }

    pub fn code(&self) -> Option<&str> {
        match self {
            Self::Api { code, .. } => Some(code),
            _ => None,
        }
    }
}

impl From<reqwest::Error> for ClientError {
    fn from(e: reqwest::Error) -> Self {
        if e.is_decode() {
            Self::Protocol(e.to_string())
        } else {
            Self::Network(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// Result of a deposit the VAN took custody of.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepositOutcome {
    Queued { message_id: MessageId },
    Rejected { message_id: MessageId, reason: String },
}

impl DepositOutcome {
    pub fn message_id(&self) -> MessageId {
        match self {
            Self::Queued { message_id } | Self::Rejected { message_id, .. } => *message_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MailboxItem {
    pub message_id: MessageId,
    pub sender: String,
    pub recipient: String,
    pub control: String,
    pub doc_types: BTreeSet<String>,
    pub ack_requested: bool,
    pub ack_of: Option<MessageId>,
    pub queued_at: Option<DateTime<Utc>>,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct VanClient {
    base: String,
    http: reqwest::Client,
    token: Option<String>,
}

impl VanClient {
    pub fn new(base: &str) -> Self {
        Self::with_timeout(base, Duration::from_secs(30))
    }

    pub fn with_timeout(base: &str, timeout: Duration) -> Self {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("HTTP client builds");
        Self::from_parts(base, http)
    }

    pub fn from_parts(base: &str, http: reqwest::Client) -> Self {
        Self {
            base: base.trim_end_matches('/').to_owned(),
            http,
            token: None,
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    pub fn set_token(&mut self, token: Option<String>) {
        self.token = token;
    }

    fn url(&self, path: &str) -> String {
        format!("{}/v1{path}", self.base)
    }

    fn authed(&self, req: reqwest::RequestBuilder) -> Result<reqwest::RequestBuilder> {
        let token = self.token.as_deref().ok_or(ClientError::NoSession)?;
        Ok(req.bearer_auth(token))
    }

    pub async fn info(&self) -> Result<VanInfo> {
        json(self.http.get(self.url("/info")).send().await?).await
    }

    /// Log in and keep the session token for later calls.
    pub async fn login(&mut self, partner_id: &str, password: &str) -> Result<SessionToken> {
        let body = LoginRequest {
            partner_id: partner_id.into(),
            password: password.into(),
        };
        let s: SessionToken = json(self.http.post(self.url("/session")).json(&body).send().await?).await?;
        self.token = Some(s.token.clone());
        Ok(s)
    }

    pub async fn deposit(&self, header: &DepositHeader, envelope: Vec<u8>) -> Result<DepositOutcome> {
        let doc_types: Vec<&str> = header.doc_types.iter().map(String::as_str).collect();
        let req = self
            .http
            .post(self.url("/deposit"))
            .header(wire::SENDER, &header.sender)
            .header(wire::RECIPIENT, &header.recipient)
            .header(wire::CONTROL, &header.control)
            .header(wire::DOC_TYPES, doc_types.join(","))
            .header(wire::ACK, if header.ack_requested { "1" } else { "0" })
            .header(wire::HOPS, header.hop_count.to_string())
            .header(reqwest::header::CONTENT_TYPE, "application/octet-stream")
            .body(envelope);
        let resp = self.authed(req)?.send().await?;
        if resp.status() == StatusCode::UNPROCESSABLE_ENTITY {
            let r: DepositResponse = resp.json().await?;
            return Ok(DepositOutcome::Rejected {
                message_id: r.message_id,
                reason: r.reason.unwrap_or_default(),
            });
        }
        let r: DepositResponse = json(resp).await?;
        match r.status {
            MessageStatus::Rejected => Ok(DepositOutcome::Rejected {
                message_id: r.message_id,
                reason: r.reason.unwrap_or_default(),
            }),
            _ => Ok(DepositOutcome::Queued {
                message_id: r.message_id,
            }),
        }
    }

    pub async fn mailbox(&self, query: &MailboxQuery) -> Result<Vec<MailboxItem>> {
        let resp = check(self.authed(self.http.get(self.url("/mailbox")).query(query))?.send().await?).await?;
        let ct = resp
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or_default()
            .to_owned();
        let boundary = multipart::boundary_of(&ct)
            .ok_or_else(|| ClientError::Protocol(format!("mailbox content type {ct:?}")))?
            .to_owned();
        let body = resp.bytes().await?;
        let parts = multipart::decode(&boundary, &body).map_err(|e| ClientError::Protocol(e.to_string()))?;
        parts.into_iter().map(mailbox_item).collect()
    }

    /// Acknowledge a delivered message, optionally supplying the FA envelope
    /// and its control number. Returns the FA's message id, if one was made.
    pub async fn ack(&self, message_id: MessageId, fa: Option<(String, Vec<u8>)>) -> Result<Option<MessageId>> {
        let mut req = self.http.post(self.url(&format!("/messages/{message_id}/ack")));
        if let Some((control, bytes)) = fa {
            req = req
                .header(wire::CONTROL, control)
                .header(reqwest::header::CONTENT_TYPE, "application/octet-stream")
                .body(bytes);
        }
        let r: AckResponse = json(self.authed(req)?.send().await?).await?;
        Ok(r.fa_message_id)
    }

    pub async fn audit(&self, query: &AuditQuery) -> Result<Vec<AuditEvent>> {
        json(self.authed(self.http.get(self.url("/audit")).query(query))?.send().await?).await
    }

    pub async fn accounting(
        &self,
        partner: &str,
        from: DateTime<Utc>,
        to: DateTime<Utc>,
    ) -> Result<AccountingReport> {
        let q = AccountingQuery {
            partner: partner.into(),
            from,
            to,
        };
        json(self.authed(self.http.get(self.url("/accounting")).query(&q))?.send().await?).await
    }

    pub async fn add_partner(&self, partner: &NewPartner) -> Result<()> {
        check(self.authed(self.http.post(self.url("/partners")).json(partner))?.send().await?).await?;
        Ok(())
    }

    pub async fn update_partner(&self, partner_id: &str, update: &ProfileUpdate) -> Result<()> {
        let url = self.url(&format!("/partners/{partner_id}"));
        check(self.authed(self.http.put(url).json(update))?.send().await?).await?;
        Ok(())
    }

    pub async fn add_route(&self, route: &RouteRequest) -> Result<()> {
        check(self.authed(self.http.post(self.url("/routes")).json(route))?.send().await?).await?;
        Ok(())
    }
}

async fn check(resp: Response) -> Result<Response> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let text = resp.text().await.unwrap_or_default();
    Err(match serde_json::from_str::<ErrorBody>(&text) {
        Ok(b) => ClientError::Api {
            status: status.as_u16(),
            code: b.error,
            message: b.message,
            original_message_id: b.original_message_id,
        },
        Err(_) => ClientError::Api {
            status: status.as_u16(),
            code: status.canonical_reason().unwrap_or("HTTP_ERROR").to_uppercase().replace(' ', "_"),
            message: text,
            original_message_id: None,
        },
    })
}

async fn json<T: DeserializeOwned>(resp: Response) -> Result<T> {
    Ok(check(resp).await?.json().await?)
}

fn mailbox_item(part: multipart::Part) -> Result<MailboxItem> {
    let get = |name: &str| {
        part.header(name)
            .map(str::to_owned)
            .ok_or_else(|| ClientError::Protocol(format!("mailbox part without {name}")))
    };
    let id = |s: String| {
        s.parse::<MessageId>()
            .map_err(|_| ClientError::Protocol(format!("bad message id {s:?}")))
    };
    Ok(MailboxItem {
        message_id: id(get(wire::MESSAGE_ID)?)?,
        sender: get(wire::SENDER)?,
        recipient: get(wire::RECIPIENT)?,
        control: get(wire::CONTROL)?,
        doc_types: get(wire::DOC_TYPES)?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect(),
        ack_requested: part.header(wire::ACK) == Some("1"),
        ack_of: part.header(wire::ACK_OF).map(|s| id(s.to_owned())).transpose()?,
        queued_at: part
            .header(wire::QUEUED_AT)
            .and_then(|s| DateTime::parse_from_rfc3339(s).ok())
            .map(|d| d.with_timezone(&Utc)),
        payload: part.body,
    })
}
