//! HTTP routes under `/v1`.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use edi_van::{AuditQuery, DepositHeader, MessageId, MessageStatus, NewPartner, ProfileUpdate, RetrieveFilter, VanError};

use crate::multipart::{self, Part};
use crate::runtime::{route_from, OpError, Shared};
use crate::wire::{self, *};

const MAX_BODY: usize = 64 * 1024 * 1024;

pub(crate) fn router(shared: Arc<Shared>) -> Router {
    Router::new()
        .route("/v1/info", get(info))
        .route("/v1/session", post(login))
        .route("/v1/deposit", post(deposit))
        .route("/v1/mailbox", get(mailbox))
        .route("/v1/messages/{id}/ack", post(ack))
        .route("/v1/audit", get(audit))
        .route("/v1/accounting", get(accounting))
        .route("/v1/partners", post(add_partner))
        .route("/v1/partners/{id}", put(update_partner))
        .route("/v1/routes", post(add_route))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(shared)
}

pub(crate) struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: code.into(),
                message: message.into(),
                original_message_id: None,
            },
        }
    }

    fn bad_header(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "INVALID_HEADER", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<OpError> for ApiError {
    fn from(e: OpError) -> Self {
        match e {
            OpError::Unavailable(m) => Self::new(StatusCode::SERVICE_UNAVAILABLE, "STORAGE_FAILURE", m),
            OpError::Van(e) => e.into(),
        }
    }
}

impl From<VanError> for ApiError {
    fn from(e: VanError) -> Self {
        use StatusCode as S;
        let (status, code) = match &e {
            VanError::AuthFailed => (S::UNAUTHORIZED, "AUTH_FAILED"),
            VanError::SessionInvalid => (S::UNAUTHORIZED, "SESSION_INVALID"),
            VanError::SenderMismatch { .. } => (S::FORBIDDEN, "SENDER_MISMATCH"),
            VanError::DuplicateControl { .. } => (S::CONFLICT, "DUPLICATE_CONTROL"),
            VanError::Forbidden => (S::FORBIDDEN, "FORBIDDEN"),
            VanError::UnknownPartner(_) => (S::NOT_FOUND, "UNKNOWN_PARTNER"),
            VanError::PartnerExists(_) => (S::CONFLICT, "PARTNER_EXISTS"),
            VanError::NoSuchMessage(_) => (S::NOT_FOUND, "NO_SUCH_MESSAGE"),
            VanError::WrongState { .. } => (S::CONFLICT, "WRONG_STATE"),
            VanError::AlreadyAcknowledged(_) => (S::CONFLICT, "ALREADY_ACKNOWLEDGED"),
            VanError::InvalidHeader(_) => (S::BAD_REQUEST, "INVALID_HEADER"),
            VanError::InvalidProfile(_) => (S::BAD_REQUEST, "INVALID_PROFILE"),
            VanError::InvalidRoute(_) => (S::BAD_REQUEST, "INVALID_ROUTE"),
            VanError::InvalidPeriod => (S::BAD_REQUEST, "INVALID_PERIOD"),
            VanError::Replay { .. } => (S::INTERNAL_SERVER_ERROR, "REPLAY_FAILED"),
        };
        let mut err = Self::new(status, code, e.to_string());
        if let VanError::DuplicateControl { original, .. } = e {
            err.body.original_message_id = Some(original);
        }
        err
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn token(headers: &HeaderMap) -> ApiResult<String> {
    let bearer = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    let session = headers.get(wire::SESSION).and_then(|v| v.to_str().ok());
    bearer
        .or(session)
        .map(|t| t.trim().to_owned())
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "SESSION_INVALID", "no session token"))
}

fn text<'a>(headers: &'a HeaderMap, name: &str) -> ApiResult<Option<&'a str>> {
    headers
        .get(name)
        .map(|v| v.to_str().map_err(|_| ApiError::bad_header(format!("{name} is not text"))))
        .transpose()
}

fn required<'a>(headers: &'a HeaderMap, name: &str) -> ApiResult<&'a str> {
    text(headers, name)?.ok_or_else(|| ApiError::bad_header(format!("missing {name}")))
}

fn deposit_header(headers: &HeaderMap) -> ApiResult<DepositHeader> {
    let doc_types: Vec<&str> = required(headers, wire::DOC_TYPES)?
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let ack = match text(headers, wire::ACK)? {
        None | Some("0") | Some("false") => false,
        Some("1") | Some("true") => true,
        Some(v) => return Err(ApiError::bad_header(format!("bad {}: {v:?}", wire::ACK))),
    };
    let hops = match text(headers, wire::HOPS)? {
        None => 0,
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_header(format!("bad {}: {v:?}", wire::HOPS)))?,
    };
    Ok(DepositHeader::new(
        required(headers, wire::SENDER)?,
        required(headers, wire::RECIPIENT)?,
        required(headers, wire::CONTROL)?,
        doc_types,
    )
    .with_ack_requested(ack)
    .with_hop_count(hops))
}

async fn info(State(s): State<Arc<Shared>>) -> ApiResult<Json<VanInfo>> {
    let info = s
        .with_van(|van| {
            Ok(VanInfo {
                van_id: van.van_id().to_owned(),
                public_key: hex::encode(van.public_key().to_bytes()),
            })
        })
        .await?;
    Ok(Json(info))
}

async fn login(State(s): State<Arc<Shared>>, Json(req): Json<LoginRequest>) -> ApiResult<impl IntoResponse> {
    let session = s.with_van(move |van| van.authenticate(&req.partner_id, &req.password)).await?;
    Ok(Json(session))
}

async fn deposit(State(s): State<Arc<Shared>>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let token = token(&headers)?;
    let header = deposit_header(&headers)?;
    let receipt = s.with_van(move |van| van.deposit(&token, header, body.to_vec())).await?;
    let status = if receipt.status == MessageStatus::Rejected {
        StatusCode::UNPROCESSABLE_ENTITY
    } else {
        StatusCode::OK
    };
    let body = DepositResponse {
        message_id: receipt.message_id,
        status: receipt.status,
        reason: receipt.reason.map(|r| r.as_str().to_owned()),
    };
    Ok((status, Json(body)).into_response())
}

async fn mailbox(
    State(s): State<Arc<Shared>>,
    headers: HeaderMap,
    Query(q): Query<MailboxQuery>,
) -> ApiResult<Response> {
    let token = token(&headers)?;
    let filter = RetrieveFilter {
        since: q.since,
        doc_type: q.doc_type,
        redeliver: q.redeliver,
    };
    let items = s.with_van(move |van| van.retrieve(&token, &filter)).await?;
    let parts: Vec<Part> = items
        .into_iter()
        .map(|m| {
            let msg = m.message;
            let mut headers = vec![
                (wire::MESSAGE_ID.into(), msg.message_id.to_string()),
                (wire::SENDER.into(), msg.sender_id.clone()),
                (wire::RECIPIENT.into(), msg.recipient_id.clone()),
                (wire::CONTROL.into(), msg.interchange_control.clone()),
                (wire::DOC_TYPES.into(), msg.doc_types.iter().cloned().collect::<Vec<_>>().join(",")),
                (wire::ACK.into(), if msg.ack_requested { "1" } else { "0" }.into()),
            ];
            if let Some(of) = msg.ack_of {
                headers.push((wire::ACK_OF.into(), of.to_string()));
            }
            if let Some(at) = msg.queued_at() {
                headers.push((wire::QUEUED_AT.into(), at.to_rfc3339()));
            }
            headers.push(("content-type".into(), "application/octet-stream".into()));
            Part {
                headers,
                body: m.payload.to_vec(),
            }
        })
        .collect();
    let mut raw = [0u8; 12];
    rand::fill(&mut raw);
    let boundary = format!("edi-{}", hex::encode(raw));
    let body = multipart::encode(&boundary, &parts);
    Ok(([(header::CONTENT_TYPE, multipart::content_type(&boundary))], body).into_response())
}

async fn ack(
    State(s): State<Arc<Shared>>,
    headers: HeaderMap,
    Path(id): Path<MessageId>,
    body: Bytes,
) -> ApiResult<Json<AckResponse>> {
    let token = token(&headers)?;
    let fa = match text(&headers, wire::CONTROL)? {
        Some(control) => Some((control.to_owned(), body.to_vec())),
        None if body.is_empty() => None,
        None => return Err(ApiError::bad_header(format!("an FA body needs {}", wire::CONTROL))),
    };
    let fa_message_id = s.with_van(move |van| van.acknowledge(&token, id, fa)).await?;
    Ok(Json(AckResponse {
        message_id: id,
        fa_message_id,
    }))
}

async fn audit(
    State(s): State<Arc<Shared>>,
    headers: HeaderMap,
    Query(q): Query<AuditQuery>,
) -> ApiResult<impl IntoResponse> {
    let token = token(&headers)?;
    Ok(Json(s.with_van(move |van| van.audit_trail(&token, &q)).await?))
}

async fn accounting(
    State(s): State<Arc<Shared>>,
    headers: HeaderMap,
    Query(q): Query<AccountingQuery>,
) -> ApiResult<impl IntoResponse> {
    let token = token(&headers)?;
    Ok(Json(s.with_van(move |van| van.accounting(&token, &q.partner, q.from, q.to)).await?))
}

async fn add_partner(
    State(s): State<Arc<Shared>>,
    headers: HeaderMap,
    Json(p): Json<NewPartner>,
) -> ApiResult<StatusCode> {
    let token = token(&headers)?;
    s.with_van(move |van| van.add_partner(&token, p)).await?;
    Ok(StatusCode::CREATED)
}

async fn update_partner(
    State(s): State<Arc<Shared>>,
    headers: HeaderMap,
    Path(id): Path<String>,
    Json(u): Json<ProfileUpdate>,
) -> ApiResult<StatusCode> {
    let token = token(&headers)?;
    s.with_van(move |van| van.update_partner(&token, &id, u)).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn add_route(
    State(s): State<Arc<Shared>>,
    headers: HeaderMap,
    Json(r): Json<RouteRequest>,
) -> ApiResult<StatusCode> {
    let token = token(&headers)?;
    let route = route_from(r, s.config.max_hops);
    s.with_van(move |van| van.add_route(&token, route)).await?;
    Ok(StatusCode::CREATED)
}
