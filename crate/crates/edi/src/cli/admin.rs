use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use edi_core::secenv::PublicKey;
use edi_service::wire::RouteRequest;
use edi_van::{
    AccountingReport, AuditEvent, AuditQuery, DeliveryMode, MessageId, NewPartner, Notification, ProfileUpdate,
    Role,
};

use super::context::Context;
use super::error::{CliError, CliResult};

/// `2011-01-01` (midnight UTC) or any RFC 3339 timestamp.
pub fn parse_time(s: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc())
        .map_err(|_| format!("{s:?} is neither YYYY-MM-DD nor RFC 3339"))
}

pub async fn login(ctx: &Context) -> CliResult<String> {
    ctx.login().await?;
    Ok(format!("logged in to {} as {}\n", ctx.config.van, ctx.config.partner_id))
}

/// The status chain of one message, one transition per line.
pub async fn status(ctx: &Context, id: MessageId) -> CliResult<String> {
    let events = ctx.call(async |c| c.audit(&AuditQuery::message(id)).await).await?;
    let mut s = String::new();
    for e in events.iter().filter(|e| e.action.transition().is_some()) {
        let _ = write!(s, "{:<17} {}  by {}", e.action.as_str(), e.at.to_rfc3339(), e.actor);
        if let Some(r) = &e.detail.reason {
            let _ = write!(s, "  ({r})");
        }
        if let Some(ep) = &e.detail.endpoint {
            let _ = write!(s, "  -> {ep}");
        }
        s.push('\n');
    }
    if s.is_empty() {
        return Err(CliError::Local(format!("no events for message {id}")));
    }
    Ok(s)
}

pub async fn audit(ctx: &Context, query: &AuditQuery) -> CliResult<Vec<AuditEvent>> {
    ctx.call(async |c| c.audit(query).await).await
}

pub fn render_audit(events: &[AuditEvent]) -> String {
    let mut s = String::new();
    for e in events {
        let msg = e.message_id.map_or("-".to_string(), |m| m.to_string());
        let detail = serde_json::to_string(&e.detail).expect("detail serializes");
        let _ = writeln!(s, "{:>6} {} {:>6} {:<17} {:<10} {detail}", e.seq, e.at.to_rfc3339(), msg, e.action.as_str(), e.actor);
    }
    s
}

pub async fn accounting(
    ctx: &Context,
    partner: Option<&str>,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> CliResult<AccountingReport> {
    let partner = partner.unwrap_or(&ctx.config.partner_id);
    ctx.call(async |c| c.accounting(partner, from, to).await).await
}

pub fn render_accounting(r: &AccountingReport) -> String {
    format!(
        "partner   {}\nperiod    {} .. {}\nmessages  in {:>8}  out {:>8}\nbytes     in {:>8}  out {:>8}\n",
        r.partner_id,
        r.start.to_rfc3339(),
        r.end.to_rfc3339(),
        r.messages_in,
        r.messages_out,
        r.bytes_in,
        r.bytes_out
    )
}

/// Profile fields shared by `partner add` and `partner update`.
#[derive(Debug, Clone, Default)]
pub struct ProfileArgs {
    pub role: Option<Role>,
    pub accept: Vec<String>,
    pub allow: Vec<String>,
    pub forward: Option<String>,
    pub retrieve: bool,
    pub notify: Option<String>,
    pub notify_types: Vec<String>,
    pub clear_notification: bool,
    pub auto_ack: Option<bool>,
    /// A `.pub` key file.
    pub public_key: Option<std::path::PathBuf>,
}

fn read_public_key(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Local(format!("{}: {e}", path.display())))?;
    let key = PublicKey::from_bytes(&bytes).map_err(|e| CliError::Local(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(key.to_bytes()))
}

fn notification(args: &ProfileArgs) -> Option<Notification> {
    args.notify.as_ref().map(|endpoint| Notification {
        endpoint: endpoint.clone(),
        doc_types: args.notify_types.iter().cloned().collect(),
    })
}

pub async fn partner_add(ctx: &Context, id: &str, password: String, args: &ProfileArgs) -> CliResult<String> {
    let mut p = NewPartner::new(id, password)
        .role(args.role.unwrap_or_default())
        .accepts_from(args.accept.iter().cloned())
        .allows(args.allow.iter().cloned())
        .auto_ack(args.auto_ack.unwrap_or(false));
    if let Some(ep) = &args.forward {
        p = p.forward_to(ep.clone());
    }
    p.notification = notification(args);
    if let Some(path) = &args.public_key {
        p.public_key = Some(read_public_key(path)?);
    }
    ctx.call(async |c| c.add_partner(&p).await).await?;
    Ok(format!("added partner {id}\n"))
}

pub async fn partner_update(
    ctx: &Context,
    id: &str,
    password: Option<String>,
    args: &ProfileArgs,
) -> CliResult<String> {
    let nonempty = |v: &Vec<String>| (!v.is_empty()).then(|| v.iter().cloned().collect());
    let delivery_mode = match (&args.forward, args.retrieve) {
        (Some(_), true) => return Err(CliError::Local("--forward and --retrieve are exclusive".into())),
        (Some(ep), false) => Some(DeliveryMode::Forward { endpoint: ep.clone() }),
        (None, true) => Some(DeliveryMode::Retrieve),
        (None, false) => None,
    };
    let update = ProfileUpdate {
        password,
        role: args.role,
        authorized_senders: nonempty(&args.accept),
        allowed_doc_types: nonempty(&args.allow),
        delivery_mode,
        notification: notification(args),
        clear_notification: args.clear_notification,
        auto_ack: args.auto_ack,
        public_key: args.public_key.as_deref().map(read_public_key).transpose()?,
    };
    ctx.call(async |c| c.update_partner(id, &update).await).await?;
    Ok(format!("updated partner {id}\n"))
}

pub async fn route_add(ctx: &Context, pattern: &str, endpoint: &str, max_hops: Option<u32>) -> CliResult<String> {
    let req = RouteRequest {
        pattern: pattern.into(),
        endpoint: endpoint.into(),
        max_hops,
    };
    ctx.call(async |c| c.add_route(&req).await).await?;
    Ok(format!("added route {pattern} -> {endpoint}\n"))
}
