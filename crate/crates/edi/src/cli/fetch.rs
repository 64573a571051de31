use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::Utc;
use edi_core::interchange::{
    build_functional_ack, parse_interchange, read_functional_ack, serialize_interchange, AckStatus, EnvelopeStamp,
    Interchange, FA_DOC_TYPE,
};
use edi_core::secenv::{unwrap_bytes, wrap, KeyKind, Keystore, PublicKey, SecureEnvelope};
use edi_core::translator::translate_inbound;
use edi_service::wire::MailboxQuery;
use edi_service::{MailboxItem, VanClient};
use edi_van::MessageId;
use serde::Serialize;

use super::context::Context;
use super::error::{exit, CliError, CliResult};
use super::state;

#[derive(Debug, Clone, Default)]
pub struct FetchArgs {
    pub out: PathBuf,
    /// Map file; defaults to `<maps>/<doctype>.map.json` when present.
    pub map: Option<PathBuf>,
    pub doc_type: Option<String>,
    /// Also fetch messages delivered before.
    pub redeliver: bool,
    /// Skip acknowledgment even if the config asks for it.
    pub no_ack: bool,
}

/// What happened to one retrieved message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Disposition {
    /// Verified and written out.
    Written(Vec<PathBuf>),
    /// Failed verification; the raw envelope was set aside.
    Quarantined { path: PathBuf, reason: String },
    /// Verified, but could not be parsed or translated.
    Failed { path: Option<PathBuf>, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    pub message_id: MessageId,
    pub sender: String,
    pub doc_types: Vec<String>,
    pub disposition: Disposition,
    /// For functional acknowledgments: the control number they acknowledge.
    pub acknowledges: Option<String>,
    /// Set once the message was acknowledged at the VAN; the inner value is
    /// the FA deposited for the sender, if any.
    pub acked: Option<Option<MessageId>>,
    pub ack_error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchReport {
    pub messages: Vec<Fetched>,
}

impl FetchReport {
    pub fn quarantined(&self) -> usize {
        self.messages
            .iter()
            .filter(|m| matches!(m.disposition, Disposition::Quarantined { .. }))
            .count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.quarantined() > 0 {
            exit::VERIFICATION
        } else if self
            .messages
            .iter()
            .any(|m| matches!(m.disposition, Disposition::Failed { .. }) || m.ack_error.is_some())
        {
            exit::LOCAL
        } else {
            exit::OK
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for m in &self.messages {
            let _ = write!(s, "message {} from {} [{}]: ", m.message_id, m.sender, m.doc_types.join(","));
            match &m.disposition {
                Disposition::Written(paths) => {
                    let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
                    let _ = write!(s, "wrote {}", names.join(", "));
                }
                Disposition::Quarantined { path, reason } => {
                    let _ = write!(s, "QUARANTINED ({reason}) -> {}", path.display());
                }
                Disposition::Failed { reason, .. } => {
                    let _ = write!(s, "FAILED ({reason})");
                }
            }
            if let Some(c) = &m.acknowledges {
                let _ = write!(s, "; acknowledges control {c}");
            }
            match (&m.acked, &m.ack_error) {
                (Some(Some(fa)), _) => {
                    let _ = write!(s, "; acknowledged, FA {fa}");
                }
                (Some(None), _) => s.push_str("; acknowledged"),
                (None, Some(e)) => {
                    let _ = write!(s, "; ack failed ({e})");
                }
                (None, None) => {}
            }
            s.push('\n');
        }
        let q = self.quarantined();
        let _ = write!(s, "{} messages", self.messages.len());
        if q > 0 {
            let _ = write!(s, ", {q} quarantined");
        }
        s.push('\n');
        s
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FaFile<'a> {
    message_id: MessageId,
    sender: &'a str,
    original_control: &'a str,
    statuses: Vec<FaStatus<'a>>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FaStatus<'a> {
    txn_control: &'a str,
    accepted: bool,
    reason: &'a str,
}

/// Retrieve, verify, translate and acknowledge everything waiting.
/// Failures are per message; the batch always runs to the end.
pub async fn fetch(ctx: &Context, args: &FetchArgs) -> CliResult<FetchReport> {
    let query = MailboxQuery {
        since: None,
        doc_type: args.doc_type.clone(),
        redeliver: args.redeliver,
    };
    let mut client = ctx.client().await?;
    let items = match client.mailbox(&query).await {
        Err(e) if e.code() == Some("SESSION_INVALID") => {
            state::clear_session(&ctx.session_path());
            client = ctx.login().await?;
            client.mailbox(&query).await?
        }
        other => other?,
    };
    let mut keys = ctx.keystore()?;
    if items.iter().any(|i| keys.public_key(&i.sender).is_err()) {
        trust_van_key(ctx, &client, &mut keys).await;
    }
    std::fs::create_dir_all(&args.out)?;

    let mut report = FetchReport::default();
    for item in items {
        report.messages.push(process(ctx, args, &client, &keys, item).await);
    }
    Ok(report)
}

/// Learn the VAN's public key on first contact and keep it in the keystore;
/// a key already on file is never replaced.
async fn trust_van_key(ctx: &Context, client: &VanClient, keys: &mut Keystore) {
    let Ok(info) = client.info().await else { return };
    if keys.get(&info.van_id, KeyKind::Public).is_some() {
        return;
    }
    let Some(public) = hex::decode(&info.public_key).ok().and_then(|b| PublicKey::from_bytes(&b).ok()) else {
        return;
    };
    if keys.add_public(&info.van_id, &public).is_ok() {
        let path = ctx.config.keystore.join(format!("{}.pub", info.van_id));
        let _ = std::fs::create_dir_all(&ctx.config.keystore).and_then(|()| std::fs::write(path, public.to_bytes()));
    }
}

async fn process(ctx: &Context, args: &FetchArgs, client: &VanClient, keys: &Keystore, item: MailboxItem) -> Fetched {
    let mut fetched = Fetched {
        message_id: item.message_id,
        sender: item.sender.clone(),
        doc_types: item.doc_types.iter().cloned().collect(),
        disposition: Disposition::Written(Vec::new()),
        acknowledges: None,
        acked: None,
        ack_error: None,
    };

    let plain = match unwrap_bytes(&item.payload, keys) {
        Ok((plain, report)) if report.signer.as_deref() == Some(item.sender.as_str()) => plain,
        Ok((_, report)) => {
            let signer = report.signer.unwrap_or_default();
            fetched.disposition = quarantine(ctx, &item, format!("signed by {signer}, deposited as {}", item.sender));
            return fetched;
        }
        Err(rejected) => {
            fetched.disposition = quarantine(ctx, &item, rejected.error.to_string());
            return fetched;
        }
    };

    let interchange = match parse_interchange(&plain) {
        Ok(i) => i,
        Err(e) => {
            fetched.disposition = Disposition::Failed {
                path: write(&args.out.join(format!("{}.edi", item.message_id)), &plain),
                reason: e.to_string(),
            };
            acknowledge(ctx, args, client, &item, None, &mut fetched).await;
            return fetched;
        }
    };

    let statuses = if interchange.doc_types().iter().any(|d| d == FA_DOC_TYPE) {
        match read_functional_ack(&interchange) {
            Ok(summary) => {
                let body = FaFile {
                    message_id: item.message_id,
                    sender: &item.sender,
                    original_control: &summary.original_control,
                    statuses: summary
                        .statuses
                        .iter()
                        .map(|s| FaStatus {
                            txn_control: &s.txn_control,
                            accepted: s.accepted,
                            reason: &s.reason,
                        })
                        .collect(),
                };
                let mut json = serde_json::to_vec_pretty(&body).expect("FA summary serializes");
                json.push(b'\n');
                let path = args.out.join(format!("{}.fa.json", item.message_id));
                fetched.disposition = match write(&path, &json) {
                    Some(p) => Disposition::Written(vec![p]),
                    None => Disposition::Failed {
                        path: None,
                        reason: format!("cannot write {}", path.display()),
                    },
                };
                fetched.acknowledges = Some(summary.original_control);
            }
            Err(e) => {
                fetched.disposition = Disposition::Failed {
                    path: write(&args.out.join(format!("{}.edi", item.message_id)), &plain),
                    reason: e.to_string(),
                };
            }
        }
        Vec::new()
    } else {
        translate(ctx, args, &item, &interchange, &plain, &mut fetched)
    };

    let acking = ctx.config.acknowledge && !args.no_ack;
    let fa = if acking && item.ack_requested && fetched.acknowledges.is_none() {
        match own_fa(ctx, keys, &item, &interchange, &statuses) {
            Ok(fa) => Some(fa),
            Err(e) => {
                eprintln!("edi: message {}: VAN will build the FA: {e}", item.message_id);
                None
            }
        }
    } else {
        None
    };
    acknowledge(ctx, args, client, &item, fa, &mut fetched).await;
    fetched
}

/// Translate with the map for the message's doc type; without a map the
/// interchange itself is written. Returns one FA status per transaction.
fn translate(
    ctx: &Context,
    args: &FetchArgs,
    item: &MailboxItem,
    interchange: &Interchange,
    plain: &[u8],
    fetched: &mut Fetched,
) -> Vec<AckStatus> {
    let controls: Vec<String> = interchange.transactions().map(|(_, t)| t.control.clone()).collect();
    let raw = args.out.join(format!("{}.edi", item.message_id));
    let doc_type = interchange.doc_types().into_iter().next().unwrap_or_default();
    let fail = |reason: String, fetched: &mut Fetched| {
        fetched.disposition = Disposition::Failed {
            path: write(&raw, plain),
            reason: reason.clone(),
        };
        controls.iter().map(|c| AckStatus::rejected(c, fa_reason(&reason))).collect()
    };
    let map = match ctx.map_for(args.map.as_deref(), &doc_type) {
        Ok(Some(map)) => map,
        Ok(None) => {
            fetched.disposition = match write(&raw, plain) {
                Some(p) => Disposition::Written(vec![p]),
                None => Disposition::Failed {
                    path: None,
                    reason: format!("cannot write {}", raw.display()),
                },
            };
            return controls.iter().map(AckStatus::accepted).collect();
        }
        Err(e) => return fail(e.to_string(), fetched),
    };
    let docs = match translate_inbound(interchange, &map) {
        Ok(docs) => docs,
        Err(e) => return fail(e.to_string(), fetched),
    };
    let mut paths = Vec::new();
    for (n, doc) in docs.iter().enumerate() {
        let name = if docs.len() == 1 {
            format!("{}.json", item.message_id)
        } else {
            format!("{}-{}.json", item.message_id, n + 1)
        };
        match write(&args.out.join(name), &doc.to_json_pretty()) {
            Some(p) => paths.push(p),
            None => return fail("cannot write output".into(), fetched),
        }
    }
    fetched.disposition = Disposition::Written(paths);
    controls.iter().map(AckStatus::accepted).collect()
}

/// FA reasons travel as element content, so keep them to a safe alphabet.
fn fa_reason(reason: &str) -> String {
    let cleaned: String = reason
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == ' ' { c } else { ' ' })
        .collect();
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    let mut out = words.join(" ");
    out.truncate(60);
    out
}

/// Our own FA, signed by us and sealed for the original sender with the
/// suite the sender used.
fn own_fa(
    ctx: &Context,
    keys: &Keystore,
    item: &MailboxItem,
    original: &Interchange,
    statuses: &[AckStatus],
) -> CliResult<(String, Vec<u8>)> {
    let suite = SecureEnvelope::from_bytes(&item.payload).map_err(CliError::local)?.suite;
    let control = state::next_control(&ctx.control_path()).map_err(CliError::local)?;
    let now = Utc::now();
    let stamp = EnvelopeStamp::new(control.clone(), now.format("%Y%m%d").to_string(), now.format("%H%M").to_string());
    let fa = build_functional_ack(original, statuses, &stamp).map_err(CliError::local)?;
    let bytes = serialize_interchange(&fa).map_err(CliError::local)?;
    let envelope = wrap(&bytes, &ctx.config.partner_id, &item.sender, suite, keys).map_err(CliError::local)?;
    Ok((control, envelope.to_bytes()))
}

async fn acknowledge(
    ctx: &Context,
    args: &FetchArgs,
    client: &VanClient,
    item: &MailboxItem,
    fa: Option<(String, Vec<u8>)>,
    fetched: &mut Fetched,
) {
    if !ctx.config.acknowledge || args.no_ack {
        return;
    }
    match client.ack(item.message_id, fa).await {
        Ok(fa_id) => fetched.acked = Some(fa_id),
        Err(e) if e.code() == Some("ALREADY_ACKNOWLEDGED") => fetched.acked = Some(None),
        Err(e) => fetched.ack_error = Some(e.to_string()),
    }
}

fn quarantine(ctx: &Context, item: &MailboxItem, reason: String) -> Disposition {
    let dir = &ctx.config.quarantine;
    let path = dir.join(format!("{}.sec", item.message_id));
    let note = format!(
        "message {}\nsender {}\ncontrol {}\nreason {reason}\n",
        item.message_id, item.sender, item.control
    );
    let saved = std::fs::create_dir_all(dir)
        .and_then(|()| std::fs::write(&path, &item.payload))
        .and_then(|()| std::fs::write(dir.join(format!("{}.reason.txt", item.message_id)), note));
    if let Err(e) = saved {
        eprintln!("edi: cannot quarantine message {}: {e}", item.message_id);
    }
    Disposition::Quarantined { path, reason }
}

fn write(path: &Path, bytes: &[u8]) -> Option<PathBuf> {
    match std::fs::write(path, bytes) {
        Ok(()) => Some(path.to_owned()),
        Err(e) => {
            eprintln!("edi: cannot write {}: {e}", path.display());
            None
        }
    }
}
