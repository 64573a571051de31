use std::path::PathBuf;
use std::str::FromStr;

use chrono::Utc;
use edi_core::interchange::{serialize_interchange, EnvelopeStamp};
use edi_core::secenv::{wrap, CipherSuiteId};
use edi_core::translator::{translate_outbound, InternalDocument};
use edi_service::DepositOutcome;
use edi_van::{DepositHeader, MessageId};

use super::context::Context;
use super::error::{CliError, CliResult};
use super::state;

#[derive(Debug, Clone)]
pub struct SendArgs {
    /// Internal JSON document.
    pub file: PathBuf,
    pub to: String,
    /// Map file; defaults to `<maps>/<doctype>.map.json` (lowercase doc type).
    pub map: Option<PathBuf>,
    pub suite: Option<String>,
    /// Overrides `ack_requested` from the config.
    pub ack: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sent {
    pub message_id: MessageId,
    pub control: String,
}

/// Translate, serialize, seal and deposit one document.
pub async fn send(ctx: &Context, args: &SendArgs) -> CliResult<Sent> {
    let me = ctx.config.partner_id.as_str();
    let bytes = std::fs::read(&args.file).map_err(|e| CliError::Local(format!("{}: {e}", args.file.display())))?;
    let doc = InternalDocument::from_json(&bytes).map_err(CliError::local)?;
    let map = ctx
        .map_for(args.map.as_deref(), &doc.doc_type)?
        .ok_or_else(|| CliError::Local(format!("no map for doc type {} in {}", doc.doc_type, ctx.config.maps.display())))?;
    let suite = CipherSuiteId::from_str(args.suite.as_deref().unwrap_or(&ctx.config.suite)).map_err(CliError::local)?;
    let ack = args.ack.unwrap_or(ctx.config.ack_requested);
    let keys = ctx.keystore()?;

    let now = Utc::now();
    let stamp = EnvelopeStamp::new("000000000", now.format("%Y%m%d").to_string(), now.format("%H%M").to_string())
        .with_ack_requested(ack);
    let mut interchange = translate_outbound(&doc, &map, me, &args.to, &stamp).map_err(CliError::local)?;

    let control = state::next_control(&ctx.control_path()).map_err(CliError::local)?;
    interchange.control_number = control.clone();
    let plain = serialize_interchange(&interchange).map_err(CliError::local)?;
    let envelope = wrap(&plain, me, &args.to, suite, &keys).map_err(CliError::local)?.to_bytes();

    let header = DepositHeader::new(me, &args.to, &control, [map.doc_type.as_str()]).with_ack_requested(ack);
    match ctx.call(async |c| c.deposit(&header, envelope.clone()).await).await? {
        DepositOutcome::Queued { message_id } => Ok(Sent { message_id, control }),
        DepositOutcome::Rejected { message_id, reason } => {
            Err(CliError::Rejected(format!("{reason} (message {message_id})")))
        }
    }
}
