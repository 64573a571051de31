//! The `edi` command-line client.
//!
//! ```text
//! edi [--config PATH] <login|send|fetch|status|audit|accounting|keygen|partner|route|unwrap|serve> ...
//! ```
//!
//! Exit statuses are listed in [`exit`].

mod admin;
mod config;
mod context;
mod error;
mod fetch;
mod keys;
mod send;
mod state;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use edi_van::{AuditQuery, MessageId, Role};

pub use admin::{parse_time, ProfileArgs};
pub use config::{default_config_path, ClientConfig};
pub use context::Context;
pub use error::{exit, CliError, CliResult};
pub use fetch::{fetch, Disposition, FetchArgs, FetchReport, Fetched};
pub use send::{send, SendArgs, Sent};
pub use state::{next_control, CachedSession};

#[derive(Debug, Parser)]
#[command(name = "edi", version, about = "Secure EDI trading through a value-added network")]
pub struct Cli {
    /// Client config file [default: $EDI_CONFIG or ~/.config/edi/config.toml]
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log in and cache the session token.
    Login,
    /// Translate a document, seal it and deposit it for a partner.
    Send {
        /// Internal JSON document.
        file: PathBuf,
        #[arg(long)]
        to: String,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, value_parser = ["PUB-1", "PSK-1"])]
        suite: Option<String>,
        /// Do not ask for a functional acknowledgment.
        #[arg(long)]
        no_ack: bool,
    },
    /// Retrieve, verify, translate and acknowledge waiting messages.
    Fetch {
        /// Output directory.
        out: PathBuf,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        doc_type: Option<String>,
        #[arg(long)]
        redeliver: bool,
        #[arg(long)]
        no_ack: bool,
    },
    /// Show a message's status chain.
    Status { message_id: MessageId },
    /// Query the audit trail.
    Audit {
        #[arg(long)]
        message: Option<MessageId>,
        #[arg(long)]
        partner: Option<String>,
        #[arg(long, value_parser = parse_time)]
        from: Option<DateTime<Utc>>,
        #[arg(long, value_parser = parse_time)]
        to: Option<DateTime<Utc>>,
        #[arg(long)]
        json: bool,
    },
    /// Usage report for a partner over a period.
    Accounting {
        #[arg(long)]
        partner: Option<String>,
        #[arg(long, value_parser = parse_time)]
        from: DateTime<Utc>,
        #[arg(long, value_parser = parse_time)]
        to: Option<DateTime<Utc>>,
        #[arg(long)]
        json: bool,
    },
    /// Generate keys into the keystore.
    Keygen {
        /// A signing and key-agreement pair.
        #[arg(long, conflicts_with = "psk")]
        pair: bool,
        /// A pre-shared key with the partner given by --with.
        #[arg(long, requires = "with")]
        psk: bool,
        #[arg(long)]
        with: Option<String>,
        /// Owner id [default: partner_id from the config]
        #[arg(long)]
        id: Option<String>,
        /// Keystore directory [default: keystore from the config]
        #[arg(long)]
        keystore: Option<PathBuf>,
    },
    /// Manage partner profiles.
    Partner {
        #[command(subcommand)]
        action: PartnerAction,
    },
    /// Manage interconnect routes.
    Route {
        #[command(subcommand)]
        action: RouteAction,
    },
    /// Verify and decrypt one envelope file.
    Unwrap {
        file: PathBuf,
        /// Write the plaintext here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        keystore: Option<PathBuf>,
    },
    /// Run a VAN.
    Serve {
        /// Service config (TOML).
        service_config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    User,
    Admin,
    Peer,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::User => Role::User,
            RoleArg::Admin => Role::Admin,
            RoleArg::Peer => Role::Peer,
        }
    }
}

#[derive(Debug, Args)]
pub struct ProfileFlags {
    #[arg(long, value_enum)]
    role: Option<RoleArg>,
    /// Partner allowed to send to this one (repeatable).
    #[arg(long)]
    accept: Vec<String>,
    /// Doc type this partner accepts (repeatable).
    #[arg(long)]
    allow: Vec<String>,
    /// Push messages to this URL instead of holding them.
    #[arg(long)]
    forward: Option<String>,
    /// Hold messages for retrieval.
    #[arg(long)]
    retrieve: bool,
    /// Webhook for arrival notices.
    #[arg(long)]
    notify: Option<String>,
    /// Doc types that trigger a notice (repeatable; none means all).
    #[arg(long)]
    notify_type: Vec<String>,
    #[arg(long)]
    clear_notification: bool,
    #[arg(long)]
    auto_ack: Option<bool>,
    /// The partner's `.pub` key file.
    #[arg(long)]
    public_key: Option<PathBuf>,
}

impl From<ProfileFlags> for ProfileArgs {
    fn from(f: ProfileFlags) -> Self {
        Self {
            role: f.role.map(Into::into),
            accept: f.accept,
            allow: f.allow,
            forward: f.forward,
            retrieve: f.retrieve,
            notify: f.notify,
            notify_types: f.notify_type,
            clear_notification: f.clear_notification,
            auto_ack: f.auto_ack,
            public_key: f.public_key,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum PartnerAction {
    /// Register a partner (administrators only).
    Add {
        id: String,
        /// Environment variable holding the new partner's password.
        #[arg(long, default_value = "EDI_PARTNER_PASSWORD")]
        password_env: String,
        #[command(flatten)]
        profile: ProfileFlags,
    },
    /// Change a profile. Partners may change their own, except the role.
    Update {
        id: String,
        /// Environment variable holding a new password.
        #[arg(long)]
        password_env: Option<String>,
        #[command(flatten)]
        profile: ProfileFlags,
    },
}

#[derive(Debug, Subcommand)]
pub enum RouteAction {
    /// Route recipients matching PATTERN (exact, or a prefix ending in `*`) to a peer VAN.
    Add {
        pattern: String,
        endpoint: String,
        #[arg(long)]
        max_hops: Option<u32>,
    },
}

fn env_password(var: &str) -> CliResult<String> {
    std::env::var(var).map_err(|_| CliError::Local(format!("set {var} to the password")))
}

/// Parse `args` and run. Returns the process exit status.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::LOCAL } else { exit::OK };
        }
    };
    let mut stdout = std::io::stdout();
    match run(cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("edi: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<i32> {
    let config_path = cli.config.unwrap_or_else(default_config_path);
    if let Command::Serve { service_config } = &cli.command {
        return serve(service_config, out);
    }
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(CliError::local)?;
    rt.block_on(dispatch(cli.command, &config_path, out))
}

async fn dispatch(command: Command, config_path: &std::path::Path, out: &mut dyn Write) -> CliResult<i32> {
    let ctx = || Context::load(config_path);
    let text = match command {
        Command::Login => admin::login(&ctx()?).await?,
        Command::Send {
            file,
            to,
            map,
            suite,
            no_ack,
        } => {
            let args = SendArgs {
                file,
                to,
                map,
                suite,
                ack: no_ack.then_some(false),
            };
            let sent = send(&ctx()?, &args).await?;
            format!("queued message {} (control {})\n", sent.message_id, sent.control)
        }
        Command::Fetch {
            out: dir,
            map,
            doc_type,
            redeliver,
            no_ack,
        } => {
            let args = FetchArgs {
                out: dir,
                map,
                doc_type,
                redeliver,
                no_ack,
            };
            let report = fetch(&ctx()?, &args).await?;
            out.write_all(report.render().as_bytes())?;
            return Ok(report.exit_code());
        }
        Command::Status { message_id } => admin::status(&ctx()?, message_id).await?,
        Command::Audit {
            message,
            partner,
            from,
            to,
            json,
        } => {
            let query = AuditQuery {
                message_id: message,
                partner_id: partner,
                from,
                to,
            };
            let events = admin::audit(&ctx()?, &query).await?;
            if json {
                serde_json::to_string_pretty(&events).expect("events serialize") + "\n"
            } else {
                admin::render_audit(&events)
            }
        }
        Command::Accounting {
            partner,
            from,
            to,
            json,
        } => {
            let r = admin::accounting(&ctx()?, partner.as_deref(), from, to.unwrap_or_else(Utc::now)).await?;
            if json {
                serde_json::to_string_pretty(&r).expect("report serializes") + "\n"
            } else {
                admin::render_accounting(&r)
            }
        }
        Command::Keygen {
            pair,
            psk,
            with,
            id,
            keystore,
        } => {
            let loaded = if id.is_none() || keystore.is_none() { Some(ctx()?) } else { None };
            let id = id.or_else(|| loaded.as_ref().map(|c| c.config.partner_id.clone())).expect("id");
            let dir = keystore
                .or_else(|| loaded.as_ref().map(|c| c.config.keystore.clone()))
                .expect("keystore");
            let key_id = match (pair, psk) {
                (_, true) => keys::keygen_psk(&dir, &id, with.as_deref().expect("clap requires --with"))?,
                (true, false) => keys::keygen_pair(&dir, &id)?,
                (false, false) => return Err(CliError::Local("choose --pair or --psk".into())),
            };
            format!("{key_id}\n")
        }
        Command::Partner { action } => match action {
            PartnerAction::Add {
                id,
                password_env,
                profile,
            } => admin::partner_add(&ctx()?, &id, env_password(&password_env)?, &profile.into()).await?,
            PartnerAction::Update {
                id,
                password_env,
                profile,
            } => {
                let password = password_env.as_deref().map(env_password).transpose()?;
                admin::partner_update(&ctx()?, &id, password, &profile.into()).await?
            }
        },
        Command::Route {
            action: RouteAction::Add {
                pattern,
                endpoint,
                max_hops,
            },
        } => admin::route_add(&ctx()?, &pattern, &endpoint, max_hops).await?,
        Command::Unwrap {
            file,
            out: target,
            keystore,
        } => {
            let dir = match keystore {
                Some(d) => d,
                None => ctx()?.config.keystore,
            };
            let (plain, report) = keys::unwrap_file(&dir, &file)?;
            eprintln!("verified: signed by {}", report.signer.unwrap_or_default());
            match target {
                Some(path) => std::fs::write(&path, &plain)?,
                None => out.write_all(&plain)?,
            }
            String::new()
        }
        Command::Serve { .. } => unreachable!("handled before the runtime starts"),
    };
    out.write_all(text.as_bytes())?;
    Ok(exit::OK)
}

fn serve(path: &std::path::Path, out: &mut dyn Write) -> CliResult<i32> {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let config = edi_service::ServiceConfig::load(path).map_err(CliError::local)?;
    let rt = tokio::runtime::Runtime::new().map_err(CliError::local)?;
    rt.block_on(async {
        let handle = edi_service::start(config).await.map_err(CliError::local)?;
        writeln!(out, "listening on {}", handle.url())?;
        out.flush()?;
        handle.wait_for_shutdown_signal().await;
        Ok(exit::OK)
    })
}
