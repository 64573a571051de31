//! The value-added network engine.
//!
//! [`Van`] owns partner profiles, mailboxes, the audit trail and the
//! interconnect routes. It does no I/O: deliveries are handed out as
//! [`DeliveryAction`]s and their outcomes reported back, and every state
//! change is an [`AuditEvent`] that a host can journal and later replay
//! with [`Van::restore`].

mod audit;
mod clock;
mod delivery;
mod engine;
mod message;
mod profile;
mod route;
mod screen;

pub use audit::{
    accounting_from_events, AccountingReport, AuditAction, AuditDetail, AuditEvent, AuditQuery,
};
pub use clock::{Clock, ManualClock, SystemClock};
pub use delivery::{DeliveryAction, Notice, RelayOutcome, PUSH_BACKOFF};
pub use engine::{DepositReceipt, Mailbox, RetrieveFilter, Van, VanConfig};
pub use message::{DepositHeader, MessageStatus, RejectReason, VanMessage};
pub use profile::{
    hash_password, DeliveryMode, NewPartner, Notification, PartnerProfile, ProfileUpdate, Role,
    SessionToken,
};
pub use route::InterconnectRoute;
pub use screen::{screen, Screening};

use thiserror::Error;

pub type MessageId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VanError {
    #[error("authentication failed")]
    AuthFailed,

    #[error("session invalid or expired")]
    SessionInvalid,

    #[error("session partner {session} may not deposit as {sender}")]
    SenderMismatch { session: String, sender: String },

    #[error("duplicate control number {control} from {sender} (message {original})")]
    DuplicateControl {
        sender: String,
        control: String,
        original: MessageId,
    },

    #[error("forbidden")]
    Forbidden,

    #[error("unknown partner {0}")]
    UnknownPartner(String),

    #[error("partner {0} already exists")]
    PartnerExists(String),

    #[error("no such message {0}")]
    NoSuchMessage(MessageId),

    #[error("message {id} is {status}, expected DELIVERED")]
    WrongState { id: MessageId, status: MessageStatus },

    #[error("message {0} already acknowledged")]
    AlreadyAcknowledged(MessageId),

    #[error("invalid header: {0}")]
    InvalidHeader(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid route: {0}")]
    InvalidRoute(String),

    #[error("period start is after its end")]
    InvalidPeriod,

    #[error("replay failed at event {seq}: {reason}")]
    Replay { seq: u64, reason: String },
}

pub type Result<T> = std::result::Result<T, VanError>;
