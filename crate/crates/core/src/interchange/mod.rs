//! The interchange format: a simplified, X12-inspired envelope grammar.
//!
//! ```text
//! ISA*<sender>*<receiver>*<YYYYMMDD>*<HHMM>*<control:9>*<ack:0|1>~
//!   GS*<doc type>*<group control:4>~
//!     ST*<txn type>*<txn control:4>~
//!       ...body segments...
//!     SE*<segments ST..SE inclusive>*<txn control>~
//!   GE*<transaction count>*<group control>~
//! IEA*<group count>*<control>~
//! ```
//!
//! The grammar is deliberately strict: exactly six `ISA` elements, ASCII
//! only, and trailer counts are always recomputed on output. It does not
//! claim conformance with any published X12 release.

mod ack;
mod control;
mod grammar;
mod parse;
mod serialize;
mod validate;

pub use ack::{build_functional_ack, read_functional_ack, AckStatus, FunctionalAckSummary};
pub use control::{next_control_number, ControlCounter, ControlRegistry, ControlScope};
pub use grammar::{is_code, is_partner_id, is_segment_tag};
pub use parse::{parse_interchange, parse_interchange_with};
pub use serialize::serialize_interchange;
pub use validate::{validate, Finding, FindingCode, Severity, ValidationReport};

use thiserror::Error;

/// Tags that make up the envelope and may never appear inside a transaction body.
pub const ENVELOPE_TAGS: [&str; 6] = ["ISA", "IEA", "GS", "GE", "ST", "SE"];

/// Doc type used for functional acknowledgments.
pub const FA_DOC_TYPE: &str = "FA";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterchangeError {
    #[error("malformed segment #{index}: {reason}")]
    MalformedSegment { index: usize, reason: String },

    #[error("envelope mismatch at segment #{index}: {reason}")]
    EnvelopeMismatch { index: usize, reason: String },

    #[error("truncated interchange: {0}")]
    Truncated(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("unknown transaction control {0}")]
    UnknownTxnControl(String),

    #[error("control counter exhausted at {0}")]
    CounterExhausted(u64),
}

impl InterchangeError {
    pub(crate) fn malformed(index: usize, reason: impl Into<String>) -> Self {
        Self::MalformedSegment {
            index,
            reason: reason.into(),
        }
    }

    pub(crate) fn mismatch(index: usize, reason: impl Into<String>) -> Self {
        Self::EnvelopeMismatch {
            index,
            reason: reason.into(),
        }
    }

    pub(crate) fn invariant(reason: impl Into<String>) -> Self {
        Self::InvariantViolation(reason.into())
    }
}

pub type Result<T> = std::result::Result<T, InterchangeError>;

/// Separator bytes. v1 always uses the defaults; the type exists so an
/// alternate set can be declared without changing the format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delimiters {
    pub element_sep: u8,
    pub segment_term: u8,
    /// Reserved. Never emitted in v1, but still excluded from element content.
    pub subelement_sep: u8,
}

impl Default for Delimiters {
    fn default() -> Self {
        Self {
            element_sep: b'*',
            segment_term: b'~',
            subelement_sep: b':',
        }
    }
}

impl Delimiters {
    pub fn new(element_sep: u8, segment_term: u8, subelement_sep: u8) -> Result<Self> {
        let all = [element_sep, segment_term, subelement_sep];
        for b in all {
            if !b.is_ascii_punctuation() {
                return Err(InterchangeError::invariant(format!(
                    "delimiter {:?} is not ASCII punctuation",
                    b as char
                )));
            }
        }
        if element_sep == segment_term
            || element_sep == subelement_sep
            || segment_term == subelement_sep
        {
            return Err(InterchangeError::invariant("delimiters must be pairwise distinct"));
        }
        Ok(Self {
            element_sep,
            segment_term,
            subelement_sep,
        })
    }

    pub(crate) fn contains(&self, b: u8) -> bool {
        b == self.element_sep || b == self.segment_term || b == self.subelement_sep
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segment {
    pub tag: String,
    pub elements: Vec<String>,
}

impl Segment {
    pub fn new<T, I, S>(tag: T, elements: I) -> Self
    where
        T: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            tag: tag.into(),
            elements: elements.into_iter().map(Into::into).collect(),
        }
    }

    pub fn element(&self, position: usize) -> Option<&str> {
        self.elements.get(position).map(String::as_str)
    }
}

/// One business document (`ST` ... `SE`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionSet {
    pub txn_type: String,
    /// Four-digit control number, repeated in the `SE` trailer.
    pub control: String,
    pub body: Vec<Segment>,
}

impl TransactionSet {
    /// Segment count as written in the `SE` trailer (ST and SE included).
    pub fn trailer_count(&self) -> usize {
        self.body.len() + 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalGroup {
    pub doc_type: String,
    pub control: String,
    pub transactions: Vec<TransactionSet>,
}

/// A parsed EDI transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interchange {
    pub sender_id: String,
    pub receiver_id: String,
    /// `YYYYMMDD`, checked for shape only.
    pub date: String,
    /// `HHMM`, checked for shape only.
    pub time: String,
    /// Nine-digit zero-padded control number.
    pub control_number: String,
    pub ack_requested: bool,
    pub groups: Vec<FunctionalGroup>,
    pub delimiters: Delimiters,
}

impl Interchange {
    /// An interchange with no groups, stamped with the given envelope values.
    pub fn new(
        sender_id: impl Into<String>,
        receiver_id: impl Into<String>,
        stamp: &EnvelopeStamp,
    ) -> Self {
        Self {
            sender_id: sender_id.into(),
            receiver_id: receiver_id.into(),
            date: stamp.date.clone(),
            time: stamp.time.clone(),
            control_number: stamp.control_number.clone(),
            ack_requested: stamp.ack_requested,
            groups: Vec::new(),
            delimiters: Delimiters::default(),
        }
    }

    pub fn transactions(&self) -> impl Iterator<Item = (&FunctionalGroup, &TransactionSet)> {
        self.groups
            .iter()
            .flat_map(|g| g.transactions.iter().map(move |t| (g, t)))
    }

    /// Distinct group doc types in order of first appearance.
    pub fn doc_types(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for g in &self.groups {
            if !out.contains(&g.doc_type) {
                out.push(g.doc_type.clone());
            }
        }
        out
    }
}

/// Envelope values supplied by the caller when building an interchange:
/// control numbers, date/time and the acknowledgment flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvelopeStamp {
    pub control_number: String,
    pub group_control: String,
    /// Control of the first transaction; later transactions count up from it.
    pub txn_control: String,
    pub date: String,
    pub time: String,
    pub ack_requested: bool,
}

impl EnvelopeStamp {
    pub fn new(
        control_number: impl Into<String>,
        date: impl Into<String>,
        time: impl Into<String>,
    ) -> Self {
        Self {
            control_number: control_number.into(),
            group_control: "0001".into(),
            txn_control: "0001".into(),
            date: date.into(),
            time: time.into(),
            ack_requested: false,
        }
    }

    pub fn with_ack_requested(mut self, ack_requested: bool) -> Self {
        self.ack_requested = ack_requested;
        self
    }

    pub fn with_group_control(mut self, control: impl Into<String>) -> Self {
        self.group_control = control.into();
        self
    }

    pub fn with_txn_control(mut self, control: impl Into<String>) -> Self {
        self.txn_control = control.into();
        self
    }

    /// The `n`th transaction control counting from `txn_control`.
    pub fn txn_control_at(&self, n: usize) -> Result<String> {
        let base: u64 = self
            .txn_control
            .parse()
            .map_err(|_| InterchangeError::invariant("transaction control is not numeric"))?;
        let value = base + n as u64;
        if value > 9999 {
            return Err(InterchangeError::invariant(format!(
                "transaction control overflows four digits at offset {n}"
            )));
        }
        Ok(format!("{value:04}"))
    }
}
