//! Map-driven translation between internal documents and interchanges.
//!
//! A [`MappingSpec`] lists segment templates in three sections: header
//! segments (fields from the document header), item segments (repeated once
//! per item) and summary segments (header fields or the item count). The
//! same spec drives both directions, so it must be invertible: no field may
//! be bound twice within a scope.
//!
//! Fields in a document that the map does not mention are dropped on the
//! way out; round trips only cover mapped fields.

mod document;
mod inbound;
mod mapping;
mod outbound;

pub use document::InternalDocument;
pub use inbound::translate_inbound;
pub use mapping::{load_map, ElementSource, MappingSpec, SegmentTemplate, REFERENCE_PO_MAP};
pub use outbound::{translate_outbound, translate_outbound_batch};

use thiserror::Error;

use crate::interchange::InterchangeError;

#[derive(Debug, Error)]
pub enum TranslateError {
    #[error("MapParseError({0})")]
    MapParse(String),

    #[error("MapNotInvertible({0})")]
    MapNotInvertible(String),

    #[error("ReservedTag({0})")]
    ReservedTag(String),

    #[error("MissingField({field})")]
    MissingField { field: String, item: Option<usize> },

    #[error("DocTypeMismatch(expected {expected}, found {found})")]
    DocTypeMismatch { expected: String, found: String },

    #[error("InvalidValue({field}: {reason})")]
    InvalidValue { field: String, reason: String },

    #[error("InvalidDocument({0})")]
    InvalidDocument(String),

    #[error("TemplateMismatch(transaction {txn}: {reason})")]
    TemplateMismatch { txn: String, reason: String },

    #[error("CountMismatch(transaction {txn}: declared {declared}, parsed {parsed})")]
    CountMismatch {
        txn: String,
        declared: String,
        parsed: usize,
    },

    #[error(transparent)]
    Interchange(#[from] InterchangeError),
}

pub type Result<T> = std::result::Result<T, TranslateError>;
