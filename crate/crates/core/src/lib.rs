//! # edi-core
//!
//! Building blocks for secure EDI trading between partners:
//!
//! - [`interchange`]: the envelope grammar (`ISA`/`GS`/`ST` ... `SE`/`GE`/`IEA`),
//!   parsing, serialization, validation, functional acknowledgments and
//!   control numbers.
//! - [`translator`]: declarative per-partner maps between internal JSON
//!   documents and interchange segments, usable in both directions.
//! - [`secenv`]: the security envelope (encryption, digest, signatures) and
//!   spending-limit authorization.

pub mod interchange;
pub mod secenv;
pub mod translator;

pub use interchange::{
    build_functional_ack, parse_interchange, serialize_interchange, validate, AckStatus,
    ControlCounter, Delimiters, EnvelopeStamp, FunctionalGroup, Interchange, Segment,
    TransactionSet, ValidationReport,
};
pub use secenv::{
    compute_digest, unwrap, wrap, CipherSuiteId, Keystore, SecureEnvelope, VerificationReport,
};
pub use translator::{load_map, translate_inbound, translate_outbound, InternalDocument, MappingSpec};
