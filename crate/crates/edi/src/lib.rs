//! # edi
//!
//! A secure EDI toolkit covering the whole trading cycle: an internal
//! document is translated into an interchange, sealed in a security
//! envelope, deposited at a value-added network (VAN), retrieved by the
//! trading partner, verified, translated back and acknowledged.
//!
//! This crate gathers the pieces under one name and provides the `edi`
//! command-line client:
//!
//! - [`interchange`], [`translator`], [`secenv`]: the document and
//!   envelope layers.
//! - [`van`]: the mailbox engine (screening, delivery, acknowledgment,
//!   audit, accounting, interconnect).
//! - [`service`]: the engine as an HTTP service with a durable journal,
//!   plus an async client.
//! - [`cli`]: the commands behind the `edi` binary.
//!
//! ```
//! use edi::interchange::parse_interchange;
//!
//! let bytes = b"ISA*BUYER*SELLER*20110101*1200*000000001*0~GS*PO*0001~\
//! ST*PO*0001~BEG*PO1*20110101~SE*3*0001~GE*1*0001~IEA*1*000000001~";
//! let doc = parse_interchange(bytes).unwrap();
//! assert_eq!(doc.doc_types(), ["PO"]);
//! ```

pub use edi_core::{interchange, secenv, translator};
pub use edi_service as service;
pub use edi_van as van;

pub mod cli;
