use std::collections::{BTreeSet, HashSet};
use std::fmt;

use super::grammar::{is_code, is_digits};
use super::Interchange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingCode {
    DocTypeNotAllowed,
    TxnTypeMismatch,
    EmptyTxn,
    EmptyGroup,
    DuplicateControl,
    BadControl,
    UnknownSegment,
}

impl FindingCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DocTypeNotAllowed => "DOC_TYPE_NOT_ALLOWED",
            Self::TxnTypeMismatch => "TXN_TYPE_MISMATCH",
            Self::EmptyTxn => "EMPTY_TXN",
            Self::EmptyGroup => "EMPTY_GROUP",
            Self::DuplicateControl => "DUPLICATE_CONTROL",
            Self::BadControl => "BAD_CONTROL",
            Self::UnknownSegment => "UNKNOWN_SEGMENT",
        }
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    /// Position of the offending segment in the serialized stream (`ISA` = 0).
    pub segment_index: usize,
    pub code: FindingCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn has_code(&self, code: FindingCode) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

/// Body tags known for each built-in doc type. Doc types not listed here
/// get no unknown-segment warnings.
const KNOWN_BODY_TAGS: &[(&str, &[&str])] = &[
    (
        "PO",
        &["BEG", "REF", "DTM", "N1", "N3", "N4", "PER", "PO1", "IT1", "PID", "AMT", "CTT"],
    ),
    (
        "INV",
        &["BIG", "REF", "DTM", "N1", "N3", "N4", "PER", "IT1", "PID", "TDS", "AMT", "CTT"],
    ),
    ("FA", &["REF", "ACK"]),
];

/// Check message types and formats. Findings are data, never failures.
pub fn validate(doc: &Interchange, allowed_doc_types: &BTreeSet<String>) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |severity, segment_index, code, message: String| {
        findings.push(Finding {
            severity,
            segment_index,
            code,
            message,
        })
    };

    let mut index = 1; // after ISA
    let mut group_controls = HashSet::new();
    for group in &doc.groups {
        let gs_index = index;
        if !allowed_doc_types.contains(&group.doc_type) {
            push(
                Severity::Error,
                gs_index,
                FindingCode::DocTypeNotAllowed,
                format!("doc type {} is not accepted", group.doc_type),
            );
        }
        if !is_code(&group.doc_type) {
            push(
                Severity::Error,
                gs_index,
                FindingCode::DocTypeNotAllowed,
                format!("doc type {:?} is not a valid code", group.doc_type),
            );
        }
        if !is_digits(&group.control, 4) {
            push(
                Severity::Error,
                gs_index,
                FindingCode::BadControl,
                format!("group control {:?} must be 4 digits", group.control),
            );
        }
        if !group_controls.insert(group.control.as_str()) {
            push(
                Severity::Error,
                gs_index,
                FindingCode::DuplicateControl,
                format!("group control {} reused", group.control),
            );
        }
        if group.transactions.is_empty() {
            push(
                Severity::Warning,
                gs_index,
                FindingCode::EmptyGroup,
                format!("group {} has no transactions", group.control),
            );
        }
        let known = KNOWN_BODY_TAGS
            .iter()
            .find(|(t, _)| *t == group.doc_type)
            .map(|(_, tags)| *tags);

        index += 1;
        let mut txn_controls = HashSet::new();
        for txn in &group.transactions {
            let st_index = index;
            if txn.txn_type != group.doc_type {
                push(
                    Severity::Error,
                    st_index,
                    FindingCode::TxnTypeMismatch,
                    format!(
                        "transaction {} has type {} inside a {} group",
                        txn.control, txn.txn_type, group.doc_type
                    ),
                );
            }
            if !is_digits(&txn.control, 4) {
                push(
                    Severity::Error,
                    st_index,
                    FindingCode::BadControl,
                    format!("transaction control {:?} must be 4 digits", txn.control),
                );
            }
            if !txn_controls.insert(txn.control.as_str()) {
                push(
                    Severity::Error,
                    st_index,
                    FindingCode::DuplicateControl,
                    format!("transaction control {} reused in group {}", txn.control, group.control),
                );
            }
            if txn.body.is_empty() {
                push(
                    Severity::Error,
                    st_index,
                    FindingCode::EmptyTxn,
                    format!("transaction {} has no body segments", txn.control),
                );
            }
            for (offset, seg) in txn.body.iter().enumerate() {
                if let Some(tags) = known {
                    if !tags.contains(&seg.tag.as_str()) {
                        push(
                            Severity::Warning,
                            st_index + 1 + offset,
                            FindingCode::UnknownSegment,
                            format!("segment {} is not known for {}", seg.tag, group.doc_type),
                        );
                    }
                }
            }
            index += txn.trailer_count();
        }
        index += 1; // GE
    }

    let ok = !findings.iter().any(|f| f.severity == Severity::Error);
    ValidationReport { ok, findings }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_interchange, Segment};
    use super::*;

    fn allowed(codes: &[&str]) -> BTreeSet<String> {
        codes.iter().map(|c| c.to_string()).collect()
    }

    const PO: &str = "ISA*A*B*20110101*0930*000000001*0~GS*PO*0001~ST*PO*0001~\
        BEG*PO1*20110101~IT1*S1*2*10.00~CTT*1~SE*5*0001~GE*1*0001~IEA*1*000000001~";

    #[test]
    fn accepted_po() {
        let doc = parse_interchange(PO.as_bytes()).unwrap();
        let report = validate(&doc, &allowed(&["PO", "INV"]));
        assert!(report.ok, "{report:?}");
        assert!(report.findings.is_empty());
    }

    #[test]
    fn doc_type_not_allowed() {
        let text = PO.replace("GS*PO", "GS*XX").replace("ST*PO", "ST*XX");
        let doc = parse_interchange(text.as_bytes()).unwrap();
        let report = validate(&doc, &allowed(&["PO"]));
        assert!(!report.ok);
        assert_eq!(report.findings[0].code, FindingCode::DocTypeNotAllowed);
        assert_eq!(report.findings[0].segment_index, 1);
    }

    #[test]
    fn empty_transaction() {
        let text = "ISA*A*B*20110101*0930*000000001*0~GS*PO*0001~ST*PO*0001~SE*2*0001~\
                    GE*1*0001~IEA*1*000000001~";
        let doc = parse_interchange(text.as_bytes()).unwrap();
        let report = validate(&doc, &allowed(&["PO"]));
        assert!(!report.ok);
        assert!(report.has_code(FindingCode::EmptyTxn));
    }

    #[test]
    fn unknown_segment_is_only_a_warning() {
        let mut doc = parse_interchange(PO.as_bytes()).unwrap();
        doc.groups[0].transactions[0]
            .body
            .insert(1, Segment::new("ZZZ", ["x"]));
        let report = validate(&doc, &allowed(&["PO"]));
        assert!(report.ok);
        let f = &report.findings[0];
        assert_eq!((f.severity, f.code, f.segment_index), (Severity::Warning, FindingCode::UnknownSegment, 4));
    }

    #[test]
    fn mismatched_and_duplicate_controls() {
        let mut doc = parse_interchange(PO.as_bytes()).unwrap();
        let mut txn = doc.groups[0].transactions[0].clone();
        txn.txn_type = "INV".into();
        doc.groups[0].transactions.push(txn);
        let report = validate(&doc, &allowed(&["PO"]));
        assert!(report.has_code(FindingCode::TxnTypeMismatch));
        assert!(report.has_code(FindingCode::DuplicateControl));
        assert_eq!(report.errors().count(), 2);
    }
}
