//! Functional acknowledgments.
//!
//! An FA interchange flows back from the original receiver to the original
//! sender and carries one transaction:
//!
//! ```text
//! ST*FA*0001~ REF*<original interchange control>~ ACK*<txn control>*<A|R>*<reason>~ ... SE
//! ```
//!
//! FA interchanges always carry `ack_requested = 0`, so acknowledgments are
//! never themselves acknowledged.

use super::grammar::is_digits;
use super::{
    EnvelopeStamp, FunctionalGroup, Interchange, InterchangeError, Result, Segment,
    TransactionSet, FA_DOC_TYPE,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AckStatus {
    pub txn_control: String,
    pub accepted: bool,
    pub reason: String,
}

impl AckStatus {
    pub fn accepted(txn_control: impl Into<String>) -> Self {
        Self {
            txn_control: txn_control.into(),
            accepted: true,
            reason: "OK".into(),
        }
    }

    pub fn rejected(txn_control: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            txn_control: txn_control.into(),
            accepted: false,
            reason: reason.into(),
        }
    }
}

/// Build the acknowledgment for `original`. Every status must name a
/// transaction control present in the original.
pub fn build_functional_ack(
    original: &Interchange,
    statuses: &[AckStatus],
    stamp: &EnvelopeStamp,
) -> Result<Interchange> {
    let mut body = vec![Segment::new("REF", [original.control_number.as_str()])];
    for status in statuses {
        if !original
            .transactions()
            .any(|(_, t)| t.control == status.txn_control)
        {
            return Err(InterchangeError::UnknownTxnControl(status.txn_control.clone()));
        }
        body.push(Segment::new(
            "ACK",
            [
                status.txn_control.as_str(),
                if status.accepted { "A" } else { "R" },
                status.reason.as_str(),
            ],
        ));
    }

    let mut fa = Interchange::new(&original.receiver_id, &original.sender_id, stamp);
    fa.ack_requested = false;
    fa.delimiters = original.delimiters;
    fa.groups.push(FunctionalGroup {
        doc_type: FA_DOC_TYPE.into(),
        control: stamp.group_control.clone(),
        transactions: vec![TransactionSet {
            txn_type: FA_DOC_TYPE.into(),
            control: stamp.txn_control.clone(),
            body,
        }],
    });
    Ok(fa)
}

/// What an FA interchange says about the original it acknowledges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalAckSummary {
    pub original_control: String,
    pub statuses: Vec<AckStatus>,
}

/// Read back an FA interchange built by [`build_functional_ack`].
pub fn read_functional_ack(fa: &Interchange) -> Result<FunctionalAckSummary> {
    let bad = |reason: &str| InterchangeError::invariant(format!("not a functional ack: {reason}"));
    let [group] = fa.groups.as_slice() else {
        return Err(bad("expected exactly one group"));
    };
    if group.doc_type != FA_DOC_TYPE {
        return Err(bad("group doc type is not FA"));
    }
    let [txn] = group.transactions.as_slice() else {
        return Err(bad("expected exactly one transaction"));
    };
    let mut segments = txn.body.iter();
    let original_control = match segments.next() {
        Some(seg) if seg.tag == "REF" && seg.elements.len() == 1 && is_digits(&seg.elements[0], 9) => {
            seg.elements[0].clone()
        }
        _ => return Err(bad("first segment must be REF*<control>")),
    };
    let statuses = segments
        .map(|seg| match (seg.tag.as_str(), seg.elements.as_slice()) {
            ("ACK", [ctl, flag, reason]) if flag == "A" || flag == "R" => Ok(AckStatus {
                txn_control: ctl.clone(),
                accepted: flag == "A",
                reason: reason.clone(),
            }),
            _ => Err(bad("malformed ACK segment")),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FunctionalAckSummary {
        original_control,
        statuses,
    })
}
