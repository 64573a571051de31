use super::grammar::{element_problem, is_code, is_digits, is_partner_id, is_segment_tag};
use super::{Interchange, InterchangeError, Result, Segment, ENVELOPE_TAGS};

/// Serialize an interchange. Trailer counts and controls are always derived
/// from the tree, never taken from the caller.
pub fn serialize_interchange(doc: &Interchange) -> Result<Vec<u8>> {
    check_header(doc)?;
    let mut w = Writer {
        out: Vec::with_capacity(256),
        doc,
    };
    w.segment(
        "ISA",
        &[
            &doc.sender_id,
            &doc.receiver_id,
            &doc.date,
            &doc.time,
            &doc.control_number,
            if doc.ack_requested { "1" } else { "0" },
        ],
    )?;
    for group in &doc.groups {
        check_code(&group.doc_type)?;
        check_control(&group.control, "group")?;
        w.segment("GS", &[&group.doc_type, &group.control])?;
        for txn in &group.transactions {
            check_code(&txn.txn_type)?;
            check_control(&txn.control, "transaction")?;
            w.segment("ST", &[&txn.txn_type, &txn.control])?;
            for seg in &txn.body {
                w.body_segment(seg)?;
            }
            w.segment("SE", &[&txn.trailer_count().to_string(), &txn.control])?;
        }
        w.segment("GE", &[&group.transactions.len().to_string(), &group.control])?;
    }
    w.segment("IEA", &[&doc.groups.len().to_string(), &doc.control_number])?;
    Ok(w.out)
}

struct Writer<'a> {
    out: Vec<u8>,
    doc: &'a Interchange,
}

impl Writer<'_> {
    fn segment(&mut self, tag: &str, elements: &[&str]) -> Result<()> {
        let d = self.doc.delimiters;
        self.out.extend_from_slice(tag.as_bytes());
        for e in elements {
            if let Some(problem) = element_problem(e, &d) {
                return Err(InterchangeError::invariant(format!("{tag}: {problem}")));
            }
            self.out.push(d.element_sep);
            self.out.extend_from_slice(e.as_bytes());
        }
        self.out.push(d.segment_term);
        Ok(())
    }

    fn body_segment(&mut self, seg: &Segment) -> Result<()> {
        if !is_segment_tag(&seg.tag) {
            return Err(InterchangeError::invariant(format!("bad segment tag {:?}", seg.tag)));
        }
        if ENVELOPE_TAGS.contains(&seg.tag.as_str()) {
            return Err(InterchangeError::invariant(format!(
                "envelope tag {} inside a transaction body",
                seg.tag
            )));
        }
        let elements: Vec<&str> = seg.elements.iter().map(String::as_str).collect();
        self.segment(&seg.tag, &elements)
    }
}

fn check_header(doc: &Interchange) -> Result<()> {
    if !is_partner_id(&doc.sender_id) {
        return Err(InterchangeError::invariant(format!("bad sender id {:?}", doc.sender_id)));
    }
    if !is_partner_id(&doc.receiver_id) {
        return Err(InterchangeError::invariant(format!(
            "bad receiver id {:?}",
            doc.receiver_id
        )));
    }
    if !is_digits(&doc.date, 8) {
        return Err(InterchangeError::invariant("date must be YYYYMMDD"));
    }
    if !is_digits(&doc.time, 4) {
        return Err(InterchangeError::invariant("time must be HHMM"));
    }
    if !is_digits(&doc.control_number, 9) {
        return Err(InterchangeError::invariant("control number must be 9 digits"));
    }
    Ok(())
}

fn check_code(code: &str) -> Result<()> {
    if is_code(code) {
        Ok(())
    } else {
        Err(InterchangeError::invariant(format!("bad code {code:?}")))
    }
}

fn check_control(control: &str, what: &str) -> Result<()> {
    if is_digits(control, 4) {
        Ok(())
    } else {
        Err(InterchangeError::invariant(format!("{what} control {control:?} must be 4 digits")))
    }
}
