use super::grammar::{element_problem, is_code, is_digits, is_partner_id, is_segment_tag};
use super::{
    Delimiters, FunctionalGroup, Interchange, InterchangeError, Result, Segment, TransactionSet,
    ENVELOPE_TAGS,
};

/// Parse a serialized interchange using the default delimiters.
pub fn parse_interchange(bytes: &[u8]) -> Result<Interchange> {
    parse_interchange_with(bytes, Delimiters::default())
}

pub fn parse_interchange_with(bytes: &[u8], delims: Delimiters) -> Result<Interchange> {
    let segments = split_segments(bytes, &delims)?;
    Parser {
        segments,
        pos: 0,
        delims,
    }
    .interchange()
}

/// Split raw bytes into segments. CR/LF directly after a terminator is
/// tolerated (and dropped); anything left after the last terminator is not.
fn split_segments(bytes: &[u8], delims: &Delimiters) -> Result<Vec<Segment>> {
    if bytes.is_empty() {
        return Err(InterchangeError::Truncated("empty input".into()));
    }
    let mut segments = Vec::new();
    let mut rest = bytes;
    loop {
        while let [b'\r' | b'\n', tail @ ..] = rest {
            rest = tail;
        }
        if rest.is_empty() {
            break;
        }
        let index = segments.len();
        let Some(end) = rest.iter().position(|&b| b == delims.segment_term) else {
            return Err(InterchangeError::Truncated(format!(
                "segment #{index} has no terminator"
            )));
        };
        let raw = &rest[..end];
        rest = &rest[end + 1..];
        if let Some(b) = raw.iter().find(|b| !b.is_ascii()) {
            return Err(InterchangeError::malformed(
                index,
                format!("non-ASCII byte 0x{b:02x}"),
            ));
        }
        // ASCII checked above, so this cannot fail.
        let text = std::str::from_utf8(raw).expect("ascii is utf-8");
        let mut parts = text.split(delims.element_sep as char);
        let tag = parts.next().unwrap_or_default();
        if !is_segment_tag(tag) {
            return Err(InterchangeError::malformed(index, format!("bad tag {tag:?}")));
        }
        let elements: Vec<String> = parts.map(str::to_owned).collect();
        for e in &elements {
            if let Some(problem) = element_problem(e, delims) {
                return Err(InterchangeError::malformed(index, problem));
            }
        }
        segments.push(Segment {
            tag: tag.to_owned(),
            elements,
        });
    }
    Ok(segments)
}

struct Parser {
    segments: Vec<Segment>,
    pos: usize,
    delims: Delimiters,
}

impl Parser {
    fn peek_tag(&self) -> Option<&str> {
        self.segments.get(self.pos).map(|s| s.tag.as_str())
    }

    fn take(&mut self) -> (usize, Segment) {
        let index = self.pos;
        self.pos += 1;
        (index, std::mem::take(&mut self.segments[index]))
    }

    fn interchange(mut self) -> Result<Interchange> {
        if self.peek_tag() != Some("ISA") {
            return Err(InterchangeError::malformed(0, "first segment must be ISA"));
        }
        let (index, isa) = self.take();
        let [sender, receiver, date, time, control, ack]: [String; 6] =
            isa.elements.try_into().map_err(|e: Vec<String>| {
                InterchangeError::malformed(
                    index,
                    format!("ISA needs exactly 6 elements, found {}", e.len()),
                )
            })?;
        if !is_partner_id(&sender) {
            return Err(InterchangeError::malformed(index, format!("bad sender id {sender:?}")));
        }
        if !is_partner_id(&receiver) {
            return Err(InterchangeError::malformed(
                index,
                format!("bad receiver id {receiver:?}"),
            ));
        }
        if !is_digits(&date, 8) {
            return Err(InterchangeError::malformed(index, "date must be YYYYMMDD"));
        }
        if !is_digits(&time, 4) {
            return Err(InterchangeError::malformed(index, "time must be HHMM"));
        }
        if !is_digits(&control, 9) {
            return Err(InterchangeError::malformed(index, "control number must be 9 digits"));
        }
        let ack_requested = match ack.as_str() {
            "0" => false,
            "1" => true,
            _ => return Err(InterchangeError::malformed(index, "ack flag must be 0 or 1")),
        };

        let mut groups = Vec::new();
        loop {
            match self.peek_tag() {
                Some("GS") => groups.push(self.group()?),
                Some("IEA") => break,
                Some(other) => {
                    return Err(InterchangeError::malformed(
                        self.pos,
                        format!("expected GS or IEA, found {other}"),
                    ))
                }
                None => return Err(InterchangeError::Truncated("missing IEA".into())),
            }
        }
        let (index, iea) = self.take();
        let (count, trailer_control) = trailer(index, &iea)?;
        if count != groups.len() {
            return Err(InterchangeError::mismatch(
                index,
                format!("IEA declares {count} groups, found {}", groups.len()),
            ));
        }
        if trailer_control != control {
            return Err(InterchangeError::mismatch(
                index,
                format!("IEA control {trailer_control} differs from ISA control {control}"),
            ));
        }
        if self.pos != self.segments.len() {
            return Err(InterchangeError::malformed(self.pos, "data after IEA"));
        }
        Ok(Interchange {
            sender_id: sender,
            receiver_id: receiver,
            date,
            time,
            control_number: control,
            ack_requested,
            groups,
            delimiters: self.delims,
        })
    }

    fn group(&mut self) -> Result<FunctionalGroup> {
        let (index, gs) = self.take();
        let (doc_type, control) = header_pair(index, &gs)?;
        let mut transactions = Vec::new();
        loop {
            match self.peek_tag() {
                Some("ST") => transactions.push(self.transaction()?),
                Some("GE") => break,
                Some(other) => {
                    return Err(InterchangeError::malformed(
                        self.pos,
                        format!("expected ST or GE, found {other}"),
                    ))
                }
                None => return Err(InterchangeError::Truncated("missing GE".into())),
            }
        }
        let (index, ge) = self.take();
        let (count, trailer_control) = trailer(index, &ge)?;
        if count != transactions.len() {
            return Err(InterchangeError::mismatch(
                index,
                format!("GE declares {count} transactions, found {}", transactions.len()),
            ));
        }
        if trailer_control != control {
            return Err(InterchangeError::mismatch(
                index,
                format!("GE control {trailer_control} differs from GS control {control}"),
            ));
        }
        Ok(FunctionalGroup {
            doc_type,
            control,
            transactions,
        })
    }

    fn transaction(&mut self) -> Result<TransactionSet> {
        let (index, st) = self.take();
        let (txn_type, control) = header_pair(index, &st)?;
        let mut body = Vec::new();
        loop {
            match self.peek_tag() {
                Some("SE") => break,
                Some(tag) if ENVELOPE_TAGS.contains(&tag) => {
                    return Err(InterchangeError::malformed(
                        self.pos,
                        format!("envelope segment {tag} inside transaction {control}"),
                    ))
                }
                Some(_) => body.push(self.take().1),
                None => return Err(InterchangeError::Truncated("missing SE".into())),
            }
        }
        let (index, se) = self.take();
        let (count, trailer_control) = trailer(index, &se)?;
        let actual = body.len() + 2;
        if count != actual {
            return Err(InterchangeError::mismatch(
                index,
                format!("SE declares {count} segments, found {actual}"),
            ));
        }
        if trailer_control != control {
            return Err(InterchangeError::mismatch(
                index,
                format!("SE control {trailer_control} differs from ST control {control}"),
            ));
        }
        Ok(TransactionSet {
            txn_type,
            control,
            body,
        })
    }
}

/// `GS`/`ST`: (code, 4-digit control).
fn header_pair(index: usize, seg: &Segment) -> Result<(String, String)> {
    let [code, control]: [String; 2] = seg.elements.clone().try_into().map_err(|_| {
        InterchangeError::malformed(index, format!("{} needs exactly 2 elements", seg.tag))
    })?;
    if !is_code(&code) {
        return Err(InterchangeError::malformed(index, format!("bad code {code:?}")));
    }
    if !is_digits(&control, 4) {
        return Err(InterchangeError::malformed(index, "control must be 4 digits"));
    }
    Ok((code, control))
}

/// `SE`/`GE`/`IEA`: (count, control).
fn trailer(index: usize, seg: &Segment) -> Result<(usize, String)> {
    let [count, control]: [String; 2] = seg.elements.clone().try_into().map_err(|_| {
        InterchangeError::malformed(index, format!("{} needs exactly 2 elements", seg.tag))
    })?;
    if count.is_empty() || count.len() > 9 || !count.bytes().all(|b| b.is_ascii_digit()) {
        return Err(InterchangeError::malformed(index, format!("bad count {count:?}")));
    }
    Ok((count.parse().expect("checked digits"), control))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EMPTY: &[u8] = b"ISA*A*B*20110101*0930*000000001*0~IEA*0*000000001~";

    fn po(se_count: &str) -> String {
        format!(
            "ISA*A*B*20110101*0930*000000001*0~GS*PO*0001~ST*PO*0001~BEG*PO1*20110101~\
             IT1*S1*2*10.00~SE*{se_count}*0001~GE*1*0001~IEA*1*000000001~"
        )
    }

    #[test]
    fn empty_interchange() {
        let doc = parse_interchange(EMPTY).unwrap();
        assert_eq!(doc.sender_id, "A");
        assert_eq!(doc.receiver_id, "B");
        assert_eq!(doc.control_number, "000000001");
        assert!(!doc.ack_requested);
        assert!(doc.groups.is_empty());
    }

    #[test]
    fn declared_group_missing() {
        let err = parse_interchange(b"ISA*A*B*20110101*0930*000000001*0~IEA*1*000000001~")
            .unwrap_err();
        assert!(matches!(err, InterchangeError::EnvelopeMismatch { .. }), "{err}");
    }

    #[test]
    fn se_count_is_inclusive() {
        let doc = parse_interchange(po("4").as_bytes()).unwrap();
        let txn = &doc.groups[0].transactions[0];
        assert_eq!(txn.body.len(), 2);
        assert_eq!(txn.body[1], Segment::new("IT1", ["S1", "2", "10.00"]));

        let err = parse_interchange(po("5").as_bytes()).unwrap_err();
        assert!(matches!(err, InterchangeError::EnvelopeMismatch { .. }), "{err}");
    }

    #[test]
    fn control_mismatches() {
        let bad_iea = b"ISA*A*B*20110101*0930*000000001*0~IEA*0*000000002~";
        assert!(matches!(
            parse_interchange(bad_iea),
            Err(InterchangeError::EnvelopeMismatch { .. })
        ));
        let bad_se = po("4").replace("SE*4*0001", "SE*4*0002");
        assert!(matches!(
            parse_interchange(bad_se.as_bytes()),
            Err(InterchangeError::EnvelopeMismatch { .. })
        ));
    }

    #[test]
    fn truncation() {
        assert!(matches!(parse_interchange(b""), Err(InterchangeError::Truncated(_))));
        let cut = b"ISA*A*B*20110101*0930*000000001*0~";
        assert!(matches!(parse_interchange(cut), Err(InterchangeError::Truncated(_))));
        let unterminated = b"ISA*A*B*20110101*0930*000000001*0~IEA*0*000000001";
        assert!(matches!(
            parse_interchange(unterminated),
            Err(InterchangeError::Truncated(_))
        ));
        let full = po("4");
        let no_ge = &full[..full.find("GE*").unwrap()];
        assert!(matches!(
            parse_interchange(no_ge.as_bytes()),
            Err(InterchangeError::Truncated(_))
        ));
    }

    #[test]
    fn isa_element_count_is_strict() {
        for bad in [
            &b"ISA*A*B*20110101*0930*000000001~IEA*0*000000001~"[..],
            b"ISA*A*B*20110101*0930*000000001*0*X~IEA*0*000000001~",
        ] {
            assert!(matches!(
                parse_interchange(bad),
                Err(InterchangeError::MalformedSegment { index: 0, .. })
            ));
        }
    }

    #[test]
    fn malformed_inputs() {
        let cases: &[&[u8]] = &[
            b"GS*PO*0001~",
            b"ISA*A*B*2011010*0930*000000001*0~IEA*0*000000001~",
            b"ISA*A*B*20110101*0930*000000001*2~IEA*0*000000001~",
            b"ISA*A*B*20110101*0930*000000001*0~iea*0*000000001~",
            b"ISA*A*B*20110101*0930*000000001*0~IEA*0*000000001~IEA*0*000000001~",
            "ISA*A*B*20110101*0930*000000001*0~GS*PO*0001~ST*PO*0001~BEG*\u{e9}~SE*3*0001~GE*1*0001~IEA*1*000000001~".as_bytes(),
            b"ISA*A*B*20110101*0930*000000001*0~GS*PO*0001~ST*PO*0001~GS*PO*0002~",
        ];
        for case in cases {
            let err = parse_interchange(case).unwrap_err();
            assert!(
                matches!(err, InterchangeError::MalformedSegment { .. }),
                "{}: {err}",
                String::from_utf8_lossy(case)
            );
        }
    }

    #[test]
    fn trailing_newlines_are_tolerated() {
        let mut input = EMPTY.to_vec();
        input.extend_from_slice(b"\r\n");
        assert_eq!(parse_interchange(&input).unwrap(), parse_interchange(EMPTY).unwrap());
    }
}
