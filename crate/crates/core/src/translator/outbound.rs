use std::collections::BTreeMap;

use super::mapping::{ElementSource, MappingSpec, SegmentTemplate};
use super::{InternalDocument, Result, TranslateError};
use crate::interchange::{
    Delimiters, EnvelopeStamp, FunctionalGroup, Interchange, Segment, TransactionSet,
};

/// Translate one internal document into a single-transaction interchange.
pub fn translate_outbound(
    doc: &InternalDocument,
    map: &MappingSpec,
    sender: &str,
    receiver: &str,
    stamp: &EnvelopeStamp,
) -> Result<Interchange> {
    translate_outbound_batch(std::slice::from_ref(doc), map, sender, receiver, stamp)
}

/// Translate several documents of the map's doc type into one interchange
/// with one group and one transaction per document.
pub fn translate_outbound_batch(
    docs: &[InternalDocument],
    map: &MappingSpec,
    sender: &str,
    receiver: &str,
    stamp: &EnvelopeStamp,
) -> Result<Interchange> {
    let mut transactions = Vec::with_capacity(docs.len());
    for (n, doc) in docs.iter().enumerate() {
        if doc.doc_type != map.doc_type {
            return Err(TranslateError::DocTypeMismatch {
                expected: map.doc_type.clone(),
                found: doc.doc_type.clone(),
            });
        }
        transactions.push(TransactionSet {
            txn_type: map.doc_type.clone(),
            control: stamp.txn_control_at(n)?,
            body: body_for(doc, map)?,
        });
    }
    let mut out = Interchange::new(sender, receiver, stamp);
    out.groups.push(FunctionalGroup {
        doc_type: map.doc_type.clone(),
        control: stamp.group_control.clone(),
        transactions,
    });
    Ok(out)
}

fn body_for(doc: &InternalDocument, map: &MappingSpec) -> Result<Vec<Segment>> {
    let count = doc.items.len();
    let mut body = Vec::new();
    for t in &map.header_segments {
        body.push(fill(t, &doc.header, None, count)?);
    }
    for (i, item) in doc.items.iter().enumerate() {
        for t in &map.item_segments {
            body.push(fill(t, item, Some(i), count)?);
        }
    }
    for t in &map.summary_segments {
        body.push(fill(t, &doc.header, None, count)?);
    }
    Ok(body)
}

fn fill(
    template: &SegmentTemplate,
    fields: &BTreeMap<String, String>,
    item: Option<usize>,
    count: usize,
) -> Result<Segment> {
    let delims = Delimiters::default();
    let elements = template
        .elements
        .iter()
        .map(|src| match src {
            ElementSource::Literal(l) => Ok(l.clone()),
            ElementSource::ItemCount => Ok(count.to_string()),
            ElementSource::Field(name) => {
                let value = fields.get(name).ok_or_else(|| TranslateError::MissingField {
                    field: name.clone(),
                    item,
                })?;
                if let Some(b) = value
                    .bytes()
                    .find(|&b| !(b.is_ascii_graphic() || b == b' ') || delims.contains(b))
                {
                    return Err(TranslateError::InvalidValue {
                        field: name.clone(),
                        reason: format!("byte 0x{b:02x} is not allowed in element content"),
                    });
                }
                Ok(value.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Segment {
        tag: template.tag.clone(),
        elements,
    })
}
