use std::collections::BTreeMap;
use std::iter::Peekable;
use std::slice::Iter;

use super::mapping::{ElementSource, MappingSpec, SegmentTemplate};
use super::{InternalDocument, Result, TranslateError};
use crate::interchange::{Interchange, Segment, TransactionSet};

/// Translate every transaction of `doc` back into an internal document.
///
/// Item boundaries are found by the first item-template tag. Literal and
/// item-count elements are checked against the map, not skipped.
pub fn translate_inbound(doc: &Interchange, map: &MappingSpec) -> Result<Vec<InternalDocument>> {
    let mut out = Vec::new();
    for (group, txn) in doc.transactions() {
        for found in [&group.doc_type, &txn.txn_type] {
            if *found != map.doc_type {
                return Err(TranslateError::DocTypeMismatch {
                    expected: map.doc_type.clone(),
                    found: found.clone(),
                });
            }
        }
        out.push(read_transaction(txn, map)?);
    }
    Ok(out)
}

fn read_transaction(txn: &TransactionSet, map: &MappingSpec) -> Result<InternalDocument> {
    let mut reader = Reader {
        segments: txn.body.iter().peekable(),
        txn: &txn.control,
        declared_counts: Vec::new(),
    };
    let mut doc = InternalDocument::new(&map.doc_type);

    for t in &map.header_segments {
        reader.read(t, &mut doc.header)?;
    }
    if let Some(first) = map.item_segments.first() {
        while reader.next_tag() == Some(first.tag.as_str()) {
            let mut item = BTreeMap::new();
            for t in &map.item_segments {
                reader.read(t, &mut item)?;
            }
            doc.items.push(item);
        }
    }
    for t in &map.summary_segments {
        reader.read(t, &mut doc.header)?;
    }
    if let Some(extra) = reader.segments.next() {
        return Err(TranslateError::TemplateMismatch {
            txn: txn.control.clone(),
            reason: format!("unexpected segment {} after summary", extra.tag),
        });
    }
    for declared in reader.declared_counts {
        if declared.parse::<usize>().ok() != Some(doc.items.len()) {
            return Err(TranslateError::CountMismatch {
                txn: txn.control.clone(),
                declared,
                parsed: doc.items.len(),
            });
        }
    }
    Ok(doc)
}

struct Reader<'a> {
    segments: Peekable<Iter<'a, Segment>>,
    txn: &'a str,
    declared_counts: Vec<String>,
}

impl Reader<'_> {
    fn next_tag(&mut self) -> Option<&str> {
        self.segments.peek().map(|s| s.tag.as_str())
    }

    fn mismatch(&self, reason: String) -> TranslateError {
        TranslateError::TemplateMismatch {
            txn: self.txn.to_owned(),
            reason,
        }
    }

    fn read(&mut self, template: &SegmentTemplate, fields: &mut BTreeMap<String, String>) -> Result<()> {
        let Some(seg) = self.segments.next() else {
            return Err(self.mismatch(format!("expected {}, body ended", template.tag)));
        };
        if seg.tag != template.tag {
            return Err(self.mismatch(format!("expected {}, found {}", template.tag, seg.tag)));
        }
        if seg.elements.len() != template.elements.len() {
            return Err(self.mismatch(format!(
                "{} has {} elements, map expects {}",
                seg.tag,
                seg.elements.len(),
                template.elements.len()
            )));
        }
        for (position, (src, value)) in template.elements.iter().zip(&seg.elements).enumerate() {
            match src {
                ElementSource::Field(name) => {
                    fields.insert(name.clone(), value.clone());
                }
                ElementSource::Literal(expected) if expected != value => {
                    return Err(self.mismatch(format!(
                        "{}{:02}: literal {expected:?} expected, found {value:?}",
                        seg.tag,
                        position + 1
                    )));
                }
                ElementSource::Literal(_) => {}
                ElementSource::ItemCount => self.declared_counts.push(value.clone()),
            }
        }
        Ok(())
    }
}
