use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::document::is_field_name;
use super::{Result, TranslateError};
use crate::interchange::{is_code, is_segment_tag, Delimiters, ENVELOPE_TAGS};

/// The purchase-order map shipped as `maps/po.map.json`.
pub const REFERENCE_PO_MAP: &str = r#"{"docType":"PO","header":[{"tag":"BEG","elements":[{"field":"poNumber"},{"field":"poDate"}]}],"items":{"path":"items","segments":[{"tag":"IT1","elements":[{"field":"sku"},{"field":"qty"},{"field":"unitPrice"}]}]},"summary":[{"tag":"CTT","elements":[{"count":"items"}]}]}"#;

/// Where one element of a segment template takes its value from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElementSource {
    Field(String),
    Literal(String),
    ItemCount,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentTemplate {
    pub tag: String,
    pub elements: Vec<ElementSource>,
}

/// A validated, invertible map for one doc type. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingSpec {
    pub doc_type: String,
    pub header_segments: Vec<SegmentTemplate>,
    pub item_segments: Vec<SegmentTemplate>,
    /// Summary field references resolve against the document header.
    pub summary_segments: Vec<SegmentTemplate>,
}

impl MappingSpec {
    pub fn reference_po() -> Self {
        load_map(REFERENCE_PO_MAP.as_bytes()).expect("reference map is valid")
    }

    pub fn to_json(&self) -> String {
        let file = MapFile {
            doc_type: self.doc_type.clone(),
            header: self.header_segments.iter().map(RawTemplate::from).collect(),
            items: Some(RawItems {
                path: "items".into(),
                segments: self.item_segments.iter().map(RawTemplate::from).collect(),
            }),
            summary: self.summary_segments.iter().map(RawTemplate::from).collect(),
        };
        serde_json::to_string(&file).expect("map serializes")
    }
}

/// Parse and validate a JSON mapping file.
pub fn load_map(file: &[u8]) -> Result<MappingSpec> {
    let raw: MapFile =
        serde_json::from_slice(file).map_err(|e| TranslateError::MapParse(e.to_string()))?;
    if !is_code(&raw.doc_type) {
        return Err(TranslateError::MapParse(format!("bad docType {:?}", raw.doc_type)));
    }
    let items = raw.items.unwrap_or(RawItems {
        path: "items".into(),
        segments: Vec::new(),
    });
    if items.path != "items" {
        return Err(TranslateError::MapParse(format!(
            "items.path must be \"items\", found {:?}",
            items.path
        )));
    }
    let spec = MappingSpec {
        doc_type: raw.doc_type,
        header_segments: convert(raw.header)?,
        item_segments: convert(items.segments)?,
        summary_segments: convert(raw.summary)?,
    };
    check_invertible(&spec)?;
    Ok(spec)
}

fn convert(raw: Vec<RawTemplate>) -> Result<Vec<SegmentTemplate>> {
    raw.into_iter().map(SegmentTemplate::try_from).collect()
}

fn check_invertible(spec: &MappingSpec) -> Result<()> {
    let header_scope = spec.header_segments.iter().chain(&spec.summary_segments);
    check_unique_bindings(header_scope, "header")?;
    check_unique_bindings(spec.item_segments.iter(), "item")?;

    if let (Some(item), Some(summary)) = (spec.item_segments.first(), spec.summary_segments.first())
    {
        if item.tag == summary.tag {
            return Err(TranslateError::MapNotInvertible(format!(
                "first item segment and first summary segment share tag {}",
                item.tag
            )));
        }
    }
    Ok(())
}

fn check_unique_bindings<'a>(
    templates: impl Iterator<Item = &'a SegmentTemplate>,
    scope: &str,
) -> Result<()> {
    let mut seen = HashSet::new();
    for t in templates {
        for e in &t.elements {
            if let ElementSource::Field(name) = e {
                if !seen.insert(name.as_str()) {
                    return Err(TranslateError::MapNotInvertible(format!(
                        "{scope} field {name} is bound more than once"
                    )));
                }
            }
        }
    }
    Ok(())
}

#[derive(Deserialize, Serialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct MapFile {
    doc_type: String,
    #[serde(default)]
    header: Vec<RawTemplate>,
    #[serde(default)]
    items: Option<RawItems>,
    #[serde(default)]
    summary: Vec<RawTemplate>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawItems {
    path: String,
    segments: Vec<RawTemplate>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    tag: String,
    elements: Vec<RawSource>,
}

#[derive(Deserialize, Serialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    literal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<String>,
}

impl TryFrom<RawTemplate> for SegmentTemplate {
    type Error = TranslateError;

    fn try_from(raw: RawTemplate) -> Result<Self> {
        if ENVELOPE_TAGS.contains(&raw.tag.as_str()) {
            return Err(TranslateError::ReservedTag(raw.tag));
        }
        if !is_segment_tag(&raw.tag) {
            return Err(TranslateError::MapParse(format!("bad segment tag {:?}", raw.tag)));
        }
        let delims = Delimiters::default();
        let elements = raw
            .elements
            .into_iter()
            .map(|src| match (src.field, src.literal, src.count) {
                (Some(f), None, None) if is_field_name(&f) => Ok(ElementSource::Field(f)),
                (Some(f), None, None) => {
                    Err(TranslateError::MapParse(format!("bad field name {f:?}")))
                }
                (None, Some(l), None) => {
                    if l.bytes().any(|b| !b.is_ascii_graphic() && b != b' ' || delims.contains(b)) {
                        Err(TranslateError::MapParse(format!("literal {l:?} is not element-safe")))
                    } else {
                        Ok(ElementSource::Literal(l))
                    }
                }
                (None, None, Some(c)) if c == "items" => Ok(ElementSource::ItemCount),
                (None, None, Some(c)) => Err(TranslateError::MapParse(format!(
                    "count source must be \"items\", found {c:?}"
                ))),
                _ => Err(TranslateError::MapParse(format!(
                    "{}: each element needs exactly one of field, literal, count",
                    raw.tag
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tag: raw.tag,
            elements,
        })
    }
}

impl From<&SegmentTemplate> for RawTemplate {
    fn from(t: &SegmentTemplate) -> Self {
        Self {
            tag: t.tag.clone(),
            elements: t
                .elements
                .iter()
                .map(|e| match e {
                    ElementSource::Field(f) => RawSource {
                        field: Some(f.clone()),
                        ..RawSource::default()
                    },
                    ElementSource::Literal(l) => RawSource {
                        literal: Some(l.clone()),
                        ..RawSource::default()
                    },
                    ElementSource::ItemCount => RawSource {
                        count: Some("items".into()),
                        ..RawSource::default()
                    },
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_map() {
        let spec = MappingSpec::reference_po();
        assert_eq!(spec.doc_type, "PO");
        assert_eq!(spec.header_segments.len(), 1);
        assert_eq!(spec.header_segments[0].tag, "BEG");
        assert_eq!(spec.item_segments.len(), 1);
        assert_eq!(spec.item_segments[0].tag, "IT1");
        assert_eq!(spec.summary_segments.len(), 1);
        assert_eq!(spec.summary_segments[0].elements, vec![ElementSource::ItemCount]);
        assert_eq!(spec.to_json(), REFERENCE_PO_MAP);
    }

    #[test]
    fn duplicate_binding() {
        let map = br#"{"docType":"PO","header":[{"tag":"BEG","elements":[{"field":"poNumber"},{"field":"poNumber"}]}]}"#;
        assert!(matches!(load_map(map), Err(TranslateError::MapNotInvertible(_))));
        let across = br#"{"docType":"PO","header":[{"tag":"BEG","elements":[{"field":"poNumber"}]}],
            "summary":[{"tag":"CTT","elements":[{"field":"poNumber"}]}]}"#;
        assert!(matches!(load_map(across), Err(TranslateError::MapNotInvertible(_))));
    }

    #[test]
    fn reserved_tag() {
        let map = br#"{"docType":"PO","header":[{"tag":"ISA","elements":[{"field":"poNumber"}]}]}"#;
        assert!(matches!(load_map(map), Err(TranslateError::ReservedTag(t)) if t == "ISA"));
    }

    #[test]
    fn ambiguous_item_boundary() {
        let map = br#"{"docType":"PO","items":{"path":"items","segments":[{"tag":"IT1","elements":[{"field":"sku"}]}]},
            "summary":[{"tag":"IT1","elements":[{"count":"items"}]}]}"#;
        assert!(matches!(load_map(map), Err(TranslateError::MapNotInvertible(_))));
    }

    #[test]
    fn parse_errors() {
        for bad in [
            &br#"not json"#[..],
            br#"{"docType":"PO","header":[{"tag":"BEG","elements":[{"field":"a","literal":"b"}]}]}"#,
            br#"{"docType":"PO","header":[{"tag":"BEG","elements":[{}]}]}"#,
            br#"{"docType":"PO","header":[{"tag":"BEG","elements":[{"count":"lines"}]}]}"#,
            br#"{"docType":"PO","header":[{"tag":"BEG","elements":[{"literal":"a*b"}]}]}"#,
            br#"{"docType":"PO","items":{"path":"lines","segments":[]}}"#,
            br#"{"docType":"PO","header":[{"tag":"beg","elements":[]}]}"#,
        ] {
            assert!(
                matches!(load_map(bad), Err(TranslateError::MapParse(_))),
                "{}",
                String::from_utf8_lossy(bad)
            );
        }
    }
}
