use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Result, TranslateError};
use crate::interchange::is_code;

/// A business document in the organisation's own flat layout.
///
/// ```json
/// {"docType": "PO", "header": {"poNumber": "PO1"}, "items": [{"sku": "S1"}]}
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InternalDocument {
    pub doc_type: String,
    #[serde(default)]
    pub header: BTreeMap<String, String>,
    #[serde(default)]
    pub items: Vec<BTreeMap<String, String>>,
}

impl InternalDocument {
    pub fn new(doc_type: impl Into<String>) -> Self {
        Self {
            doc_type: doc_type.into(),
            ..Self::default()
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let doc: Self = serde_json::from_slice(bytes)
            .map_err(|e| TranslateError::InvalidDocument(e.to_string()))?;
        doc.check()?;
        Ok(doc)
    }

    pub fn to_json_pretty(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("string maps always serialize");
        out.push(b'\n');
        out
    }

    /// Field names must match `[a-zA-Z][a-zA-Z0-9_]*`.
    pub fn check(&self) -> Result<()> {
        if !is_code(&self.doc_type) {
            return Err(TranslateError::InvalidDocument(format!(
                "bad docType {:?}",
                self.doc_type
            )));
        }
        let names = self
            .header
            .keys()
            .chain(self.items.iter().flat_map(|i| i.keys()));
        for name in names {
            if !is_field_name(name) {
                return Err(TranslateError::InvalidDocument(format!("bad field name {name:?}")));
            }
        }
        Ok(())
    }
}

pub(crate) fn is_field_name(s: &str) -> bool {
    let mut bytes = s.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic())
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}
