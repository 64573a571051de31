use super::Delimiters;

/// `[A-Z][A-Z0-9]{1,2}`
pub fn is_segment_tag(s: &str) -> bool {
    let b = s.as_bytes();
    (2..=3).contains(&b.len())
        && b[0].is_ascii_uppercase()
        && b[1..]
            .iter()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
}

/// Doc type / transaction type codes: `[A-Z][A-Z0-9]{0,5}`.
pub fn is_code(s: &str) -> bool {
    let b = s.as_bytes();
    (1..=6).contains(&b.len())
        && b[0].is_ascii_uppercase()
        && b[1..]
            .iter()
            .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit())
}

/// Partner ids: `[A-Za-z0-9][A-Za-z0-9._-]{0,34}`.
pub fn is_partner_id(s: &str) -> bool {
    let b = s.as_bytes();
    (1..=35).contains(&b.len())
        && b[0].is_ascii_alphanumeric()
        && b[1..]
            .iter()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, b'.' | b'_' | b'-'))
}

pub(crate) fn is_digits(s: &str, len: usize) -> bool {
    s.len() == len && s.bytes().all(|c| c.is_ascii_digit())
}

/// Element content: printable ASCII with no delimiter bytes.
pub(crate) fn element_problem(s: &str, delims: &Delimiters) -> Option<String> {
    for b in s.bytes() {
        if !b.is_ascii() {
            return Some("non-ASCII byte in element".into());
        }
        if b.is_ascii_control() {
            return Some(format!("control character 0x{b:02x} in element"));
        }
        if delims.contains(b) {
            return Some(format!("delimiter {:?} inside element", b as char));
        }
    }
    None
}
