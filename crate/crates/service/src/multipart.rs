//! `multipart/mixed` bodies for mailbox downloads.
//!
//! Every part carries a `Content-Length`, so payloads are read by count and
//! never scanned for the boundary.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Part {
    /// Header name/value pairs, in order. `Content-Length` is added on encode.
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl Part {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed multipart body at byte {offset}: {reason}")]
pub struct MultipartError {
    pub offset: usize,
    pub reason: String,
}

pub fn content_type(boundary: &str) -> String {
    format!("multipart/mixed; boundary={boundary}")
}

/// Pull the boundary out of a `multipart/mixed` content type.
pub fn boundary_of(content_type: &str) -> Option<&str> {
    let (mime, params) = content_type.split_once(';')?;
    if !mime.trim().eq_ignore_ascii_case("multipart/mixed") {
        return None;
    }
    params.split(';').find_map(|p| {
        let (k, v) = p.trim().split_once('=')?;
        k.eq_ignore_ascii_case("boundary").then(|| v.trim_matches('"'))
    })
}

pub fn encode(boundary: &str, parts: &[Part]) -> Vec<u8> {
    let mut out = Vec::new();
    for part in parts {
        out.extend_from_slice(format!("--{boundary}\r\n").as_bytes());
        for (k, v) in &part.headers {
            out.extend_from_slice(format!("{k}: {v}\r\n").as_bytes());
        }
        out.extend_from_slice(format!("Content-Length: {}\r\n\r\n", part.body.len()).as_bytes());
        out.extend_from_slice(&part.body);
        out.extend_from_slice(b"\r\n");
    }
    out.extend_from_slice(format!("--{boundary}--\r\n").as_bytes());
    out
}

pub fn decode(boundary: &str, body: &[u8]) -> Result<Vec<Part>, MultipartError> {
    let err = |offset: usize, reason: &str| MultipartError {
        offset,
        reason: reason.into(),
    };
    let delim = format!("--{boundary}");
    let mut parts = Vec::new();
    let mut at = 0;
    loop {
        let line_end = find_crlf(body, at).ok_or_else(|| err(at, "missing boundary line"))?;
        let line = &body[at..line_end];
        if line == format!("{delim}--").as_bytes() {
            return Ok(parts);
        }
        if line != delim.as_bytes() {
            return Err(err(at, "expected boundary"));
        }
        at = line_end + 2;

        let mut headers = Vec::new();
        let mut length = None;
        loop {
            let end = find_crlf(body, at).ok_or_else(|| err(at, "unterminated headers"))?;
            if end == at {
                at += 2;
                break;
            }
            let text = std::str::from_utf8(&body[at..end]).map_err(|_| err(at, "header is not UTF-8"))?;
            let (k, v) = text.split_once(':').ok_or_else(|| err(at, "header without ':'"))?;
            let (k, v) = (k.trim(), v.trim());
            if k.eq_ignore_ascii_case("content-length") {
                length = Some(v.parse::<usize>().map_err(|_| err(at, "bad Content-Length"))?);
            } else {
                headers.push((k.to_owned(), v.to_owned()));
            }
            at = end + 2;
        }
        let len = length.ok_or_else(|| err(at, "part without Content-Length"))?;
        if body.len() < at + len + 2 || &body[at + len..at + len + 2] != b"\r\n" {
            return Err(err(at, "part body shorter than its Content-Length"));
        }
        parts.push(Part {
            headers,
            body: body[at..at + len].to_vec(),
        });
        at += len + 2;
    }
}

fn find_crlf(bytes: &[u8], from: usize) -> Option<usize> {
    bytes.get(from..)?.windows(2).position(|w| w == b"\r\n").map(|p| p + from)
}
