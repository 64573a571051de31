//! Binary framing of [`SecureEnvelope`].
//!
//! ```text
//! "EDSE"                      4-byte magic
//! frame * 9                   u32 big-endian length || bytes, in order:
//!   version, suite, sender_key_id, recipient_key_id,
//!   wrapped_key, nonce, ciphertext, plaintext_digest, signature
//! ```
//!
//! Decoding is exact: every frame must be present, fixed-size fields must
//! have their size, and no bytes may follow the last frame.

use super::digest::Digest;
use super::{CipherSuiteId, Result, SecEnvError, ENVELOPE_VERSION};

pub const ENVELOPE_MAGIC: &[u8; 4] = b"EDSE";

const MAX_ID_LEN: usize = 256;
const MAX_CIPHERTEXT_LEN: usize = 256 << 20;
pub(crate) const NONCE_LEN: usize = 12;
pub(crate) const PUB1_WRAPPED_KEY_LEN: usize = 32 + 32 + 16;
pub(crate) const PUB1_SIGNATURE_LEN: usize = 64;
pub(crate) const PSK1_SIGNATURE_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecureEnvelope {
    pub suite: CipherSuiteId,
    pub sender_key_id: String,
    pub recipient_key_id: String,
    /// Empty for `PSK-1`.
    pub wrapped_key: Vec<u8>,
    pub nonce: Vec<u8>,
    pub ciphertext: Vec<u8>,
    pub plaintext_digest: Digest,
    pub signature: Vec<u8>,
}

impl SecureEnvelope {
    pub fn version(&self) -> &'static str {
        ENVELOPE_VERSION
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let frames: [&[u8]; 9] = [
            ENVELOPE_VERSION.as_bytes(),
            self.suite.as_str().as_bytes(),
            self.sender_key_id.as_bytes(),
            self.recipient_key_id.as_bytes(),
            &self.wrapped_key,
            &self.nonce,
            &self.ciphertext,
            &self.plaintext_digest,
            &self.signature,
        ];
        let len = 4 + frames.iter().map(|f| 4 + f.len()).sum::<usize>();
        let mut out = Vec::with_capacity(len);
        out.extend_from_slice(ENVELOPE_MAGIC);
        for f in frames {
            out.extend_from_slice(&(f.len() as u32).to_be_bytes());
            out.extend_from_slice(f);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let malformed = |why: &str| SecEnvError::MalformedEnvelope(why.to_owned());
        let rest = bytes
            .strip_prefix(ENVELOPE_MAGIC.as_slice())
            .ok_or_else(|| malformed("bad magic"))?;
        let mut r = FrameReader { rest };

        let version = r.frame(8)?;
        if version != ENVELOPE_VERSION.as_bytes() {
            return Err(malformed("unsupported version"));
        }
        let suite: CipherSuiteId = utf8(r.frame(16)?)?.parse()?;
        let sender_key_id = utf8(r.frame(MAX_ID_LEN)?)?.to_owned();
        let recipient_key_id = utf8(r.frame(MAX_ID_LEN)?)?.to_owned();
        let wrapped_key = r.frame(PUB1_WRAPPED_KEY_LEN)?.to_vec();
        let nonce = r.frame(NONCE_LEN)?.to_vec();
        let ciphertext = r.frame(MAX_CIPHERTEXT_LEN)?.to_vec();
        let digest = r.frame(32)?;
        let signature = r.frame(PUB1_SIGNATURE_LEN)?.to_vec();
        if !r.rest.is_empty() {
            return Err(malformed("trailing bytes after signature"));
        }

        if sender_key_id.is_empty() || recipient_key_id.is_empty() {
            return Err(malformed("empty key id"));
        }
        if nonce.len() != NONCE_LEN {
            return Err(malformed("nonce must be 12 bytes"));
        }
        let plaintext_digest: Digest = digest
            .try_into()
            .map_err(|_| malformed("digest must be 32 bytes"))?;
        let (key_len, sig_len) = match suite {
            CipherSuiteId::Psk1 => (0, PSK1_SIGNATURE_LEN),
            CipherSuiteId::Pub1 => (PUB1_WRAPPED_KEY_LEN, PUB1_SIGNATURE_LEN),
        };
        if wrapped_key.len() != key_len {
            return Err(malformed("wrapped key has the wrong size for the suite"));
        }
        if signature.len() != sig_len {
            return Err(malformed("signature has the wrong size for the suite"));
        }
        if ciphertext.len() < 16 {
            return Err(malformed("ciphertext shorter than its tag"));
        }
        Ok(Self {
            suite,
            sender_key_id,
            recipient_key_id,
            wrapped_key,
            nonce,
            ciphertext,
            plaintext_digest,
            signature,
        })
    }
}

struct FrameReader<'a> {
    rest: &'a [u8],
}

impl<'a> FrameReader<'a> {
    fn frame(&mut self, max: usize) -> Result<&'a [u8]> {
        let malformed = |why: &str| SecEnvError::MalformedEnvelope(why.to_owned());
        let (len, tail) = self
            .rest
            .split_first_chunk::<4>()
            .ok_or_else(|| malformed("truncated frame header"))?;
        let len = u32::from_be_bytes(*len) as usize;
        if len > max {
            return Err(malformed("frame longer than allowed"));
        }
        if tail.len() < len {
            return Err(malformed("truncated frame"));
        }
        let (frame, rest) = tail.split_at(len);
        self.rest = rest;
        Ok(frame)
    }
}

fn utf8(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|_| SecEnvError::MalformedEnvelope("key id is not utf-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SecureEnvelope {
        SecureEnvelope {
            suite: CipherSuiteId::Psk1,
            sender_key_id: "A".into(),
            recipient_key_id: "A+B".into(),
            wrapped_key: vec![],
            nonce: vec![1; 12],
            ciphertext: vec![2; 20],
            plaintext_digest: [3; 32],
            signature: vec![4; 32],
        }
    }

    #[test]
    fn framing_round_trip() {
        let env = sample();
        let bytes = env.to_bytes();
        assert_eq!(&bytes[..4], b"EDSE");
        assert_eq!(&bytes[4..9], &[0, 0, 0, 1, b'1']);
        assert_eq!(SecureEnvelope::from_bytes(&bytes).unwrap(), env);
    }

    #[test]
    fn strict_decoding() {
        let bytes = sample().to_bytes();
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(SecureEnvelope::from_bytes(&trailing).is_err());
        assert!(SecureEnvelope::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(SecureEnvelope::from_bytes(b"garbage").is_err());

        let mut env = sample();
        env.wrapped_key = vec![0; 80];
        assert!(SecureEnvelope::from_bytes(&env.to_bytes()).is_err());
        let mut env = sample();
        env.nonce = vec![0; 11];
        assert!(SecureEnvelope::from_bytes(&env.to_bytes()).is_err());
    }

    #[test]
    fn unknown_suite_in_frame() {
        let bytes = sample().to_bytes();
        let text = bytes.windows(5).position(|w| w == b"PSK-1").unwrap();
        let mut patched = bytes.clone();
        patched[text..text + 5].copy_from_slice(b"PSK-9");
        assert_eq!(
            SecureEnvelope::from_bytes(&patched),
            Err(SecEnvError::UnknownSuite("PSK-9".into()))
        );
    }
}
