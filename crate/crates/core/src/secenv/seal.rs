use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::Aes256Gcm;
use ed25519_dalek::{Signature, Signer};
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use sha2::Sha256;
use x25519_dalek::StaticSecret;

use super::digest::compute_digest;
use super::envelope::{NONCE_LEN, PUB1_WRAPPED_KEY_LEN};
use super::keys::{psk_key_id, Keystore, PublicKey};
use super::{signing_input, CipherSuiteId, Result, SecEnvError, SecureEnvelope};

const PSK_ENC_INFO: &[u8] = b"edi PSK-1 content key";
const PSK_MAC_INFO: &[u8] = b"edi PSK-1 mac key";
const PUB_WRAP_INFO: &[u8] = b"edi PUB-1 key wrap";

/// Outcome of the three unwrap checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    pub decrypted_ok: bool,
    pub digest_ok: bool,
    pub signature_ok: bool,
    /// Key id of the verified signer.
    pub signer: Option<String>,
}

impl VerificationReport {
    pub fn all_ok(&self) -> bool {
        self.decrypted_ok && self.digest_ok && self.signature_ok
    }
}

/// A failed unwrap. Carries the report but never any plaintext.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{error}")]
pub struct Rejected {
    pub error: SecEnvError,
    pub report: VerificationReport,
}

impl From<SecEnvError> for Rejected {
    fn from(error: SecEnvError) -> Self {
        Self {
            error,
            report: VerificationReport::default(),
        }
    }
}

/// Encrypt, digest and sign `plaintext` from `sender` to `recipient`.
///
/// `PSK-1` needs the pair's pre-shared key; `PUB-1` needs the sender's
/// private key and the recipient's public key.
pub fn wrap(
    plaintext: &[u8],
    sender: &str,
    recipient: &str,
    suite: CipherSuiteId,
    keystore: &Keystore,
) -> Result<SecureEnvelope> {
    let digest = compute_digest(plaintext);
    let mut nonce = [0u8; NONCE_LEN];
    rand::fill(&mut nonce);

    match suite {
        CipherSuiteId::Psk1 => {
            let key_id = psk_key_id(sender, recipient);
            let (enc, mac) = psk_subkeys(&keystore.psk(&key_id)?);
            let input = signing_input(suite, sender, &key_id, &digest);
            let ciphertext = seal(&enc, &nonce, plaintext, &input);
            Ok(SecureEnvelope {
                suite,
                sender_key_id: sender.to_owned(),
                recipient_key_id: key_id,
                wrapped_key: Vec::new(),
                nonce: nonce.to_vec(),
                ciphertext,
                plaintext_digest: digest,
                signature: hmac(&mac, &input),
            })
        }
        CipherSuiteId::Pub1 => {
            let signer = keystore.keypair(sender)?;
            let recipient_public = keystore.public_key(recipient)?;
            let mut content_key = [0u8; 32];
            rand::fill(&mut content_key);
            let input = signing_input(suite, sender, recipient, &digest);
            let ciphertext = seal(&content_key, &nonce, plaintext, &input);
            let wrapped_key = wrap_content_key(&content_key, &recipient_public, &input)?;
            let signature: Signature = signer.signing.sign(&input);
            Ok(SecureEnvelope {
                suite,
                sender_key_id: sender.to_owned(),
                recipient_key_id: recipient.to_owned(),
                wrapped_key,
                nonce: nonce.to_vec(),
                ciphertext,
                plaintext_digest: digest,
                signature: signature.to_bytes().to_vec(),
            })
        }
    }
}

/// Verify and decrypt. Plaintext is released only when decryption, digest
/// and signature all check out.
pub fn unwrap(
    env: &SecureEnvelope,
    keystore: &Keystore,
) -> std::result::Result<(Vec<u8>, VerificationReport), Rejected> {
    let input = signing_input(
        env.suite,
        &env.sender_key_id,
        &env.recipient_key_id,
        &env.plaintext_digest,
    );
    let mut report = VerificationReport::default();

    let decrypted = match env.suite {
        CipherSuiteId::Psk1 => {
            let (enc, mac) = psk_subkeys(&keystore.psk(&env.recipient_key_id)?);
            let sender_is_party = env
                .recipient_key_id
                .split_once('+')
                .is_some_and(|(a, b)| env.sender_key_id == a || env.sender_key_id == b);
            report.signature_ok = sender_is_party && verify_hmac(&mac, &input, &env.signature);
            open(&enc, &env.nonce, &env.ciphertext, &input)
        }
        CipherSuiteId::Pub1 => {
            let sender_public = keystore.public_key(&env.sender_key_id)?;
            let recipient = keystore.keypair(&env.recipient_key_id)?;
            report.signature_ok = verify_ed25519(&sender_public, &input, &env.signature);
            unwrap_content_key(&env.wrapped_key, &recipient.agreement, &input)
                .and_then(|key| open(&key, &env.nonce, &env.ciphertext, &input))
        }
    };

    report.decrypted_ok = decrypted.is_some();
    if let Some(plaintext) = &decrypted {
        report.digest_ok = compute_digest(plaintext) == env.plaintext_digest;
    }
    if report.signature_ok {
        report.signer = Some(env.sender_key_id.clone());
    }

    let error = if !report.signature_ok {
        SecEnvError::SignatureInvalid
    } else if !report.decrypted_ok {
        SecEnvError::DecryptFailure
    } else if !report.digest_ok {
        SecEnvError::DigestMismatch
    } else {
        return Ok((decrypted.expect("decrypted_ok"), report));
    };
    Err(Rejected { error, report })
}

/// Parse a serialized envelope and unwrap it.
pub fn unwrap_bytes(
    bytes: &[u8],
    keystore: &Keystore,
) -> std::result::Result<(Vec<u8>, VerificationReport), Rejected> {
    let env = SecureEnvelope::from_bytes(bytes)?;
    unwrap(&env, keystore)
}

fn psk_subkeys(psk: &[u8; 32]) -> ([u8; 32], [u8; 32]) {
    let hk = Hkdf::<Sha256>::new(None, psk);
    let mut enc = [0u8; 32];
    let mut mac = [0u8; 32];
    hk.expand(PSK_ENC_INFO, &mut enc).expect("32 bytes is a valid HKDF length");
    hk.expand(PSK_MAC_INFO, &mut mac).expect("32 bytes is a valid HKDF length");
    (enc, mac)
}

fn hmac(key: &[u8; 32], data: &[u8]) -> Vec<u8> {
    let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("any key length");
    mac.update(data);
    mac.finalize().into_bytes().to_vec()
}

fn verify_hmac(key: &[u8; 32], data: &[u8], tag: &[u8]) -> bool {
    let mut mac = <Hmac<Sha256> as KeyInit>::new_from_slice(key).expect("any key length");
    mac.update(data);
    mac.verify_slice(tag).is_ok()
}

pub(crate) fn verify_ed25519(public: &PublicKey, data: &[u8], signature: &[u8]) -> bool {
    let Ok(sig) = Signature::from_slice(signature) else {
        return false;
    };
    public.verifying.verify_strict(data, &sig).is_ok()
}

fn seal(key: &[u8; 32], nonce: &[u8; NONCE_LEN], msg: &[u8], aad: &[u8]) -> Vec<u8> {
    let cipher = Aes256Gcm::new_from_slice(key).expect("32-byte key");
    cipher
        .encrypt(&(*nonce).into(), Payload { msg, aad })
        .expect("AES-GCM encryption does not fail for in-range inputs")
}

fn open(key: &[u8; 32], nonce: &[u8], ciphertext: &[u8], aad: &[u8]) -> Option<Vec<u8>> {
    let nonce: [u8; NONCE_LEN] = nonce.try_into().ok()?;
    let cipher = Aes256Gcm::new_from_slice(key).expect("32-byte key");
    cipher
        .decrypt(&nonce.into(), Payload { msg: ciphertext, aad })
        .ok()
}

/// `ephemeral_public || AES-GCM(kek, content_key)`, with kek and nonce
/// derived by HKDF from the X25519 shared secret.
fn wrap_content_key(content_key: &[u8; 32], recipient: &PublicKey, aad: &[u8]) -> Result<Vec<u8>> {
    let mut secret = [0u8; 32];
    rand::fill(&mut secret);
    let ephemeral = StaticSecret::from(secret);
    let ephemeral_public = x25519_dalek::PublicKey::from(&ephemeral);
    let shared = ephemeral.diffie_hellman(&recipient.agreement);
    if !shared.was_contributory() {
        return Err(SecEnvError::InvalidKey("recipient agreement key is degenerate".into()));
    }
    let (kek, nonce) = derive_wrap_key(shared.as_bytes(), &ephemeral_public, &recipient.agreement);
    let mut out = ephemeral_public.as_bytes().to_vec();
    out.extend(seal(&kek, &nonce, content_key, aad));
    debug_assert_eq!(out.len(), PUB1_WRAPPED_KEY_LEN);
    Ok(out)
}

fn unwrap_content_key(wrapped: &[u8], recipient: &StaticSecret, aad: &[u8]) -> Option<[u8; 32]> {
    let (ephemeral, sealed) = wrapped.split_first_chunk::<32>()?;
    let ephemeral = x25519_dalek::PublicKey::from(*ephemeral);
    let shared = recipient.diffie_hellman(&ephemeral);
    if !shared.was_contributory() {
        return None;
    }
    let own_public = x25519_dalek::PublicKey::from(recipient);
    let (kek, nonce) = derive_wrap_key(shared.as_bytes(), &ephemeral, &own_public);
    open(&kek, &nonce, sealed, aad)?.try_into().ok()
}

fn derive_wrap_key(
    shared: &[u8; 32],
    ephemeral: &x25519_dalek::PublicKey,
    recipient: &x25519_dalek::PublicKey,
) -> ([u8; 32], [u8; NONCE_LEN]) {
    let mut salt = [0u8; 64];
    salt[..32].copy_from_slice(ephemeral.as_bytes());
    salt[32..].copy_from_slice(recipient.as_bytes());
    let mut okm = [0u8; 32 + NONCE_LEN];
    Hkdf::<Sha256>::new(Some(&salt), shared)
        .expand(PUB_WRAP_INFO, &mut okm)
        .expect("44 bytes is a valid HKDF length");
    let mut kek = [0u8; 32];
    let mut nonce = [0u8; NONCE_LEN];
    kek.copy_from_slice(&okm[..32]);
    nonce.copy_from_slice(&okm[32..]);
    (kek, nonce)
}
