use ed25519_dalek::{Signature, Signer};

use super::keys::{Keystore, PublicKey};
use super::seal::verify_ed25519;
use super::Result;

/// Ed25519 signature over `data` with the private key `signer_key_id`.
pub fn sign_detached(data: &[u8], signer_key_id: &str, keystore: &Keystore) -> Result<Vec<u8>> {
    let pair = keystore.keypair(signer_key_id)?;
    let sig: Signature = pair.signing.sign(data);
    Ok(sig.to_bytes().to_vec())
}

pub fn verify_detached(data: &[u8], signature: &[u8], public: &PublicKey) -> bool {
    verify_ed25519(public, data, signature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secenv::SecEnvError;

    #[test]
    fn sign_and_verify() {
        let mut ks = Keystore::new();
        let a = ks.generate_pair("A").unwrap();
        let b = ks.generate_pair("B").unwrap();
        let sig = sign_detached(b"order 42", "A", &ks).unwrap();
        assert!(verify_detached(b"order 42", &sig, &a));
        assert!(!verify_detached(b"order 43", &sig, &a));
        assert!(!verify_detached(b"order 42", &sig, &b));
        assert!(!verify_detached(b"order 42", &sig[..63], &a));
        assert!(matches!(
            sign_detached(b"x", "Z", &ks),
            Err(SecEnvError::MissingKey(_))
        ));
    }
}
