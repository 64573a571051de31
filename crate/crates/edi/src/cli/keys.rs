use std::path::Path;

use edi_core::secenv::{unwrap_bytes, Keystore, VerificationReport};

use super::error::{CliError, CliResult};

/// Generate `<id>.pub` and `<id>.priv` in `dir`. Returns the key id.
pub fn keygen_pair(dir: &Path, id: &str) -> CliResult<String> {
    let mut ks = Keystore::open(dir).map_err(CliError::local)?;
    ks.generate_pair(id).map_err(CliError::local)?;
    ks.save(dir).map_err(CliError::local)?;
    Ok(id.to_owned())
}

/// Generate the pre-shared key for `me` and `peer`. Returns its key id.
pub fn keygen_psk(dir: &Path, me: &str, peer: &str) -> CliResult<String> {
    let mut ks = Keystore::open(dir).map_err(CliError::local)?;
    let id = ks.generate_psk(me, peer).map_err(CliError::local)?;
    ks.save(dir).map_err(CliError::local)?;
    Ok(id)
}

/// Verify and decrypt a serialized envelope on its own.
pub fn unwrap_file(keystore: &Path, file: &Path) -> CliResult<(Vec<u8>, VerificationReport)> {
    let ks = Keystore::open(keystore).map_err(CliError::local)?;
    let bytes = std::fs::read(file).map_err(|e| CliError::Local(format!("{}: {e}", file.display())))?;
    unwrap_bytes(&bytes, &ks).map_err(|r| {
        CliError::Verification(format!(
            "{} (decrypted {}, digest {}, signature {})",
            r.error,
            ok(r.report.decrypted_ok),
            ok(r.report.digest_ok),
            ok(r.report.signature_ok)
        ))
    })
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILED"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keygen_pair_writes_both_halves() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(keygen_pair(dir.path(), "BUYER").unwrap(), "BUYER");
        assert!(dir.path().join("BUYER.pub").exists());
        assert!(dir.path().join("BUYER.priv").exists());
        assert!(keygen_pair(dir.path(), "BUYER").is_err(), "existing keys are not overwritten");
    }

    #[test]
    fn keygen_psk_names_both_parties() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(keygen_psk(dir.path(), "SELLER", "BUYER").unwrap(), "BUYER+SELLER");
        assert!(dir.path().join("BUYER+SELLER.psk").exists());
    }
}
