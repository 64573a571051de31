//! Sign-then-encrypt an interchange with both cipher suites, open it, and
//! watch a single flipped bit get caught.
//!
//! ```bash
//! cargo run -p edi --example seal_envelope
//! ```

use edi::secenv::{compute_digest, unwrap_bytes, wrap, CipherSuiteId, Keystore};

const PO: &[u8] = b"ISA*BUYER*SELLER*20110101*1200*000000001*0~GS*PO*0001~ST*PO*0001~BEG*PO1*20110101~SE*3*0001~GE*1*0001~IEA*1*000000001~";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut keys = Keystore::new();
    keys.generate_pair("BUYER")?;
    keys.generate_pair("SELLER")?;
    let psk = keys.generate_psk("BUYER", "SELLER")?;
    println!("keys: BUYER, SELLER, {psk}");
    println!("digest of the interchange: {}", hex::encode(compute_digest(PO)));

    for suite in [CipherSuiteId::Pub1, CipherSuiteId::Psk1] {
        let sealed = wrap(PO, "BUYER", "SELLER", suite, &keys)?.to_bytes();
        let (plain, report) = unwrap_bytes(&sealed, &keys).map_err(|r| r.error)?;
        assert_eq!(plain, PO);
        println!(
            "{suite}: {} bytes sealed; decrypted {}, digest {}, signature {}, signer {}",
            sealed.len(),
            report.decrypted_ok,
            report.digest_ok,
            report.signature_ok,
            report.signer.unwrap_or_default()
        );

        let mut tampered = sealed.clone();
        let middle = tampered.len() / 2;
        tampered[middle] ^= 0x01;
        match unwrap_bytes(&tampered, &keys) {
            Ok(_) => println!("{suite}: tampering went unnoticed"),
            Err(rejected) => println!("{suite}: one flipped bit -> {}", rejected.error),
        }
    }
    Ok(())
}
