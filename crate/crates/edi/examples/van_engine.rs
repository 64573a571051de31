//! The VAN engine without any network: partners, screening, mailboxes,
//! automatic acknowledgment, the audit trail and usage accounting.
//!
//! ```bash
//! cargo run -p edi --example van_engine
//! ```

use std::sync::Arc;

use edi::secenv::{wrap, CipherSuiteId, KeyPair, Keystore};
use edi::van::{Clock, DepositHeader, ManualClock, NewPartner, RetrieveFilter, Van, VanConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clock = ManualClock::default();
    let mut van = Van::new(VanConfig::default(), Arc::new(clock.clone()), &KeyPair::generate())?;

    let mut keys = Keystore::new();
    let buyer_key = keys.generate_pair("BUYER")?;
    keys.generate_pair("SELLER")?;
    van.register_partner(NewPartner::new("BUYER", "buyer-pw").allows(["FA"]).public_key(&buyer_key))?;
    van.register_partner(
        NewPartner::new("SELLER", "seller-pw")
            .accepts_from(["BUYER"])
            .allows(["PO"])
            .auto_ack(true),
    )?;

    let buyer = van.authenticate("BUYER", "buyer-pw")?.token;
    let seller = van.authenticate("SELLER", "seller-pw")?.token;
    let envelope = wrap(b"ISA*...~", "BUYER", "SELLER", CipherSuiteId::Pub1, &keys)?.to_bytes();

    let po = DepositHeader::new("BUYER", "SELLER", "000000001", ["PO"]).with_ack_requested(true);
    println!("PO deposit: {:?}", van.deposit(&buyer, po, envelope.clone())?);
    let inv = DepositHeader::new("BUYER", "SELLER", "000000002", ["INV"]);
    println!("INV deposit: {:?}", van.deposit(&buyer, inv, envelope.clone())?);
    let again = DepositHeader::new("BUYER", "SELLER", "000000001", ["PO"]);
    println!("repeat control: {}", van.deposit(&buyer, again, envelope).unwrap_err());

    for m in van.retrieve(&seller, &RetrieveFilter::default())? {
        println!("SELLER retrieved message {} ({} bytes)", m.message.message_id, m.payload.len());
    }
    for m in van.retrieve(&buyer, &RetrieveFilter::default())? {
        println!("BUYER retrieved FA {} for message {:?}", m.message.message_id, m.message.ack_of);
    }

    println!("\naudit trail:");
    for e in van.audit_log() {
        let id = e.message_id.map(|m| m.to_string()).unwrap_or_default();
        println!("  {:>3} {:>3} {:<20} {}", e.seq, id, e.action.as_str(), e.actor);
    }

    let (start, end) = (van.audit_log()[0].at, clock.now());
    let report = edi::van::accounting_from_events("BUYER", start, end, van.audit_log());
    println!(
        "\nBUYER: {} out ({} bytes), {} in ({} bytes)",
        report.messages_out, report.bytes_out, report.messages_in, report.bytes_in
    );
    Ok(())
}
