//! Parse an interchange, walk its envelope tree, validate it and write it back.
//!
//! ```bash
//! cargo run -p edi --example parse_interchange
//! ```

use std::collections::BTreeSet;

use edi::interchange::{parse_interchange, serialize_interchange, validate};

const PO: &[u8] = b"ISA*BUYER*SELLER*20110101*1200*000000001*1~\
GS*PO*0001~\
ST*PO*0001~BEG*PO1*20110101~IT1*S1*2*10.00~CTT*1~SE*5*0001~\
GE*1*0001~\
IEA*1*000000001~";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ic = parse_interchange(PO)?;
    println!(
        "interchange {} from {} to {} at {} {} (ack requested: {})",
        ic.control_number, ic.sender_id, ic.receiver_id, ic.date, ic.time, ic.ack_requested
    );
    for group in &ic.groups {
        println!("  group {} control {}", group.doc_type, group.control);
        for txn in &group.transactions {
            println!("    transaction {} control {}", txn.txn_type, txn.control);
            for seg in &txn.body {
                println!("      {} {:?}", seg.tag, seg.elements);
            }
        }
    }

    let report = validate(&ic, &BTreeSet::from(["PO".to_string(), "INV".to_string()]));
    println!("valid: {} ({} findings)", report.ok, report.findings.len());

    let bytes = serialize_interchange(&ic)?;
    assert_eq!(bytes, PO);
    println!("re-serialized {} bytes, identical to the input", bytes.len());

    let broken = String::from_utf8_lossy(PO).replace("SE*5*0001", "SE*6*0001");
    match parse_interchange(broken.as_bytes()) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("wrong SE count: {e}"),
    }
    Ok(())
}
