//! Build a functional acknowledgment for a received interchange and read it back.
//!
//! ```bash
//! cargo run -p edi --example functional_ack
//! ```

use edi::interchange::{
    build_functional_ack, parse_interchange, read_functional_ack, serialize_interchange, AckStatus, ControlCounter,
    EnvelopeStamp,
};

const RECEIVED: &[u8] = b"ISA*BUYER*SELLER*20110101*1200*000000007*1~GS*PO*0001~\
ST*PO*0001~BEG*PO1*20110101~SE*3*0001~\
ST*PO*0002~BEG*PO2*20110101~SE*3*0002~\
GE*2*0001~IEA*1*000000007~";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let original = parse_interchange(RECEIVED)?;
    let mut counter = ControlCounter::new().starting_after(41);
    let stamp = EnvelopeStamp::new(counter.next()?, "20110102", "0800");

    let statuses = [AckStatus::accepted("0001"), AckStatus::rejected("0002", "DUP")];
    let fa = build_functional_ack(&original, &statuses, &stamp)?;
    let bytes = serialize_interchange(&fa)?;
    println!("{}", String::from_utf8_lossy(&bytes).replace('~', "~\n"));

    let summary = read_functional_ack(&parse_interchange(&bytes)?)?;
    println!("acknowledges interchange {}", summary.original_control);
    for s in &summary.statuses {
        let verdict = if s.accepted { "accepted" } else { "rejected" };
        println!("  transaction {} {verdict} {}", s.txn_control, s.reason);
    }
    Ok(())
}
