//! Outbound and inbound translation of a purchase order with the reference map.
//!
//! ```bash
//! cargo run -p edi --example translate_po
//! ```

use edi::interchange::{parse_interchange, serialize_interchange, EnvelopeStamp};
use edi::translator::{translate_inbound, translate_outbound, InternalDocument, MappingSpec};

const DOC: &str = r#"{
  "docType": "PO",
  "header": {"poNumber": "PO-1001", "poDate": "20110101"},
  "items": [
    {"sku": "WIDGET-9", "qty": "12", "unitPrice": "3.25"},
    {"sku": "GADGET-2", "qty": "1", "unitPrice": "199.00"}
  ]
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = MappingSpec::reference_po();
    let doc = InternalDocument::from_json(DOC.as_bytes())?;

    let stamp = EnvelopeStamp::new("000000042", "20110101", "0930").with_ack_requested(true);
    let ic = translate_outbound(&doc, &map, "BUYER", "SELLER", &stamp)?;
    let wire = serialize_interchange(&ic)?;
    println!("outbound:\n{}\n", String::from_utf8_lossy(&wire).replace('~', "~\n"));

    let back = translate_inbound(&parse_interchange(&wire)?, &map)?;
    assert_eq!(back, vec![doc]);
    println!("inbound:\n{}", String::from_utf8_lossy(&back[0].to_json_pretty()));

    let missing = InternalDocument::from_json(br#"{"docType":"PO","header":{"poNumber":"PO-1"}}"#)?;
    if let Err(e) = translate_outbound(&missing, &map, "BUYER", "SELLER", &stamp) {
        println!("document without poDate: {e}");
    }
    Ok(())
}
