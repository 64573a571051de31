use std::collections::{BTreeMap, BTreeSet};

use edi_core::interchange::{parse_interchange, serialize_interchange, validate, EnvelopeStamp};
use edi_core::translator::{translate_inbound, translate_outbound, InternalDocument, MappingSpec};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .,/#-]{0,12}"
}

prop_compose! {
    fn item()(sku in value(), qty in value(), unit_price in value()) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("sku".to_string(), sku),
            ("qty".to_string(), qty),
            ("unitPrice".to_string(), unit_price),
        ])
    }
}

prop_compose! {
    fn po_doc()(
        po_number in value(),
        po_date in value(),
        items in prop::collection::vec(item(), 0..8),
    ) -> InternalDocument {
        InternalDocument {
            doc_type: "PO".into(),
            header: BTreeMap::from([
                ("poNumber".to_string(), po_number),
                ("poDate".to_string(), po_date),
            ]),
            items,
        }
    }
}

fn stamp() -> EnvelopeStamp {
    EnvelopeStamp::new("000000042", "20110101", "0930").with_ack_requested(true)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn outbound_then_inbound_is_identity(doc in po_doc()) {
        let map = MappingSpec::reference_po();
        let ic = translate_outbound(&doc, &map, "BUYER", "SELLER", &stamp()).unwrap();
        let bytes = serialize_interchange(&ic).unwrap();
        let back = translate_inbound(&parse_interchange(&bytes).unwrap(), &map).unwrap();
        prop_assert_eq!(back, vec![doc]);
    }

    #[test]
    fn outbound_output_validates(doc in po_doc()) {
        let map = MappingSpec::reference_po();
        let ic = translate_outbound(&doc, &map, "BUYER", "SELLER", &stamp()).unwrap();
        let report = validate(&ic, &BTreeSet::from(["PO".to_string()]));
        prop_assert!(report.ok, "{:?}", report);
    }

    #[test]
    fn outbound_is_deterministic(doc in po_doc()) {
        let map = MappingSpec::reference_po();
        let a = serialize_interchange(&translate_outbound(&doc, &map, "B", "S", &stamp()).unwrap()).unwrap();
        let b = serialize_interchange(&translate_outbound(&doc.clone(), &map, "B", "S", &stamp()).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn shipped_map_file_matches_reference() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../maps/po.map.json");
    let file = std::fs::read(path).unwrap();
    assert_eq!(edi_core::translator::load_map(&file).unwrap(), MappingSpec::reference_po());
}
