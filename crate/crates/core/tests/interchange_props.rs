use edi_core::interchange::{
    parse_interchange, serialize_interchange, Delimiters, FunctionalGroup, Interchange,
    InterchangeError, Segment, TransactionSet, ENVELOPE_TAGS,
};
use proptest::prelude::*;

fn element() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .,/#-]{0,8}"
}

fn segment() -> impl Strategy<Value = Segment> {
    (
        "[A-Z][A-Z0-9]{1,2}".prop_filter("envelope tag", |t| !ENVELOPE_TAGS.contains(&t.as_str())),
        prop::collection::vec(element(), 0..6),
    )
        .prop_map(|(tag, elements)| Segment { tag, elements })
}

fn group() -> impl Strategy<Value = FunctionalGroup> {
    ("[A-Z][A-Z0-9]{1,2}", "[0-9]{4}").prop_flat_map(|(doc_type, control)| {
        let dt = doc_type.clone();
        prop::collection::vec(
            ("[0-9]{4}", prop::collection::vec(segment(), 0..6)).prop_map(move |(c, body)| {
                TransactionSet {
                    txn_type: dt.clone(),
                    control: c,
                    body,
                }
            }),
            0..4,
        )
        .prop_map(move |transactions| FunctionalGroup {
            doc_type: doc_type.clone(),
            control: control.clone(),
            transactions,
        })
    })
}

prop_compose! {
    fn interchange()(
        sender_id in "[A-Z0-9][A-Za-z0-9._-]{0,10}",
        receiver_id in "[A-Z0-9][A-Za-z0-9._-]{0,10}",
        date in "[0-9]{8}",
        time in "[0-9]{4}",
        control_number in "[0-9]{9}",
        ack_requested in any::<bool>(),
        groups in prop::collection::vec(group(), 0..4),
    ) -> Interchange {
        Interchange {
            sender_id, receiver_id, date, time, control_number, ack_requested, groups,
            delimiters: Delimiters::default(),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parse_inverts_serialize(doc in interchange()) {
        let bytes = serialize_interchange(&doc).unwrap();
        let parsed = parse_interchange(&bytes).unwrap();
        prop_assert_eq!(&parsed, &doc);
        prop_assert_eq!(serialize_interchange(&parsed).unwrap(), bytes);
    }

    #[test]
    fn wrong_se_count_is_rejected(doc in interchange(), delta in 1usize..5) {
        prop_assume!(doc.transactions().next().is_some());
        let (_, txn) = doc.transactions().next().unwrap();
        let text = String::from_utf8(serialize_interchange(&doc).unwrap()).unwrap();
        let good = format!("~SE*{}*{}~", txn.trailer_count(), txn.control);
        let bad = format!("~SE*{}*{}~", txn.trailer_count() + delta, txn.control);
        let at = text.find(&good).unwrap();
        let tampered = format!("{}{}{}", &text[..at], bad, &text[at + good.len()..]);
        let is_mismatch = matches!(
            parse_interchange(tampered.as_bytes()),
            Err(InterchangeError::EnvelopeMismatch { .. })
        );
        prop_assert!(is_mismatch);
    }

    #[test]
    fn parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = parse_interchange(&bytes);
    }
}
