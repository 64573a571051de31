use std::collections::BTreeMap;

use edi_core::secenv::{
    check_authorization, compute_digest, sign_detached, unwrap, unwrap_bytes, wrap,
    AuthorizationPolicy, CipherSuiteId, Countersignature, Keystore, SecEnvError, SecureEnvelope,
};
use proptest::prelude::*;

fn keys() -> Keystore {
    let mut ks = Keystore::new();
    ks.generate_pair("BUYER").unwrap();
    ks.generate_pair("SELLER").unwrap();
    ks.generate_psk("BUYER", "SELLER").unwrap();
    ks
}

fn suites() -> impl Strategy<Value = CipherSuiteId> {
    prop_oneof![Just(CipherSuiteId::Psk1), Just(CipherSuiteId::Pub1)]
}

#[test]
fn digest_matches_hashlib_vectors() {
    let fixture = include_str!("fixtures/sha256_vectors.txt");
    let mut checked = 0;
    for line in fixture.lines().filter(|l| !l.starts_with('#')) {
        let (input, expected) = line.split_once(' ').unwrap();
        let input = if input == "-" { Vec::new() } else { hex::decode(input).unwrap() };
        assert_eq!(hex::encode(compute_digest(&input)), expected, "input {}", hex::encode(&input));
        checked += 1;
    }
    assert_eq!(checked, 102);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wrap_unwrap_round_trip(
        suite in suites(),
        message in prop::collection::vec(any::<u8>(), 0..4096),
    ) {
        let ks = keys();
        let env = wrap(&message, "BUYER", "SELLER", suite, &ks).unwrap();
        let (plain, report) = unwrap_bytes(&env.to_bytes(), &ks).unwrap();
        prop_assert!(report.all_ok());
        prop_assert_eq!(plain, message);
    }

    #[test]
    fn header_fields_are_bound(suite in suites(), which in 0usize..3) {
        let mut ks = keys();
        ks.generate_pair("THIRD").unwrap();
        let mut env = wrap(b"ISA*BUYER*SELLER~", "BUYER", "SELLER", suite, &ks).unwrap();
        match which {
            0 => env.suite = match suite {
                CipherSuiteId::Psk1 => CipherSuiteId::Pub1,
                CipherSuiteId::Pub1 => CipherSuiteId::Psk1,
            },
            1 => env.sender_key_id = "THIRD".into(),
            _ => env.plaintext_digest = compute_digest(b"something else"),
        }
        prop_assert!(unwrap(&env, &ks).is_err());
    }

    #[test]
    fn authorization_is_monotone(
        amount in 0u64..20_000_000,
        smaller in 0u64..20_000_000,
        with_countersig in any::<bool>(),
    ) {
        let (policy, ks) = policy();
        let cs: Vec<_> = if with_countersig {
            vec![Countersignature {
                signer_key_id: "supervisor".into(),
                signature: sign_detached(b"po", "supervisor", &ks).unwrap(),
            }]
        } else {
            vec![]
        };
        let big = check_authorization(amount, "officer", &cs, &policy, b"po", &ks).unwrap();
        let small = check_authorization(smaller.min(amount), "officer", &cs, &policy, b"po", &ks).unwrap();
        prop_assert!(!big.is_authorized() || small.is_authorized());
    }
}

fn policy() -> (AuthorizationPolicy, Keystore) {
    let policy = AuthorizationPolicy::new(
        BTreeMap::from([
            ("officer".to_string(), 2_500_000),
            ("supervisor".to_string(), 10_000_000),
        ]),
        BTreeMap::from([("officer".to_string(), "supervisor".to_string())]),
    )
    .unwrap();
    let mut ks = Keystore::new();
    ks.generate_pair("officer").unwrap();
    ks.generate_pair("supervisor").unwrap();
    (policy, ks)
}

#[test]
fn large_payloads_round_trip() {
    let ks = keys();
    let message: Vec<u8> = (0..1 << 20).map(|i: u32| (i.wrapping_mul(2_654_435_761) >> 13) as u8).collect();
    for suite in [CipherSuiteId::Psk1, CipherSuiteId::Pub1] {
        let env = wrap(&message, "BUYER", "SELLER", suite, &ks).unwrap();
        let (plain, _) = unwrap_bytes(&env.to_bytes(), &ks).unwrap();
        assert_eq!(plain, message);
    }
}

#[test]
fn every_bit_flip_is_detected() {
    let ks = keys();
    for suite in [CipherSuiteId::Psk1, CipherSuiteId::Pub1] {
        let env = wrap(b"ISA*BUYER*SELLER*20110101~", "BUYER", "SELLER", suite, &ks).unwrap();
        let bytes = env.to_bytes();
        for bit in 0..bytes.len() * 8 {
            let mut tampered = bytes.clone();
            tampered[bit / 8] ^= 1 << (bit % 8);
            let result = unwrap_bytes(&tampered, &ks);
            assert!(result.is_err(), "{suite}: flip of bit {bit} went unnoticed");
            assert!(!result.unwrap_err().report.all_ok());
        }
    }
}

#[test]
fn recipient_only_sees_plaintext_after_all_checks() {
    let ks = keys();
    let env = wrap(b"secret", "BUYER", "SELLER", CipherSuiteId::Pub1, &ks).unwrap();
    let mut bad = env.clone();
    bad.nonce[0] ^= 1;
    let rejected = unwrap(&bad, &ks).unwrap_err();
    assert_eq!(rejected.error, SecEnvError::DecryptFailure);
    assert!(rejected.report.signature_ok);
    assert!(SecureEnvelope::from_bytes(&env.to_bytes()).is_ok());
}
