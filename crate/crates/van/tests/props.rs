//! Randomized operation sequences against one VAN.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use edi_core::secenv::{wrap, CipherSuiteId, KeyPair, Keystore};
use edi_van::{
    accounting_from_events, AuditAction, DeliveryAction, DeliveryMode, DepositHeader,
    ManualClock, MessageStatus, Notification, PartnerProfile, RetrieveFilter, Van, VanConfig, VanError,
};
use proptest::prelude::*;

const PARTNERS: [&str; 5] = ["P0", "P1", "P2", "P3", "P4"];
const DOCS: [&str; 2] = ["PO", "INV"];

struct Fixture {
    hash: String,
    envelope: Vec<u8>,
    van_key: Vec<u8>,
    public_key: String,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let mut ks = Keystore::new();
        let a = ks.generate_pair("P0").unwrap();
        ks.generate_pair("P1").unwrap();
        Fixture {
            hash: cheap_hash("pw"),
            envelope: wrap(b"ISA~", "P0", "P1", CipherSuiteId::Pub1, &ks).unwrap().to_bytes(),
            van_key: KeyPair::generate().to_bytes(),
            public_key: hex::encode(a.to_bytes()),
        }
    })
}

/// Low-cost parameters; verification reads them back from the PHC string.
fn cheap_hash(password: &str) -> String {
    use argon2::{Algorithm, Argon2, Params, PasswordHasher, Version};
    let params = Params::new(64, 1, 1, None).unwrap();
    Argon2::new(Algorithm::Argon2id, Version::V0x13, params)
        .hash_password(password.as_bytes())
        .unwrap()
        .to_string()
}

#[derive(Debug, Clone)]
struct Setup {
    authorized: Vec<BTreeSet<usize>>,
    allowed: Vec<BTreeSet<usize>>,
    auto_ack: Vec<bool>,
}

fn setup() -> impl Strategy<Value = Setup> {
    (
        prop::collection::vec(prop::collection::btree_set(0usize..5, 0..5), 5),
        prop::collection::vec(prop::collection::btree_set(0usize..2, 0..3), 5),
        prop::collection::vec(any::<bool>(), 5),
    )
        .prop_map(|(authorized, allowed, auto_ack)| Setup {
            authorized,
            allowed,
            auto_ack,
        })
}

#[derive(Debug, Clone)]
enum Op {
    Deposit {
        from: usize,
        to: usize,
        control: u32,
        doc: usize,
        garbage: bool,
        ack: bool,
    },
    Retrieve { who: usize, doc: Option<usize> },
    Deliver,
    CompleteAll { ok: bool },
    Ack { who: usize, pick: usize },
    Advance { secs: u64 },
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => (0usize..5, 0usize..6, 0u32..12, 0usize..2, prop::bool::weighted(0.1), any::<bool>()).prop_map(
            |(from, to, control, doc, garbage, ack)| Op::Deposit { from, to, control, doc, garbage, ack }
        ),
        3 => (0usize..5, prop::option::of(0usize..2)).prop_map(|(who, doc)| Op::Retrieve { who, doc }),
        2 => Just(Op::Deliver),
        2 => any::<bool>().prop_map(|ok| Op::CompleteAll { ok }),
        2 => (0usize..5, 0usize..64).prop_map(|(who, pick)| Op::Ack { who, pick }),
        1 => (1u64..30).prop_map(|secs| Op::Advance { secs }),
    ]
}

fn build(setup: &Setup, clock: &ManualClock) -> Van {
    let f = fixture();
    let partners = (0..5)
        .map(|i| PartnerProfile {
            partner_id: PARTNERS[i].into(),
            password_hash: f.hash.clone(),
            role: Default::default(),
            authorized_senders: setup.authorized[i].iter().map(|j| PARTNERS[*j].to_string()).collect(),
            allowed_doc_types: setup.allowed[i].iter().map(|d| DOCS[*d].to_string()).collect(),
            delivery_mode: if i == 4 {
                DeliveryMode::Forward {
                    endpoint: "http://p4/in".into(),
                }
            } else {
                DeliveryMode::Retrieve
            },
            notification: (i == 3).then(|| Notification {
                endpoint: "http://p3/hook".into(),
                doc_types: ["PO".to_string()].into(),
            }),
            auto_ack: setup.auto_ack[i],
            public_key: Some(f.public_key.clone()),
        })
        .collect();
    let config = VanConfig {
        session_ttl: Duration::from_secs(86_400 * 365),
        ..VanConfig::default()
    };
    Van::restore(
        config,
        Arc::new(clock.clone()),
        &KeyPair::from_bytes(&f.van_key).unwrap(),
        partners,
        vec![],
        vec![],
        |_| None,
    )
    .unwrap()
}

struct Run {
    van: Van,
    retrieved: Vec<(usize, edi_van::VanMessage)>,
    duplicates: usize,
}

fn run(setup: &Setup, ops: &[Op]) -> Run {
    let clock = ManualClock::default();
    let mut van = build(setup, &clock);
    let tokens: Vec<String> = PARTNERS.iter().map(|p| van.authenticate(p, "pw").unwrap().token).collect();
    let mut retrieved = Vec::new();
    let mut duplicates = 0;
    let mut in_flight: Vec<DeliveryAction> = Vec::new();
    for op in ops {
        match op {
            Op::Deposit { from, to, control, doc, garbage, ack } => {
                let to = PARTNERS.get(*to).copied().unwrap_or("NOBODY");
                let header = DepositHeader::new(PARTNERS[*from], to, &format!("{control:09}"), [DOCS[*doc]])
                    .with_ack_requested(*ack);
                let payload = if *garbage { b"junk".to_vec() } else { fixture().envelope.clone() };
                match van.deposit(&tokens[*from], header, payload) {
                    Ok(_) => {}
                    Err(VanError::DuplicateControl { .. }) => duplicates += 1,
                    Err(e) => panic!("unexpected deposit error {e}"),
                }
            }
            Op::Retrieve { who, doc } => {
                let filter = RetrieveFilter {
                    doc_type: doc.map(|d| DOCS[d].to_string()),
                    ..RetrieveFilter::default()
                };
                for m in van.retrieve(&tokens[*who], &filter).unwrap() {
                    retrieved.push((*who, m.message));
                }
            }
            Op::Deliver => in_flight.extend(van.deliver_pending()),
            Op::CompleteAll { ok } => {
                for action in in_flight.drain(..) {
                    let outcome = if *ok { Ok(()) } else { Err("down".to_string()) };
                    match action {
                        DeliveryAction::Push { message_id, .. } => van.complete_push(message_id, outcome).unwrap(),
                        DeliveryAction::Notify { message_id, .. } => van.complete_notify(message_id, outcome).unwrap(),
                        DeliveryAction::Relay { .. } => unreachable!("no routes configured"),
                    }
                }
            }
            Op::Ack { who, pick } => {
                let mine: Vec<u64> = van
                    .messages()
                    .filter(|m| m.recipient_id == PARTNERS[*who])
                    .map(|m| m.message_id)
                    .collect();
                if let Some(id) = mine.get(pick % mine.len().max(1)) {
                    match van.acknowledge(&tokens[*who], *id, None) {
                        Ok(_) | Err(VanError::WrongState { .. }) | Err(VanError::AlreadyAcknowledged(_)) => {}
                        Err(e) => panic!("unexpected ack error {e}"),
                    }
                }
            }
            Op::Advance { secs } => clock.advance(Duration::from_secs(*secs)),
        }
    }
    Run {
        van,
        retrieved,
        duplicates,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn transitions_stay_on_the_graph(setup in setup(), ops in prop::collection::vec(op(), 1..200)) {
        let r = run(&setup, &ops);
        let mut chains: BTreeMap<u64, Vec<MessageStatus>> = BTreeMap::new();
        for ev in r.van.audit_log() {
            if let (Some(id), Some(s)) = (ev.message_id, ev.action.transition()) {
                chains.entry(id).or_default().push(s);
            }
        }
        for (id, chain) in &chains {
            prop_assert_eq!(chain[0], MessageStatus::Received);
            for w in chain.windows(2) {
                prop_assert!(w[0].can_move_to(w[1]), "message {}: {:?}", id, chain);
            }
            prop_assert_eq!(*chain.last().unwrap(), r.van.message(*id).unwrap().status);
        }
        prop_assert_eq!(chains.len(), r.van.messages().count());
    }

    #[test]
    fn unauthorized_senders_are_never_retrieved(setup in setup(), ops in prop::collection::vec(op(), 1..200)) {
        let r = run(&setup, &ops);
        for (who, m) in &r.retrieved {
            let authorized = setup.authorized[*who].iter().any(|j| PARTNERS[*j] == m.sender_id);
            prop_assert!(authorized || m.ack_of.is_some(), "{} got {:?}", PARTNERS[*who], m);
            prop_assert_eq!(&m.recipient_id, PARTNERS[*who]);
        }
    }

    #[test]
    fn each_message_is_delivered_at_most_once(setup in setup(), ops in prop::collection::vec(op(), 1..200)) {
        let r = run(&setup, &ops);
        let mut delivered: HashMap<u64, usize> = HashMap::new();
        for ev in r.van.audit_log().iter().filter(|e| e.action == AuditAction::Delivered) {
            *delivered.entry(ev.message_id.unwrap()).or_default() += 1;
        }
        prop_assert!(delivered.values().all(|n| *n == 1));
        let mut seen = BTreeSet::new();
        for (_, m) in &r.retrieved {
            prop_assert!(seen.insert(m.message_id), "message {} retrieved twice", m.message_id);
        }
    }

    #[test]
    fn duplicates_are_rejected_once_each(setup in setup(), ops in prop::collection::vec(op(), 1..200)) {
        let r = run(&setup, &ops);
        let events = r.van.audit_log().iter().filter(|e| e.action == AuditAction::DuplicateRejected).count();
        prop_assert_eq!(events, r.duplicates);
        let mut live = BTreeSet::new();
        for m in r.van.messages().filter(|m| m.status != MessageStatus::Rejected) {
            prop_assert!(live.insert((m.sender_id.clone(), m.interchange_control.clone())));
        }
    }

    #[test]
    fn accounting_conserves_queued_deposits(setup in setup(), ops in prop::collection::vec(op(), 1..200)) {
        let r = run(&setup, &ops);
        let log = r.van.audit_log();
        let (start, end) = (log.first().unwrap().at, log.last().unwrap().at);
        let total_in: u64 = PARTNERS
            .iter()
            .map(|p| accounting_from_events(p, start, end, log).messages_in)
            .sum();
        let queued = log.iter().filter(|e| e.action == AuditAction::Queued).count() as u64;
        prop_assert_eq!(total_in, queued);
    }

    #[test]
    fn replay_reproduces_state(setup in setup(), ops in prop::collection::vec(op(), 1..120)) {
        let r = run(&setup, &ops);
        let payloads: HashMap<u64, Vec<u8>> = r
            .van
            .messages()
            .filter_map(|m| r.van.payload(m.message_id).map(|p| (m.message_id, p.to_vec())))
            .collect();
        let restored = Van::restore(
            VanConfig::default(),
            Arc::new(ManualClock::default()),
            &KeyPair::from_bytes(&fixture().van_key).unwrap(),
            r.van.persistent_partners(),
            vec![],
            r.van.audit_log().to_vec(),
            |id| payloads.get(&id).cloned(),
        )
        .unwrap();
        let a: Vec<_> = r.van.messages().cloned().collect();
        let b: Vec<_> = restored.messages().cloned().collect();
        prop_assert_eq!(a, b);
    }
}
