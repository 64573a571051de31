//! The service over real HTTP on loopback.

use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::body::Bytes;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use edi_core::interchange::{parse_interchange, read_functional_ack};
use edi_core::secenv::{unwrap_bytes, wrap, CipherSuiteId, Keystore, PublicKey};
use edi_service::wire::{MailboxQuery, RouteRequest};
use edi_service::{
    load, start, AdminConfig, ClientError, DepositOutcome, PeerConfig, Secret, ServiceConfig, StoreError, VanClient,
};
use edi_service::ServiceError;
use edi_van::{AuditAction, AuditQuery, DepositHeader, MessageStatus, NewPartner, Role};
use tempfile::TempDir;

const PO: &[u8] = b"ISA*BUYER*SELLER*20110101*1200*000000042*1~GS*PO*0001~ST*PO*0001~BEG*PO1*20110101~SE*3*0001~GE*1*0001~IEA*1*000000042~";

fn config(dir: &TempDir, van_id: &str) -> ServiceConfig {
    let mut c = ServiceConfig::new(dir.path());
    c.van_id = van_id.into();
    c.listen = "127.0.0.1:0".parse().unwrap();
    c.delivery_interval_ms = 50;
    c.admin = Some(AdminConfig {
        id: "admin".into(),
        secret: Secret::inline("adminpw"),
    });
    c
}

struct Net {
    keys: Keystore,
    buyer: PublicKey,
    seller: PublicKey,
}

impl Net {
    fn new() -> Self {
        let mut keys = Keystore::new();
        let buyer = keys.generate_pair("BUYER").unwrap();
        let seller = keys.generate_pair("SELLER").unwrap();
        Self { keys, buyer, seller }
    }

    fn envelope(&self) -> Vec<u8> {
        wrap(PO, "BUYER", "SELLER", CipherSuiteId::Pub1, &self.keys).unwrap().to_bytes()
    }

    async fn enroll(&self, url: &str) {
        let mut admin = VanClient::new(url);
        admin.login("admin", "adminpw").await.unwrap();
        admin
            .add_partner(&NewPartner::new("BUYER", "buyerpw").accepts_from(["SELLER"]).allows(["FA", "INV"]).public_key(&self.buyer))
            .await
            .unwrap();
        admin
            .add_partner(&NewPartner::new("SELLER", "sellerpw").accepts_from(["BUYER"]).allows(["PO"]).public_key(&self.seller))
            .await
            .unwrap();
    }
}

async fn client(url: &str, id: &str) -> VanClient {
    let mut c = VanClient::new(url);
    c.login(id, &format!("{}pw", id.to_lowercase())).await.unwrap();
    c
}

fn po(control: &str) -> DepositHeader {
    DepositHeader::new("BUYER", "SELLER", control, ["PO"])
}

#[tokio::test]
async fn deposit_retrieve_and_van_built_ack() {
    let dir = tempfile::tempdir().unwrap();
    let svc = start(config(&dir, "VAN")).await.unwrap();
    let net = Net::new();
    net.enroll(&svc.url()).await;
    let buyer = client(&svc.url(), "BUYER").await;
    let seller = client(&svc.url(), "SELLER").await;

    let env = net.envelope();
    let out = buyer.deposit(&po("000000042").with_ack_requested(true), env.clone()).await.unwrap();
    let DepositOutcome::Queued { message_id } = out else { panic!("{out:?}") };

    let items = seller.mailbox(&MailboxQuery::default()).await.unwrap();
    assert_eq!(items.len(), 1);
    assert_eq!(items[0].message_id, message_id);
    assert_eq!(items[0].payload, env);
    assert!(items[0].ack_requested);
    assert!(seller.mailbox(&MailboxQuery::default()).await.unwrap().is_empty());

    let fa_id = seller.ack(message_id, None).await.unwrap().expect("FA deposited");
    let fa = buyer.mailbox(&MailboxQuery::default()).await.unwrap();
    assert_eq!(fa.len(), 1);
    assert_eq!(fa[0].message_id, fa_id);
    assert_eq!(fa[0].ack_of, Some(message_id));

    let info = buyer.info().await.unwrap();
    let mut ks = net.keys.clone();
    ks.add_public(&info.van_id, &PublicKey::from_bytes(&hex::decode(&info.public_key).unwrap()).unwrap())
        .unwrap();
    let (plain, report) = unwrap_bytes(&fa[0].payload, &ks).unwrap();
    assert_eq!(report.signer.as_deref(), Some("VAN"));
    let summary = read_functional_ack(&parse_interchange(&plain).unwrap()).unwrap();
    assert_eq!(summary.original_control, "000000042");

    let trail = buyer.audit(&AuditQuery::message(message_id)).await.unwrap();
    let actions: Vec<_> = trail.iter().map(|e| e.action).collect();
    assert_eq!(
        actions,
        [AuditAction::Received, AuditAction::Queued, AuditAction::Delivered, AuditAction::Acknowledged]
    );
    svc.shutdown().await;
}

#[tokio::test]
async fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let svc = start(config(&dir, "VAN")).await.unwrap();
    let net = Net::new();
    net.enroll(&svc.url()).await;
    let buyer = client(&svc.url(), "BUYER").await;
    let seller = client(&svc.url(), "SELLER").await;

    let mut anon = VanClient::new(&svc.url());
    for (id, pw) in [("BUYER", "wrong"), ("NOBODY", "wrong")] {
        let e = anon.login(id, pw).await.unwrap_err();
        assert_eq!((e.status(), e.code()), (Some(401), Some("AUTH_FAILED")));
    }
    anon.set_token(Some("00".repeat(32)));
    let e = anon.deposit(&po("000000001"), net.envelope()).await.unwrap_err();
    assert_eq!(e.code(), Some("SESSION_INVALID"));

    let first = buyer.deposit(&po("000000001"), net.envelope()).await.unwrap();
    match buyer.deposit(&po("000000001"), net.envelope()).await.unwrap_err() {
        ClientError::Api {
            status: 409,
            code,
            original_message_id,
            ..
        } => {
            assert_eq!(code, "DUPLICATE_CONTROL");
            assert_eq!(original_message_id, Some(first.message_id()));
        }
        e => panic!("{e}"),
    }

    let out = buyer.deposit(&po("000000002"), b"not an envelope".to_vec()).await.unwrap();
    assert!(matches!(out, DepositOutcome::Rejected { ref reason, .. } if reason == "MALFORMED_ENVELOPE"));
    let inv = DepositHeader::new("BUYER", "SELLER", "000000003", ["INV"]);
    let out = buyer.deposit(&inv, net.envelope()).await.unwrap();
    assert!(matches!(out, DepositOutcome::Rejected { ref reason, .. } if reason == "DOC_TYPE_NOT_ALLOWED"));

    let forged = DepositHeader::new("SELLER", "BUYER", "000000004", ["INV"]);
    assert_eq!(buyer.deposit(&forged, net.envelope()).await.unwrap_err().code(), Some("SENDER_MISMATCH"));
    let bad = DepositHeader::new("BUYER", "SELLER", "42", ["PO"]);
    assert_eq!(buyer.deposit(&bad, net.envelope()).await.unwrap_err().status(), Some(400));

    assert_eq!(seller.ack(9999, None).await.unwrap_err().status(), Some(404));
    assert_eq!(seller.ack(first.message_id(), None).await.unwrap_err().code(), Some("WRONG_STATE"));
    assert_eq!(buyer.audit(&AuditQuery::partner("SELLER")).await.unwrap_err().status(), Some(403));
    let e = buyer.add_partner(&NewPartner::new("EVE", "evepw")).await.unwrap_err();
    assert_eq!(e.status(), Some(403));
    svc.shutdown().await;
}

#[tokio::test]
async fn state_survives_restart_and_directory_is_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let net = Net::new();
    let env = net.envelope();
    let id = {
        let svc = start(config(&dir, "VAN")).await.unwrap();
        net.enroll(&svc.url()).await;
        let buyer = client(&svc.url(), "BUYER").await;
        let id = buyer.deposit(&po("000000007"), env.clone()).await.unwrap().message_id();

        let second = start(config(&dir, "VAN")).await;
        assert!(matches!(second, Err(ServiceError::Store(StoreError::DataDirLocked(_)))));
        svc.shutdown().await;
        id
    };
    let before = load(&config(&dir, "VAN")).unwrap();
    let again = load(&config(&dir, "VAN")).unwrap();
    let a: Vec<_> = before.messages().cloned().collect();
    assert_eq!(a, again.messages().cloned().collect::<Vec<_>>());
    drop((before, again));

    let svc = start(config(&dir, "VAN")).await.unwrap();
    let seller = client(&svc.url(), "SELLER").await;
    let items = seller.mailbox(&MailboxQuery::default()).await.unwrap();
    assert_eq!(items.len(), 1);
    assert_eq!(items[0].message_id, id);
    assert_eq!(items[0].payload, env);
    let buyer = client(&svc.url(), "BUYER").await;
    assert_eq!(buyer.deposit(&po("000000007"), net.envelope()).await.unwrap_err().code(), Some("DUPLICATE_CONTROL"));
    svc.shutdown().await;
}

type Inbox = Arc<Mutex<Vec<(HeaderMap, Bytes)>>>;

/// An HTTP receiver that fails the first `failures` requests.
async fn receiver(failures: usize) -> (String, Inbox) {
    let inbox: Inbox = Arc::default();
    let seen = Arc::new(Mutex::new(0usize));
    let app = axum::Router::new().route(
        "/in",
        post({
            let inbox = inbox.clone();
            move |headers: HeaderMap, body: Bytes| async move {
                let mut n = seen.lock().unwrap();
                *n += 1;
                if *n <= failures {
                    return StatusCode::SERVICE_UNAVAILABLE;
                }
                inbox.lock().unwrap().push((headers, body));
                StatusCode::OK
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}/in", listener.local_addr().unwrap());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (url, inbox)
}

async fn eventually(mut check: impl FnMut() -> bool) {
    for _ in 0..200 {
        if check() {
            return;
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }
    panic!("condition not reached in time");
}

#[tokio::test]
async fn forward_mode_push_and_notification_webhook() {
    let dir = tempfile::tempdir().unwrap();
    let svc = start(config(&dir, "VAN")).await.unwrap();
    let net = Net::new();
    let (push_url, pushed) = receiver(0).await;
    let (hook_url, hooked) = receiver(0).await;
    let mut admin = VanClient::new(&svc.url());
    admin.login("admin", "adminpw").await.unwrap();
    admin.add_partner(&NewPartner::new("BUYER", "buyerpw")).await.unwrap();
    admin
        .add_partner(&NewPartner::new("SELLER", "sellerpw").accepts_from(["BUYER"]).allows(["PO"]).forward_to(&push_url))
        .await
        .unwrap();
    admin
        .add_partner(&NewPartner::new("WH", "whpw").accepts_from(["BUYER"]).allows(["PO"]).notify(&hook_url, &["PO"]))
        .await
        .unwrap();
    let buyer = client(&svc.url(), "BUYER").await;
    let env = net.envelope();
    let pushed_id = buyer.deposit(&po("000000011"), env.clone()).await.unwrap().message_id();
    let wh = DepositHeader::new("BUYER", "WH", "000000012", ["PO"]);
    let noted_id = buyer.deposit(&wh, env.clone()).await.unwrap().message_id();

    eventually(|| pushed.lock().unwrap().len() == 1 && hooked.lock().unwrap().len() == 1).await;
    let (headers, body) = pushed.lock().unwrap()[0].clone();
    assert_eq!(body, env);
    assert_eq!(headers["x-edi-control"], "000000011");
    let notice: serde_json::Value = serde_json::from_slice(&hooked.lock().unwrap()[0].1).unwrap();
    assert_eq!(notice["messageId"], noted_id);
    assert_eq!(notice["sender"], "BUYER");

    let mut root = VanClient::new(&svc.url());
    root.login("admin", "adminpw").await.unwrap();
    let mut delivered = None;
    for _ in 0..100 {
        let trail = root.audit(&AuditQuery::message(pushed_id)).await.unwrap();
        delivered = trail.into_iter().find(|e| e.action == AuditAction::Delivered);
        if delivered.is_some() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }
    assert_eq!(delivered.unwrap().detail.endpoint.as_deref(), Some(push_url.as_str()));
    svc.shutdown().await;
}

#[tokio::test]
async fn failed_push_waits_for_backoff() {
    let dir = tempfile::tempdir().unwrap();
    let svc = start(config(&dir, "VAN")).await.unwrap();
    let (push_url, pushed) = receiver(1).await;
    let mut admin = VanClient::new(&svc.url());
    admin.login("admin", "adminpw").await.unwrap();
    admin.add_partner(&NewPartner::new("BUYER", "buyerpw")).await.unwrap();
    admin
        .add_partner(&NewPartner::new("SELLER", "sellerpw").accepts_from(["BUYER"]).allows(["PO"]).forward_to(&push_url))
        .await
        .unwrap();
    let buyer = client(&svc.url(), "BUYER").await;
    let id = buyer.deposit(&po("000000021"), Net::new().envelope()).await.unwrap().message_id();
    tokio::time::sleep(Duration::from_millis(500)).await;
    let trail = admin.audit(&AuditQuery::message(id)).await.unwrap();
    assert_eq!(trail.iter().filter(|e| e.action == AuditAction::PushFailed).count(), 1);
    assert!(pushed.lock().unwrap().is_empty(), "retry waits for the backoff");
    svc.shutdown().await;
}

#[tokio::test]
async fn relay_between_two_vans() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let v2 = start(config(&d2, "VAN2")).await.unwrap();
    let mut c1 = config(&d1, "VAN1");
    c1.routes.push(edi_service::RouteConfig {
        pattern: "SELLER".into(),
        endpoint: v2.url(),
        max_hops: None,
    });
    c1.peers.push(PeerConfig {
        endpoint: v2.url(),
        partner_id: "VAN1".into(),
        secret: Secret::inline("peerpw"),
    });
    let v1 = start(c1).await.unwrap();
    let net = Net::new();

    let mut a1 = VanClient::new(&v1.url());
    a1.login("admin", "adminpw").await.unwrap();
    a1.add_partner(&NewPartner::new("BUYER", "buyerpw")).await.unwrap();
    let mut a2 = VanClient::new(&v2.url());
    a2.login("admin", "adminpw").await.unwrap();
    a2.add_partner(&NewPartner::new("VAN1", "peerpw").role(Role::Peer)).await.unwrap();
    a2.add_partner(&NewPartner::new("SELLER", "sellerpw").accepts_from(["BUYER"]).allows(["PO"]))
        .await
        .unwrap();
    a2.add_route(&RouteRequest {
        pattern: "ZZ*".into(),
        endpoint: "http://127.0.0.1:9".into(),
        max_hops: Some(2),
    })
    .await
    .unwrap();

    let buyer = client(&v1.url(), "BUYER").await;
    let env = net.envelope();
    let id = buyer.deposit(&po("000000031"), env.clone()).await.unwrap().message_id();
    let seller = client(&v2.url(), "SELLER").await;
    let mut got = Vec::new();
    for _ in 0..100 {
        got = seller.mailbox(&MailboxQuery::default()).await.unwrap();
        if !got.is_empty() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(25)).await;
    }
    assert_eq!(got.len(), 1);
    assert_eq!(got[0].sender, "BUYER");
    assert_eq!(got[0].payload, env);

    let trail = a1.audit(&AuditQuery::message(id)).await.unwrap();
    let last = trail.iter().filter_map(|e| e.action.transition()).last();
    assert_eq!(last, Some(MessageStatus::ForwardedRemote));
    v1.shutdown().await;
    v2.shutdown().await;
}
