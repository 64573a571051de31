//! Run a VAN inside this process and trade through it over HTTP.
//!
//! ```bash
//! cargo run -p edi --example embedded_van
//! ```

use edi::secenv::{unwrap_bytes, wrap, CipherSuiteId, Keystore};
use edi::service::wire::MailboxQuery;
use edi::service::{AdminConfig, Secret, ServiceConfig, VanClient};
use edi::van::{AuditQuery, DepositHeader, NewPartner};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut config = ServiceConfig::new(dir.path());
    config.listen = "127.0.0.1:0".parse()?;
    config.admin = Some(AdminConfig {
        id: "admin".into(),
        secret: Secret::inline("admin-pw"),
    });
    let van = edi::service::start(config).await?;
    println!("VAN listening on {}", van.url());

    let mut keys = Keystore::new();
    let buyer_key = keys.generate_pair("BUYER")?;
    let seller_key = keys.generate_pair("SELLER")?;

    let mut admin = VanClient::new(&van.url());
    admin.login("admin", "admin-pw").await?;
    admin.add_partner(&NewPartner::new("BUYER", "buyer-pw").public_key(&buyer_key)).await?;
    admin
        .add_partner(
            &NewPartner::new("SELLER", "seller-pw")
                .accepts_from(["BUYER"])
                .allows(["PO"])
                .public_key(&seller_key),
        )
        .await?;

    let mut buyer = VanClient::new(&van.url());
    buyer.login("BUYER", "buyer-pw").await?;
    let plain = b"ISA*BUYER*SELLER*20110101*1200*000000001*0~GS*PO*0001~ST*PO*0001~BEG*PO1*20110101~SE*3*0001~GE*1*0001~IEA*1*000000001~";
    let sealed = wrap(plain, "BUYER", "SELLER", CipherSuiteId::Pub1, &keys)?.to_bytes();
    let header = DepositHeader::new("BUYER", "SELLER", "000000001", ["PO"]);
    let outcome = buyer.deposit(&header, sealed).await?;
    println!("deposit: {outcome:?}");

    let mut seller = VanClient::new(&van.url());
    seller.login("SELLER", "seller-pw").await?;
    for item in seller.mailbox(&MailboxQuery::default()).await? {
        let (plain, report) = unwrap_bytes(&item.payload, &keys).map_err(|r| r.error)?;
        println!(
            "SELLER got message {} from {}, signed by {:?}: {}",
            item.message_id,
            item.sender,
            report.signer,
            String::from_utf8_lossy(&plain)
        );
        seller.ack(item.message_id, None).await?;
    }

    for e in admin.audit(&AuditQuery::message(outcome.message_id())).await? {
        println!("  {} {} by {}", e.at.format("%H:%M:%S%.3f"), e.action.as_str(), e.actor);
    }
    van.shutdown().await;
    Ok(())
}
