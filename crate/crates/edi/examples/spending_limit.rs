//! Spending limits with supervisor countersignatures.
//!
//! ```bash
//! cargo run -p edi --example spending_limit
//! ```

use std::collections::BTreeMap;

use edi::secenv::{check_authorization, sign_detached, AuthorizationPolicy, Countersignature, Keystore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = AuthorizationPolicy::new(
        BTreeMap::from([("clerk".to_string(), 2_500_000), ("manager".to_string(), 10_000_000)]),
        BTreeMap::from([("clerk".to_string(), "manager".to_string())]),
    )?;
    let mut keys = Keystore::new();
    keys.generate_pair("clerk")?;
    keys.generate_pair("manager")?;

    let order = b"PO-77: 300 units at $100.00";
    let countersig = Countersignature {
        signer_key_id: "manager".into(),
        signature: sign_detached(order, "manager", &keys)?,
    };
    for (cents, cs) in [
        (2_500_000, vec![]),
        (3_000_000, vec![]),
        (3_000_000, vec![countersig.clone()]),
        (12_000_000, vec![countersig]),
    ] {
        let outcome = check_authorization(cents, "clerk", &cs, &policy, order, &keys)?;
        println!(
            "${:>9.2} with {} countersignature(s): {outcome:?}",
            cents as f64 / 100.0,
            cs.len()
        );
    }
    Ok(())
}
