use edi_core::secenv::SecureEnvelope;

use crate::{DepositHeader, PartnerProfile, RejectReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Screening {
    Accept,
    Reject(RejectReason),
}

/// Decide whether `recipient` will take this deposit. Only the cleartext
/// header and the envelope framing are inspected; the payload stays sealed.
pub fn screen(header: &DepositHeader, payload: &[u8], recipient: Option<&PartnerProfile>) -> Screening {
    let Some(profile) = recipient else {
        return Screening::Reject(RejectReason::NoSuchMailbox);
    };
    if !profile.authorized_senders.contains(&header.sender) {
        return Screening::Reject(RejectReason::UnauthorizedPartner);
    }
    if !header.doc_types.is_subset(&profile.allowed_doc_types) {
        return Screening::Reject(RejectReason::DocTypeNotAllowed);
    }
    if SecureEnvelope::from_bytes(payload).is_err() {
        return Screening::Reject(RejectReason::MalformedEnvelope);
    }
    Screening::Accept
}

#[cfg(test)]
mod tests {
    use edi_core::secenv::{wrap, CipherSuiteId, Keystore};

    use super::*;
    use crate::NewPartner;

    fn seller() -> PartnerProfile {
        NewPartner::new("SELLER", "pw")
            .accepts_from(["BUYER"])
            .allows(["PO"])
            .into_profile()
            .unwrap()
    }

    fn envelope() -> Vec<u8> {
        let mut ks = Keystore::new();
        ks.generate_pair("BUYER").unwrap();
        ks.generate_pair("SELLER").unwrap();
        wrap(b"ISA~", "BUYER", "SELLER", CipherSuiteId::Pub1, &ks)
            .unwrap()
            .to_bytes()
    }

    #[test]
    fn outcomes() {
        let p = seller();
        let env = envelope();
        let h = DepositHeader::new("BUYER", "SELLER", "000000001", ["PO"]);
        assert_eq!(screen(&h, &env, Some(&p)), Screening::Accept);
        assert_eq!(screen(&h, &env, None), Screening::Reject(RejectReason::NoSuchMailbox));

        let stranger = DepositHeader::new("EVE", "SELLER", "000000001", ["PO"]);
        assert_eq!(
            screen(&stranger, &env, Some(&p)),
            Screening::Reject(RejectReason::UnauthorizedPartner)
        );
        let inv = DepositHeader::new("BUYER", "SELLER", "000000001", ["INV"]);
        assert_eq!(
            screen(&inv, &env, Some(&p)),
            Screening::Reject(RejectReason::DocTypeNotAllowed)
        );
        assert_eq!(
            screen(&h, b"garbage", Some(&p)),
            Screening::Reject(RejectReason::MalformedEnvelope)
        );
    }
}
