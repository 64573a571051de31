use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Duration;

use chrono::{DateTime, TimeDelta, Utc};
use edi_core::interchange::{
    build_functional_ack, serialize_interchange, ControlCounter, EnvelopeStamp, Interchange,
    FA_DOC_TYPE,
};
use edi_core::secenv::{wrap, CipherSuiteId, KeyPair, Keystore, PublicKey, SecureEnvelope};

use crate::audit::{accounting_from_events, AccountingReport, AuditAction, AuditDetail, AuditEvent, AuditQuery};
use crate::clock::Clock;
use crate::delivery::{DeliveryAction, DeliveryState, Notice, RelayOutcome};
use crate::message::{DepositHeader, MessageStatus, RejectReason, VanMessage};
use crate::profile::{verify_against_dummy, DeliveryMode, NewPartner, PartnerProfile, ProfileUpdate, Role, SessionToken};
use crate::route::{find_route, InterconnectRoute};
use crate::screen::{screen, Screening};
use crate::{MessageId, Result, VanError};

#[derive(Debug, Clone)]
pub struct VanConfig {
    /// Identity used as the actor of VAN-initiated events and as the sender
    /// of VAN-built acknowledgments.
    pub van_id: String,
    pub session_ttl: Duration,
}

impl Default for VanConfig {
    fn default() -> Self {
        Self {
            van_id: "VAN".into(),
            session_ttl: Duration::from_secs(3600),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepositReceipt {
    pub message_id: MessageId,
    pub status: MessageStatus,
    pub reason: Option<RejectReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetrieveFilter {
    /// Only messages queued at or after this instant.
    pub since: Option<DateTime<Utc>>,
    pub doc_type: Option<String>,
    /// Also return messages already delivered.
    pub redeliver: bool,
}

impl RetrieveFilter {
    pub fn doc_type(doc_type: impl Into<String>) -> Self {
        Self {
            doc_type: Some(doc_type.into()),
            ..Self::default()
        }
    }
}

/// One retrieved message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mailbox {
    pub message: VanMessage,
    pub payload: Arc<[u8]>,
}

#[derive(Debug, Clone)]
struct Session {
    partner_id: String,
    role: Role,
    expires: DateTime<Utc>,
}

pub struct Van {
    config: VanConfig,
    clock: Arc<dyn Clock>,
    keys: Keystore,
    partners: BTreeMap<String, PartnerProfile>,
    transient: BTreeSet<String>,
    routes: Vec<InterconnectRoute>,
    messages: BTreeMap<MessageId, VanMessage>,
    payloads: HashMap<MessageId, Arc<[u8]>>,
    live_controls: HashMap<(String, String), MessageId>,
    delivery: HashMap<MessageId, DeliveryState>,
    audit: Vec<AuditEvent>,
    sessions: HashMap<String, Session>,
    next_message_id: MessageId,
    last_ack_control: u64,
    uncommitted: Vec<AuditEvent>,
    profiles_dirty: bool,
}

impl Van {
    pub fn new(config: VanConfig, clock: Arc<dyn Clock>, van_keys: &KeyPair) -> Result<Self> {
        let mut keys = Keystore::new();
        keys.insert_pair(&config.van_id, van_keys)
            .map_err(|e| VanError::InvalidProfile(format!("VAN key: {e}")))?;
        Ok(Self {
            config,
            clock,
            keys,
            partners: BTreeMap::new(),
            transient: BTreeSet::new(),
            routes: Vec::new(),
            messages: BTreeMap::new(),
            payloads: HashMap::new(),
            live_controls: HashMap::new(),
            delivery: HashMap::new(),
            audit: Vec::new(),
            sessions: HashMap::new(),
            next_message_id: 1,
            last_ack_control: 0,
            uncommitted: Vec::new(),
            profiles_dirty: false,
        })
    }

    /// Rebuild a VAN from persisted profiles, routes and its audit journal.
    /// `payload` is asked for the bytes of every message that still needs them.
    pub fn restore(
        config: VanConfig,
        clock: Arc<dyn Clock>,
        van_keys: &KeyPair,
        partners: Vec<PartnerProfile>,
        routes: Vec<InterconnectRoute>,
        events: Vec<AuditEvent>,
        mut payload: impl FnMut(MessageId) -> Option<Vec<u8>>,
    ) -> Result<Self> {
        let mut van = Self::new(config, clock, van_keys)?;
        for p in partners {
            p.validate()?;
            van.partners.insert(p.partner_id.clone(), p);
        }
        for r in routes {
            r.validate()?;
            van.routes.push(r);
        }
        let mut last_seq = 0;
        for ev in events {
            if ev.seq <= last_seq {
                return Err(VanError::Replay {
                    seq: ev.seq,
                    reason: format!("sequence does not increase after {last_seq}"),
                });
            }
            last_seq = ev.seq;
            van.apply(&ev)?;
            van.audit.push(ev);
        }
        for (id, msg) in &van.messages {
            if matches!(msg.status, MessageStatus::Rejected | MessageStatus::Received) {
                continue;
            }
            let bytes = payload(*id).ok_or_else(|| VanError::Replay {
                seq: last_seq,
                reason: format!("payload of message {id} is missing"),
            })?;
            if bytes.len() as u64 != msg.bytes {
                return Err(VanError::Replay {
                    seq: last_seq,
                    reason: format!("payload of message {id} has {} bytes, journal says {}", bytes.len(), msg.bytes),
                });
            }
            van.payloads.insert(*id, bytes.into());
        }
        Ok(van)
    }

    pub fn van_id(&self) -> &str {
        &self.config.van_id
    }

    pub fn public_key(&self) -> PublicKey {
        self.keys.public_key(&self.config.van_id).expect("VAN keypair present")
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    // ---- profiles and routes ----

    /// An administrator that exists only for the life of this process.
    pub fn bootstrap_admin(&mut self, partner_id: &str, password: &str) -> Result<()> {
        let profile = NewPartner::new(partner_id, password).role(Role::Admin).into_profile()?;
        if partner_id == self.config.van_id {
            return Err(VanError::PartnerExists(partner_id.into()));
        }
        self.partners.insert(partner_id.into(), profile);
        self.transient.insert(partner_id.into());
        Ok(())
    }

    /// Add a partner without a session, as the VAN itself.
    pub fn register_partner(&mut self, partner: NewPartner) -> Result<()> {
        let actor = self.config.van_id.clone();
        self.insert_partner(&actor, partner)
    }

    pub fn register_route(&mut self, route: InterconnectRoute) -> Result<()> {
        let actor = self.config.van_id.clone();
        self.insert_route(&actor, route)
    }

    pub fn add_partner(&mut self, token: &str, partner: NewPartner) -> Result<()> {
        let s = self.admin_session(token)?;
        self.insert_partner(&s.partner_id, partner)
    }

    pub fn add_route(&mut self, token: &str, route: InterconnectRoute) -> Result<()> {
        let s = self.admin_session(token)?;
        self.insert_route(&s.partner_id, route)
    }

    /// Administrators may change anything; partners may change their own
    /// profile except for the role.
    pub fn update_partner(&mut self, token: &str, partner_id: &str, update: ProfileUpdate) -> Result<()> {
        let s = self.session(token)?;
        let own = s.partner_id == partner_id;
        if s.role != Role::Admin && (!own || update.role.is_some()) {
            return Err(VanError::Forbidden);
        }
        let current = self
            .partners
            .get(partner_id)
            .cloned()
            .ok_or_else(|| VanError::UnknownPartner(partner_id.into()))?;
        let updated = update.apply(current)?;
        self.partners.insert(partner_id.into(), updated);
        self.profiles_dirty = true;
        self.emit(None, &s.partner_id, AuditAction::PartnerUpdated, AuditDetail {
            partner: Some(partner_id.into()),
            ..AuditDetail::default()
        })
    }

    fn insert_partner(&mut self, actor: &str, partner: NewPartner) -> Result<()> {
        if partner.partner_id == self.config.van_id || self.partners.contains_key(&partner.partner_id) {
            return Err(VanError::PartnerExists(partner.partner_id));
        }
        let profile = partner.into_profile()?;
        let id = profile.partner_id.clone();
        self.partners.insert(id.clone(), profile);
        self.profiles_dirty = true;
        self.emit(None, actor, AuditAction::PartnerAdded, AuditDetail {
            partner: Some(id),
            ..AuditDetail::default()
        })
    }

    fn insert_route(&mut self, actor: &str, route: InterconnectRoute) -> Result<()> {
        route.validate()?;
        let detail = AuditDetail {
            partner: Some(route.pattern.clone()),
            endpoint: Some(route.endpoint.clone()),
            hop_count: Some(route.max_hops),
            ..AuditDetail::default()
        };
        self.routes.push(route);
        self.profiles_dirty = true;
        self.emit(None, actor, AuditAction::RouteAdded, detail)
    }

    pub fn partner(&self, partner_id: &str) -> Option<&PartnerProfile> {
        self.partners.get(partner_id)
    }

    /// Profiles that belong in durable storage (everything but bootstrap admins).
    pub fn persistent_partners(&self) -> Vec<PartnerProfile> {
        self.partners
            .values()
            .filter(|p| !self.transient.contains(&p.partner_id))
            .cloned()
            .collect()
    }

    pub fn routes(&self) -> &[InterconnectRoute] {
        &self.routes
    }

    // ---- sessions ----

    pub fn authenticate(&mut self, partner_id: &str, password: &str) -> Result<SessionToken> {
        let now = self.clock.now();
        self.sessions.retain(|_, s| s.expires > now);
        let actor: String = partner_id.chars().take(64).collect();
        let Some(profile) = self.partners.get(partner_id) else {
            verify_against_dummy(password);
            self.emit(None, &actor, AuditAction::LoginFail, reason("unknown partner"))?;
            return Err(VanError::AuthFailed);
        };
        if !profile.check_password(password) {
            self.emit(None, &actor, AuditAction::LoginFail, reason("wrong password"))?;
            return Err(VanError::AuthFailed);
        }
        let role = profile.role;
        let mut raw = [0u8; 32];
        rand::fill(&mut raw);
        let token = hex::encode(raw);
        let expires = now + TimeDelta::from_std(self.config.session_ttl).unwrap_or(TimeDelta::MAX);
        self.sessions.insert(
            token.clone(),
            Session {
                partner_id: partner_id.into(),
                role,
                expires,
            },
        );
        self.emit(None, &actor, AuditAction::LoginOk, AuditDetail::default())?;
        Ok(SessionToken {
            token,
            partner_id: partner_id.into(),
            expires,
        })
    }

    /// The partner a live session belongs to.
    pub fn session_partner(&self, token: &str) -> Result<String> {
        self.session(token).map(|s| s.partner_id)
    }

    fn session(&self, token: &str) -> Result<Session> {
        let s = self.sessions.get(token).ok_or(VanError::SessionInvalid)?;
        if s.expires <= self.clock.now() {
            return Err(VanError::SessionInvalid);
        }
        // Role changes take effect immediately.
        let role = self.partners.get(&s.partner_id).map(|p| p.role).ok_or(VanError::SessionInvalid)?;
        Ok(Session { role, ..s.clone() })
    }

    fn admin_session(&self, token: &str) -> Result<Session> {
        let s = self.session(token)?;
        if s.role != Role::Admin {
            return Err(VanError::Forbidden);
        }
        Ok(s)
    }

    // ---- deposit ----

    pub fn deposit(&mut self, token: &str, header: DepositHeader, payload: Vec<u8>) -> Result<DepositReceipt> {
        let s = self.session(token)?;
        header.validate()?;
        if s.role != Role::Peer {
            if header.sender != s.partner_id {
                return Err(VanError::SenderMismatch {
                    session: s.partner_id,
                    sender: header.sender,
                });
            }
            if header.hop_count != 0 {
                return Err(VanError::InvalidHeader("only peer VANs may set a hop count".into()));
            }
        }
        self.accept(&s.partner_id, header, payload.into(), None, true)
    }

    /// Store, then screen or route, as one batch of events.
    fn accept(
        &mut self,
        actor: &str,
        header: DepositHeader,
        payload: Arc<[u8]>,
        ack_of: Option<MessageId>,
        screened: bool,
    ) -> Result<DepositReceipt> {
        let local = self.partners.contains_key(&header.recipient);
        let route = if local {
            None
        } else {
            match find_route(&self.routes, &header.recipient) {
                None => return self.store_rejected(actor, &header, payload, ack_of, RejectReason::NoSuchMailbox),
                Some(r) if header.hop_count >= r.max_hops => {
                    return self.store_rejected(actor, &header, payload, ack_of, RejectReason::HopLimit)
                }
                Some(r) => Some(r.endpoint.clone()),
            }
        };

        let key = (header.sender.clone(), header.control.clone());
        if let Some(&original) = self.live_controls.get(&key) {
            self.emit(Some(original), actor, AuditAction::DuplicateRejected, AuditDetail {
                sender: Some(header.sender.clone()),
                recipient: Some(header.recipient.clone()),
                control: Some(header.control.clone()),
                bytes: Some(payload.len() as u64),
                ..AuditDetail::default()
            })?;
            return Err(VanError::DuplicateControl {
                sender: header.sender,
                control: header.control,
                original,
            });
        }

        let id = self.store_received(actor, &header, payload.clone(), ack_of)?;
        let verdict = match (&route, screened) {
            (Some(_), _) | (None, false) => Screening::Accept,
            (None, true) => screen(&header, &payload, self.partners.get(&header.recipient)),
        };
        match verdict {
            Screening::Accept => {
                let bytes = payload.len() as u64;
                self.emit(Some(id), actor, AuditAction::Queued, AuditDetail {
                    recipient: Some(header.recipient.clone()),
                    bytes: Some(bytes),
                    relay: route.is_some(),
                    endpoint: route,
                    ..AuditDetail::default()
                })?;
                Ok(DepositReceipt {
                    message_id: id,
                    status: MessageStatus::Queued,
                    reason: None,
                })
            }
            Screening::Reject(r) => self.reject(id, actor, r),
        }
    }

    fn store_received(
        &mut self,
        actor: &str,
        header: &DepositHeader,
        payload: Arc<[u8]>,
        ack_of: Option<MessageId>,
    ) -> Result<MessageId> {
        let id = self.next_message_id;
        self.payloads.insert(id, payload.clone());
        self.emit(Some(id), actor, AuditAction::Received, AuditDetail {
            sender: Some(header.sender.clone()),
            recipient: Some(header.recipient.clone()),
            control: Some(header.control.clone()),
            doc_types: header.doc_types.clone(),
            bytes: Some(payload.len() as u64),
            hop_count: Some(header.hop_count),
            ack_requested: header.ack_requested,
            ack_of,
            ..AuditDetail::default()
        })?;
        Ok(id)
    }

    fn store_rejected(
        &mut self,
        actor: &str,
        header: &DepositHeader,
        payload: Arc<[u8]>,
        ack_of: Option<MessageId>,
        why: RejectReason,
    ) -> Result<DepositReceipt> {
        let id = self.store_received(actor, header, payload, ack_of)?;
        self.reject(id, actor, why)
    }

    fn reject(&mut self, id: MessageId, actor: &str, why: RejectReason) -> Result<DepositReceipt> {
        self.emit(Some(id), actor, AuditAction::Rejected, reason(why.as_str()))?;
        Ok(DepositReceipt {
            message_id: id,
            status: MessageStatus::Rejected,
            reason: Some(why),
        })
    }

    // ---- retrieval ----

    /// Hand the caller its queued messages, marking each DELIVERED.
    pub fn retrieve(&mut self, token: &str, filter: &RetrieveFilter) -> Result<Vec<Mailbox>> {
        let s = self.session(token)?;
        let wanted = |m: &VanMessage, d: Option<&DeliveryState>| {
            let status_ok = match m.status {
                MessageStatus::Queued => !d.is_some_and(|d| d.in_flight),
                MessageStatus::Delivered | MessageStatus::Acknowledged => filter.redeliver,
                _ => false,
            };
            status_ok
                && m.recipient_id == s.partner_id
                && !m.is_relay()
                && filter.since.is_none_or(|t| m.queued_at().is_some_and(|q| q >= t))
                && filter.doc_type.as_ref().is_none_or(|d| m.doc_types.contains(d))
        };
        let ids: Vec<MessageId> = self
            .messages
            .values()
            .filter(|m| wanted(m, self.delivery.get(&m.message_id)))
            .map(|m| m.message_id)
            .collect();

        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            if self.messages[&id].status == MessageStatus::Queued {
                self.mark_delivered(id, &s.partner_id, AuditDetail::default())?;
            }
            out.push(Mailbox {
                message: self.messages[&id].clone(),
                payload: self.payloads[&id].clone(),
            });
        }
        Ok(out)
    }

    fn mark_delivered(&mut self, id: MessageId, actor: &str, detail: AuditDetail) -> Result<()> {
        self.emit(Some(id), actor, AuditAction::Delivered, detail)?;
        let msg = &self.messages[&id];
        let auto = msg.ack_requested
            && self.partners.get(&msg.recipient_id).is_some_and(|p| p.auto_ack);
        if auto {
            let van = self.config.van_id.clone();
            self.acknowledge_as(id, &van, None)?;
        }
        Ok(())
    }

    // ---- store-and-forward ----

    /// Everything due at the current clock time. Each action is handed out
    /// once; report how it went before it can be issued again.
    pub fn deliver_pending(&mut self) -> Vec<DeliveryAction> {
        let now = self.clock.now();
        let mut actions = Vec::new();
        let queued: Vec<MessageId> = self
            .messages
            .values()
            .filter(|m| m.status == MessageStatus::Queued)
            .map(|m| m.message_id)
            .collect();
        for id in queued {
            let msg = &self.messages[&id];
            let state = self.delivery.entry(id).or_default();
            let header = DepositHeader {
                sender: msg.sender_id.clone(),
                recipient: msg.recipient_id.clone(),
                control: msg.interchange_control.clone(),
                doc_types: msg.doc_types.clone(),
                ack_requested: msg.ack_requested,
                hop_count: msg.hop_count,
            };
            let payload = || self.payloads[&id].clone();

            if let Some(endpoint) = &msg.relay_endpoint {
                if state.push_due(now) {
                    state.in_flight = true;
                    actions.push(DeliveryAction::Relay {
                        message_id: id,
                        endpoint: endpoint.clone(),
                        header: DepositHeader {
                            hop_count: header.hop_count + 1,
                            ..header
                        },
                        payload: payload(),
                    });
                }
                continue;
            }
            let Some(profile) = self.partners.get(&msg.recipient_id) else {
                continue;
            };
            if let Some(n) = &profile.notification {
                if n.matches(&msg.doc_types) && state.notify_due(now) {
                    state.notify_in_flight = true;
                    actions.push(DeliveryAction::Notify {
                        message_id: id,
                        endpoint: n.endpoint.clone(),
                        notice: Notice {
                            message_id: id,
                            sender: msg.sender_id.clone(),
                            doc_types: msg.doc_types.clone(),
                            queued_at: msg.queued_at().unwrap_or(now),
                        },
                    });
                }
            }
            if let DeliveryMode::Forward { endpoint } = &profile.delivery_mode {
                if state.push_due(now) {
                    state.in_flight = true;
                    actions.push(DeliveryAction::Push {
                        message_id: id,
                        endpoint: endpoint.clone(),
                        header,
                        payload: payload(),
                    });
                }
            }
        }
        actions
    }

    pub fn complete_push(&mut self, id: MessageId, outcome: std::result::Result<(), String>) -> Result<()> {
        let endpoint = self.forward_endpoint(id);
        if !self.take_in_flight(id)? {
            return Ok(());
        }
        let van = self.config.van_id.clone();
        match outcome {
            Ok(()) => self.mark_delivered(id, &van, AuditDetail {
                endpoint,
                ..AuditDetail::default()
            }),
            Err(e) => {
                let attempt = self.delivery.get(&id).map_or(0, |d| d.attempts) + 1;
                self.emit(Some(id), &van, AuditAction::PushFailed, AuditDetail {
                    endpoint,
                    attempt: Some(attempt),
                    reason: Some(e),
                    ..AuditDetail::default()
                })
            }
        }
    }

    pub fn complete_relay(&mut self, id: MessageId, outcome: RelayOutcome) -> Result<()> {
        if !self.take_in_flight(id)? {
            return Ok(());
        }
        let van = self.config.van_id.clone();
        let endpoint = self.messages[&id].relay_endpoint.clone();
        match outcome {
            RelayOutcome::Accepted => self.emit(Some(id), &van, AuditAction::ForwardedRemote, AuditDetail {
                endpoint,
                ..AuditDetail::default()
            }),
            RelayOutcome::Refused(why) => self.emit(Some(id), &van, AuditAction::ForwardedRemote, AuditDetail {
                endpoint,
                reason: Some(why),
                ..AuditDetail::default()
            }),
            RelayOutcome::Failed(e) => {
                let attempt = self.delivery.get(&id).map_or(0, |d| d.attempts) + 1;
                self.emit(Some(id), &van, AuditAction::RelayFailed, AuditDetail {
                    endpoint,
                    attempt: Some(attempt),
                    reason: Some(e),
                    ..AuditDetail::default()
                })
            }
        }
    }

    pub fn complete_notify(&mut self, id: MessageId, outcome: std::result::Result<(), String>) -> Result<()> {
        let state = self.delivery.entry(id).or_default();
        if !state.notify_in_flight {
            return Ok(());
        }
        state.notify_in_flight = false;
        let attempt = state.notify_attempts + 1;
        let endpoint = self
            .messages
            .get(&id)
            .and_then(|m| self.partners.get(&m.recipient_id))
            .and_then(|p| p.notification.as_ref())
            .map(|n| n.endpoint.clone());
        let van = self.config.van_id.clone();
        let (action, reason) = match outcome {
            Ok(()) => (AuditAction::NotifySent, None),
            Err(e) => (AuditAction::NotifyFailed, Some(e)),
        };
        self.emit(Some(id), &van, action, AuditDetail {
            endpoint,
            attempt: Some(attempt),
            reason,
            ..AuditDetail::default()
        })
    }

    fn forward_endpoint(&self, id: MessageId) -> Option<String> {
        let msg = self.messages.get(&id)?;
        match &self.partners.get(&msg.recipient_id)?.delivery_mode {
            DeliveryMode::Forward { endpoint } => Some(endpoint.clone()),
            DeliveryMode::Retrieve => None,
        }
    }

    fn take_in_flight(&mut self, id: MessageId) -> Result<bool> {
        let msg = self.messages.get(&id).ok_or(VanError::NoSuchMessage(id))?;
        let state = self.delivery.entry(id).or_default();
        let was = std::mem::replace(&mut state.in_flight, false);
        Ok(was && msg.status == MessageStatus::Queued)
    }

    // ---- acknowledgment ----

    /// Acknowledge a delivered message as its recipient (or an administrator).
    ///
    /// When the sender asked for an acknowledgment, an FA is deposited into
    /// the sender's mailbox: `fa` if the recipient supplied one as
    /// `(control, envelope bytes)`, otherwise one the VAN builds and seals
    /// for the sender's registered public key. Returns the FA's message id.
    pub fn acknowledge(
        &mut self,
        token: &str,
        id: MessageId,
        fa: Option<(String, Vec<u8>)>,
    ) -> Result<Option<MessageId>> {
        let s = self.session(token)?;
        let msg = self.messages.get(&id).ok_or(VanError::NoSuchMessage(id))?;
        if s.role != Role::Admin && msg.recipient_id != s.partner_id {
            return Err(VanError::Forbidden);
        }
        self.acknowledge_as(id, &s.partner_id, fa)
    }

    fn acknowledge_as(
        &mut self,
        id: MessageId,
        actor: &str,
        fa: Option<(String, Vec<u8>)>,
    ) -> Result<Option<MessageId>> {
        let msg = self.messages.get(&id).ok_or(VanError::NoSuchMessage(id))?.clone();
        match msg.status {
            MessageStatus::Acknowledged => return Err(VanError::AlreadyAcknowledged(id)),
            MessageStatus::Delivered => {}
            status => return Err(VanError::WrongState { id, status }),
        }
        let mut detail = AuditDetail::default();
        if msg.ack_requested {
            let (header, payload) = match fa {
                Some((control, payload)) => {
                    SecureEnvelope::from_bytes(&payload)
                        .map_err(|e| VanError::InvalidHeader(format!("acknowledgment is not an envelope: {e}")))?;
                    let header = DepositHeader::new(&msg.recipient_id, &msg.sender_id, &control, [FA_DOC_TYPE]);
                    header.validate()?;
                    (header, payload)
                }
                None => match self.build_ack(&msg)? {
                    Ok(built) => built,
                    Err(why) => {
                        detail.reason = Some(why);
                        return self.finish_ack(id, actor, detail);
                    }
                },
            };
            let receipt = self.accept(actor, header, payload.into(), Some(id), false)?;
            detail.ack_message_id = Some(receipt.message_id);
        }
        self.finish_ack(id, actor, detail)
    }

    fn finish_ack(&mut self, id: MessageId, actor: &str, detail: AuditDetail) -> Result<Option<MessageId>> {
        let fa = detail.ack_message_id;
        self.emit(Some(id), actor, AuditAction::Acknowledged, detail)?;
        Ok(fa)
    }

    /// The VAN's own FA for `msg`, or why it could not make one.
    fn build_ack(&mut self, msg: &VanMessage) -> Result<std::result::Result<(DepositHeader, Vec<u8>), String>> {
        let Some(sender_key) = self.partners.get(&msg.sender_id).map(|p| p.decoded_public_key()).transpose()?.flatten()
        else {
            return Ok(Err(format!("no public key on file for {}", msg.sender_id)));
        };
        let control = ControlCounter::new()
            .starting_after(self.last_ack_control)
            .next()
            .map_err(|e| VanError::InvalidHeader(e.to_string()))?;
        let now = self.clock.now();
        let date = now.format("%Y%m%d").to_string();
        let time = now.format("%H%M").to_string();
        let original = Interchange::new(
            &msg.sender_id,
            &msg.recipient_id,
            &EnvelopeStamp::new(msg.interchange_control.clone(), date.clone(), time.clone()),
        );
        let fa = build_functional_ack(&original, &[], &EnvelopeStamp::new(control.clone(), date, time))
            .and_then(|fa| serialize_interchange(&fa))
            .map_err(|e| VanError::InvalidHeader(e.to_string()))?;

        let mut keys = self.keys.clone();
        let sealed = keys
            .add_public(&msg.sender_id, &sender_key)
            .and_then(|()| wrap(&fa, &self.config.van_id, &msg.sender_id, CipherSuiteId::Pub1, &keys));
        let envelope = match sealed {
            Ok(env) => env.to_bytes(),
            Err(e) => return Ok(Err(format!("could not seal acknowledgment: {e}"))),
        };
        let header = DepositHeader::new(&self.config.van_id, &msg.sender_id, &control, [FA_DOC_TYPE]);
        Ok(Ok((header, envelope)))
    }

    // ---- queries ----

    pub fn audit_trail(&self, token: &str, query: &AuditQuery) -> Result<Vec<AuditEvent>> {
        let s = self.session(token)?;
        let admin = s.role == Role::Admin;
        let mut query = query.clone();
        if !admin {
            match &query.partner_id {
                Some(p) if *p != s.partner_id => return Err(VanError::Forbidden),
                Some(_) => {}
                None if query.message_id.is_none() => query.partner_id = Some(s.partner_id.clone()),
                None => {}
            }
        }
        if let Some(id) = query.message_id {
            let msg = self.messages.get(&id).ok_or(VanError::NoSuchMessage(id))?;
            if !admin && !involves(msg, &s.partner_id) {
                return Err(VanError::Forbidden);
            }
        }
        if let (Some(f), Some(t)) = (query.from, query.to) {
            if f > t {
                return Err(VanError::InvalidPeriod);
            }
        }
        Ok(self
            .audit
            .iter()
            .filter(|ev| query.message_id.is_none_or(|id| ev.message_id == Some(id)))
            .filter(|ev| query.partner_id.as_deref().is_none_or(|p| self.event_involves(ev, p)))
            .filter(|ev| query.in_period(ev.at))
            .cloned()
            .collect())
    }

    fn event_involves(&self, ev: &AuditEvent, partner: &str) -> bool {
        ev.actor == partner
            || ev.detail.partner.as_deref() == Some(partner)
            || ev
                .message_id
                .and_then(|id| self.messages.get(&id))
                .is_some_and(|m| involves(m, partner))
    }

    pub fn accounting(
        &self,
        token: &str,
        partner_id: &str,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    ) -> Result<AccountingReport> {
        let s = self.session(token)?;
        if s.role != Role::Admin && s.partner_id != partner_id {
            return Err(VanError::Forbidden);
        }
        if start > end {
            return Err(VanError::InvalidPeriod);
        }
        if !self.partners.contains_key(partner_id) {
            return Err(VanError::UnknownPartner(partner_id.into()));
        }
        Ok(accounting_from_events(partner_id, start, end, &self.audit))
    }

    pub fn message(&self, id: MessageId) -> Option<&VanMessage> {
        self.messages.get(&id)
    }

    pub fn messages(&self) -> impl Iterator<Item = &VanMessage> {
        self.messages.values()
    }

    pub fn payload(&self, id: MessageId) -> Option<Arc<[u8]>> {
        self.payloads.get(&id).cloned()
    }

    pub fn audit_log(&self) -> &[AuditEvent] {
        &self.audit
    }

    /// Events emitted since the last call, in order. A host that persists
    /// them as one atomic record gets all-or-nothing operations on replay.
    pub fn take_uncommitted(&mut self) -> Vec<AuditEvent> {
        std::mem::take(&mut self.uncommitted)
    }

    /// Whether profiles or routes changed since the last call.
    pub fn take_profiles_dirty(&mut self) -> bool {
        std::mem::take(&mut self.profiles_dirty)
    }

    // ---- event application ----

    fn emit(&mut self, message_id: Option<MessageId>, actor: &str, action: AuditAction, detail: AuditDetail) -> Result<()> {
        let ev = AuditEvent {
            seq: self.audit.last().map_or(1, |e| e.seq + 1),
            at: self.clock.now(),
            message_id,
            actor: actor.into(),
            action,
            detail,
        };
        self.apply(&ev)?;
        self.audit.push(ev.clone());
        self.uncommitted.push(ev);
        Ok(())
    }

    fn apply(&mut self, ev: &AuditEvent) -> Result<()> {
        let fail = |reason: String| VanError::Replay { seq: ev.seq, reason };
        let Some(id) = ev.message_id else {
            return Ok(());
        };
        if ev.action == AuditAction::Received {
            if self.messages.contains_key(&id) {
                return Err(fail(format!("message {id} received twice")));
            }
            let d = &ev.detail;
            let field = |v: &Option<String>, name: &str| v.clone().ok_or_else(|| fail(format!("RECEIVED without {name}")));
            let msg = VanMessage {
                message_id: id,
                sender_id: field(&d.sender, "sender")?,
                recipient_id: field(&d.recipient, "recipient")?,
                interchange_control: field(&d.control, "control")?,
                doc_types: d.doc_types.clone(),
                bytes: d.bytes.unwrap_or(0),
                status: MessageStatus::Received,
                hop_count: d.hop_count.unwrap_or(0),
                ack_requested: d.ack_requested,
                reject_reason: None,
                relay_endpoint: None,
                ack_of: d.ack_of,
                timestamps: BTreeMap::from([(MessageStatus::Received, ev.at)]),
            };
            if msg.sender_id == self.config.van_id {
                if let Ok(n) = msg.interchange_control.parse::<u64>() {
                    self.last_ack_control = self.last_ack_control.max(n);
                }
            }
            self.live_controls
                .entry((msg.sender_id.clone(), msg.interchange_control.clone()))
                .or_insert(id);
            self.next_message_id = self.next_message_id.max(id + 1);
            self.messages.insert(id, msg);
            return Ok(());
        }

        let msg = self
            .messages
            .get_mut(&id)
            .ok_or_else(|| fail(format!("event for unknown message {id}")))?;
        if let Some(next) = ev.action.transition() {
            if !msg.status.can_move_to(next) {
                return Err(fail(format!("message {id} cannot go from {} to {next}", msg.status)));
            }
            msg.status = next;
            msg.timestamps.insert(next, ev.at);
        }
        match ev.action {
            AuditAction::Queued if ev.detail.relay => {
                msg.relay_endpoint = Some(
                    ev.detail
                        .endpoint
                        .clone()
                        .ok_or_else(|| fail("relay QUEUED without endpoint".into()))?,
                );
            }
            AuditAction::Rejected => {
                msg.reject_reason = ev.detail.reason.as_deref().and_then(parse_reason);
                let key = (msg.sender_id.clone(), msg.interchange_control.clone());
                if self.live_controls.get(&key) == Some(&id) {
                    self.live_controls.remove(&key);
                }
                self.payloads.remove(&id);
                self.delivery.remove(&id);
            }
            AuditAction::PushFailed | AuditAction::RelayFailed => {
                self.delivery.entry(id).or_default().record_failure(ev.at);
            }
            AuditAction::NotifySent => {
                let d = self.delivery.entry(id).or_default();
                d.notified = true;
                d.notify_attempts += 1;
            }
            AuditAction::NotifyFailed => {
                self.delivery.entry(id).or_default().record_notify_failure(ev.at);
            }
            _ => {}
        }
        Ok(())
    }
}

fn involves(msg: &VanMessage, partner: &str) -> bool {
    msg.sender_id == partner || msg.recipient_id == partner
}

fn reason(text: &str) -> AuditDetail {
    AuditDetail {
        reason: Some(text.into()),
        ..AuditDetail::default()
    }
}

fn parse_reason(text: &str) -> Option<RejectReason> {
    use RejectReason::*;
    [UnauthorizedPartner, DocTypeNotAllowed, MalformedEnvelope, NoSuchMailbox, HopLimit]
        .into_iter()
        .find(|r| r.as_str() == text)
}
