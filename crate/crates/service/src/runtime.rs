use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use edi_van::{
    DeliveryAction, DepositHeader, InterconnectRoute, RelayOutcome, SystemClock, Van, VanConfig, VanError,
};
use tokio::sync::watch;
use tokio::task::{JoinHandle, JoinSet};

use crate::api;
use crate::client::{ClientError, DepositOutcome, VanClient};
use crate::config::ServiceConfig;
use crate::store::{DataDir, PartnersFile, StoreError};
use crate::wire;
use crate::ServiceError;

pub(crate) struct Inner {
    pub van: Van,
    dir: DataDir,
    failed: bool,
}

impl Inner {
    /// Make everything the engine did since the last commit durable: blobs,
    /// then profiles, then the journal record that refers to them.
    fn commit(&mut self) -> Result<(), StoreError> {
        let batch = self.van.take_uncommitted();
        for ev in &batch {
            if ev.action == edi_van::AuditAction::Received {
                if let Some(id) = ev.message_id {
                    if let Some(bytes) = self.van.payload(id) {
                        self.dir.write_blob(id, &bytes)?;
                    }
                }
            }
        }
        if self.van.take_profiles_dirty() {
            self.dir.save_partners(&PartnersFile {
                partners: self.van.persistent_partners(),
                routes: self.van.routes().to_vec(),
            })?;
        }
        self.dir.journal().append(&batch)?;
        Ok(())
    }
}

pub(crate) struct Shared {
    pub config: ServiceConfig,
    pub http: reqwest::Client,
    inner: Mutex<Inner>,
    peer_sessions: tokio::sync::Mutex<HashMap<String, String>>,
}

#[derive(Debug)]
pub(crate) enum OpError {
    Van(VanError),
    Unavailable(String),
}

impl From<VanError> for OpError {
    fn from(e: VanError) -> Self {
        Self::Van(e)
    }
}

impl Shared {
    /// Run `f` against the engine and commit what it did before returning.
    pub async fn with_van<T, F>(self: &Arc<Self>, f: F) -> Result<T, OpError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Van) -> Result<T, VanError> + Send + 'static,
    {
        let shared = self.clone();
        tokio::task::spawn_blocking(move || {
            let mut inner = shared.inner.lock().unwrap_or_else(|p| p.into_inner());
            if inner.failed {
                return Err(OpError::Unavailable("storage failed earlier; restart the service".into()));
            }
            let out = f(&mut inner.van);
            if let Err(e) = inner.commit() {
                tracing::error!(error = %e, "commit failed; refusing further requests");
                inner.failed = true;
                return Err(OpError::Unavailable(e.to_string()));
            }
            out.map_err(OpError::Van)
        })
        .await
        .map_err(|e| OpError::Unavailable(e.to_string()))?
    }
}

/// Open the data directory and rebuild the engine from it.
fn open(config: &ServiceConfig) -> Result<Inner, ServiceError> {
    let (dir, replay) = DataDir::open(&config.data_dir)?;
    let keys = dir.van_key()?;
    let file = dir.load_partners()?;
    let van_config = VanConfig {
        van_id: config.van_id.clone(),
        session_ttl: std::time::Duration::from_secs(config.session_ttl_secs),
    };
    let events = replay.events().cloned().collect();
    let mut van = Van::restore(
        van_config,
        Arc::new(SystemClock),
        &keys,
        file.partners,
        file.routes,
        events,
        |id| dir.read_blob(id),
    )?;
    if let Some(admin) = &config.admin {
        van.bootstrap_admin(&admin.id, &admin.secret.resolve()?)?;
    }
    for route in config.interconnect_routes() {
        if !van.routes().iter().any(|r| r.pattern == route.pattern) {
            van.register_route(route)?;
        }
    }
    let mut inner = Inner {
        van,
        dir,
        failed: false,
    };
    inner.commit()?;
    Ok(inner)
}

/// Rebuild the engine from a data directory without serving it. The
/// directory lock is held only for the duration of the call.
pub fn load(config: &ServiceConfig) -> Result<Van, ServiceError> {
    Ok(open(config)?.van)
}

/// A running service.
pub struct ServiceHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: watch::Sender<bool>,
    server: JoinHandle<std::io::Result<()>>,
    delivery: JoinHandle<()>,
}

impl ServiceHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Run one delivery pass now instead of waiting for the timer.
    pub async fn deliver_now(&self) {
        run_delivery(&self.shared).await;
    }

    pub async fn shutdown(self) {
        let _ = self.shutdown.send(true);
        let _ = self.server.await;
        let _ = self.delivery.await;
    }

    /// Serve until SIGINT or SIGTERM.
    pub async fn wait_for_shutdown_signal(self) {
        #[cfg(unix)]
        {
            use tokio::signal::unix::{signal, SignalKind};
            match signal(SignalKind::terminate()) {
                Ok(mut term) => {
                    tokio::select! {
                        _ = tokio::signal::ctrl_c() => {}
                        _ = term.recv() => {}
                    }
                }
                Err(_) => {
                    let _ = tokio::signal::ctrl_c().await;
                }
            }
        }
        #[cfg(not(unix))]
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
        self.shutdown().await;
    }
}

pub async fn start(config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    config.validate()?;
    let cfg = config.clone();
    let inner = tokio::task::spawn_blocking(move || open(&cfg))
        .await
        .map_err(|e| ServiceError::Config(e.to_string()))??;
    let http = reqwest::Client::builder()
        .timeout(config.http_timeout())
        .build()
        .map_err(|e| ServiceError::Config(e.to_string()))?;
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: config.listen,
            source,
        })?;
    let addr = listener.local_addr().map_err(|source| ServiceError::Bind {
        addr: config.listen,
        source,
    })?;
    tracing::info!(%addr, van_id = %config.van_id, "VAN listening");

    let shared = Arc::new(Shared {
        config,
        http,
        inner: Mutex::new(inner),
        peer_sessions: Default::default(),
    });
    let (tx, rx) = watch::channel(false);

    let app = api::router(shared.clone());
    let mut server_rx = rx.clone();
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                while server_rx.changed().await.is_ok() && !*server_rx.borrow() {}
            })
            .await
    });
    let delivery = tokio::spawn(delivery_loop(shared.clone(), rx));
    Ok(ServiceHandle {
        addr,
        shared,
        shutdown: tx,
        server,
        delivery,
    })
}

async fn delivery_loop(shared: Arc<Shared>, mut stop: watch::Receiver<bool>) {
    let mut ticker = tokio::time::interval(shared.config.delivery_interval());
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tokio::select! {
            _ = ticker.tick() => run_delivery(&shared).await,
            changed = stop.changed() => {
                if changed.is_err() || *stop.borrow() {
                    break;
                }
            }
        }
    }
}

enum Done {
    Push(u64, Result<(), String>),
    Relay(u64, RelayOutcome),
}

/// Pushes and relays run concurrently; notifications go out one at a time
/// in queue order.
pub(crate) async fn run_delivery(shared: &Arc<Shared>) {
    let actions = match shared.with_van(|van| Ok(van.deliver_pending())).await {
        Ok(a) => a,
        Err(e) => {
            tracing::warn!(?e, "delivery pass skipped");
            return;
        }
    };
    let mut set = JoinSet::new();
    let mut notices = Vec::new();
    for action in actions {
        match action {
            DeliveryAction::Push {
                message_id,
                endpoint,
                header,
                payload,
            } => {
                let http = shared.http.clone();
                set.spawn(async move { Done::Push(message_id, push(&http, &endpoint, &header, &payload).await) });
            }
            DeliveryAction::Relay {
                message_id,
                endpoint,
                header,
                payload,
            } => {
                let shared = shared.clone();
                set.spawn(async move { Done::Relay(message_id, relay(&shared, &endpoint, &header, &payload).await) });
            }
            DeliveryAction::Notify {
                message_id,
                endpoint,
                notice,
            } => notices.push((message_id, endpoint, notice)),
        }
    }
    for (id, endpoint, notice) in notices {
        let outcome = match shared.http.post(&endpoint).json(&notice).send().await {
            Ok(r) if r.status().is_success() => Ok(()),
            Ok(r) => Err(format!("webhook answered {}", r.status())),
            Err(e) => Err(e.to_string()),
        };
        report(shared, move |van| van.complete_notify(id, outcome)).await;
    }
    while let Some(done) = set.join_next().await {
        match done {
            Ok(Done::Push(id, outcome)) => report(shared, move |van| van.complete_push(id, outcome)).await,
            Ok(Done::Relay(id, outcome)) => report(shared, move |van| van.complete_relay(id, outcome)).await,
            Err(e) => tracing::error!(error = %e, "delivery task panicked"),
        }
    }
}

async fn report(shared: &Arc<Shared>, f: impl FnOnce(&mut Van) -> Result<(), VanError> + Send + 'static) {
    if let Err(e) = shared.with_van(f).await {
        tracing::warn!(?e, "could not record delivery outcome");
    }
}

async fn push(http: &reqwest::Client, endpoint: &str, header: &DepositHeader, payload: &[u8]) -> Result<(), String> {
    let doc_types: Vec<&str> = header.doc_types.iter().map(String::as_str).collect();
    let resp = http
        .post(endpoint)
        .header(wire::SENDER, &header.sender)
        .header(wire::RECIPIENT, &header.recipient)
        .header(wire::CONTROL, &header.control)
        .header(wire::DOC_TYPES, doc_types.join(","))
        .header(wire::ACK, if header.ack_requested { "1" } else { "0" })
        .header(reqwest::header::CONTENT_TYPE, "application/octet-stream")
        .body(payload.to_vec())
        .send()
        .await
        .map_err(|e| e.to_string())?;
    if resp.status().is_success() {
        Ok(())
    } else {
        Err(format!("endpoint answered {}", resp.status()))
    }
}

async fn relay(shared: &Shared, endpoint: &str, header: &DepositHeader, payload: &[u8]) -> RelayOutcome {
    let Some(peer) = shared.config.peer_for(endpoint) else {
        return RelayOutcome::Failed(format!("no peer credentials for {endpoint}"));
    };
    let mut client = VanClient::from_parts(endpoint, shared.http.clone());
    for attempt in 0..2 {
        let cached = shared.peer_sessions.lock().await.get(endpoint).cloned();
        let token = match cached {
            Some(t) => t,
            None => {
                let password = match peer.secret.resolve() {
                    Ok(p) => p,
                    Err(e) => return RelayOutcome::Failed(e.to_string()),
                };
                match client.login(&peer.partner_id, &password).await {
                    Ok(s) => {
                        shared.peer_sessions.lock().await.insert(endpoint.to_owned(), s.token.clone());
                        s.token
                    }
                    Err(e) => return RelayOutcome::Failed(format!("peer login: {e}")),
                }
            }
        };
        client.set_token(Some(token));
        match client.deposit(header, payload.to_vec()).await {
            Ok(DepositOutcome::Queued { .. }) => return RelayOutcome::Accepted,
            Ok(DepositOutcome::Rejected { reason, .. }) => return RelayOutcome::Refused(reason),
            Err(ClientError::Api { status: 401, .. }) if attempt == 0 => {
                shared.peer_sessions.lock().await.remove(endpoint);
            }
            Err(ClientError::Api { status: 409, code, .. }) => return RelayOutcome::Refused(code),
            Err(e) => return RelayOutcome::Failed(e.to_string()),
        }
    }
    RelayOutcome::Failed("peer session rejected twice".into())
}

pub(crate) fn route_from(req: wire::RouteRequest, default_hops: u32) -> InterconnectRoute {
    InterconnectRoute::new(req.pattern, req.endpoint).with_max_hops(req.max_hops.unwrap_or(default_hops))
}
