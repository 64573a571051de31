//! Helpers for driving the `edi` binary against a live VAN.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdout, Command, Output, Stdio};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;

pub const EDI: &str = env!("CARGO_BIN_EXE_edi");
pub const ADMIN_PASSWORD: &str = "admin-secret";

pub fn po_map() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../maps/po.map.json")
}

/// `edi serve` in a child process.
pub struct Served {
    pub child: Child,
    pub url: String,
    pub config: PathBuf,
    _stdout: BufReader<ChildStdout>,
}

impl Served {
    pub fn start(config: &Path) -> Self {
        let mut child = Command::new(EDI)
            .arg("serve")
            .arg(config)
            .env("EDI_ADMIN_PASSWORD", ADMIN_PASSWORD)
            .env("RUST_LOG", "warn")
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn edi serve");
        let mut stdout = BufReader::new(child.stdout.take().unwrap());
        let mut line = String::new();
        stdout.read_line(&mut line).unwrap();
        let url = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected serve output {line:?}"))
            .to_owned();
        Self {
            child,
            url,
            config: config.to_owned(),
            _stdout: stdout,
        }
    }

    /// SIGKILL, no chance to clean up.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Write a service config for a VAN keeping its state in `dir/data`.
pub fn service_config(dir: &Path, interval_ms: u64) -> PathBuf {
    let path = dir.join("service.toml");
    std::fs::write(
        &path,
        format!(
            "van_id = \"VAN\"\nlisten = \"127.0.0.1:0\"\ndata_dir = \"data\"\ndelivery_interval_ms = {interval_ms}\n\n\
             [admin]\nid = \"admin\"\npassword_env = \"EDI_ADMIN_PASSWORD\"\n"
        ),
    )
    .unwrap();
    path
}

/// One trading partner's working directory: config, keystore, maps.
pub struct Desk {
    pub id: String,
    pub dir: PathBuf,
    pub password: String,
}

impl Desk {
    pub fn new(root: &Path, id: &str, password: &str, van: &str) -> Self {
        let dir = root.join(id.to_lowercase());
        std::fs::create_dir_all(dir.join("maps")).unwrap();
        std::fs::copy(po_map(), dir.join("maps/po.map.json")).unwrap();
        std::fs::write(
            dir.join("config.toml"),
            format!("van = \"{van}\"\npartner_id = \"{id}\"\n"),
        )
        .unwrap();
        Self {
            id: id.into(),
            dir,
            password: password.into(),
        }
    }

    pub fn config(&self) -> PathBuf {
        self.dir.join("config.toml")
    }

    pub fn keys(&self) -> PathBuf {
        self.dir.join("keys")
    }

    pub fn cmd(&self) -> Command {
        let mut c = Command::new(EDI);
        c.arg("--config").arg(self.config()).env("EDI_PASSWORD", &self.password).env_remove("EDI_CONFIG");
        c
    }

    pub fn run(&self, args: &[&str]) -> Output {
        self.cmd().args(args).output().unwrap()
    }

    /// Run and insist on exit status 0.
    pub fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert_eq!(out.status.code(), Some(0), "edi {args:?}: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    pub fn keygen(&self) {
        self.ok(&["keygen", "--pair"]);
    }

    /// Copy this desk's public key into another desk's keystore.
    pub fn share_key_with(&self, other: &Desk) {
        std::fs::create_dir_all(other.keys()).unwrap();
        let name = format!("{}.pub", self.id);
        std::fs::copy(self.keys().join(&name), other.keys().join(&name)).unwrap();
    }
}

/// The VAN operator's desk.
pub fn admin_desk(root: &Path, van: &str) -> Desk {
    Desk::new(root, "admin", ADMIN_PASSWORD, van)
}

/// Register `desk` at the VAN with its public key and screening profile.
pub fn enroll(admin: &Desk, desk: &Desk, accept: &[&str], allow: &[&str]) {
    let key = desk.keys().join(format!("{}.pub", desk.id));
    let mut args = vec!["partner", "add", desk.id.as_str(), "--password-env", "NEW_PARTNER_PASSWORD"];
    for a in accept {
        args.extend(["--accept", a]);
    }
    for a in allow {
        args.extend(["--allow", a]);
    }
    let key = key.to_str().unwrap().to_owned();
    args.extend(["--public-key", key.as_str()]);
    let out = admin.cmd().args(&args).env("NEW_PARTNER_PASSWORD", &desk.password).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

pub fn po_json(number: &str, date: &str, items: &[(&str, &str, &str)]) -> String {
    let items: Vec<serde_json::Value> = items
        .iter()
        .map(|(sku, qty, price)| serde_json::json!({"sku": sku, "qty": qty, "unitPrice": price}))
        .collect();
    serde_json::json!({
        "docType": "PO",
        "header": {"poNumber": number, "poDate": date},
        "items": items,
    })
    .to_string()
}

pub type Inbox = Arc<Mutex<Vec<(HeaderMap, Bytes)>>>;

/// An HTTP endpoint that accepts and records every POST.
pub async fn receiver() -> (String, Inbox) {
    let inbox: Inbox = Arc::default();
    let app = axum::Router::new().route(
        "/in",
        post({
            let inbox = inbox.clone();
            move |headers: HeaderMap, body: Bytes| async move {
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
