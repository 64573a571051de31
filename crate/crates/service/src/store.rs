//! On-disk layout of a VAN data directory.
//!
//! ```text
//! LOCK            held exclusively while a service runs
//! van.key         the VAN's own keypair (64 bytes, mode 0600)
//! partners.json   partner profiles and interconnect routes
//! journal.log     audit-event journal
//! blobs/<id>.sec  deposited envelope bytes
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use edi_core::secenv::KeyPair;
use edi_van::{InterconnectRoute, MessageId, PartnerProfile};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::journal::{Journal, JournalError, Replay};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("data directory {0} is locked by another instance")]
    DataDirLocked(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },

    #[error(transparent)]
    Journal(#[from] JournalError),
}

#[derive(Debug, Default, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PartnersFile {
    pub partners: Vec<PartnerProfile>,
    #[serde(default)]
    pub routes: Vec<InterconnectRoute>,
}

pub struct DataDir {
    root: PathBuf,
    _lock: File,
    journal: Journal,
}

impl DataDir {
    /// Lock the directory (creating it if needed) and replay its journal.
    pub fn open(root: &Path) -> Result<(Self, Replay), StoreError> {
        let io = |path: &Path| {
            let path = path.to_owned();
            move |source| StoreError::Io { path, source }
        };
        fs::create_dir_all(root.join("blobs")).map_err(io(root))?;
        let lock_path = root.join("LOCK");
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io(&lock_path))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::DataDirLocked(root.to_owned())),
            Err(fs::TryLockError::Error(e)) => return Err(io(&lock_path)(e)),
        }
        let (journal, replay) = Journal::open(&root.join("journal.log"))?;
        Ok((
            Self {
                root: root.to_owned(),
                _lock: lock,
                journal,
            },
            replay,
        ))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn journal(&mut self) -> &mut Journal {
        &mut self.journal
    }

    /// The VAN keypair, generated on first use.
    pub fn van_key(&self) -> Result<KeyPair, StoreError> {
        let path = self.root.join("van.key");
        match fs::read(&path) {
            Ok(bytes) => KeyPair::from_bytes(&bytes).map_err(|e| StoreError::Invalid {
                path,
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                let pair = KeyPair::generate();
                write_atomic(&path, &pair.to_bytes(), true).map_err(|source| StoreError::Io { path, source })?;
                Ok(pair)
            }
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    pub fn load_partners(&self) -> Result<PartnersFile, StoreError> {
        let path = self.root.join("partners.json");
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| StoreError::Invalid {
                path,
                reason: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(PartnersFile::default()),
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    pub fn save_partners(&self, file: &PartnersFile) -> Result<(), StoreError> {
        let path = self.root.join("partners.json");
        let mut json = serde_json::to_vec_pretty(file).expect("profiles serialize");
        json.push(b'\n');
        write_atomic(&path, &json, true).map_err(|source| StoreError::Io { path, source })
    }

    fn blob_path(&self, id: MessageId) -> PathBuf {
        self.root.join("blobs").join(format!("{id}.sec"))
    }

    pub fn write_blob(&self, id: MessageId, bytes: &[u8]) -> Result<(), StoreError> {
        let path = self.blob_path(id);
        write_atomic(&path, bytes, false).map_err(|source| StoreError::Io { path, source })
    }

    pub fn read_blob(&self, id: MessageId) -> Option<Vec<u8>> {
        fs::read(self.blob_path(id)).ok()
    }
}

/// Write via a temporary file and rename, so readers see old or new bytes.
fn write_atomic(path: &Path, bytes: &[u8], private: bool) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut opts = OpenOptions::new();
        opts.create(true).write(true).truncate(true);
        #[cfg(unix)]
        if private {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        #[cfg(not(unix))]
        let _ = private;
        let mut f = opts.open(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    if let Some(dir) = path.parent() {
        if let Ok(d) = File::open(dir) {
            let _ = d.sync_all();
        }
    }
    Ok(())
}
