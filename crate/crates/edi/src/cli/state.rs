//! Files the client keeps next to its config: the session cache and the
//! control-number counter.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use edi_core::interchange::ControlCounter;
use edi_van::SessionToken;
use serde::{Deserialize, Serialize};

/// What the session cache holds: a token, never a password.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CachedSession {
    pub van: String,
    pub partner_id: String,
    pub token: String,
    pub expires: DateTime<Utc>,
}

fn open_private(path: &Path, truncate: bool) -> io::Result<File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut opts = OpenOptions::new();
    opts.read(true).write(true).create(true).truncate(truncate);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let file = opts.open(path)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        file.set_permissions(std::fs::Permissions::from_mode(0o600))?;
    }
    Ok(file)
}

/// A cached token for `van`/`partner_id` that is still valid for a minute.
pub fn load_session(path: &Path, van: &str, partner_id: &str) -> Option<String> {
    let bytes = std::fs::read(path).ok()?;
    let s: CachedSession = serde_json::from_slice(&bytes).ok()?;
    (s.van == van && s.partner_id == partner_id && s.expires > Utc::now() + Duration::minutes(1)).then_some(s.token)
}

pub fn save_session(path: &Path, van: &str, session: &SessionToken) -> io::Result<()> {
    let cached = CachedSession {
        van: van.to_owned(),
        partner_id: session.partner_id.clone(),
        token: session.token.clone(),
        expires: session.expires,
    };
    let mut f = open_private(path, true)?;
    f.write_all(&serde_json::to_vec_pretty(&cached).expect("session serializes"))?;
    f.sync_all()
}

pub fn clear_session(path: &Path) {
    let _ = std::fs::remove_file(path);
}

/// Issue the next 9-digit interchange control number. The counter file is
/// locked for the duration, so concurrent invocations never share a number.
pub fn next_control(path: &Path) -> io::Result<String> {
    let mut f = open_private(path, false)?;
    f.lock()?;
    let mut text = String::new();
    f.read_to_string(&mut text)?;
    let last = match text.trim() {
        "" => 0,
        t => t
            .parse::<u64>()
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, format!("{}: not a number", path.display())))?,
    };
    let mut counter = ControlCounter::new().starting_after(last);
    let control = counter
        .next()
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    f.set_len(0)?;
    f.seek(SeekFrom::Start(0))?;
    writeln!(f, "{}", counter.last_issued())?;
    f.sync_all()?;
    Ok(control)
}
