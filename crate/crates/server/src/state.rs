use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use sidr::sim::EvalReport;
use sidr::{FeatureMatrix, LabelMap, Session, SessionConfig};

/// An uploaded dataset: features, any number of named label sets, optional thumbnails.
#[derive(Debug)]
pub struct Dataset {
    pub features: Arc<FeatureMatrix>,
    pub labels: BTreeMap<String, LabelMap>,
    pub thumbnails: HashMap<String, Thumbnail>,
}

#[derive(Debug, Clone)]
pub struct Thumbnail {
    pub content_type: &'static str,
    pub bytes: Vec<u8>,
}

/// Reads a tar archive whose entries are named `<item id>.<ext>`; entries for unknown ids,
/// directories and hidden files are skipped.
pub fn read_thumbnails(
    archive: &[u8],
    features: &FeatureMatrix,
) -> std::io::Result<HashMap<String, Thumbnail>> {
    let mut out = HashMap::new();
    let mut tar = tar::Archive::new(archive);
    for entry in tar.entries()? {
        let mut entry = entry?;
        if !entry.header().entry_type().is_file() {
            continue;
        }
        let path = entry.path()?.into_owned();
        let (Some(stem), ext) = (path.file_stem().and_then(|s| s.to_str()), path.extension())
        else {
            continue;
        };
        if stem.starts_with('.') || features.index_of(stem).is_none() {
            continue;
        }
        let content_type = match ext.and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("png") => "image/png",
            Some("jpg" | "jpeg") => "image/jpeg",
            Some("gif") => "image/gif",
            Some("webp") => "image/webp",
            Some("svg") => "image/svg+xml",
            _ => "application/octet-stream",
        };
        let mut bytes = Vec::new();
        entry.read_to_end(&mut bytes)?;
        out.insert(stem.to_owned(), Thumbnail { content_type, bytes });
    }
    Ok(out)
}

/// A session plus its single-writer flag. The mutex is only held for short copies, never
/// while training, so reads never wait on a fine-tune.
#[derive(Debug)]
pub struct SessionSlot {
    pub dataset_id: String,
    busy: AtomicBool,
    session: Mutex<Session>,
}

impl SessionSlot {
    pub fn new(dataset_id: String, session: Session) -> Self {
        SessionSlot { dataset_id, busy: AtomicBool::new(false), session: Mutex::new(session) }
    }

    /// Claims the writer role, or `Busy` when another update is in flight.
    pub fn try_begin(self: &Arc<Self>) -> Result<WriteGuard, sidr::Error> {
        self.busy
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map_err(|_| sidr::Error::Busy)?;
        Ok(WriteGuard { slot: self.clone() })
    }

    pub fn is_busy(&self) -> bool {
        self.busy.load(Ordering::Acquire)
    }

    pub fn read<T>(&self, f: impl FnOnce(&Session) -> T) -> T {
        f(&self.session.lock().unwrap())
    }
}

/// Held while a session is being updated; releases the busy flag on drop.
#[derive(Debug)]
pub struct WriteGuard {
    slot: Arc<SessionSlot>,
}

impl WriteGuard {
    pub fn snapshot(&self) -> Session {
        self.slot.session.lock().unwrap().clone()
    }

    pub fn commit(&self, session: Session) {
        *self.slot.session.lock().unwrap() = session;
    }
}

impl Drop for WriteGuard {
    fn drop(&mut self) {
        self.slot.busy.store(false, Ordering::Release);
    }
}

#[derive(Debug)]
pub enum JobStatus {
    Running,
    Done(Box<EvalReport>),
    Failed(String),
}

#[derive(Debug)]
pub struct Job {
    pub done: AtomicUsize,
    pub total: AtomicUsize,
    pub status: Mutex<JobStatus>,
}

/// Everything the handlers share.
#[derive(Debug, Default)]
pub struct AppState {
    pub datasets: RwLock<HashMap<String, Arc<Dataset>>>,
    pub sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    pub jobs: RwLock<HashMap<String, Arc<Job>>>,
    /// Defaults for new sessions; a request may override them.
    pub session_defaults: SessionConfig,
    /// When set, head checkpoints are written to `<dir>/sessions/<id>/head.json`.
    pub data_dir: Option<PathBuf>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(data_dir: Option<PathBuf>) -> Self {
        AppState { data_dir, ..Default::default() }
    }

    pub fn fresh_id(&self, prefix: &str) -> String {
        format!("{prefix}-{}", self.next_id.fetch_add(1, Ordering::Relaxed) + 1)
    }

    pub fn dataset(&self, id: &str) -> Option<Arc<Dataset>> {
        self.datasets.read().unwrap().get(id).cloned()
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionSlot>> {
        self.sessions.read().unwrap().get(id).cloned()
    }

    pub fn job(&self, id: &str) -> Option<Arc<Job>> {
        self.jobs.read().unwrap().get(id).cloned()
    }

    pub fn checkpoint_path(&self, session_id: &str) -> Option<PathBuf> {
        self.data_dir
            .as_deref()
            .map(|d| checkpoint_file(d, session_id))
    }
}

fn checkpoint_file(dir: &Path, session_id: &str) -> PathBuf {
    dir.join("sessions").join(session_id).join("head.json")
}
