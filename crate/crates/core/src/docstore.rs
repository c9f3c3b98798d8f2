//! Local content-addressed object store. Objects live in `objects/<hex id>`
//! next to an `index.json` with per-object metadata. There is no delete.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::contracts::NotarizationRecord;
use crate::crypto::{hash, Hash};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoredObject {
    pub content_id: Hash,
    pub size: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_type: Option<String>,
    /// Seconds since the Unix epoch.
    pub created: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum DocStoreError {
    #[error("empty content")]
    Empty,
    #[error("unknown object {0}")]
    NotFound(Hash),
    #[error("integrity error: object {expected} hashes to {actual}")]
    Integrity { expected: Hash, actual: Hash },
    #[error("corrupt index: {0}")]
    Index(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug)]
pub struct DocStore {
    root: PathBuf,
    index_lock: Mutex<()>,
}

impl DocStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<DocStore, DocStoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("objects"))?;
        Ok(DocStore {
            root,
            index_lock: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn object_path(&self, id: &Hash) -> PathBuf {
        self.root.join("objects").join(id.to_hex())
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    pub fn put(&self, bytes: &[u8]) -> Result<Hash, DocStoreError> {
        self.put_with(bytes, None).map(|o| o.content_id)
    }

    /// Stores `bytes`; storing identical bytes again returns the original
    /// metadata unchanged.
    pub fn put_with(&self, bytes: &[u8], media_type: Option<&str>) -> Result<StoredObject, DocStoreError> {
        if bytes.is_empty() {
            return Err(DocStoreError::Empty);
        }
        let id = hash(bytes);
        let path = self.object_path(&id);
        let _guard = self.index_lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut index = self.read_index()?;
        if let Some(existing) = index.get(&id) {
            if path.exists() {
                return Ok(existing.clone());
            }
        }
        write_atomic(&path, bytes)?;
        let object = StoredObject {
            content_id: id,
            size: bytes.len() as u64,
            media_type: media_type.map(str::to_string),
            created: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        index.insert(id, object.clone());
        let text = serde_json::to_vec_pretty(&index).expect("index serializes");
        write_atomic(&self.index_path(), &text)?;
        Ok(object)
    }

    /// Returns the object's bytes after checking they still hash to `id`.
    pub fn get(&self, id: &Hash) -> Result<Vec<u8>, DocStoreError> {
        let bytes = match fs::read(self.object_path(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(DocStoreError::NotFound(*id)),
            Err(e) => return Err(e.into()),
        };
        let actual = hash(&bytes);
        if actual != *id {
            return Err(DocStoreError::Integrity {
                expected: *id,
                actual,
            });
        }
        Ok(bytes)
    }

    pub fn stat(&self, id: &Hash) -> Result<Option<StoredObject>, DocStoreError> {
        Ok(self.read_index()?.remove(id))
    }

    pub fn list(&self) -> Result<Vec<StoredObject>, DocStoreError> {
        Ok(self.read_index()?.into_values().collect())
    }

    /// Fetches the document a notarization points at, provided the locator
    /// is a content id in this store, and checks it against the recorded
    /// digest.
    pub fn verify_notarization(&self, record: &NotarizationRecord) -> Result<Vec<u8>, DocStoreError> {
        let bytes = self.get(&record.digest)?;
        if let Ok(id) = record.locator.parse::<Hash>() {
            if id != record.digest {
                return Err(DocStoreError::Integrity {
                    expected: record.digest,
                    actual: id,
                });
            }
        }
        Ok(bytes)
    }

    fn read_index(&self) -> Result<BTreeMap<Hash, StoredObject>, DocStoreError> {
        match fs::read(self.index_path()) {
            Ok(b) => serde_json::from_slice(&b).map_err(|e| DocStoreError::Index(e.to_string())),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(e.into()),
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_extension(format!("tmp-{}-{n}", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)
}
