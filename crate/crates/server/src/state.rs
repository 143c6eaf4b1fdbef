use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use manuscriptor_core::corpus::{Snapshot, SnapshotError};
use manuscriptor_core::library::{Library, LibraryError, MetadataResolver};
use manuscriptor_core::Engine;
use parking_lot::Mutex;

use crate::error::{ApiError, ErrorCode};

pub const DEFAULT_USER: &str = "default";

/// An engine together with the manifest hash of the snapshot it was built from.
pub struct Loaded {
    pub engine: Engine,
    pub hash: String,
}

impl Loaded {
    pub fn new(snapshot: Snapshot, hash: String) -> Self {
        Self {
            engine: Engine::new(snapshot),
            hash,
        }
    }
}

struct Libraries {
    dir: PathBuf,
    open: Mutex<HashMap<String, Arc<Mutex<Library>>>>,
}

/// State shared by all request handlers.
///
/// The loaded snapshot sits behind an atomic pointer: a reload swaps in a new
/// one while in-flight requests keep the `Arc` they already hold.
#[derive(Clone)]
pub struct AppState {
    loaded: Arc<ArcSwapOption<Loaded>>,
    snapshot_dir: Option<PathBuf>,
    libraries: Arc<Libraries>,
    resolver: Arc<dyn MetadataResolver>,
}

impl AppState {
    pub fn new(
        snapshot_dir: Option<PathBuf>,
        library_dir: PathBuf,
        resolver: Arc<dyn MetadataResolver>,
    ) -> Self {
        Self {
            loaded: Arc::new(ArcSwapOption::empty()),
            snapshot_dir,
            libraries: Arc::new(Libraries {
                dir: library_dir,
                open: Mutex::new(HashMap::new()),
            }),
            resolver,
        }
    }

    pub fn loaded(&self) -> Result<Arc<Loaded>, ApiError> {
        self.loaded.load_full().ok_or_else(ApiError::unavailable)
    }

    pub fn install(&self, loaded: Loaded) {
        self.loaded.store(Some(Arc::new(loaded)));
    }

    /// Loads the configured snapshot directory and swaps it in. On failure the
    /// previous snapshot, if any, stays in place.
    pub fn reload(&self) -> Result<Arc<Loaded>, ApiError> {
        let dir = self.snapshot_dir.as_deref().ok_or_else(|| {
            ApiError::new(ErrorCode::Unavailable, "no snapshot directory configured")
        })?;
        let loaded = Arc::new(load_dir(dir)?);
        self.loaded.store(Some(loaded.clone()));
        Ok(loaded)
    }

    pub fn resolver(&self) -> &dyn MetadataResolver {
        self.resolver.as_ref()
    }

    fn library_handle(&self, user: &str) -> Result<Arc<Mutex<Library>>, ApiError> {
        let mut open = self.libraries.open.lock();
        if let Some(lib) = open.get(user) {
            return Ok(lib.clone());
        }
        let lib = Library::load(&self.library_path(user))?;
        let handle = Arc::new(Mutex::new(lib));
        open.insert(user.to_string(), handle.clone());
        Ok(handle)
    }

    fn library_path(&self, user: &str) -> PathBuf {
        self.libraries.dir.join(format!("{user}.json"))
    }

    /// Runs a read-only closure on the user's library.
    pub fn read_library<T>(
        &self,
        user: &str,
        f: impl FnOnce(&Library) -> T,
    ) -> Result<T, ApiError> {
        let handle = self.library_handle(user)?;
        let lib = handle.lock();
        Ok(f(&lib))
    }

    /// Runs `f` on a copy of the user's library and commits it (file first,
    /// then memory) only if `f` succeeds. Writes for one user are serialized.
    pub fn write_library<T>(
        &self,
        user: &str,
        f: impl FnOnce(&mut Library) -> Result<T, LibraryError>,
    ) -> Result<T, ApiError> {
        let handle = self.library_handle(user)?;
        let mut lib = handle.lock();
        let mut draft = lib.clone();
        let out = f(&mut draft)?;
        if draft != *lib {
            draft.save(&self.library_path(user))?;
            *lib = draft;
        }
        Ok(out)
    }
}

pub fn load_dir(dir: &Path) -> Result<Loaded, SnapshotError> {
    let (snapshot, hash) = Snapshot::load(dir)?;
    Ok(Loaded::new(snapshot, hash))
}

/// Accepts user names usable as file stems.
pub fn valid_user(user: &str) -> bool {
    !user.is_empty()
        && user.len() <= 64
        && user
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}
