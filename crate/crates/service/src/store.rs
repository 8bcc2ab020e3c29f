//! In-memory scene store with LRU eviction and an optional backing directory.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use fillight::pipeline::{AssetBundle, IngestError, IngestOptions};
use fillight::SceneAssets;

/// Longer side of each preview pyramid level, smallest first.
pub const PYRAMID_SIDES: [usize; 2] = [128, 256];

#[derive(Debug)]
pub struct PyramidLevel {
    pub side: usize,
    pub assets: SceneAssets,
    /// New pixels per full-resolution pixel.
    pub scale: f64,
}

/// A registered scene. Immutable once built.
#[derive(Debug)]
pub struct SceneHandle {
    pub id: String,
    pub assets: SceneAssets,
    pub pyramid: Vec<PyramidLevel>,
    bundle: AssetBundle,
}

impl SceneHandle {
    pub fn build(id: String, bundle: AssetBundle, opts: &IngestOptions) -> Result<Self, IngestError> {
        let assets = bundle.decode(opts)?;
        let pyramid = PYRAMID_SIDES
            .iter()
            .map(|&side| {
                let (small, scale) = assets.downsampled(side);
                PyramidLevel { side, assets: small, scale }
            })
            .collect();
        Ok(Self { id, assets, pyramid, bundle })
    }

    pub fn level(&self, side: usize) -> Option<&PyramidLevel> {
        self.pyramid.iter().find(|l| l.side == side)
    }
}

struct Entry {
    handle: Arc<SceneHandle>,
    last_used: AtomicU64,
}

/// Many concurrent readers; registration and eviction take the write lock.
pub struct SceneStore {
    entries: RwLock<HashMap<String, Entry>>,
    clock: AtomicU64,
    capacity: usize,
    backing_dir: Option<PathBuf>,
    ingest: IngestOptions,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("scene store: {0}")]
    Io(#[from] std::io::Error),
}

impl SceneStore {
    pub fn new(capacity: usize, backing_dir: Option<PathBuf>, ingest: IngestOptions) -> Self {
        Self {
            entries: RwLock::new(HashMap::new()),
            clock: AtomicU64::new(0),
            capacity: capacity.max(1),
            backing_dir,
            ingest,
        }
    }

    fn tick(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::Relaxed) + 1
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains_in_memory(&self, id: &str) -> bool {
        self.entries.read().expect("store lock").contains_key(id)
    }

    /// Validates and stores a bundle under its content hash. Registering the
    /// same bytes again returns the same id without rebuilding.
    pub fn register(&self, bundle: AssetBundle) -> Result<(String, bool), StoreError> {
        let id = bundle.content_hash();
        if let Some(e) = self.entries.read().expect("store lock").get(&id) {
            e.last_used.store(self.tick(), Ordering::Relaxed);
            return Ok((id, false));
        }
        let handle = SceneHandle::build(id.clone(), bundle, &self.ingest)?;
        self.insert(handle);
        Ok((id, true))
    }

    fn insert(&self, handle: SceneHandle) -> Arc<SceneHandle> {
        let handle = Arc::new(handle);
        let mut evicted = Vec::new();
        {
            let mut map = self.entries.write().expect("store lock");
            if let Some(e) = map.get(&handle.id) {
                return e.handle.clone();
            }
            while map.len() >= self.capacity {
                let oldest = map
                    .iter()
                    .min_by_key(|(_, e)| e.last_used.load(Ordering::Relaxed))
                    .map(|(k, _)| k.clone())
                    .expect("non-empty map");
                if let Some(e) = map.remove(&oldest) {
                    evicted.push(e.handle);
                }
            }
            map.insert(handle.id.clone(), Entry { handle: handle.clone(), last_used: AtomicU64::new(self.tick()) });
        }
        for old in evicted {
            self.spill(&old);
        }
        handle
    }

    fn spill(&self, handle: &SceneHandle) {
        let Some(dir) = &self.backing_dir else {
            log::info!("evicted scene {}", handle.id);
            return;
        };
        let path = dir.join(&handle.id);
        if path.exists() {
            return;
        }
        match handle.bundle.write_dir(&path) {
            Ok(()) => log::info!("spilled scene {} to {}", handle.id, path.display()),
            Err(e) => log::warn!("cannot spill scene {}: {e}", handle.id),
        }
    }

    /// Looks a scene up, reloading it from the backing directory when it is
    /// not in memory. `Ok(None)` for unknown ids.
    pub fn get(&self, id: &str) -> Result<Option<Arc<SceneHandle>>, StoreError> {
        if let Some(e) = self.entries.read().expect("store lock").get(id) {
            e.last_used.store(self.tick(), Ordering::Relaxed);
            return Ok(Some(e.handle.clone()));
        }
        let Some(dir) = &self.backing_dir else {
            return Ok(None);
        };
        if !valid_id(id) {
            return Ok(None);
        }
        let path = dir.join(id);
        if !path.is_dir() {
            return Ok(None);
        }
        let bundle = AssetBundle::read_dir(&path)?;
        let handle = SceneHandle::build(id.to_string(), bundle, &self.ingest)?;
        Ok(Some(self.insert(handle)))
    }
}

/// Ids usable as a single directory name.
fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use fillight::synthetic;

    fn bundle(seed: u64) -> AssetBundle {
        AssetBundle::from_scene(&synthetic::face_scene(40, 30, seed))
    }

    #[test]
    fn register_is_idempotent() {
        let store = SceneStore::new(4, None, IngestOptions::default());
        let (a, fresh) = store.register(bundle(1)).unwrap();
        let (b, again) = store.register(bundle(1)).unwrap();
        assert_eq!(a, b);
        assert!(fresh && !again);
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn pyramid_levels() {
        let h = SceneHandle::build("x".into(), bundle(2), &IngestOptions::default()).unwrap();
        assert_eq!(h.level(128).unwrap().assets.dims(), (40, 30));
        assert_eq!(h.level(128).unwrap().scale, 1.0);
        let big = AssetBundle::from_scene(&synthetic::face_scene(300, 200, 2));
        let h = SceneHandle::build("y".into(), big, &IngestOptions::default()).unwrap();
        assert_eq!(h.level(128).unwrap().assets.dims(), (128, 85));
        assert_eq!(h.level(256).unwrap().assets.dims(), (256, 171));
    }

    #[test]
    fn lru_eviction_and_spill() {
        let dir = tempfile::tempdir().unwrap();
        let store = SceneStore::new(2, Some(dir.path().to_path_buf()), IngestOptions::default());
        let (a, _) = store.register(bundle(1)).unwrap();
        let (b, _) = store.register(bundle(2)).unwrap();
        store.get(&a).unwrap();
        let (c, _) = store.register(bundle(3)).unwrap();
        assert!(store.contains_in_memory(&a) && store.contains_in_memory(&c));
        assert!(!store.contains_in_memory(&b));
        assert!(dir.path().join(&b).join("mask.png").exists());
        let back = store.get(&b).unwrap().unwrap();
        assert_eq!(back.id, b);
        assert!(store.get("nope").unwrap().is_none());
        assert!(store.get("../etc").unwrap().is_none());
    }

    #[test]
    fn eviction_without_backing_forgets() {
        let store = SceneStore::new(1, None, IngestOptions::default());
        let (a, _) = store.register(bundle(1)).unwrap();
        store.register(bundle(2)).unwrap();
        assert!(store.get(&a).unwrap().is_none());
    }
}
