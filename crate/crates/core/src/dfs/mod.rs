//! Simulated distributed file system.
//!
//! A rooted tree of byte files addressed by `/`-separated paths. Every byte
//! handed out by a read and every byte accepted by a write is counted in an
//! [`IoLedger`]; the engines and the storage readers rely on those counters
//! to attribute I/O to queries. Storage is either a real local directory
//! (so the warehouse layout can be inspected with ordinary tools) or an
//! in-memory tree for tests.

mod ledger;
mod path;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

pub use ledger::{IoLedger, LedgerSnapshot};
pub use path::{join, normalize, parent, file_name};

use crate::error::{Error, Result};

pub const DEFAULT_BLOCK_SIZE: u64 = 1 << 20;

const TEMP_PREFIX: &str = ".~tmp";

#[derive(Debug, Clone)]
pub struct DfsConfig {
    /// Granularity used by split planning. Ledger accounting is exact-byte.
    pub block_size: u64,
    /// Backing directory; `None` keeps everything in memory.
    pub root: Option<PathBuf>,
}

impl Default for DfsConfig {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            root: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirEntry {
    pub name: String,
    pub is_directory: bool,
    /// For directories, the recursive size of all descendant files.
    pub size: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DirListing {
    pub entries: Vec<DirEntry>,
}

impl DirListing {
    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

#[derive(Debug, Default)]
struct MemTree {
    files: BTreeMap<String, Arc<Vec<u8>>>,
    dirs: BTreeSet<String>,
}

impl MemTree {
    fn add_dirs(&mut self, dir: &str) {
        let mut cur = dir.to_string();
        loop {
            if !self.dirs.insert(cur.clone()) {
                break;
            }
            match parent(&cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
    }
}

#[derive(Debug)]
enum Backend {
    Disk(PathBuf),
    Memory(RwLock<MemTree>),
}

#[derive(Debug)]
pub struct Dfs {
    config: DfsConfig,
    backend: Backend,
    ledger: IoLedger,
    temp_counter: AtomicU64,
}

impl Dfs {
    pub fn new(config: DfsConfig) -> Result<Self> {
        if config.block_size == 0 {
            return Err(Error::Range("block_size must be positive".into()));
        }
        let backend = match &config.root {
            Some(root) => {
                fs::create_dir_all(root).map_err(|e| Error::io(root.display().to_string(), e))?;
                let probe = root.join(format!("{TEMP_PREFIX}-probe"));
                fs::write(&probe, b"").map_err(|e| Error::io(root.display().to_string(), e))?;
                let _ = fs::remove_file(&probe);
                Backend::Disk(root.clone())
            }
            None => {
                let mut tree = MemTree::default();
                tree.dirs.insert("/".to_string());
                Backend::Memory(RwLock::new(tree))
            }
        };
        Ok(Self {
            config,
            backend,
            ledger: IoLedger::default(),
            temp_counter: AtomicU64::new(0),
        })
    }

    pub fn in_memory() -> Self {
        Self::new(DfsConfig::default()).expect("in-memory dfs")
    }

    pub fn on_disk(root: impl Into<PathBuf>) -> Result<Self> {
        Self::new(DfsConfig {
            root: Some(root.into()),
            ..DfsConfig::default()
        })
    }

    pub fn config(&self) -> &DfsConfig {
        &self.config
    }

    pub fn block_size(&self) -> u64 {
        self.config.block_size
    }

    pub fn ledger(&self) -> &IoLedger {
        &self.ledger
    }

    fn host_path(root: &Path, path: &str) -> PathBuf {
        let rel = path.trim_start_matches('/');
        if rel.is_empty() {
            root.to_path_buf()
        } else {
            root.join(rel)
        }
    }

    /// Writes `content` to `path`, replacing any previous file. Parents are
    /// created as needed. Returns the number of bytes written.
    pub fn write_file(&self, path: &str, content: &[u8]) -> Result<u64> {
        let path = normalize(path)?;
        if path == "/" {
            return Err(Error::Range("cannot write to the root directory".into()));
        }
        let dir = parent(&path).unwrap_or_else(|| "/".to_string());
        match &self.backend {
            Backend::Disk(root) => {
                let host = Self::host_path(root, &path);
                if host.is_dir() {
                    return Err(Error::AlreadyExists(format!("{path} is a directory")));
                }
                let host_dir = Self::host_path(root, &dir);
                fs::create_dir_all(&host_dir).map_err(|e| Error::io(&path, e))?;
                let n = self.temp_counter.fetch_add(1, Ordering::Relaxed);
                let tmp = host_dir.join(format!("{TEMP_PREFIX}-{}-{n}", std::process::id()));
                fs::write(&tmp, content).map_err(|e| Error::io(&path, e))?;
                fs::rename(&tmp, &host).map_err(|e| Error::io(&path, e))?;
            }
            Backend::Memory(tree) => {
                let mut tree = tree.write().expect("dfs lock poisoned");
                if tree.dirs.contains(&path) {
                    return Err(Error::AlreadyExists(format!("{path} is a directory")));
                }
                tree.add_dirs(&dir);
                tree.files.insert(path, Arc::new(content.to_vec()));
            }
        }
        let len = content.len() as u64;
        self.ledger.record_write(len);
        Ok(len)
    }

    pub fn read_file(&self, path: &str) -> Result<Vec<u8>> {
        let path = normalize(path)?;
        let bytes = match &self.backend {
            Backend::Disk(root) => {
                let host = Self::host_path(root, &path);
                if !host.is_file() {
                    return Err(Error::NotFound(path));
                }
                fs::read(&host).map_err(|e| Error::io(&path, e))?
            }
            Backend::Memory(tree) => {
                let tree = tree.read().expect("dfs lock poisoned");
                tree.files
                    .get(&path)
                    .map(|b| b.as_ref().clone())
                    .ok_or_else(|| Error::NotFound(path.clone()))?
            }
        };
        self.ledger.record_open();
        self.ledger.record_read(bytes.len() as u64);
        Ok(bytes)
    }

    /// Reads `length` bytes at `offset`. Only `length` is charged to the ledger.
    pub fn read_range(&self, path: &str, offset: u64, length: u64) -> Result<Vec<u8>> {
        let path = normalize(path)?;
        let size = self.file_size(&path)?;
        let end = offset.checked_add(length);
        if end.is_none_or(|end| end > size) {
            return Err(Error::Range(format!(
                "{path}: range {offset}+{length} exceeds file size {size}"
            )));
        }
        let bytes = match &self.backend {
            Backend::Disk(root) => {
                let host = Self::host_path(root, &path);
                let mut f = fs::File::open(&host).map_err(|e| Error::io(&path, e))?;
                f.seek(SeekFrom::Start(offset)).map_err(|e| Error::io(&path, e))?;
                let mut buf = vec![0u8; length as usize];
                f.read_exact(&mut buf).map_err(|e| Error::io(&path, e))?;
                buf
            }
            Backend::Memory(tree) => {
                let tree = tree.read().expect("dfs lock poisoned");
                let data = tree
                    .files
                    .get(&path)
                    .ok_or_else(|| Error::NotFound(path.clone()))?;
                data[offset as usize..(offset + length) as usize].to_vec()
            }
        };
        self.ledger.record_open();
        self.ledger.record_read(length);
        Ok(bytes)
    }

    pub fn file_size(&self, path: &str) -> Result<u64> {
        let path = normalize(path)?;
        match &self.backend {
            Backend::Disk(root) => {
                let host = Self::host_path(root, &path);
                match fs::metadata(&host) {
                    Ok(m) if m.is_file() => Ok(m.len()),
                    _ => Err(Error::NotFound(path)),
                }
            }
            Backend::Memory(tree) => {
                let tree = tree.read().expect("dfs lock poisoned");
                tree.files
                    .get(&path)
                    .map(|b| b.len() as u64)
                    .ok_or(Error::NotFound(path))
            }
        }
    }

    pub fn is_dir(&self, path: &str) -> bool {
        let Ok(path) = normalize(path) else {
            return false;
        };
        match &self.backend {
            Backend::Disk(root) => Self::host_path(root, &path).is_dir(),
            Backend::Memory(tree) => tree.read().expect("dfs lock poisoned").dirs.contains(&path),
        }
    }

    pub fn is_file(&self, path: &str) -> bool {
        self.file_size(path).is_ok()
    }

    pub fn exists(&self, path: &str) -> bool {
        self.is_dir(path) || self.is_file(path)
    }

    pub fn mkdirs(&self, path: &str) -> Result<()> {
        let path = normalize(path)?;
        match &self.backend {
            Backend::Disk(root) => {
                let host = Self::host_path(root, &path);
                if host.is_file() {
                    return Err(Error::AlreadyExists(format!("{path} is a file")));
                }
                fs::create_dir_all(&host).map_err(|e| Error::io(&path, e))
            }
            Backend::Memory(tree) => {
                let mut tree = tree.write().expect("dfs lock poisoned");
                if tree.files.contains_key(&path) {
                    return Err(Error::AlreadyExists(format!("{path} is a file")));
                }
                tree.add_dirs(&path);
                Ok(())
            }
        }
    }

    /// Immediate children of a directory as `(name, is_directory)`, sorted by name.
    fn children(&self, dir: &str) -> Result<Vec<(String, bool)>> {
        match &self.backend {
            Backend::Disk(root) => {
                let host = Self::host_path(root, dir);
                let rd = fs::read_dir(&host).map_err(|e| Error::io(dir, e))?;
                let mut out = Vec::new();
                for entry in rd {
                    let entry = entry.map_err(|e| Error::io(dir, e))?;
                    let name = entry.file_name().to_string_lossy().into_owned();
                    if name.starts_with(TEMP_PREFIX) {
                        continue;
                    }
                    let is_dir = entry.file_type().map_err(|e| Error::io(dir, e))?.is_dir();
                    out.push((name, is_dir));
                }
                out.sort();
                Ok(out)
            }
            Backend::Memory(tree) => {
                let tree = tree.read().expect("dfs lock poisoned");
                let prefix = if dir == "/" { "/".to_string() } else { format!("{dir}/") };
                let mut out: Vec<(String, bool)> = Vec::new();
                for d in tree.dirs.range(prefix.clone()..) {
                    if !d.starts_with(&prefix) {
                        break;
                    }
                    let rest = &d[prefix.len()..];
                    if !rest.is_empty() && !rest.contains('/') {
                        out.push((rest.to_string(), true));
                    }
                }
                for f in tree.files.range(prefix.clone()..) {
                    if !f.0.starts_with(&prefix) {
                        break;
                    }
                    let rest = &f.0[prefix.len()..];
                    if !rest.contains('/') {
                        out.push((rest.to_string(), false));
                    }
                }
                out.sort();
                Ok(out)
            }
        }
    }

    /// All files below `path` (recursively) with their sizes, sorted by path.
    /// Does not touch the ledger.
    pub fn files_under(&self, path: &str) -> Result<Vec<(String, u64)>> {
        let path = normalize(path)?;
        if self.is_file(&path) {
            let size = self.file_size(&path)?;
            return Ok(vec![(path, size)]);
        }
        if !self.is_dir(&path) {
            return Err(Error::NotFound(path));
        }
        let mut out = Vec::new();
        self.collect_files(&path, &mut out)?;
        Ok(out)
    }

    fn collect_files(&self, dir: &str, out: &mut Vec<(String, u64)>) -> Result<()> {
        for (name, is_dir) in self.children(dir)? {
            let child = join(dir, &name);
            if is_dir {
                self.collect_files(&child, out)?;
            } else {
                let size = self.file_size(&child)?;
                out.push((child, size));
            }
        }
        Ok(())
    }

    fn recursive_size(&self, path: &str, is_dir: bool) -> Result<u64> {
        if is_dir {
            Ok(self.files_under(path)?.iter().map(|(_, s)| s).sum())
        } else {
            self.file_size(path)
        }
    }

    /// Immediate children of `path`; directory sizes are recursive.
    pub fn list(&self, path: &str) -> Result<DirListing> {
        let path = normalize(path)?;
        if self.is_file(&path) {
            let size = self.file_size(&path)?;
            return Ok(DirListing {
                entries: vec![DirEntry {
                    name: file_name(&path).to_string(),
                    is_directory: false,
                    size,
                }],
            });
        }
        if !self.is_dir(&path) {
            return Err(Error::NotFound(path));
        }
        let mut entries = Vec::new();
        for (name, is_dir) in self.children(&path)? {
            let size = self.recursive_size(&join(&path, &name), is_dir)?;
            entries.push(DirEntry {
                name,
                is_directory: is_dir,
                size,
            });
        }
        Ok(DirListing { entries })
    }

    /// Disk usage: one entry per immediate child with recursive sizes.
    pub fn du(&self, path: &str) -> Result<DirListing> {
        self.list(path)
    }

    /// Removes a file or a directory tree. Missing paths are not an error.
    pub fn remove(&self, path: &str) -> Result<()> {
        let path = normalize(path)?;
        match &self.backend {
            Backend::Disk(root) => {
                let host = Self::host_path(root, &path);
                if host.is_dir() {
                    fs::remove_dir_all(&host).map_err(|e| Error::io(&path, e))?;
                } else if host.is_file() {
                    fs::remove_file(&host).map_err(|e| Error::io(&path, e))?;
                }
                if path == "/" {
                    fs::create_dir_all(&host).map_err(|e| Error::io(&path, e))?;
                }
            }
            Backend::Memory(tree) => {
                let mut tree = tree.write().expect("dfs lock poisoned");
                tree.files.remove(&path);
                let prefix = if path == "/" { "/".to_string() } else { format!("{path}/") };
                tree.files.retain(|k, _| !k.starts_with(&prefix));
                tree.dirs.retain(|k| k != &path && !k.starts_with(&prefix));
                tree.dirs.insert("/".to_string());
            }
        }
        Ok(())
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<()> {
        let from = normalize(from)?;
        let to = normalize(to)?;
        if !self.is_file(&from) {
            return Err(Error::NotFound(from));
        }
        let dir = parent(&to).unwrap_or_else(|| "/".to_string());
        match &self.backend {
            Backend::Disk(root) => {
                fs::create_dir_all(Self::host_path(root, &dir)).map_err(|e| Error::io(&to, e))?;
                fs::rename(Self::host_path(root, &from), Self::host_path(root, &to))
                    .map_err(|e| Error::io(&from, e))
            }
            Backend::Memory(tree) => {
                let mut tree = tree.write().expect("dfs lock poisoned");
                let data = tree.files.remove(&from).ok_or_else(|| Error::NotFound(from.clone()))?;
                tree.add_dirs(&dir);
                tree.files.insert(to, data);
                Ok(())
            }
        }
    }
}
