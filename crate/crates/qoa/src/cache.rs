//! On-disk cache of slice computations.
//!
//! Entries live under `<dir>/v<VERSION>/<sha256>.json`, where the hash is
//! taken over the entry kind and a canonical key string. Every file records
//! its version; entries from other versions are ignored, never migrated.
//! The directory defaults to `$XDG_CACHE_HOME/qoa` (or `~/.cache/qoa`) and
//! is overridden by `QOA_CACHE_DIR`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qoa_core::{Rational, SparseMatrix};

pub const VERSION: u32 = 1;
pub const ENV_VAR: &str = "QOA_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    version: u32,
    kind: String,
    key: String,
    payload: T,
}

impl Cache {
    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()) }
    }

    /// Explicit directory, else `QOA_CACHE_DIR`, else the user cache dir.
    pub fn from_env(explicit: Option<&Path>) -> Self {
        if let Some(d) = explicit {
            return Cache::at(d);
        }
        if let Some(d) = std::env::var_os(ENV_VAR) {
            return Cache::at(d);
        }
        let base = std::env::var_os("XDG_CACHE_HOME")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache")));
        match base {
            Some(b) => Cache::at(b.join("qoa")),
            None => Cache::disabled(),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, kind: &str, key: &str) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let mut h = Sha256::new();
        h.update(kind.as_bytes());
        h.update([0u8]);
        h.update(key.as_bytes());
        Some(dir.join(format!("v{VERSION}")).join(format!("{}.json", hex::encode(h.finalize()))))
    }

    pub fn get<T: DeserializeOwned>(&self, kind: &str, key: &str) -> Option<T> {
        let path = self.path(kind, key)?;
        let text = fs::read_to_string(path).ok()?;
        let env: Envelope<T> = serde_json::from_str(&text).ok()?;
        (env.version == VERSION && env.kind == kind && env.key == key).then_some(env.payload)
    }

    /// Best effort: write failures leave the cache cold.
    pub fn put<T: Serialize>(&self, kind: &str, key: &str, payload: &T) {
        let Some(path) = self.path(kind, key) else { return };
        let env = Envelope {
            version: VERSION,
            kind: kind.to_string(),
            key: key.to_string(),
            payload,
        };
        let Ok(text) = serde_json::to_string(&env) else { return };
        let Some(parent) = path.parent() else { return };
        if fs::create_dir_all(parent).is_err() {
            return;
        }
        let tmp = parent.join(format!(".{}.{}", std::process::id(), path.file_name().unwrap().to_string_lossy()));
        let ok = fs::File::create(&tmp).and_then(|mut f| f.write_all(text.as_bytes())).is_ok();
        if ok {
            let _ = fs::rename(&tmp, &path);
        } else {
            let _ = fs::remove_file(&tmp);
        }
    }
}

/// Sparse triplet form `{rows, cols, entries: [[i, j, "p/q"], …]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplets {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, String)>,
}

impl Triplets {
    pub fn from_matrix(m: &SparseMatrix) -> Self {
        Triplets {
            rows: m.nrows(),
            cols: m.ncols(),
            entries: m.triplets().map(|(i, j, v)| (i, j, v.to_string())).collect(),
        }
    }

    pub fn to_matrix(&self) -> Option<SparseMatrix> {
        let mut t = Vec::with_capacity(self.entries.len());
        for (i, j, v) in &self.entries {
            if *i >= self.rows || *j >= self.cols {
                return None;
            }
            t.push((*i, *j, v.parse::<Rational>().ok()?));
        }
        Some(SparseMatrix::from_triplets(self.rows, self.cols, t))
    }
}
