//! On-disk cache of eigendecompositions, keyed by the content hash of the
//! generating parameters and the matrix-construction version.
//!
//! Entries are written atomically (unique temp file + rename), so concurrent
//! processes can never observe a partial file; a best-effort advisory lock
//! avoids duplicated work when several processes want the same key. Unreadable
//! or corrupt entries are recomputed.

use anyhow::{Context, Result};
use ndarray::{Array2, ShapeBuilder};
use rabi_core::eigensolver::EigenDecomposition;
use rabi_core::{decompose_hamiltonian, ModelParams};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

const MAGIC: &[u8; 8] = b"RABIEIG1";

pub struct Cache {
    dir: PathBuf,
    computes: AtomicU64,
    hits: AtomicU64,
}

impl Cache {
    pub fn new(dir: PathBuf) -> Result<Self> {
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create cache dir {}", dir.display()))?;
        Ok(Cache { dir, computes: AtomicU64::new(0), hits: AtomicU64::new(0) })
    }

    pub fn computes(&self) -> u64 {
        self.computes.load(Ordering::Relaxed)
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.eig"))
    }

    /// Cached decomposition for the Hamiltonian of `params`, computing and
    /// storing it on a miss.
    pub fn get_or_compute(&self, params: &ModelParams) -> Result<Arc<EigenDecomposition>> {
        let key = params.content_hash();
        let path = self.entry_path(&key);
        if let Some(dec) = self.try_load(&path, &key, params) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::new(dec));
        }

        let lock = self.dir.join(format!("{key}.lock"));
        let lock_held = std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&lock)
            .is_ok();
        if !lock_held {
            // another process may be computing; poll briefly for its result
            for _ in 0..50 {
                std::thread::sleep(std::time::Duration::from_millis(100));
                if let Some(dec) = self.try_load(&path, &key, params) {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(Arc::new(dec));
                }
            }
        }

        self.computes.fetch_add(1, Ordering::Relaxed);
        let dec = decompose_hamiltonian(params)?;
        let write_result = self.store(&path, &dec);
        if lock_held {
            let _ = std::fs::remove_file(&lock);
        }
        write_result?;
        Ok(Arc::new(dec))
    }

    fn try_load(&self, path: &Path, key: &str, params: &ModelParams) -> Option<EigenDecomposition> {
        let mut file = std::fs::File::open(path).ok()?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf).ok()?;
        match decode(&buf, key) {
            Some(dec) if dec.dim() == params.dim() => Some(dec),
            _ => {
                eprintln!(
                    "warning: cache entry {} is corrupt or stale; recomputing",
                    path.display()
                );
                None
            }
        }
    }

    fn store(&self, path: &Path, dec: &EigenDecomposition) -> Result<()> {
        let bytes = encode(dec);
        let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
        {
            let mut f = std::fs::File::create(&tmp)
                .with_context(|| format!("cannot write {}", tmp.display()))?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)
            .with_context(|| format!("cannot publish cache entry {}", path.display()))?;
        Ok(())
    }
}

/// Binary layout: magic, D (u64 LE), hash length + UTF-8 hash, energies
/// (D f64 LE), eigenvectors column by column (D*D f64 LE).
fn encode(dec: &EigenDecomposition) -> Vec<u8> {
    let d = dec.dim();
    let hash = dec.params_hash().as_bytes();
    let mut out = Vec::with_capacity(8 + 8 + 8 + hash.len() + 8 * d * (d + 1));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(hash.len() as u64).to_le_bytes());
    out.extend_from_slice(hash);
    for &e in dec.energies() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    for nu in 0..d {
        for &v in dec.vector(nu).iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn decode(bytes: &[u8], expected_hash: &str) -> Option<EigenDecomposition> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Option<&[u8]> {
        let s = bytes.get(*pos..*pos + n)?;
        *pos += n;
        Some(s)
    };
    if take(&mut pos, 8)? != MAGIC {
        return None;
    }
    let d = u64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?) as usize;
    let hash_len = u64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?) as usize;
    let hash = std::str::from_utf8(take(&mut pos, hash_len)?).ok()?;
    if hash != expected_hash {
        return None;
    }
    let mut energies = Vec::with_capacity(d);
    for _ in 0..d {
        energies.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?));
    }
    let mut flat = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        flat.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().ok()?));
    }
    if pos != bytes.len() {
        return None;
    }
    // columns were written contiguously: column-major reassembly
    let vectors = Array2::from_shape_vec((d, d).f(), flat).ok()?;
    Some(EigenDecomposition::from_parts(energies, vectors, hash.to_string()))
}
