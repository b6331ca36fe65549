//! Content-addressed binary cache for diagonalization results.
//!
//! One file per key under a cache directory. Each file is a container
//! with a fixed header and a checksummed little-endian payload:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "EFST"
//! 4       4     container format version (u32)
//! 8       32    key digest (sha256 of the key string)
//! 40      32    payload checksum (sha256 of the payload bytes)
//! 72      8     payload length (u64)
//! 80      ...   payload
//! ```
//!
//! Keys are derived from the model identity, the coupling, the window
//! tolerance, and the crate version, so stale entries from older code
//! can never be read back. Writes go through a temporary file and an
//! atomic rename; corrupted or truncated entries are reported as
//! [`Error::CacheCorrupt`] and the caller recomputes.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gbwpt::NptRegion;
use crate::linalg::{Mat, SpectralSolution};
use crate::models::ModelSystem;

const MAGIC: &[u8; 4] = b"EFST";
const CONTAINER_VERSION: u32 = 1;
const HEADER_LEN: usize = 80;

/// A cached diagonalization with the windows computed from it.
#[derive(Debug, Clone)]
pub struct CachePayload {
    /// The full spectral solution.
    pub solution: SpectralSolution,
    /// Nonperturbative windows, one per eigenstate searched.
    pub regions: Vec<NptRegion>,
    /// The window tolerance the regions were computed with.
    pub region_tol: f64,
}

/// Cache key for one (model, coupling) point: sha256 hex over the model
/// identity, the coupling, the window tolerance, and the crate version.
pub fn cache_key(model: &ModelSystem, lambda_prime: f64, region_tol: f64) -> String {
    let mut h = Sha256::new();
    h.update(model.cache_identity().as_bytes());
    h.update(b"|lambda=");
    h.update(lambda_prime.to_bits().to_le_bytes());
    h.update(b"|tol=");
    h.update(region_tol.to_bits().to_le_bytes());
    h.update(b"|version=");
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn entry_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.efst"))
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::CacheCorrupt {
                path: self.path.to_path_buf(),
                reason: "payload truncated".into(),
            });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("fixed size")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("fixed size"))))
            .collect())
    }
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_bits().to_le_bytes());
}

fn push_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn encode_payload(p: &CachePayload) -> Vec<u8> {
    let d = p.solution.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + d * d * 8 + d * 16 + p.regions.len() * 64);
    push_f64(&mut out, p.solution.lambda_effective);
    push_f64(&mut out, p.region_tol);
    push_u64(&mut out, d as u64);
    for &e in &p.solution.energies {
        push_f64(&mut out, e);
    }
    for &e in &p.solution.unperturbed_energies {
        push_f64(&mut out, e);
    }
    for &c in p.solution.components.as_slice() {
        push_f64(&mut out, c);
    }
    push_u64(&mut out, p.regions.len() as u64);
    for r in &p.regions {
        push_u64(&mut out, r.alpha as u64);
        push_u64(&mut out, r.k1 as u64);
        push_u64(&mut out, r.k2 as u64);
        push_u64(&mut out, r.k0 as u64);
        push_f64(&mut out, r.rho_hat());
        match (r.shoulder_lo, r.shoulder_hi) {
            (Some((a, b)), Some((c, e))) => {
                push_u64(&mut out, 1);
                for v in [a, b, c, e] {
                    push_u64(&mut out, v as u64);
                }
            }
            _ => push_u64(&mut out, 0),
        }
    }
    out
}

fn decode_payload(buf: &[u8], path: &Path) -> Result<CachePayload> {
    let mut cur = Cursor { buf, pos: 0, path };
    let lambda_effective = cur.f64()?;
    let region_tol = cur.f64()?;
    let d = cur.u64()? as usize;
    if d == 0 || d > crate::models::MAX_DENSE_DIM {
        return Err(Error::CacheCorrupt {
            path: path.to_path_buf(),
            reason: format!("implausible dimension {d}"),
        });
    }
    let energies = cur.f64_vec(d)?;
    let unperturbed_energies = cur.f64_vec(d)?;
    let components = Mat::from_vec(d, d, cur.f64_vec(d * d)?)
        .map_err(|e| Error::CacheCorrupt {
            path: path.to_path_buf(),
            reason: format!("component matrix: {e}"),
        })?;
    let n_regions = cur.u64()? as usize;
    if n_regions > d {
        return Err(Error::CacheCorrupt {
            path: path.to_path_buf(),
            reason: format!("{n_regions} regions for dimension {d}"),
        });
    }
    let mut regions = Vec::with_capacity(n_regions);
    for _ in 0..n_regions {
        let alpha = cur.u64()? as usize;
        let k1 = cur.u64()? as usize;
        let k2 = cur.u64()? as usize;
        let k0 = cur.u64()? as usize;
        let rho_hat = cur.f64()?;
        let has_shoulders = cur.u64()? == 1;
        let (shoulder_lo, shoulder_hi) = if has_shoulders {
            let a = cur.u64()? as usize;
            let b = cur.u64()? as usize;
            let c = cur.u64()? as usize;
            let e = cur.u64()? as usize;
            (Some((a, b)), Some((c, e)))
        } else {
            (None, None)
        };
        if !(k1 <= k0 && k0 <= k2 && k2 < d && alpha < d) {
            return Err(Error::CacheCorrupt {
                path: path.to_path_buf(),
                reason: format!("region bounds ({k1}, {k0}, {k2}) invalid for state {alpha}"),
            });
        }
        regions.push(NptRegion::from_parts(alpha, k1, k2, k0, rho_hat, shoulder_lo, shoulder_hi));
    }
    if cur.pos != buf.len() {
        return Err(Error::CacheCorrupt {
            path: path.to_path_buf(),
            reason: "trailing bytes after payload".into(),
        });
    }
    Ok(CachePayload {
        solution: SpectralSolution {
            lambda_effective,
            energies,
            components,
            unperturbed_energies,
        },
        regions,
        region_tol,
    })
}

/// Store a payload under a key, atomically. Returns the entry path.
pub fn cache_put(dir: &Path, key: &str, payload: &CachePayload) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let body = encode_payload(payload);
    let mut file = Vec::with_capacity(HEADER_LEN + body.len());
    file.extend_from_slice(MAGIC);
    file.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    let key_digest = Sha256::digest(key.as_bytes());
    file.extend_from_slice(&key_digest);
    let body_digest = Sha256::digest(&body);
    file.extend_from_slice(&body_digest);
    file.extend_from_slice(&(body.len() as u64).to_le_bytes());
    file.extend_from_slice(&body);

    let path = entry_path(dir, key);
    let tmp = dir.join(format!("{key}.tmp.{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&file).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Load the payload stored under a key. `Ok(None)` on a clean miss;
/// [`Error::CacheCorrupt`] when the entry exists but fails validation.
pub fn cache_get(dir: &Path, key: &str) -> Result<Option<CachePayload>> {
    let path = entry_path(dir, key);
    let mut raw = Vec::new();
    match fs::File::open(&path) {
        Ok(mut f) => {
            f.read_to_end(&mut raw).map_err(|e| Error::io(&path, e))?;
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(&path, e)),
    }
    let corrupt = |reason: &str| Error::CacheCorrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    };
    if raw.len() < HEADER_LEN {
        return Err(corrupt("shorter than the header"));
    }
    if &raw[0..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(raw[4..8].try_into().expect("fixed size"));
    if version != CONTAINER_VERSION {
        return Err(corrupt(&format!("container version {version} unsupported")));
    }
    let key_digest = Sha256::digest(key.as_bytes());
    if raw[8..40] != key_digest[..] {
        return Err(corrupt("key digest mismatch"));
    }
    let body_len = u64::from_le_bytes(raw[72..80].try_into().expect("fixed size")) as usize;
    if raw.len() != HEADER_LEN + body_len {
        return Err(corrupt("length field disagrees with file size"));
    }
    let body = &raw[HEADER_LEN..];
    let body_digest = Sha256::digest(body);
    if raw[40..72] != body_digest[..] {
        return Err(corrupt("payload checksum mismatch"));
    }
    decode_payload(body, &path).map(Some)
}

/// Remove every cache entry in a directory. Returns the number removed.
/// Files that are not cache entries are left alone.
pub fn cache_clean(dir: &Path) -> Result<usize> {
    let entries = match fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut removed = 0;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|x| x == "efst") {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            removed += 1;
        }
    }
    Ok(removed)
}
