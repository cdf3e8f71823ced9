//! Persisted discrete-log tables.
//!
//! File layout: one JSON header line terminated by `\n`, followed by the dlog
//! of every nonzero element in packed-index order (indices `1..p^n`), each a
//! little-endian unsigned integer of `width` bytes, where `width` is the
//! smallest byte count that can hold `p^n`. Anything that fails to parse or
//! validate is rebuilt and rewritten without reporting an error.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FieldDesc, Tables};

const FORMAT_VERSION: u32 = 1;
/// The table stores exponents base the residue of `x` modulo the stored modulus.
const GENERATOR_CONVENTION: &str = "root-of-modulus";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DlogStatus {
    /// No table (no-dlog mode).
    Absent,
    /// Built in memory, no cache directory configured.
    Computed,
    /// Loaded from a valid cache file.
    CacheHit,
    /// No cache file existed; built and written.
    CacheMiss,
    /// A cache file existed but was corrupt or stale; rebuilt and rewritten.
    CacheRebuilt,
}

#[derive(Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    p: u64,
    n: u32,
    modulus: Vec<u64>,
    generator: String,
    width: u8,
}

pub(crate) fn byte_width(size: u64) -> u8 {
    let bits = 64 - size.leading_zeros();
    bits.div_ceil(8).max(1) as u8
}

pub(crate) fn cache_path(field: &FieldDesc, dir: &Path) -> PathBuf {
    let modulus: Vec<String> = field.modulus.iter().map(|c| c.to_string()).collect();
    dir.join(format!(
        "dlog-p{}-n{}-m{}.bin",
        field.p,
        field.n,
        modulus.join("_")
    ))
}

fn expected_header(field: &FieldDesc) -> Header {
    Header {
        format_version: FORMAT_VERSION,
        p: field.p,
        n: field.n,
        modulus: field.modulus.clone(),
        generator: GENERATOR_CONVENTION.to_string(),
        width: byte_width(field.size),
    }
}

pub(crate) fn load_or_build(field: &FieldDesc, dir: &Path) -> (Tables, DlogStatus) {
    let path = cache_path(field, dir);
    let status = match fs::read(&path) {
        Ok(bytes) => match decode(field, &bytes) {
            Some(tables) => return (tables, DlogStatus::CacheHit),
            None => DlogStatus::CacheRebuilt,
        },
        Err(_) => DlogStatus::CacheMiss,
    };
    let tables = field.compute_tables();
    // A cache that cannot be written only costs a rebuild next time.
    let _ = fs::create_dir_all(dir).and_then(|_| fs::write(&path, encode(field, &tables)));
    (tables, status)
}

fn encode(field: &FieldDesc, tables: &Tables) -> Vec<u8> {
    let header = expected_header(field);
    let width = header.width as usize;
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(width * field.order() as usize);
    for &k in &tables.log[1..] {
        out.extend_from_slice(&(k as u64).to_le_bytes()[..width]);
    }
    out
}

fn decode(field: &FieldDesc, bytes: &[u8]) -> Option<Tables> {
    let split = bytes.iter().position(|&b| b == b'\n')?;
    let header: Header = serde_json::from_slice(&bytes[..split]).ok()?;
    if header != expected_header(field) {
        return None;
    }
    let width = header.width as usize;
    let body = &bytes[split + 1..];
    let order = field.order() as usize;
    if body.len() != width * order {
        return None;
    }
    let mut log = vec![u32::MAX; field.size as usize];
    let mut exp = vec![u32::MAX; order];
    for (i, chunk) in body.chunks_exact(width).enumerate() {
        let mut buf = [0u8; 8];
        buf[..width].copy_from_slice(chunk);
        let k = u64::from_le_bytes(buf) as usize;
        if k >= order || exp[k] != u32::MAX {
            return None;
        }
        exp[k] = (i + 1) as u32;
        log[i + 1] = k as u32;
    }
    // Every slot of `exp` is filled exactly once; now check it is the orbit of α.
    if exp[0] != 1 {
        return None;
    }
    for k in 0..order {
        let next = field.mul_by_alpha(super::FieldElem(exp[k] as u64));
        if next.0 != exp[(k + 1) % order] as u64 {
            return None;
        }
    }
    Some(Tables { exp, log })
}
