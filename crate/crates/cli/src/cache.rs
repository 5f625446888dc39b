//! On-disk cache of abelian square tables.
//!
//! File layout, little endian: magic `GCAB`, format version byte, part
//! count `i` (u32), entry count (u64), then per entry a u32 byte length
//! followed by the unsigned magnitude bytes. Unreadable or stale files are
//! recomputed and replaced.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gridcast_core::combinatorics::abelian_square_table;
use gridcast_core::BigInt;
use num_bigint::Sign;

use crate::error::CliError;

pub const CACHE_ENV: &str = "GRIDCAST_CACHE_DIR";
const MAGIC: &[u8; 4] = b"GCAB";
const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// Directory from `GRIDCAST_CACHE_DIR`; caching is off when unset.
    pub fn from_env() -> Self {
        Cache { dir: std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from) }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()) }
    }

    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, parts: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("abelian-squares-{parts}.bin")))
    }

    /// `F(m, parts)` for `m = 0..=m_max`, reusing a cached table covering
    /// at least that range.
    pub fn abelian_squares(&self, m_max: usize, parts: usize) -> Result<Vec<BigInt>, CliError> {
        let path = self.path(parts);
        if let Some(p) = &path {
            if let Some(mut table) = fs::read(p).ok().and_then(|b| decode(&b, parts)) {
                if table.len() > m_max {
                    table.truncate(m_max + 1);
                    return Ok(table);
                }
            }
        }
        let table = abelian_square_table(m_max, parts)?;
        if let Some(p) = &path {
            store(p, &encode(&table, parts))?;
        }
        Ok(table)
    }
}

fn store(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().expect("cache files live in a directory");
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn encode(table: &[BigInt], parts: usize) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(parts as u32).to_le_bytes());
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    for x in table {
        let (_, bytes) = x.to_bytes_le();
        out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(&bytes);
    }
    out
}

pub fn decode(bytes: &[u8], parts: usize) -> Option<Vec<BigInt>> {
    let rest = bytes.strip_prefix(MAGIC)?;
    let (&version, rest) = rest.split_first()?;
    if version != FORMAT_VERSION {
        return None;
    }
    let (p, rest) = rest.split_at_checked(4)?;
    if u32::from_le_bytes(p.try_into().ok()?) as usize != parts {
        return None;
    }
    let (n, mut rest) = rest.split_at_checked(8)?;
    let n = u64::from_le_bytes(n.try_into().ok()?) as usize;
    let mut out = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let (len, tail) = rest.split_at_checked(4)?;
        let len = u32::from_le_bytes(len.try_into().ok()?) as usize;
        let (mag, tail) = tail.split_at_checked(len)?;
        out.push(BigInt::from_bytes_le(Sign::Plus, mag));
        rest = tail;
    }
    rest.is_empty().then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_rejection() {
        let table = abelian_square_table(30, 3).unwrap();
        let bytes = encode(&table, 3);
        assert_eq!(decode(&bytes, 3).unwrap(), table);
        assert!(decode(&bytes, 4).is_none());
        assert!(decode(&bytes[..bytes.len() - 1], 3).is_none());
        let mut stale = bytes.clone();
        stale[4] = FORMAT_VERSION + 1;
        assert!(decode(&stale, 3).is_none());
    }
}
