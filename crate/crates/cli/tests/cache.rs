use std::fs;
use std::path::Path;
use std::process::Command;

use gridcast::cache::{decode, encode, Cache};
use gridcast_core::combinatorics::abelian_square_table;
use serde_json::Value;

fn verify_with_cache(dir: &Path, suite: &str, m_max: &str) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_gridcast"))
        .args(["verify", "--suite", suite, "--m-max", m_max])
        .env("GRIDCAST_CACHE_DIR", dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn verify_populates_and_reuses_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("abelian-squares-3.bin");
    assert_eq!(verify_with_cache(dir.path(), "f3", "120")["passed"], true);
    let first = fs::read(&file).unwrap();
    assert_eq!(decode(&first, 3).unwrap(), abelian_square_table(120, 3).unwrap());

    // A smaller request is served from the file without rewriting it.
    assert_eq!(verify_with_cache(dir.path(), "f3", "60")["passed"], true);
    assert_eq!(fs::read(&file).unwrap(), first);

    // A larger one extends it.
    assert_eq!(verify_with_cache(dir.path(), "f3", "150")["passed"], true);
    assert_eq!(decode(&fs::read(&file).unwrap(), 3).unwrap().len(), 151);
}

#[test]
fn corrupt_files_are_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::at(dir.path());
    let file = dir.path().join("abelian-squares-2.bin");
    fs::write(&file, b"GCAB\x01garbage").unwrap();
    let table = cache.abelian_squares(40, 2).unwrap();
    assert_eq!(table, abelian_square_table(40, 2).unwrap());
    assert_eq!(fs::read(&file).unwrap(), encode(&table, 2));

    // Wrong part count in the header.
    fs::write(&file, encode(&abelian_square_table(50, 4).unwrap(), 4)).unwrap();
    assert_eq!(cache.abelian_squares(50, 2).unwrap(), abelian_square_table(50, 2).unwrap());
}

#[test]
fn disabled_cache_writes_nothing() {
    let cache = Cache::disabled();
    assert!(cache.dir().is_none());
    assert_eq!(cache.abelian_squares(10, 3).unwrap()[10], abelian_square_table(10, 3).unwrap()[10]);
}
