//! Shared helpers for the integration tests: random inputs and independent oracles.
#![allow(dead_code)]

pub mod gen;
pub mod oracle;
pub mod reference;

use std::path::PathBuf;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}
