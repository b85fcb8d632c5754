//! Run manifests: every command writes one next to its outputs with the
//! fully resolved configuration, so a run can be reproduced bit-identically.

use serde::Serialize;
use std::path::Path;

use pulsec::Result;

use crate::util::write_atomic;

#[derive(Serialize)]
pub struct Manifest<C: Serialize> {
    pub tool_version: &'static str,
    pub subcommand: &'static str,
    pub config: C,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub rng_seed: u64,
}

impl<C: Serialize> Manifest<C> {
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(path, json.as_bytes())
    }
}

pub fn path_for(output: &Path) -> std::path::PathBuf {
    let mut os = output.as_os_str().to_owned();
    os.push(".manifest.json");
    os.into()
}
