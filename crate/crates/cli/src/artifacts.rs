// SPDX-License-Identifier: MIT OR Apache-2.0

//! In-memory artifact tree, written once at the end of a command together
//! with its `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::failure::Failure;

pub const MANIFEST: &str = "manifest.json";

#[derive(Default)]
pub struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn add(&mut self, path: impl Into<String>, body: impl Into<Vec<u8>>) {
        self.files.insert(path.into(), body.into());
    }

    pub fn add_json(
        &mut self,
        path: impl Into<String>,
        value: &impl serde::Serialize,
    ) -> Result<(), Failure> {
        let mut body =
            serde_json::to_string_pretty(value).map_err(|e| Failure::Internal(e.to_string()))?;
        body.push('\n');
        self.add(path, body);
        Ok(())
    }

    /// Writes every file under `out` plus a manifest listing them and the
    /// configuration that produced them.
    pub fn write(mut self, out: &Path, command: &str, config: Value) -> Result<(), Failure> {
        let manifest = json!({
            "tool": "cpflux",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "files": self.files.keys().collect::<Vec<_>>(),
        });
        self.add_json(MANIFEST, &manifest)?;

        let unwritable = |e: std::io::Error, p: &Path| {
            Failure::Config(format!("cannot write {}: {e}", p.display()))
        };
        fs::create_dir_all(out).map_err(|e| unwritable(e, out))?;
        for (rel, body) in &self.files {
            let path = out.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| unwritable(e, parent))?;
            }
            fs::write(&path, body).map_err(|e| unwritable(e, &path))?;
        }
        Ok(())
    }
}
