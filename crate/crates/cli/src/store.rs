//! Content-addressed run directory.
//!
//! ```text
//! ROOT/scenarios/HASH.json
//! ROOT/operators/HASH/…
//! ROOT/trajectories/HASH/…
//! ROOT/kernels/HASH/…
//! ROOT/reports/HASH-SUITE.json
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use crate::error::{HarnessError, Result};
use crate::scenario::Scenario;

pub const SUBDIRS: [&str; 5] = [
    "scenarios",
    "operators",
    "trajectories",
    "kernels",
    "reports",
];

pub struct RunStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes via a temporary sibling and a rename, so readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let tmp = path.with_extension(format!(
        "tmp-{}-{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

impl RunStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        for sub in SUBDIRS {
            let p = root.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| HarnessError::io(&p, e))?;
        }
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Serializes writers of one scenario hash within this process.
    pub fn lock(&self, hash: &str) -> Arc<Mutex<()>> {
        let mut map = self.locks.lock().expect("lock table poisoned");
        map.entry(hash.to_string()).or_default().clone()
    }

    pub fn scenario_path(&self, hash: &str) -> PathBuf {
        self.root.join("scenarios").join(format!("{hash}.json"))
    }

    pub fn operator_dir(&self, hash: &str) -> PathBuf {
        self.root.join("operators").join(hash)
    }

    pub fn trajectory_dir(&self, hash: &str) -> PathBuf {
        self.root.join("trajectories").join(hash)
    }

    pub fn kernel_dir(&self, hash: &str) -> PathBuf {
        self.root.join("kernels").join(hash)
    }

    pub fn report_path(&self, hash: &str, suite: &str) -> PathBuf {
        self.root
            .join("reports")
            .join(format!("{hash}-{suite}.json"))
    }

    /// Stores the resolved scenario under its hash and returns the hash.
    pub fn record_scenario(&self, scenario: &Scenario) -> Result<String> {
        let hash = scenario.hash();
        let path = self.scenario_path(&hash);
        if !path.exists() {
            let text = serde_json::to_string_pretty(scenario).expect("scenario serializes");
            write_atomic(&path, text.as_bytes())?;
        }
        Ok(hash)
    }
}
