//! Report files. Each artifact is written to a temporary sibling and renamed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dirac_core::Trajectory;
use serde::Serialize;

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn write_bytes(&self, rel: &str, bytes: &[u8]) -> std::io::Result<()> {
        let target = self.path(rel);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = target.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write_bytes(rel, text.as_bytes())
    }

    /// Replaces `snapshots/` with one CSV per selected snapshot.
    pub fn write_snapshots(&self, traj: &Trajectory, every: usize) -> std::io::Result<usize> {
        let dir = self.path("snapshots");
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        if every == 0 {
            return Ok(0);
        }
        let last = traj.snapshots() - 1;
        let mut written = 0;
        for k in (0..=last).filter(|k| k % every == 0 || *k == last) {
            self.write_bytes(&format!("snapshots/snapshot_{k:05}.csv"), snapshot_csv(traj, k).as_bytes())?;
            written += 1;
        }
        Ok(written)
    }
}

pub fn snapshot_csv(traj: &Trajectory, k: usize) -> String {
    let mut out = String::from("t,z");
    for c in 0..traj.rank {
        out.push_str(&format!(",re_{c},im_{c}"));
    }
    out.push('\n');
    let t = traj.times[k];
    for i in 0..traj.nz {
        out.push_str(&format!("{t},{}", traj.z(i)));
        for v in traj.node(k, i) {
            out.push_str(&format!(",{},{}", v.re, v.im));
        }
        out.push('\n');
    }
    out
}
