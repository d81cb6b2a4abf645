use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::TempDir;

/// Files are written into a hidden staging directory inside the output
/// directory and moved into place only by [`Staging::commit`]. Dropping an
/// uncommitted stage removes everything it wrote.
pub struct Staging {
    dir: Option<TempDir>,
    target: PathBuf,
    created_target: bool,
}

impl Staging {
    pub fn new(target: &Path) -> Result<Self> {
        let created_target = !target.exists();
        fs::create_dir_all(target).with_context(|| format!("creating {}", target.display()))?;
        let dir = tempfile::Builder::new()
            .prefix(".dlstd-staging-")
            .tempdir_in(target)
            .with_context(|| format!("creating a staging directory in {}", target.display()))?;
        Ok(Self {
            dir: Some(dir),
            target: target.to_path_buf(),
            created_target,
        })
    }

    pub fn path(&self) -> &Path {
        self.dir.as_ref().expect("stage is live").path()
    }

    /// Move every staged file into the output directory.
    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let dir = self.dir.take().expect("stage is live");
        let mut names: Vec<_> = fs::read_dir(dir.path())?
            .map(|e| e.map(|e| e.file_name()))
            .collect::<std::io::Result<_>>()?;
        names.sort();
        let mut moved = Vec::new();
        for name in names {
            let dest = self.target.join(&name);
            fs::rename(dir.path().join(&name), &dest).with_context(|| format!("moving output to {}", dest.display()))?;
            moved.push(dest);
        }
        Ok(moved)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if let Some(dir) = self.dir.take() {
            let _ = dir.close();
            if self.created_target {
                let _ = fs::remove_dir(&self.target);
            }
        }
    }
}
