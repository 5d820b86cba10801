use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sha2::{Digest, Sha256};

/// Record of one invocation: enough to re-run it and check the inputs.
#[derive(Debug, Default)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Vec<(String, String)>,
    /// `(role, path, sha256)`.
    pub inputs: Vec<(String, PathBuf, String)>,
    pub seed: Option<u64>,
    pub duration: Duration,
}

/// SHA-256 of a file, or of a directory's files in name order (name and
/// content both hashed).
pub fn digest(path: &Path) -> std::io::Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut names: Vec<PathBuf> = fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        names.retain(|p| p.is_file() && p.file_name().is_some_and(|n| n != "manifest"));
        names.sort();
        for p in names {
            h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
            h.update([0]);
            h.update(fs::read(&p)?);
        }
    } else {
        h.update(fs::read(path)?);
    }
    Ok(format!("{:x}", h.finalize()))
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Self { command: command.into(), argv: argv.to_vec(), ..Self::default() }
    }

    pub fn add_input(&mut self, role: &str, path: &Path) -> std::io::Result<()> {
        let d = digest(path)?;
        self.inputs.push((role.into(), path.to_path_buf(), d));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command);
        let _ = writeln!(s, "argv = {}", self.argv.join("\t"));
        let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        let _ = writeln!(s, "duration_secs = {:.3}", self.duration.as_secs_f64());
        for (role, path, d) in &self.inputs {
            let _ = writeln!(s, "input.{role} = {}", path.display());
            let _ = writeln!(s, "sha256.{role} = {d}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(s, "config.{k} = {v}");
        }
        s
    }

    /// Write to a temporary file next to `path`, then rename over it.
    pub fn write_atomic(&self, path: &Path) -> std::io::Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(
            ".{}.tmp{}",
            path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            std::process::id()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.render().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }
}
