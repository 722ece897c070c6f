//! Output directories: files are tracked as they are written and removed
//! again unless the command finishes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::{CliError, Settings};

pub const META_FILE: &str = "meta.txt";

pub struct OutputDir {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    /// `(kind, file name)` pairs listed in the meta file.
    csvs: Vec<(String, String)>,
    committed: bool,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        let existed = dir.is_dir();
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), created_dir: !existed, files: Vec::new(), csvs: Vec::new(), committed: false })
    }

    /// Writes one CSV through `body` and lists it under `kind` in the meta
    /// file.
    pub fn csv<F>(&mut self, kind: &str, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> trustdyn_core::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()?;
        self.csvs.push((kind.to_string(), name.to_string()));
        Ok(())
    }

    /// Writes `meta.txt` and keeps every file.
    pub fn finish(mut self, command: &str, settings: &Settings, extra: &[(String, String)]) -> Result<(), CliError> {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut text = String::from("# trustdyn run metadata\n");
        text.push_str(&format!("command={command}\ncreated_unix={created}\n"));
        for key in settings.merged.keys() {
            text.push_str(&format!("{key}={}\n", settings.merged.get(key).expect("listed key")));
        }
        for (k, v) in extra {
            text.push_str(&format!("{k}={v}\n"));
        }
        for (kind, name) in &self.csvs {
            text.push_str(&format!("csv.{kind}={name}\n"));
        }
        let path = self.dir.join(META_FILE);
        self.files.push(path.clone());
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
