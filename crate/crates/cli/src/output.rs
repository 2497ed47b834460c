use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Shortest decimal form that round-trips is not fixed-width; 17 significant
/// digits in scientific notation are.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(num).collect::<Vec<_>>().join(",")
}

/// Output directory that remembers what was written.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, content).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Manifest with versions, the file list and the echoed configuration.
    pub fn finish(mut self, command: &str, seed: u64, passed: bool, config_echo: &str) -> Result<(), CliError> {
        let files = self.files.iter().map(|f| format!("\"{f}\"")).collect::<Vec<_>>().join(", ");
        let mut text = format!(
            "[manifest]\ntool = \"rdlab\"\ncli_version = \"{}\"\ncore_version = \"{}\"\ncommand = \"{command}\"\nseed = {seed}\naudits_passed = {passed}\nfiles = [{files}]\n",
            env!("CARGO_PKG_VERSION"),
            rdlab::VERSION,
        );
        if !config_echo.is_empty() {
            text.push('\n');
            text.push_str(config_echo);
        }
        self.write("manifest.toml", &text)
    }
}
