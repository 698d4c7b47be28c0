use std::path::{Path, PathBuf};

use rdlimit::{Error, Result};
use serde_json::{json, Value};

/// Everything needed to repeat a run, written as `<output>.manifest.json`.
pub struct Manifest {
    pub command: &'static str,
    pub parameters: Value,
    pub input_paths: Vec<PathBuf>,
    pub output_path: PathBuf,
    pub seed: u64,
}

impl Manifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.as_os_str().to_owned();
        name.push(".manifest.json");
        PathBuf::from(name)
    }

    pub fn to_json(&self) -> Value {
        // argv excludes the program name so the echo is location independent
        let argv: Vec<String> = std::env::args().skip(1).collect();
        json!({
            "toolkit": "rdlimit",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "argv": argv,
            "parameters": self.parameters,
            "input_paths": self.input_paths,
            "output_path": self.output_path,
            "seed": self.seed,
        })
    }

    pub fn write(&self) -> Result<()> {
        let path = Self::path_for(&self.output_path);
        let mut text = serde_json::to_string_pretty(&self.to_json())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| Error::Io { path, source })
    }
}
