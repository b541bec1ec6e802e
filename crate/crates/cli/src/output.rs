//! Result emission and run manifests.

use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

/// Collects named artifacts, prints them to stdout and, with an output
/// directory, writes them to files next to a `manifest.json`.
pub struct Sink {
    dir: Option<PathBuf>,
    artifacts: Vec<(String, String)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    arguments: Vec<String>,
    seed: u64,
    threads: usize,
    settings: &'a Value,
    outputs: Vec<&'a str>,
    created_unix: u64,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir, artifacts: Vec::new() }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(&format!("{name}.json"), text);
        Ok(())
    }

    pub fn text(&mut self, file: &str, text: String) {
        self.artifacts.push((file.to_string(), text));
    }

    pub fn finish(self, command: &str, seed: u64, settings: &Value) -> Result<()> {
        for (_, text) in &self.artifacts {
            print!("{text}");
        }
        let Some(dir) = self.dir else {
            return Ok(());
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for (file, text) in &self.artifacts {
            let path = dir.join(file);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        }
        let manifest = Manifest {
            tool: "prf",
            version: env!("CARGO_PKG_VERSION"),
            core_version: prf_core::VERSION,
            command,
            arguments: std::env::args().skip(1).collect(),
            seed,
            threads: rayon::current_num_threads(),
            settings,
            outputs: self.artifacts.iter().map(|(f, _)| f.as_str()).collect(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// `# key<TAB>value` metadata lines for TSV artifacts.
pub fn tsv_header(settings: &Value) -> String {
    let mut out = String::new();
    if let Value::Object(map) = settings {
        for (k, v) in map {
            out.push_str(&format!("# {k}\t{v}\n"));
        }
    }
    out
}
