use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::LoadedConfig;

/// Writes every output of a run under one directory, stamping each file with
/// the configuration hash, the seed and the crate versions.
pub struct Artifacts {
    dir: PathBuf,
    meta: Value,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(cfg: &LoadedConfig) -> std::io::Result<Self> {
        let dir = cfg.config.output.dir.clone();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            meta: json!({
                "config_hash": cfg.hash(),
                "seed": cfg.config.output.seed,
                "fracperiodic_version": fracperiodic::VERSION,
                "cli_version": env!("CARGO_PKG_VERSION"),
            }),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn target(&mut self, name: &str) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.written.push(path.clone());
        Ok(path)
    }

    /// Pretty JSON with a `meta` object added at the top level.
    pub fn json(&mut self, name: &str, mut body: Value) -> std::io::Result<()> {
        if let Value::Object(map) = &mut body {
            map.insert("meta".into(), self.meta.clone());
        } else {
            body = json!({ "meta": self.meta.clone(), "value": body });
        }
        let path = self.target(name)?;
        let mut text = serde_json::to_string_pretty(&body)?;
        text.push('\n');
        fs::write(path, text)
    }

    /// CSV produced by `fill`, preceded by one `#` comment line of metadata.
    pub fn csv<F>(&mut self, name: &str, fill: F) -> Result<(), fracperiodic::Error>
    where
        F: FnOnce(&mut Vec<u8>) -> fracperiodic::Result<()>,
    {
        let mut buf = Vec::new();
        writeln!(
            buf,
            "# config_hash={} seed={} fracperiodic={} cli={}",
            self.meta["config_hash"].as_str().unwrap_or_default(),
            self.meta["seed"],
            fracperiodic::VERSION,
            env!("CARGO_PKG_VERSION"),
        )?;
        fill(&mut buf)?;
        let path = self.target(name)?;
        fs::write(path, buf)?;
        Ok(())
    }
}
