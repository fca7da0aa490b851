//! Artifact writing: JSON envelopes and CSV tables.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub struct Sink<'a> {
    pub config: &'a RunConfig,
    pub written: Vec<PathBuf>,
}

impl<'a> Sink<'a> {
    pub fn new(config: &'a RunConfig) -> Result<Self> {
        fs::create_dir_all(&config.out).with_context(|| format!("creating {}", config.out.display()))?;
        Ok(Sink { config, written: Vec::new() })
    }

    /// `{command, version, config_hash, seed, config, result}` as pretty JSON.
    pub fn json(&mut self, command: &str, result: &impl Serialize) -> Result<Value> {
        let envelope = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.config.hash(),
            "seed": self.config.seed,
            "config": self.config.portable(),
            "result": result,
        });
        let path = self.config.out.join(format!("{command}.json"));
        let mut text = serde_json::to_string_pretty(&envelope)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(envelope)
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
        let path = self.config.out.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv_text(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.config.out.join(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }
}
