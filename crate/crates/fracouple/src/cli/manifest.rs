use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Calibration constants written by `calibrate` and pinned by digest in
/// later configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub version: String,
    pub hurst: f64,
    pub alpha_h: f64,
    pub alpha_h_quadrature: f64,
    pub continuation_constant: f64,
    pub continuation_fit: f64,
    pub ck: f64,
    pub ck_max_integral: f64,
    pub ck_runs: usize,
    pub ck_successes: usize,
    pub c2: f64,
    pub config_digest: String,
}

impl Constants {
    pub fn load_verified(path: &Path, digest: &str) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("cannot read constants {}: {e}", path.display())))?;
        let have = sha256_hex(&bytes);
        if have != digest {
            return Err(Error::Config(format!("constants file {} has digest {have}, config pins {digest}", path.display())));
        }
        let text = String::from_utf8(bytes).map_err(|_| Error::Config("constants file is not UTF-8".into()))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("malformed constants file: {}", e.message())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance of one CLI invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub config_digest: String,
    pub overrides: Vec<String>,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub constants_digest: Option<String>,
    pub outputs: Vec<OutputEntry>,
    /// The configuration with every default filled in.
    pub resolved: ExperimentConfig,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &super::ParsedConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            config_path: cfg.path.clone(),
            config_digest: cfg.digest.clone(),
            overrides: cfg.overrides.clone(),
            seed: cfg.experiment.seed,
            started_unix: unix_now(),
            finished_unix: 0.0,
            constants_digest: cfg.constants.as_ref().map(|(p, _)| file_digest(p).unwrap_or_default()),
            outputs: Vec::new(),
            resolved: cfg.experiment.clone(),
        }
    }

    pub fn record(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(OutputEntry { path: path.to_path_buf(), sha256: file_digest(path)? });
        Ok(())
    }

    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        let text = toml::to_string(self).map_err(|e| Error::Invalid(format!("cannot serialise manifest: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Loads a manifest and recomputes the config and output digests.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let m: Self = toml::from_str(&text).map_err(|e| Error::Config(format!("malformed manifest: {}", e.message())))?;
        if let Some(cp) = &m.config_path {
            let mut bytes = std::fs::read(cp)?;
            for o in &m.overrides {
                bytes.push(b'\n');
                bytes.extend_from_slice(o.as_bytes());
            }
            let have = sha256_hex(&bytes);
            if have != m.config_digest {
                return Err(Error::Config(format!("config {} changed: digest {have}, manifest has {}", cp.display(), m.config_digest)));
            }
        }
        for o in &m.outputs {
            let have = file_digest(&o.path)?;
            if have != o.sha256 {
                return Err(Error::Config(format!("output {} changed: digest {have}, manifest has {}", o.path.display(), o.sha256)));
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
