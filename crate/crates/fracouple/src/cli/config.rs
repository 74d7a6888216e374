use super::manifest::{sha256_hex, Constants};
use crate::coupling_engine::{CouplingConfig, Past};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, TailOpts};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const REQUIRED_KEYS: [&str; 13] =
    ["model", "H", "theta", "alpha", "K", "c3", "beta", "varsigma", "dt", "T_hist", "n_replicas", "t_max", "seed"];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    model: Option<String>,
    #[serde(rename = "H")]
    hurst: Option<f64>,
    theta: Option<f64>,
    alpha: Option<f64>,
    #[serde(rename = "K")]
    k: Option<f64>,
    c3: Option<f64>,
    beta: Option<f64>,
    varsigma: Option<f64>,
    dt: Option<f64>,
    #[serde(rename = "T_hist")]
    t_hist: Option<f64>,
    n_replicas: Option<i64>,
    t_max: Option<f64>,
    seed: Option<u64>,
    d: Option<usize>,
    rho_rot: Option<f64>,
    x1: Option<Vec<f64>>,
    x2: Option<Vec<f64>>,
    workers: Option<usize>,
    ck_runs: Option<usize>,
    #[serde(rename = "C_K")]
    ck: Option<f64>,
    #[serde(default)]
    coupling: RawCoupling,
    #[serde(default)]
    tail: RawTail,
    #[serde(default)]
    output: RawOutput,
    constants: Option<RawConstants>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupling {
    delta1: Option<f64>,
    tol_stick: Option<f64>,
    tol_mono: Option<f64>,
    eps_horizon: Option<f64>,
    c_bar: Option<f64>,
    #[serde(rename = "M")]
    m_radius: Option<f64>,
    kappa_safety: Option<f64>,
    n_probe: Option<usize>,
    max_refine: Option<u32>,
    rho_hat: Option<f64>,
    past: Option<Past>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTail {
    n_nodes: Option<usize>,
    t_min: Option<f64>,
    window: Option<(f64, f64)>,
    min_in_window: Option<usize>,
    eps: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    path: PathBuf,
    digest: String,
}

/// A parsed configuration with everything needed to reproduce it.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub experiment: ExperimentConfig,
    pub path: Option<PathBuf>,
    /// SHA-256 of the file bytes followed by the overrides.
    pub digest: String,
    pub overrides: Vec<String>,
    pub constants: Option<(PathBuf, Constants)>,
}

fn need<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing required key '{key}'")))
}

/// Applies `key=value` overrides (dotted keys address sections); values are
/// parsed as TOML and fall back to strings.
fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let (key, val) = o.split_once('=').ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {val}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(val.to_string()));
        let mut parts: Vec<&str> = key.trim().split('.').collect();
        let last = parts.pop().unwrap_or_default();
        let mut t = &mut *table;
        for p in parts {
            t = t
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override '{o}': '{p}' is not a section")))?;
        }
        t.insert(last.to_string(), value);
    }
    Ok(())
}

/// Parses a configuration document; `base` resolves relative paths.
pub fn parse_config_str(text: &str, overrides: &[String], base: Option<&Path>) -> Result<ParsedConfig> {
    let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("malformed config: {}", e.message())))?;
    apply_overrides(&mut table, overrides)?;
    let raw: Raw = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let model = need(raw.model, "model")?;
    let hurst = need(raw.hurst, "H")?;
    let mut c = CouplingConfig::new(hurst);
    c.theta = need(raw.theta, "theta")?;
    c.alpha = need(raw.alpha, "alpha")?;
    c.k = need(raw.k, "K")?;
    c.c3 = need(raw.c3, "c3")?;
    c.beta = need(raw.beta, "beta")?;
    c.varsigma = need(raw.varsigma, "varsigma")?;
    c.dt = need(raw.dt, "dt")?;
    c.t_hist = need(raw.t_hist, "T_hist")?;
    let n_replicas = need(raw.n_replicas, "n_replicas")?;
    let t_max = need(raw.t_max, "t_max")?;
    let seed = need(raw.seed, "seed")?;
    if n_replicas < 1 {
        return Err(Error::Config("n_replicas must be at least 1".into()));
    }
    let rc = raw.coupling;
    macro_rules! set {
        ($($src:expr => $dst:expr),* $(,)?) => { $(if let Some(v) = $src { $dst = v; })* };
    }
    set!(rc.delta1 => c.delta1, rc.tol_stick => c.tol_stick, rc.tol_mono => c.tol_mono,
         rc.eps_horizon => c.eps_horizon, rc.c_bar => c.c_bar, rc.kappa_safety => c.kappa_safety,
         rc.n_probe => c.n_probe, rc.max_refine => c.max_refine, rc.past => c.past);
    c.m_radius = rc.m_radius.or(c.m_radius);
    c.rho_hat = rc.rho_hat.or(c.rho_hat);

    let d = raw.d.unwrap_or(1);
    let mut e = ExperimentConfig::new(&model, d);
    let dim = crate::sde_models::model_by_name(&model, d, 1.0)?.dim();
    e.x1 = raw.x1.unwrap_or_else(|| vec![1.0; dim]);
    e.x2 = raw.x2.unwrap_or_else(|| vec![-1.0; dim]);
    e.coupling = c;
    e.n_replicas = n_replicas as usize;
    e.t_max = t_max;
    e.seed = seed;
    set!(raw.rho_rot => e.rho_rot, raw.workers => e.workers, raw.ck_runs => e.ck_runs);
    e.ck = raw.ck;
    let t = raw.tail;
    let mut tail = TailOpts::default();
    set!(t.n_nodes => tail.n_nodes, t.t_min => tail.t_min, t.window => tail.window,
         t.min_in_window => tail.min_in_window, t.eps => e.eps_rate);
    e.tail = tail;
    let resolve = |p: PathBuf| match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    };
    if let Some(dir) = raw.output.dir {
        e.out_dir = resolve(dir);
    }
    let constants = match raw.constants {
        Some(rcst) => {
            let path = resolve(rcst.path);
            let k = Constants::load_verified(&path, &rcst.digest)?;
            if (k.hurst - hurst).abs() > 0.0 {
                return Err(Error::Config(format!("constants file is for H = {}, config has H = {hurst}", k.hurst)));
            }
            if e.ck.is_some() {
                return Err(Error::Config("C_K given both inline and by a constants file".into()));
            }
            e.ck = Some(k.ck);
            Some((path, k))
        }
        None => None,
    };
    e.validate()?;
    let mut bytes = text.as_bytes().to_vec();
    for o in overrides {
        bytes.push(b'\n');
        bytes.extend_from_slice(o.as_bytes());
    }
    Ok(ParsedConfig { experiment: e, path: None, digest: sha256_hex(&bytes), overrides: overrides.to_vec(), constants })
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ParsedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut p = parse_config_str(&text, overrides, path.parent())?;
    p.path = Some(path.to_path_buf());
    Ok(p)
}
