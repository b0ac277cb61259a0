//! Run configuration: a TOML file with one level of sections.
//!
//! ```toml
//! [problem]
//! dim = 1
//! period = 6.283185307179586
//! order = 0.5
//! mass = 1.0
//! cutoff = 32
//! grid = 128
//! normalization = "explicit"
//!
//! [nonlinearity]
//! label = "log_superlinear"
//!
//! [solver]
//! cerami_tol = 1e-8
//!
//! [continuation]
//! schedule = [0.5, 0.25, 0.125]
//!
//! [checks]
//! samples = 1000
//!
//! [output]
//! dir = "out"
//! seed = 1
//! ```

use std::path::{Path, PathBuf};

use fracperiodic::linking::SolverConfig;
use fracperiodic::{Normalization, ProblemParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: field `{field}`: {message}")]
    Invalid {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub dim: usize,
    pub period: f64,
    pub order: f64,
    pub mass: f64,
    pub cutoff: usize,
    pub grid: usize,
    #[serde(default)]
    pub normalization: Normalization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSection {
    pub schedule: Vec<f64>,
    pub warm_start: bool,
    pub level_tol: f64,
    pub limit_tol: f64,
}

impl Default for ContinuationSection {
    fn default() -> Self {
        Self {
            schedule: fracperiodic::continuation::default_schedule(6),
            warm_start: true,
            level_tol: 1e-8,
            limit_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// Random points per sampled set of the linking geometry.
    pub samples: usize,
    /// Random trace fields for the extension checks.
    pub fields: usize,
    /// Richardson tolerance, also the relative DtN error allowed.
    pub dtn_tol: f64,
    /// Largest accepted weak-form residual of a solution.
    pub weak_tol: f64,
    /// Strip widths for the strip inequality.
    pub deltas: Vec<f64>,
}

impl Default for ChecksSection {
    fn default() -> Self {
        Self {
            samples: 1000,
            fields: 50,
            dtn_tol: 1e-6,
            weak_tol: 1e-4,
            deltas: vec![0.1, 1.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub seed: u64,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub continuation: ContinuationSection,
    #[serde(default)]
    pub checks: ChecksSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// A validated configuration and the parameters it describes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub params: ProblemParams,
    pub path: PathBuf,
}

impl LoadedConfig {
    /// SHA-256 of the effective configuration, serialized canonically. The
    /// output directory is left out so relocated runs hash the same.
    pub fn hash(&self) -> String {
        let mut c = self.config.clone();
        c.output.dir = PathBuf::new();
        let canonical = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn normalization(&self) -> Normalization {
        self.config.problem.normalization
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]`, or of the section header, or 1.
fn locate(text: &str, section: &str, key: &str) -> usize {
    let mut in_section = false;
    let mut header = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            in_section = t.trim_matches(|c| c == '[' || c == ']').trim() == section;
            if in_section {
                header = Some(i + 1);
            }
            continue;
        }
        if in_section && t.split('=').next().map(str::trim) == Some(key) {
            return i + 1;
        }
    }
    header.unwrap_or(1)
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path, overrides)
}

pub fn parse(text: &str, path: &Path, overrides: &Overrides) -> Result<LoadedConfig, ConfigError> {
    let mut config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    if let Some(dir) = &overrides.out {
        config.output.dir = dir.clone();
    }
    if let Some(seed) = overrides.seed {
        config.output.seed = seed;
    }
    if let Some(tol) = overrides.tol {
        config.solver.cerami_tol = tol;
    }
    let invalid = |section: &str, key: &str, message: String| ConfigError::Invalid {
        path: path.to_path_buf(),
        line: locate(text, section, key),
        field: format!("{section}.{key}"),
        message,
    };

    let pr = &config.problem;
    let params = ProblemParams::new(pr.dim, pr.period, pr.order, pr.mass, pr.cutoff, pr.grid)
        .map_err(|e| {
            let key = problem_key(&e.to_string());
            invalid("problem", key, e.to_string())
        })?;
    fracperiodic::nonlinearity::builtin_nonlinearity(&config.nonlinearity.label, &params)
        .map_err(|e| invalid("nonlinearity", "label", e.to_string()))?;

    let s = &config.solver;
    for (key, v) in [("cerami_tol", s.cerami_tol), ("path_tol", s.path_tol), ("trivial_floor", s.trivial_floor)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid("solver", key, format!("must be positive, got {v}")));
        }
    }
    for (key, v) in [
        ("radial_nodes", s.radial_nodes),
        ("angular_nodes", s.angular_nodes),
        ("max_iterations", s.max_iterations),
        ("refine_iterations", s.refine_iterations),
    ] {
        if v == 0 {
            return Err(invalid("solver", key, "must be positive".into()));
        }
    }
    let c = &config.continuation;
    for (key, v) in [("level_tol", c.level_tol), ("limit_tol", c.limit_tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid("continuation", key, format!("must be positive, got {v}")));
        }
    }
    let m0 = 0.5 * params.omega().powf(2.0 * params.order);
    if c.schedule.is_empty() {
        return Err(invalid("continuation", "schedule", "must not be empty".into()));
    }
    if let Some(bad) = c.schedule.iter().find(|&&m| !(m > 0.0 && m <= m0 && m.powf(2.0 * params.order) <= m0)) {
        return Err(invalid(
            "continuation",
            "schedule",
            format!("value {bad} needs 0 < m <= m0 and m^(2s) <= m0 with m0 = {m0}"),
        ));
    }
    if c.schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid("continuation", "schedule", "must be strictly decreasing".into()));
    }
    let ch = &config.checks;
    for (key, v) in [("samples", ch.samples), ("fields", ch.fields)] {
        if v == 0 {
            return Err(invalid("checks", key, "must be positive".into()));
        }
    }
    for (key, v) in [("dtn_tol", ch.dtn_tol), ("weak_tol", ch.weak_tol)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid("checks", key, format!("must be positive, got {v}")));
        }
    }
    if ch.deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(invalid("checks", "deltas", "must be positive".into()));
    }
    Ok(LoadedConfig {
        config,
        params,
        path: path.to_path_buf(),
    })
}

/// Best guess at the `[problem]` key a parameter error refers to.
fn problem_key(message: &str) -> &'static str {
    let m = message.to_lowercase();
    if m.contains("period") {
        "period"
    } else if m.contains("order") || m.contains("2s") {
        "order"
    } else if m.contains("mass") {
        "mass"
    } else if m.contains("grid") || m.contains(" m ") {
        "grid"
    } else if m.contains("cutoff") {
        "cutoff"
    } else {
        "dim"
    }
}
