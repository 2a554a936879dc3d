//! Flat key=value experiment configs with command-line overrides.
//!
//! Precedence: explicit command-line flag, then config-file entry, then the
//! suite default. The fully resolved config is what lands in the manifest,
//! so a rerun from the manifest alone reproduces the run byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Theorem1,
    Prop2,
    Prop5,
    Prop3Density,
    Prop4Intertwining,
    Volume,
    OracleCheck,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Suite, String> {
        match s {
            "theorem1" => Ok(Suite::Theorem1),
            "prop2" => Ok(Suite::Prop2),
            "prop5" => Ok(Suite::Prop5),
            "prop3-density" => Ok(Suite::Prop3Density),
            "prop4-intertwining" => Ok(Suite::Prop4Intertwining),
            "volume" => Ok(Suite::Volume),
            "oracle-check" => Ok(Suite::OracleCheck),
            other => Err(format!(
                "unknown suite '{other}' (expected theorem1|prop2|prop5|prop3-density|prop4-intertwining|volume|oracle-check)"
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Theorem1 => "theorem1",
            Suite::Prop2 => "prop2",
            Suite::Prop5 => "prop5",
            Suite::Prop3Density => "prop3-density",
            Suite::Prop4Intertwining => "prop4-intertwining",
            Suite::Volume => "volume",
            Suite::OracleCheck => "oracle-check",
        }
    }

    /// Suites whose verdicts are statistical need honest sample sizes.
    pub fn is_statistical(&self) -> bool {
        matches!(self, Suite::Theorem1 | Suite::Prop2 | Suite::Prop5)
    }
}

/// Resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub n: usize,
    pub m: Option<usize>,
    pub t_end: f64,
    pub steps: usize,
    pub samples: u64,
    pub seed: u64,
    pub tol_scale: f64,
    pub workers: Option<usize>,
    pub out: PathBuf,
}

/// Raw overrides coming from flags or a config file; `None` means unset.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub t_end: Option<f64>,
    pub steps: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    /// Later sources win only where the earlier one is unset.
    pub fn or(self, fallback: Overrides) -> Overrides {
        Overrides {
            n: self.n.or(fallback.n),
            m: self.m.or(fallback.m),
            t_end: self.t_end.or(fallback.t_end),
            steps: self.steps.or(fallback.steps),
            samples: self.samples.or(fallback.samples),
            seed: self.seed.or(fallback.seed),
            tol_scale: self.tol_scale.or(fallback.tol_scale),
            workers: self.workers.or(fallback.workers),
            out: self.out.or(fallback.out),
        }
    }
}

pub fn parse_config_file(path: &Path) -> Result<Overrides, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("config line {} is not key=value", lineno + 1));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut o = Overrides::default();
    for (k, v) in map {
        let bad = |e: String| format!("config key '{k}': {e}");
        match k.as_str() {
            "n" => o.n = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "m" => o.m = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "t" | "t_end" => o.t_end = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "steps" => o.steps = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "samples" => o.samples = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "seed" => o.seed = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "tol_scale" => o.tol_scale = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "workers" => o.workers = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
            "out" => o.out = Some(PathBuf::from(v)),
            "suite" | "run_id" | "version" => {}
            other => return Err(format!("unknown config key '{other}'")),
        }
    }
    Ok(o)
}

fn suite_defaults(suite: Suite) -> ExperimentConfig {
    let (n, steps, samples) = match suite {
        Suite::Theorem1 => (1, 10_000, 100_000),
        Suite::Prop2 => (2, 20_000, 10_000),
        Suite::Prop5 => (3, 1_000, 100_000),
        Suite::Prop3Density => (2, 0, 100),
        Suite::Prop4Intertwining => (2, 0, 1_000_000),
        Suite::Volume => (0, 0, 400_000),
        Suite::OracleCheck => (3, 24, 10_000),
    };
    ExperimentConfig {
        suite,
        n,
        m: None,
        t_end: 1.0,
        steps,
        samples,
        seed: 2024_0811,
        tol_scale: 1.0,
        workers: None,
        out: PathBuf::from("runs").join(suite.name()),
    }
}

pub fn resolve(suite: Suite, over: Overrides) -> Result<ExperimentConfig, String> {
    let mut cfg = suite_defaults(suite);
    if let Some(n) = over.n {
        cfg.n = n;
    }
    cfg.m = over.m;
    if let Some(t) = over.t_end {
        cfg.t_end = t;
    }
    if let Some(s) = over.steps {
        cfg.steps = s;
    }
    if let Some(s) = over.samples {
        cfg.samples = s;
    }
    if let Some(s) = over.seed {
        cfg.seed = s;
    }
    if let Some(s) = over.tol_scale {
        cfg.tol_scale = s;
    }
    cfg.workers = over.workers;
    if let Some(o) = over.out {
        cfg.out = o;
    }
    validate(&cfg).map(|()| cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), String> {
    if !(cfg.t_end > 0.0) {
        return Err("t must be positive".to_string());
    }
    if !(cfg.tol_scale > 0.0) {
        return Err("tol-scale must be positive".to_string());
    }
    if cfg.suite.is_statistical() {
        if cfg.samples < 1_000 {
            return Err("statistical suites need samples >= 1000".to_string());
        }
        if cfg.steps == 0 {
            return Err("statistical suites need steps >= 1".to_string());
        }
        if cfg.n == 0 || cfg.n > 8 {
            return Err("n must lie in 1..=8".to_string());
        }
    }
    if cfg.suite == Suite::OracleCheck && (cfg.n == 0 || cfg.n > 4 || cfg.steps < 3) {
        return Err("oracle-check needs n in 1..=4 and steps >= 3".to_string());
    }
    if cfg.suite == Suite::Volume {
        if let Some(m) = cfg.m {
            if !(1..=3).contains(&m) {
                return Err("volume suite supports m in 1..=3".to_string());
            }
        }
    }
    Ok(())
}

/// Plain-simulation config: looser validation than the verification suites.
pub fn simulate_config(over: Overrides) -> Result<ExperimentConfig, String> {
    let cfg = ExperimentConfig {
        suite: Suite::Theorem1,
        n: over.n.unwrap_or(1),
        m: over.m,
        t_end: over.t_end.unwrap_or(1.0),
        steps: over.steps.unwrap_or(1_000),
        samples: over.samples.unwrap_or(10_000),
        seed: over.seed.unwrap_or(2024_0811),
        tol_scale: over.tol_scale.unwrap_or(1.0),
        workers: over.workers,
        out: over.out.unwrap_or_else(|| PathBuf::from("runs/simulate")),
    };
    if !(cfg.t_end > 0.0) {
        return Err("t must be positive".to_string());
    }
    if cfg.steps == 0 || cfg.samples == 0 {
        return Err("steps and samples must be >= 1".to_string());
    }
    if cfg.n == 0 || cfg.n > 8 {
        return Err("n must lie in 1..=8".to_string());
    }
    Ok(cfg)
}

/// Canonical key=value listing that becomes the manifest body.
pub fn manifest_pairs(cfg: &ExperimentConfig) -> Vec<(String, String)> {
    let mut pairs = vec![
        ("suite".to_string(), cfg.suite.name().to_string()),
        ("n".to_string(), cfg.n.to_string()),
        ("t_end".to_string(), format!("{}", cfg.t_end)),
        ("steps".to_string(), cfg.steps.to_string()),
        ("samples".to_string(), cfg.samples.to_string()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("tol_scale".to_string(), format!("{}", cfg.tol_scale)),
        (
            "version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
    ];
    if let Some(m) = cfg.m {
        pairs.push(("m".to_string(), m.to_string()));
    }
    pairs.sort();
    pairs
}
