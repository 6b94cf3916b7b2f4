//! `key = value` run configuration.
//!
//! Keys mirror the fields of [`SolverConfig`], [`ExperimentSpec`] and
//! [`NoiseModel`]. `profile` selects the parameter defaults (`synthetic` or
//! `real`) and is applied before any other key regardless of its position.
//! Blank lines and `#` comments are ignored; unknown or repeated keys are
//! errors.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use hqtc_core::experiments::SolverRun;
use hqtc_core::{ExperimentSpec, KernelSchedule, NoiseModel, SolverConfig, SolverKind};

use crate::error::{ConfigError, Result, ToolError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Synthetic,
    Real,
}

impl Profile {
    pub fn solver_config(self, rank: usize) -> SolverConfig {
        match self {
            Profile::Synthetic => SolverConfig::synthetic(rank),
            Profile::Real => SolverConfig::real(rank),
        }
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "synthetic" => Ok(Profile::Synthetic),
            "real" => Ok(Profile::Real),
            _ => Err(format!("unknown profile `{s}` (expected synthetic or real)")),
        }
    }
}

pub const KEYS: &[&str] = &[
    "profile",
    "solvers",
    "rank",
    "beta",
    "lambda",
    "epsilon",
    "max_iters",
    "eta",
    "sigma_min",
    "fixed_sigma",
    "seed",
    "n1",
    "n2",
    "n3",
    "true_rank",
    "fraction",
    "trials",
    "master_seed",
    "i_max",
    "c",
    "var_a",
    "var_b",
    "sweep_n1",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub profile: Profile,
    /// Solver parameters; `rank` follows `true_rank` unless set.
    pub solver: SolverConfig,
    pub solvers: Vec<SolverKind>,
    pub dims: (usize, usize, usize),
    pub true_rank: usize,
    pub fraction: f64,
    /// Noise applied to observed entries; the seed is derived per trial.
    pub noise: NoiseModel,
    pub trials: usize,
    pub master_seed: u64,
    pub i_max: Option<f64>,
    /// Row counts to sweep in `bench`; empty for a single size.
    pub sweep_n1: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            profile: Profile::Synthetic,
            solver: SolverConfig::synthetic(3),
            solvers: vec![SolverKind::HqTcasd],
            dims: (60, 60, 10),
            true_rank: 3,
            fraction: 0.6,
            noise: NoiseModel::none(),
            trials: 1,
            master_seed: 0,
            i_max: None,
            sweep_n1: Vec::new(),
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> std::result::Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::at(line, format!("`{key}`: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> std::result::Result<Vec<T>, ConfigError> {
    value.split(',').map(|v| parse(line, key, v.trim())).collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut entries: Vec<(usize, &str, &str)> = Vec::new();
        let mut lines: HashMap<&str, usize> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected key=value, got {s:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("`{key}` has no value")));
            }
            if let Some(first) = lines.insert(key, line) {
                return Err(ConfigError::at(line, format!("`{key}` already set on line {first}")));
            }
            entries.push((line, key, value));
        }

        let mut cfg = RunConfig::default();
        if let Some(&(line, _, value)) = entries.iter().find(|e| e.1 == "profile") {
            cfg.profile = value.parse().map_err(|m| ConfigError::at(line, m))?;
            cfg.solver = cfg.profile.solver_config(cfg.true_rank);
        }
        let mut rank = None;
        let mut fixed_sigma = None;
        for &(line, key, value) in &entries {
            let s = &mut cfg.solver;
            match key {
                "profile" => {}
                "solvers" => {
                    cfg.solvers = value
                        .split(',')
                        .map(|v| v.trim().parse().map_err(|e: hqtc_core::Error| ConfigError::at(line, e.to_string())))
                        .collect::<std::result::Result<_, _>>()?;
                }
                "rank" => rank = Some(parse(line, key, value)?),
                "beta" => s.beta = parse(line, key, value)?,
                "lambda" => s.lambda = parse(line, key, value)?,
                "epsilon" => s.epsilon = parse(line, key, value)?,
                "max_iters" => s.max_iters = parse(line, key, value)?,
                "eta" => s.kernel.eta = parse(line, key, value)?,
                "sigma_min" => s.kernel.sigma_min = parse(line, key, value)?,
                "fixed_sigma" => fixed_sigma = Some((line, parse::<f64>(line, key, value)?)),
                "seed" => s.seed = parse(line, key, value)?,
                "n1" => cfg.dims.0 = parse(line, key, value)?,
                "n2" => cfg.dims.1 = parse(line, key, value)?,
                "n3" => cfg.dims.2 = parse(line, key, value)?,
                "true_rank" => cfg.true_rank = parse(line, key, value)?,
                "fraction" => cfg.fraction = parse(line, key, value)?,
                "trials" => cfg.trials = parse(line, key, value)?,
                "master_seed" => cfg.master_seed = parse(line, key, value)?,
                "i_max" => cfg.i_max = Some(parse(line, key, value)?),
                "c" => cfg.noise.c = parse(line, key, value)?,
                "var_a" => cfg.noise.var_a = parse(line, key, value)?,
                "var_b" => cfg.noise.var_b = parse(line, key, value)?,
                "sweep_n1" => cfg.sweep_n1 = parse_list(line, key, value)?,
                _ => unreachable!("key list checked above"),
            }
        }
        cfg.solver.rank = rank.unwrap_or(cfg.true_rank);
        if let Some((line, sigma)) = fixed_sigma {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(ConfigError::at(line, format!("`fixed_sigma` must be positive, got {sigma}")));
            }
            cfg.solver.kernel = KernelSchedule { fixed_sigma: Some(sigma), ..cfg.solver.kernel };
        }
        cfg.validate(&lines)?;
        Ok(cfg)
    }

    fn validate(&self, lines: &HashMap<&str, usize>) -> std::result::Result<(), ConfigError> {
        let fail = |key: &str, message: String| ConfigError { line: lines.get(key).copied(), message };
        let (n1, n2, n3) = self.dims;
        for (key, n) in [("n1", n1), ("n2", n2), ("n3", n3)] {
            if n == 0 {
                return Err(fail(key, format!("`{key}` must be positive")));
            }
        }
        if self.sweep_n1.contains(&0) {
            return Err(fail("sweep_n1", "`sweep_n1` entries must be positive".into()));
        }
        let min_rows = self.sweep_n1.iter().copied().chain([n1]).min().unwrap_or(n1);
        let max_rank = min_rows.min(n2);
        if self.true_rank == 0 || self.true_rank > max_rank {
            return Err(fail("true_rank", format!("`true_rank` must lie in 1..={max_rank}, got {}", self.true_rank)));
        }
        if self.solver.rank == 0 || self.solver.rank > max_rank {
            let key = if lines.contains_key("rank") { "rank" } else { "true_rank" };
            return Err(fail(key, format!("`rank` must lie in 1..={max_rank}, got {}", self.solver.rank)));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(fail("fraction", format!("`fraction` must lie in (0, 1], got {}", self.fraction)));
        }
        if self.trials == 0 {
            return Err(fail("trials", "`trials` must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.solver.lambda) {
            return Err(fail("lambda", format!("`lambda` must lie in [0, 1], got {}", self.solver.lambda)));
        }
        if !(self.solver.beta >= 0.0 && self.solver.beta.is_finite()) {
            return Err(fail("beta", format!("`beta` must be nonnegative, got {}", self.solver.beta)));
        }
        if !(self.solver.epsilon > 0.0 && self.solver.epsilon.is_finite()) {
            return Err(fail("epsilon", format!("`epsilon` must be positive, got {}", self.solver.epsilon)));
        }
        if self.solver.max_iters == 0 {
            return Err(fail("max_iters", "`max_iters` must be at least 1".into()));
        }
        if let Some(v) = self.i_max.filter(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(fail("i_max", format!("`i_max` must be positive, got {v}")));
        }
        let positive = [("eta", self.solver.kernel.eta), ("sigma_min", self.solver.kernel.sigma_min)];
        let nonnegative = [("var_a", self.noise.var_a), ("var_b", self.noise.var_b)];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(fail(key, format!("`{key}` must be positive, got {v}")));
            }
        }
        for (key, v) in nonnegative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(fail(key, format!("`{key}` must be nonnegative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.noise.c) {
            return Err(fail("c", format!("`c` must lie in [0, 1], got {}", self.noise.c)));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        Self::parse(&text).map_err(|source| ToolError::Config { path: path.to_path_buf(), source })
    }

    /// The Monte-Carlo spec at `n1` rows (the configured `n1` when `None`).
    pub fn experiment(&self, n1: Option<usize>) -> ExperimentSpec {
        let (base, n2, n3) = self.dims;
        ExperimentSpec {
            dims: (n1.unwrap_or(base), n2, n3),
            true_rank: self.true_rank,
            fraction: self.fraction,
            noise: self.noise,
            solvers: self.solvers.iter().map(|&kind| SolverRun { kind, config: self.solver }).collect(),
            trials: self.trials,
            master_seed: self.master_seed,
            i_max: self.i_max,
        }
    }
}
