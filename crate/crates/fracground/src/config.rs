//! Experiment configuration: a flat key=value text format grouped by bracketed
//! section headers, validated against the module-level preconditions before
//! any run starts.

use crate::grid_spectral::{BoxGrid, FracOrder};
use crate::model::{ModelSpec, Nonlinearity, Potential, PotentialFamily};
use crate::solver::{SeedProfile, SolveConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value` or `[section]`")]
    Malformed(usize),
    #[error("key `{0}` outside any section")]
    NoSection(String),
    #[error("unknown section `{0}`")]
    UnknownSection(String),
    #[error("unknown key `{section}.{key}`")]
    UnknownKey { section: String, key: String },
    #[error("invalid value for `{key}`: {value}")]
    BadValue { key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    // model
    pub dim: usize,
    pub s: f64,
    pub m: f64,
    pub a: f64,
    pub p: f64,
    pub potential: PotentialFamily,
    pub v0: f64,
    pub beta: f64,
    pub t0: Option<f64>,
    // grid
    pub half_width: f64,
    pub points_per_axis: usize,
    // solver
    pub max_iters: usize,
    pub tol: f64,
    pub omega: f64,
    pub stabilization: bool,
    pub seed_profile: String,
    pub seed_amplitude: f64,
    pub seed_radius: f64,
    pub seed_width: f64,
    pub lambda_count: usize,
    // experiment
    pub experiment: String,
    pub radii: Vec<f64>,
    pub fit_r1: f64,
    pub fit_r2: f64,
    pub step_count: usize,
    pub kernel_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dim: 2,
            s: 0.6,
            m: 1.0,
            a: 1.0,
            p: 3.0,
            potential: PotentialFamily::InversePower,
            v0: 0.5,
            beta: 1.0,
            t0: None,
            half_width: 16.0,
            points_per_axis: 256,
            max_iters: 20000,
            tol: 1e-9,
            omega: 0.7,
            stabilization: true,
            seed_profile: "plateau".to_string(),
            seed_amplitude: 2.4142,
            seed_radius: 4.0,
            seed_width: 1.0,
            lambda_count: 8,
            experiment: "existence".to_string(),
            radii: vec![2.0, 4.0, 6.0, 8.0],
            fit_r1: 3.0,
            fit_r2: 8.0,
            step_count: 60,
            kernel_points: 160,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                match section.as_str() {
                    "model" | "grid" | "solver" | "experiment" => {}
                    _ => return Err(ConfigError::UnknownSection(section)),
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Malformed(lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(ConfigError::NoSection(key.to_string()));
            }
            match (section.as_str(), key) {
                ("model", "n") => cfg.dim = parse_num(key, value)?,
                ("model", "s") => cfg.s = parse_num(key, value)?,
                ("model", "m") => cfg.m = parse_num(key, value)?,
                ("model", "a") => cfg.a = parse_num(key, value)?,
                ("model", "p") => cfg.p = parse_num(key, value)?,
                ("model", "potential") => {
                    cfg.potential = match value {
                        "inverse_power" => PotentialFamily::InversePower,
                        "gaussian" => PotentialFamily::Gaussian,
                        "zero" => PotentialFamily::Zero,
                        _ => {
                            return Err(ConfigError::BadValue {
                                key: key.to_string(),
                                value: value.to_string(),
                            })
                        }
                    }
                }
                ("model", "v0") => cfg.v0 = parse_num(key, value)?,
                ("model", "beta") => cfg.beta = parse_num(key, value)?,
                ("model", "t0") => cfg.t0 = Some(parse_num(key, value)?),
                ("grid", "l") => cfg.half_width = parse_num(key, value)?,
                ("grid", "m") => cfg.points_per_axis = parse_num(key, value)?,
                ("solver", "max_iters") => cfg.max_iters = parse_num(key, value)?,
                ("solver", "tol") => cfg.tol = parse_num(key, value)?,
                ("solver", "omega") => cfg.omega = parse_num(key, value)?,
                ("solver", "stabilization") => {
                    cfg.stabilization = match value {
                        "true" | "on" | "1" => true,
                        "false" | "off" | "0" => false,
                        _ => {
                            return Err(ConfigError::BadValue {
                                key: key.to_string(),
                                value: value.to_string(),
                            })
                        }
                    }
                }
                ("solver", "seed_profile") => cfg.seed_profile = value.to_string(),
                ("solver", "seed_amplitude") => cfg.seed_amplitude = parse_num(key, value)?,
                ("solver", "seed_radius") => cfg.seed_radius = parse_num(key, value)?,
                ("solver", "seed_width") => cfg.seed_width = parse_num(key, value)?,
                ("solver", "lambda_count") => cfg.lambda_count = parse_num(key, value)?,
                ("experiment", "name") => cfg.experiment = value.to_string(),
                ("experiment", "radii") => {
                    cfg.radii = value
                        .split(',')
                        .map(|v| parse_num("radii", v))
                        .collect::<Result<_, _>>()?;
                }
                ("experiment", "fit_r1") => cfg.fit_r1 = parse_num(key, value)?,
                ("experiment", "fit_r2") => cfg.fit_r2 = parse_num(key, value)?,
                ("experiment", "step_count") => cfg.step_count = parse_num(key, value)?,
                ("experiment", "kernel_points") => cfg.kernel_points = parse_num(key, value)?,
                (sec, k) => {
                    return Err(ConfigError::UnknownKey {
                        section: sec.to_string(),
                        key: k.to_string(),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = FracOrder::new(self.s)
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        BoxGrid::new(self.dim, self.half_width, self.points_per_axis)
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        let nl = Nonlinearity::new(self.m, self.a, self.p)
            .map_err(|e| ConfigError::Validation(e.to_string()))?;
        nl.check_subcritical(self.dim, s)
            .map_err(|e| ConfigError::Validation(format!("subcriticality check: {e}")))?;
        if self.experiment == "existence" && self.s <= 0.5 {
            return Err(ConfigError::Validation(format!(
                "experiment `existence` requires s > 1/2 (got s = {})",
                self.s
            )));
        }
        if let Some(t0) = self.t0 {
            if t0 <= nl.zeta {
                return Err(ConfigError::Validation(format!(
                    "truncation cap t0 = {t0} must exceed zeta = {}",
                    nl.zeta
                )));
            }
        }
        if !(self.tol > 0.0) || !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(ConfigError::Validation(
                "solver block requires tol > 0 and omega in (0,1]".to_string(),
            ));
        }
        if self.lambda_count < 3 {
            return Err(ConfigError::Validation("lambda_count must be >= 3".to_string()));
        }
        Ok(())
    }

    pub fn grid(&self) -> BoxGrid {
        BoxGrid::new(self.dim, self.half_width, self.points_per_axis).expect("validated")
    }

    pub fn frac_order(&self) -> FracOrder {
        FracOrder::new(self.s).expect("validated")
    }

    pub fn model(&self) -> ModelSpec {
        let nl = Nonlinearity::new(self.m, self.a, self.p)
            .expect("validated")
            .truncate(self.t0)
            .expect("validated");
        let v = Potential { family: self.potential, v0: self.v0, beta: self.beta };
        ModelSpec { nl, v, s: self.frac_order() }
    }

    pub fn solve_config(&self) -> SolveConfig {
        let seed = if self.seed_profile == "gaussian" {
            SeedProfile::Gaussian { amplitude: self.seed_amplitude, width: self.seed_width }
        } else {
            SeedProfile::Plateau { amplitude: self.seed_amplitude, radius: self.seed_radius }
        };
        SolveConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            omega: self.omega,
            stabilization: self.stabilization,
            seed,
        }
    }

    /// Canonical serialization used both as the config echo and as the hash
    /// input; key order is fixed so identical configs hash identically.
    pub fn canonical_echo(&self) -> String {
        let mut map: BTreeMap<&str, String> = BTreeMap::new();
        map.insert("model.n", self.dim.to_string());
        map.insert("model.s", format!("{:.17e}", self.s));
        map.insert("model.m", format!("{:.17e}", self.m));
        map.insert("model.a", format!("{:.17e}", self.a));
        map.insert("model.p", format!("{:.17e}", self.p));
        map.insert("model.potential", format!("{:?}", self.potential));
        map.insert("model.v0", format!("{:.17e}", self.v0));
        map.insert("model.beta", format!("{:.17e}", self.beta));
        map.insert(
            "model.t0",
            self.t0.map(|t| format!("{t:.17e}")).unwrap_or_else(|| "none".to_string()),
        );
        map.insert("grid.l", format!("{:.17e}", self.half_width));
        map.insert("grid.m", self.points_per_axis.to_string());
        map.insert("solver.max_iters", self.max_iters.to_string());
        map.insert("solver.tol", format!("{:.17e}", self.tol));
        map.insert("solver.omega", format!("{:.17e}", self.omega));
        map.insert("solver.stabilization", self.stabilization.to_string());
        map.insert("solver.seed_profile", self.seed_profile.clone());
        map.insert("solver.seed_amplitude", format!("{:.17e}", self.seed_amplitude));
        map.insert("solver.seed_radius", format!("{:.17e}", self.seed_radius));
        map.insert("solver.seed_width", format!("{:.17e}", self.seed_width));
        map.insert("solver.lambda_count", self.lambda_count.to_string());
        map.insert("experiment.name", self.experiment.clone());
        map.insert(
            "experiment.radii",
            self.radii.iter().map(|r| format!("{r:.17e}")).collect::<Vec<_>>().join(","),
        );
        map.insert("experiment.fit_r1", format!("{:.17e}", self.fit_r1));
        map.insert("experiment.fit_r2", format!("{:.17e}", self.fit_r2));
        map.insert("experiment.step_count", self.step_count.to_string());
        map.insert("experiment.kernel_points", self.kernel_points.to_string());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
