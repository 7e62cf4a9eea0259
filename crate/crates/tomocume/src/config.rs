//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; lists are comma separated.
//! Every key is optional and unknown keys are rejected.

use std::path::{Path, PathBuf};

use thiserror::Error;
use tomocume_core::solvers::{SolverConfig, SolverKind};
use tomocume_core::system::Epsilons;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    Value {
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Edge list; the bundled NSFNET topology when unset.
    pub topology: Option<PathBuf>,
    pub k: usize,
    pub orders: Vec<usize>,
    pub samples: Vec<usize>,
    pub trials: usize,
    pub rate_lo: f64,
    pub rate_hi: f64,
    pub epsilons: Epsilons,
    pub gamma: f64,
    pub iterations: usize,
    pub init: f64,
    pub negative_replacement: f64,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    pub output: PathBuf,
    /// Add the exact-cumulant (`N = ∞`) row to the tables.
    pub theoretical: bool,
    /// Weight the exact-cumulant systems with `epsilons` too.
    pub theoretical_epsilon: bool,
    /// Weight the iteration's inputs with `epsilons`; least squares always is.
    pub iteration_epsilon: bool,
    /// Sample size of the ratio figure and the comparison table.
    pub compare_samples: usize,
    /// Cumulant order of the ratio figure's numerator.
    pub ratio_order: usize,
    pub ratio_solver: SolverKind,
    /// Ratio denominators below this are reported as outliers.
    pub outlier_threshold: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: None,
            k: 2,
            orders: vec![1, 2, 3],
            samples: vec![10_000, 20_000, 50_000],
            trials: 50,
            rate_lo: 0.0,
            rate_hi: 4.0,
            epsilons: Epsilons([1.0, 0.01, 1.0]),
            gamma: 0.0005,
            iterations: 300,
            init: 0.1,
            negative_replacement: 0.005,
            seed: 2024,
            solvers: vec![SolverKind::Iteration, SolverKind::LeastSquares],
            output: PathBuf::from("out"),
            theoretical: true,
            theoretical_epsilon: false,
            iteration_epsilon: true,
            compare_samples: 50_000,
            ratio_order: 3,
            ratio_solver: SolverKind::Iteration,
            outlier_threshold: 1e-9,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(|s| {
            s.trim()
                .replace('_', "")
                .parse::<T>()
                .map_err(|_| format!("bad list item {s:?}"))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.replace('_', "")
        .parse::<T>()
        .map_err(|_| format!("cannot parse {v:?}"))
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

pub fn parse_solver(v: &str) -> Result<SolverKind, String> {
    match v.trim() {
        "iteration" | "idiv" => Ok(SolverKind::Iteration),
        "ls" | "least_squares" => Ok(SolverKind::LeastSquares),
        other => Err(format!("unknown solver {other:?}")),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut eps = cfg.epsilons.0;
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_owned(),
                });
            }
            seen.push(key.to_owned());
            let bad = |message: String| ConfigError::Value {
                line,
                key: key.to_owned(),
                message,
            };
            match key {
                "topology" => cfg.topology = Some(PathBuf::from(value)),
                "k" => cfg.k = parse_one(value).map_err(bad)?,
                "r" | "orders" => cfg.orders = parse_list(value).map_err(bad)?,
                "n" | "samples" => cfg.samples = parse_list(value).map_err(bad)?,
                "trials" | "t" => cfg.trials = parse_one(value).map_err(bad)?,
                "rate_lo" => cfg.rate_lo = parse_one(value).map_err(bad)?,
                "rate_hi" => cfg.rate_hi = parse_one(value).map_err(bad)?,
                "eps2" => eps[0] = parse_one(value).map_err(bad)?,
                "eps3" => eps[1] = parse_one(value).map_err(bad)?,
                "eps4" => eps[2] = parse_one(value).map_err(bad)?,
                "gamma" => cfg.gamma = parse_one(value).map_err(bad)?,
                "iterations" => cfg.iterations = parse_one(value).map_err(bad)?,
                "init" => cfg.init = parse_one(value).map_err(bad)?,
                "negative_replacement" => {
                    cfg.negative_replacement = parse_one(value).map_err(bad)?
                }
                "seed" => cfg.seed = parse_one(value).map_err(bad)?,
                "solvers" => {
                    cfg.solvers = value
                        .split(',')
                        .map(parse_solver)
                        .collect::<Result<_, _>>()
                        .map_err(bad)?
                }
                "output" => cfg.output = PathBuf::from(value),
                "theoretical" => cfg.theoretical = parse_bool(value).map_err(bad)?,
                "theoretical_epsilon" => {
                    cfg.theoretical_epsilon = parse_bool(value).map_err(bad)?
                }
                "iteration_epsilon" => cfg.iteration_epsilon = parse_bool(value).map_err(bad)?,
                "compare_samples" => cfg.compare_samples = parse_one(value).map_err(bad)?,
                "ratio_order" => cfg.ratio_order = parse_one(value).map_err(bad)?,
                "ratio_solver" => cfg.ratio_solver = parse_solver(value).map_err(bad)?,
                "outlier_threshold" => cfg.outlier_threshold = parse_one(value).map_err(bad)?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_owned(),
                    })
                }
            }
        }
        cfg.epsilons = Epsilons::new(eps[0], eps[1], eps[2])
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `topology` or `output` is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        let mut cfg = Self::parse(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(t) = &cfg.topology {
            if t.is_relative() {
                cfg.topology = Some(base.join(t));
            }
        }
        if cfg.output.is_relative() {
            cfg.output = base.join(&cfg.output);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(m.to_owned()));
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if self.k == 0 {
            return invalid("k must be at least 1");
        }
        if self.orders.is_empty() || self.orders.iter().any(|r| !(1..=4).contains(r)) {
            return invalid("orders must lie in 1..=4");
        }
        if !(1..=4).contains(&self.ratio_order) {
            return invalid("ratio_order must lie in 1..=4");
        }
        let needed = self
            .orders
            .iter()
            .copied()
            .chain([self.ratio_order])
            .max()
            .unwrap_or(1);
        if self
            .samples
            .iter()
            .chain([&self.compare_samples])
            .any(|&n| n < needed)
        {
            return invalid("every sample size must be at least the largest order (4 when r = 4)");
        }
        if !(self.rate_lo >= 0.0 && self.rate_lo <= self.rate_hi && self.rate_hi.is_finite()) {
            return invalid("need 0 <= rate_lo <= rate_hi < inf");
        }
        if self.solvers.is_empty() {
            return invalid("at least one solver is required");
        }
        if self.outlier_threshold.is_nan() || self.outlier_threshold < 0.0 {
            return invalid("outlier_threshold must be nonnegative");
        }
        self.solver_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iterations: self.iterations,
            init: self.init,
            gamma: self.gamma,
            negative_replacement: self.negative_replacement,
            ..SolverConfig::default()
        }
    }

    /// Weights applied to a system solved by `solver`, empirical or not.
    pub fn epsilons_for(&self, solver: SolverKind, theoretical: bool) -> Epsilons {
        let weighted = match solver {
            SolverKind::LeastSquares => true,
            SolverKind::Iteration => self.iteration_epsilon,
        };
        if weighted && (!theoretical || self.theoretical_epsilon) {
            self.epsilons
        } else {
            Epsilons::UNIT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.k, 2);
        assert_eq!(c.epsilons, Epsilons::new(1.0, 0.01, 1.0).unwrap());
        assert_eq!((c.gamma, c.iterations, c.init), (0.0005, 300, 0.1));
        assert_eq!((c.rate_lo, c.rate_hi), (0.0, 4.0));
        assert_eq!(c.trials, 50);
        assert!(c.samples.iter().all(|&n| n <= 50_000));
    }

    #[test]
    fn parses_values_and_comments() {
        let c = ExperimentConfig::parse(
            "# desk run\nk = 1\nr = 1, 2\nn = 1_000,2000 # inline\nsolvers = ls\neps3 = 0.5\ntheoretical = no\n",
        )
        .unwrap();
        assert_eq!(c.k, 1);
        assert_eq!(c.orders, vec![1, 2]);
        assert_eq!(c.samples, vec![1000, 2000]);
        assert_eq!(c.solvers, vec![SolverKind::LeastSquares]);
        assert_eq!(c.epsilons.0[1], 0.5);
        assert!(!c.theoretical);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            ExperimentConfig::parse("k 2"),
            Err(ConfigError::Syntax { line: 1 })
        );
        assert!(matches!(
            ExperimentConfig::parse("\nfoo = 1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("k=1\nk=2"),
            Err(ConfigError::Duplicate { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("k = two"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            ExperimentConfig::parse("trials = 0"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("r = 5"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("r = 4\nn = 3"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("eps3 = 0"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("rate_lo = 3\nrate_hi = 1"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ExperimentConfig::parse("gamma = -1"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn epsilon_switches() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.epsilons_for(SolverKind::LeastSquares, false), c.epsilons);
        assert_eq!(c.epsilons_for(SolverKind::Iteration, false), c.epsilons);
        assert_eq!(
            c.epsilons_for(SolverKind::LeastSquares, true),
            Epsilons::UNIT
        );
        c.iteration_epsilon = false;
        assert_eq!(c.epsilons_for(SolverKind::Iteration, false), Epsilons::UNIT);
        c.theoretical_epsilon = true;
        assert_eq!(c.epsilons_for(SolverKind::LeastSquares, true), c.epsilons);
    }
}
