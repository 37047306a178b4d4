//! Flat `key = value` run configuration.
//!
//! The format is deliberately trivial to parse in any language: one
//! `key = value` pair per line, `#` starts a comment, blank lines are
//! ignored, and dotted keys scope per-optimizer settings
//! (`opt.<name>.alpha = 0.6`). Unknown or inapplicable keys are errors —
//! there is no silent typo tolerance.
//!
//! ```text
//! problem = wdbc
//! data.path = data/wdbc.csv
//! data.split_seed = 42
//! data.test_fraction = 0.2
//! epochs = 100
//! seed = 42
//! batch = full
//! out_dir = out
//! optimizers = tfgd,sgd
//! opt.tfgd.mode = recursive
//! opt.tfgd.alpha = 0.6
//! opt.tfgd.lambda = 0.5
//! opt.tfgd.eta0 = 0.1
//! opt.sgd.mode = sgd
//! opt.sgd.eta0 = 0.1
//! ```
//!
//! Recognised keys: `problem` (`wdbc` | `quadratic`), `epochs`, `seed`,
//! `batch` (`full` or a batch size), `out_dir`, `optimizers` (comma list);
//! for `wdbc`: `data.path`, `data.split_seed`, `data.test_fraction`,
//! `model.l2`; for `quadratic`: `quadratic.dim`, `quadratic.scale`,
//! `quadratic.init`; per optimizer `<n>` in the list: `opt.<n>.mode`
//! (`exact` | `windowed` | `recursive` | `sgd`), `opt.<n>.eta0`,
//! `opt.<n>.alpha`, `opt.<n>.lambda`, `opt.<n>.schedule`
//! (`constant` | `power`), `opt.<n>.convention` (`rising` | `gl`),
//! `opt.<n>.window`, `opt.<n>.tail_tolerance`.

use crate::harness::{BatchMode, ExperimentConfig, ExperimentProblem};
use crate::optimizer::{Mode, OptimizerConfig, Schedule};
use crate::weights::{Convention, WeightParams};
use std::collections::BTreeMap;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {content:?}")]
    Syntax { line: usize, content: String },
    #[error("duplicate key {0:?}")]
    DuplicateKey(String),
    #[error("missing required key {0:?}")]
    MissingKey(String),
    #[error("key {key:?}: {message}")]
    BadValue { key: String, message: String },
    #[error("unknown or inapplicable key(s): {0}")]
    UnknownKeys(String),
}

/// Parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub out_dir: PathBuf,
}

pub fn parse_run_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: index + 1,
                content: raw.trim().to_string(),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: index + 1,
                content: raw.trim().to_string(),
            });
        }
        if pairs.insert(key.clone(), value).is_some() {
            return Err(ConfigError::DuplicateKey(key));
        }
    }

    let mut pairs = Pairs(pairs);

    let problem_kind = pairs.required("problem")?;
    let problem = match problem_kind.as_str() {
        "wdbc" => ExperimentProblem::Wdbc {
            path: PathBuf::from(pairs.required("data.path")?),
            split_seed: pairs.parse_or("data.split_seed", 42u64)?,
            test_fraction: {
                let f = pairs.parse_or("data.test_fraction", 0.2f64)?;
                if !f.is_finite() || f <= 0.0 || f >= 1.0 {
                    return Err(bad("data.test_fraction", "must lie strictly in (0, 1)"));
                }
                f
            },
            l2: {
                let l2 = pairs.parse_or("model.l2", 0.0f64)?;
                if !l2.is_finite() || l2 < 0.0 {
                    return Err(bad("model.l2", "must be >= 0"));
                }
                l2
            },
        },
        "quadratic" => ExperimentProblem::Quadratic {
            dim: {
                let d: usize = pairs.parse_required("quadratic.dim")?;
                if d == 0 {
                    return Err(bad("quadratic.dim", "must be >= 1"));
                }
                d
            },
            scale: {
                let s = pairs.parse_or("quadratic.scale", 1.0f64)?;
                if !s.is_finite() || s <= 0.0 {
                    return Err(bad("quadratic.scale", "must be > 0"));
                }
                s
            },
            init: pairs.parse_or("quadratic.init", 1.0f64)?,
        },
        other => {
            return Err(bad(
                "problem",
                &format!("expected `wdbc` or `quadratic`, got {other:?}"),
            ))
        }
    };

    let epochs: usize = pairs.parse_required("epochs")?;
    if epochs == 0 {
        return Err(bad("epochs", "must be >= 1"));
    }
    let seed = pairs.parse_or("seed", 42u64)?;
    let batch = match pairs.take("batch") {
        None => BatchMode::FullBatch,
        Some(v) if v == "full" => BatchMode::FullBatch,
        Some(v) => match v.parse::<usize>() {
            Ok(size) if size >= 1 => BatchMode::MiniBatch(size),
            _ => return Err(bad("batch", "expected `full` or a batch size >= 1")),
        },
    };
    let out_dir = PathBuf::from(pairs.take("out_dir").unwrap_or_else(|| "out".to_string()));

    let optimizer_list = pairs.required("optimizers")?;
    let names: Vec<String> = optimizer_list
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if names.iter().any(|n| n.is_empty()) {
        return Err(bad("optimizers", "expected a comma-separated list of names"));
    }
    let mut optimizers = Vec::with_capacity(names.len());
    for name in &names {
        if optimizers.iter().any(|(n, _)| n == name) {
            return Err(bad("optimizers", &format!("duplicate optimizer name {name:?}")));
        }
        optimizers.push((name.clone(), parse_optimizer(&mut pairs, name)?));
    }

    if !pairs.0.is_empty() {
        let keys: Vec<String> = pairs.0.keys().cloned().collect();
        return Err(ConfigError::UnknownKeys(keys.join(", ")));
    }

    Ok(RunConfig {
        experiment: ExperimentConfig {
            problem,
            optimizers,
            epochs,
            batch,
            seed,
        },
        out_dir,
    })
}

fn parse_optimizer(pairs: &mut Pairs, name: &str) -> Result<OptimizerConfig, ConfigError> {
    let key = |field: &str| format!("opt.{name}.{field}");

    let mode = match pairs.required(&key("mode"))?.as_str() {
        "exact" => Mode::Exact,
        "windowed" => Mode::Windowed,
        "recursive" => Mode::Recursive,
        "sgd" => Mode::SgdBaseline,
        other => {
            return Err(bad(
                &key("mode"),
                &format!("expected exact | windowed | recursive | sgd, got {other:?}"),
            ))
        }
    };
    let schedule = match pairs.take(&key("schedule")).as_deref() {
        None | Some("constant") => Schedule::Constant,
        Some("power") => Schedule::PowerDecay,
        Some(other) => {
            return Err(bad(
                &key("schedule"),
                &format!("expected constant | power, got {other:?}"),
            ))
        }
    };
    let convention = match pairs.take(&key("convention")).as_deref() {
        None | Some("rising") => Convention::RisingFactorial,
        Some("gl") => Convention::GlAbsolute,
        Some(other) => {
            return Err(bad(
                &key("convention"),
                &format!("expected rising | gl, got {other:?}"),
            ))
        }
    };

    // the baseline ignores alpha/lambda, so they may be omitted there unless
    // the power-decay schedule needs alpha
    let needs_weights = mode != Mode::SgdBaseline || schedule == Schedule::PowerDecay;
    let alpha = match pairs.parse_opt::<f64>(&key("alpha"))? {
        Some(a) => a,
        None if needs_weights => return Err(ConfigError::MissingKey(key("alpha"))),
        None => 1.0,
    };
    let lambda = match pairs.parse_opt::<f64>(&key("lambda"))? {
        Some(l) => l,
        None if mode != Mode::SgdBaseline => return Err(ConfigError::MissingKey(key("lambda"))),
        None => 1.0,
    };
    let weight_params = WeightParams::new(alpha, lambda, convention)
        .map_err(|e| bad(&key("alpha"), &e.to_string()))?;

    let eta0: f64 = pairs.parse_required(&key("eta0"))?;
    let mut config = OptimizerConfig::new(mode, weight_params, eta0, schedule)
        .map_err(|e| bad(&key("eta0"), &e.to_string()))?;

    if let Some(window) = pairs.parse_opt::<usize>(&key("window"))? {
        if mode != Mode::Windowed {
            return Err(bad(&key("window"), "only valid for windowed mode"));
        }
        config = config
            .with_window(window)
            .map_err(|e| bad(&key("window"), &e.to_string()))?;
    }
    if let Some(tol) = pairs.parse_opt::<f64>(&key("tail_tolerance"))? {
        config = config
            .with_tail_tolerance(tol)
            .map_err(|e| bad(&key("tail_tolerance"), &e.to_string()))?;
    }
    Ok(config)
}

fn bad(key: &str, message: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        message: message.to_string(),
    }
}

struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String, ConfigError> {
        self.take(key)
            .ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                bad(
                    key,
                    &format!("cannot parse {v:?} as {}", std::any::type_name::<T>()),
                )
            }),
        }
    }

    fn parse_required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        match self.parse_opt(key)? {
            Some(v) => Ok(v),
            None => Err(ConfigError::MissingKey(key.to_string())),
        }
    }

    fn parse_or<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }
}
