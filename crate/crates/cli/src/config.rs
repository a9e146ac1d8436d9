//! Training config files: flat `key = value` lines whose keys are exactly
//! the `TrainConfig` field names. `#` starts a comment; unknown keys are
//! errors; missing keys keep their defaults.

use std::fs;
use std::path::Path;

use splitz_core::train::TrainConfig;

use crate::error::CliError;

pub fn load_train_config(path: &Path) -> Result<TrainConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse_train_config(&text).map_err(|m| CliError::format(path.display().to_string(), m))
}

pub(crate) fn parse_train_config(text: &str) -> Result<TrainConfig, String> {
    let mut cfg = TrainConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("line {}: {key} expects {what}, got '{value}'", lineno + 1);
        match key {
            "hidden_dims" => {
                cfg.hidden_dims = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad("a comma-separated list of widths"))?;
            }
            "clip_threshold" => cfg.clip_threshold = value.parse().map_err(|_| bad("a float"))?,
            "split_index" => cfg.split_index = value.parse().map_err(|_| bad("an integer"))?,
            "sigma" => cfg.sigma = value.parse().map_err(|_| bad("a float"))?,
            "lambda_start" => cfg.lambda_start = value.parse().map_err(|_| bad("a float"))?,
            "lambda_end" => cfg.lambda_end = value.parse().map_err(|_| bad("a float"))?,
            "theta_lip" => cfg.theta_lip = value.parse().map_err(|_| bad("a float"))?,
            "theta_lip_learnable" => {
                cfg.theta_lip_learnable = value.parse().map_err(|_| bad("true or false"))?
            }
            "gamma_train" => cfg.gamma_train = value.parse().map_err(|_| bad("a float"))?,
            "noise_draws" => cfg.noise_draws = value.parse().map_err(|_| bad("an integer"))?,
            "epochs" => cfg.epochs = value.parse().map_err(|_| bad("an integer"))?,
            "batch_size" => cfg.batch_size = value.parse().map_err(|_| bad("an integer"))?,
            "learning_rate" => cfg.learning_rate = value.parse().map_err(|_| bad("a float"))?,
            "lr_decay_factor" => {
                cfg.lr_decay_factor = value.parse().map_err(|_| bad("a float"))?
            }
            "lr_decay_every" => cfg.lr_decay_every = value.parse().map_err(|_| bad("an integer"))?,
            "power_iters" => cfg.power_iters = value.parse().map_err(|_| bad("an integer"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad("an integer"))?,
            other => return Err(format!("line {}: unknown key '{other}'", lineno + 1)),
        }
    }
    Ok(cfg)
}
