//! Run configuration: a flat `section.key = value` text file, with
//! `TRUSTLENS_SECTION_KEY` environment variables overriding file values.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::RatingFormat;
use crate::eval::{EvalConfig, ExperimentConfig, ModeSelection};
use crate::predictor::PredictorConfig;
use crate::trust_map::EvidenceMapConfig;

pub const ENV_PREFIX: &str = "TRUSTLENS_";

/// Every recognised key with its default. `dataset.path` has none.
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("dataset.path", None),
    ("dataset.format", Some("tab")),
    ("experiment.windows", Some("5")),
    ("experiment.cumulative", Some("false")),
    ("experiment.user_cap", Some("none")),
    ("experiment.seed", Some("42")),
    ("similarity.min_overlap", Some("10")),
    ("trust.k_exponent", Some("1")),
    ("predictor.normalize", Some("true")),
    ("eval.fast_mode", Some("false")),
    ("eval.min_user_ratings", Some("10")),
    ("eval.mode", Some("both")),
    ("eval.threads", Some("0")),
    ("output.dir", Some("out")),
    ("output.csv", Some("report.csv")),
    ("output.json", Some("report.json")),
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

/// Environment variable that overrides `key`, e.g. `TRUSTLENS_EXPERIMENT_WINDOWS`.
pub fn env_var_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_ascii_uppercase())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_path: PathBuf,
    pub dataset_format: RatingFormat,
    pub experiment: ExperimentConfig,
    pub output_dir: PathBuf,
    pub csv_name: String,
    pub json_name: String,
}

/// Parses `section.key = value` lines. Blank lines and `#` comments are skipped.
fn parse_pairs(text: &str, violations: &mut Vec<String>) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            violations.push(format!("line {}: expected `section.key = value`", idx + 1));
            continue;
        };
        let key = key.trim().to_string();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            violations.push(format!("line {}: unknown key `{key}`", idx + 1));
            continue;
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            violations.push(format!("line {}: duplicate key `{key}`", idx + 1));
        }
    }
    out
}

fn resolve(base_dir: &Path, p: PathBuf) -> PathBuf {
    let p = if p.is_relative() { base_dir.join(p) } else { p };
    std::path::absolute(&p).unwrap_or(p)
}

fn parse_bool(key: &str, v: &str, violations: &mut Vec<String>) -> bool {
    match v {
        "true" => true,
        "false" => false,
        _ => {
            violations.push(format!("{key}: expected true or false, got `{v}`"));
            false
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str, violations: &mut Vec<String>) -> Option<T> {
    match v.parse() {
        Ok(x) => Some(x),
        Err(_) => {
            violations.push(format!("{key}: expected a non-negative integer, got `{v}`"));
            None
        }
    }
}

impl RunConfig {
    /// Reads a config file, applying overrides from the process environment.
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        Self::load_with_env(path, std::env::vars())
    }

    pub fn load_with_env<I>(path: &Path, env: I) -> Result<RunConfig, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str_with_env(&text, base, env)
    }

    /// Relative paths in the file are resolved against `base_dir`.
    pub fn from_str_with_env<I>(
        text: &str,
        base_dir: &Path,
        env: I,
    ) -> Result<RunConfig, ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut violations = Vec::new();
        let mut values = parse_pairs(text, &mut violations);
        let env: BTreeMap<String, String> = env
            .into_iter()
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        for (key, _) in KEYS {
            if let Some(v) = env.get(&env_var_name(key)) {
                values.insert(key.to_string(), v.trim().to_string());
            }
        }
        let get = |key: &str| -> Option<String> {
            values.get(key).cloned().or_else(|| {
                KEYS.iter()
                    .find(|(k, _)| *k == key)
                    .and_then(|(_, d)| d.map(str::to_string))
            })
        };

        let dataset_path = match get("dataset.path") {
            Some(p) if !p.is_empty() => {
                let p = PathBuf::from(p);
                let p = resolve(base_dir, p);
                if !p.is_file() {
                    violations.push(format!("dataset.path: file not found: {}", p.display()));
                }
                p
            }
            _ => {
                violations.push("dataset.path: required".to_string());
                PathBuf::new()
            }
        };
        let dataset_format = get("dataset.format")
            .unwrap()
            .parse::<RatingFormat>()
            .unwrap_or_else(|e| {
                violations.push(format!("dataset.format: {e}"));
                RatingFormat::Tab
            });

        let windows = parse_num::<usize>(
            "experiment.windows",
            &get("experiment.windows").unwrap(),
            &mut violations,
        );
        if windows == Some(0) {
            violations.push("experiment.windows: must be at least 1".to_string());
        }
        let cumulative = parse_bool(
            "experiment.cumulative",
            &get("experiment.cumulative").unwrap(),
            &mut violations,
        );
        let user_cap = match get("experiment.user_cap").unwrap().as_str() {
            "none" => None,
            v => match parse_num::<usize>("experiment.user_cap", v, &mut violations) {
                Some(0) => {
                    violations
                        .push("experiment.user_cap: must be at least 1 (or `none`)".to_string());
                    None
                }
                other => other,
            },
        };
        let seed = parse_num::<u64>(
            "experiment.seed",
            &get("experiment.seed").unwrap(),
            &mut violations,
        );
        let min_overlap = parse_num::<usize>(
            "similarity.min_overlap",
            &get("similarity.min_overlap").unwrap(),
            &mut violations,
        );
        if min_overlap.is_some_and(|n| n < 2) {
            violations.push("similarity.min_overlap: must be at least 2".to_string());
        }
        let evidence = parse_num::<u32>(
            "trust.k_exponent",
            &get("trust.k_exponent").unwrap(),
            &mut violations,
        )
        .and_then(|k| match EvidenceMapConfig::new(k) {
            Ok(c) => Some(c),
            Err(e) => {
                violations.push(format!("trust.k_exponent: {e}"));
                None
            }
        });
        let normalize = parse_bool(
            "predictor.normalize",
            &get("predictor.normalize").unwrap(),
            &mut violations,
        );
        let fast_mode = parse_bool(
            "eval.fast_mode",
            &get("eval.fast_mode").unwrap(),
            &mut violations,
        );
        let min_user_ratings = parse_num::<usize>(
            "eval.min_user_ratings",
            &get("eval.min_user_ratings").unwrap(),
            &mut violations,
        );
        if min_user_ratings.is_some_and(|n| n < 2) {
            violations.push("eval.min_user_ratings: must be at least 2".to_string());
        }
        let modes = get("eval.mode")
            .unwrap()
            .parse::<ModeSelection>()
            .unwrap_or_else(|e| {
                violations.push(format!("eval.mode: {e}"));
                ModeSelection::Both
            });
        let threads = parse_num::<usize>(
            "eval.threads",
            &get("eval.threads").unwrap(),
            &mut violations,
        );
        let output_dir = PathBuf::from(get("output.dir").unwrap());
        let output_dir = resolve(base_dir, output_dir);
        let file_name = |key: &str, violations: &mut Vec<String>| {
            let v = get(key).unwrap();
            if v.is_empty() || v.contains('/') {
                violations.push(format!("{key}: expected a plain file name, got `{v}`"));
            }
            v
        };
        let csv_name = file_name("output.csv", &mut violations);
        let json_name = file_name("output.json", &mut violations);

        if !violations.is_empty() {
            return Err(ConfigError::Invalid(violations));
        }
        Ok(RunConfig {
            dataset_path,
            dataset_format,
            experiment: ExperimentConfig {
                eval: EvalConfig {
                    min_overlap: min_overlap.unwrap(),
                    evidence: evidence.unwrap(),
                    predictor: PredictorConfig { normalize },
                    min_user_ratings: min_user_ratings.unwrap(),
                    fast_mode,
                },
                windows: windows.unwrap(),
                cumulative,
                user_cap,
                seed: seed.unwrap(),
                modes,
                threads: threads.unwrap(),
            },
            output_dir,
            csv_name,
            json_name,
        })
    }

    /// Resolved settings as `key = value` lines, in the same syntax the loader accepts.
    pub fn to_config_text(&self) -> String {
        let e = &self.experiment;
        let pairs: [(&str, String); 16] = [
            ("dataset.path", self.dataset_path.display().to_string()),
            ("dataset.format", self.dataset_format.to_string()),
            ("experiment.windows", e.windows.to_string()),
            ("experiment.cumulative", e.cumulative.to_string()),
            (
                "experiment.user_cap",
                e.user_cap.map_or("none".to_string(), |c| c.to_string()),
            ),
            ("experiment.seed", e.seed.to_string()),
            ("similarity.min_overlap", e.eval.min_overlap.to_string()),
            ("trust.k_exponent", e.eval.evidence.k().to_string()),
            (
                "predictor.normalize",
                e.eval.predictor.normalize.to_string(),
            ),
            ("eval.fast_mode", e.eval.fast_mode.to_string()),
            ("eval.min_user_ratings", e.eval.min_user_ratings.to_string()),
            ("eval.mode", e.modes.to_string()),
            ("eval.threads", e.threads.to_string()),
            ("output.dir", self.output_dir.display().to_string()),
            ("output.csv", self.csv_name.clone()),
            ("output.json", self.json_name.clone()),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_dir.join(&self.csv_name)
    }

    pub fn json_path(&self) -> PathBuf {
        self.output_dir.join(&self.json_name)
    }
}
