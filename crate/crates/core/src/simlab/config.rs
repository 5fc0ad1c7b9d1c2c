use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExperimentName {
    Lb43,
    SurplusGap,
    RsolRatio,
    Thmub,
}

impl ExperimentName {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Lb43 => "lb43",
            ExperimentName::SurplusGap => "surplus-gap",
            ExperimentName::RsolRatio => "rsol-ratio",
            ExperimentName::Thmub => "thmub",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "lb43" => Ok(ExperimentName::Lb43),
            "surplus-gap" => Ok(ExperimentName::SurplusGap),
            "rsol-ratio" => Ok(ExperimentName::RsolRatio),
            "thmub" => Ok(ExperimentName::Thmub),
            _ => Err(Error::Parse {
                what: "experiment name",
                text: s.to_string(),
                reason: "expected lb43, surplus-gap, rsol-ratio or thmub".into(),
            }),
        }
    }
}

/// Flat `key = value` experiment settings. Unset keys take per-experiment
/// defaults when the experiment runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentName>,
    pub dist: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub n_list: Option<Vec<usize>>,
    pub k_list: Option<Vec<usize>>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub corpus_seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn parse_num<T: FromStr>(key: &'static str, text: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    text.trim().parse().map_err(|e: T::Err| Error::Parse {
        what: key,
        text: text.to_string(),
        reason: e.to_string(),
    })
}

fn parse_list(key: &'static str, text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_num(key, t))
        .collect()
}

impl ExperimentConfig {
    /// Parses lines of `key = value`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    what: "config line",
                    text: format!("{}: {raw}", lineno + 1),
                    reason: "expected `key = value`".into(),
                });
            };
            let value = value.trim();
            match key.trim() {
                "experiment" | "name" => cfg.experiment = Some(value.parse()?),
                "dist" => cfg.dist = Some(value.to_string()),
                "n" => cfg.n = Some(parse_num("n", value)?),
                "k" => cfg.k = Some(parse_num("k", value)?),
                "n_list" => cfg.n_list = Some(parse_list("n_list", value)?),
                "k_list" => cfg.k_list = Some(parse_list("k_list", value)?),
                "reps" => cfg.reps = Some(parse_num("reps", value)?),
                "seed" => cfg.seed = Some(parse_num("seed", value)?),
                "corpus_seed" => cfg.corpus_seed = Some(parse_num("corpus_seed", value)?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                other => {
                    return Err(Error::Parse {
                        what: "config key",
                        text: other.to_string(),
                        reason: "unknown key".into(),
                    })
                }
            }
        }
        if cfg.reps == Some(0) {
            return Err(Error::input("reps must be >= 1"));
        }
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
