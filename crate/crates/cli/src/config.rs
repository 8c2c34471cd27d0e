use std::path::{Path, PathBuf};

use posreduce::clustering::AlphaPolicy;
use posreduce::optimizer::AlgoConfig;
use serde::{Deserialize, Serialize};

/// Everything a `reduce` run needs. Loaded from JSON, then patched by flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory holding the full model.
    pub system: Option<PathBuf>,
    /// Partition JSON; defaults to `partition.json` inside `system`.
    pub partition: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub alpha: AlphaSetting,
    /// Recorded in the summary; the pipeline itself is deterministic.
    pub seed: u64,
    pub algorithm: AlgoConfig,
}

/// `"auto"` or a fixed shift in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    #[default]
    #[serde(with = "auto_keyword")]
    Auto,
    Fixed(f64),
}

mod auto_keyword {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s.eq_ignore_ascii_case("auto") {
            Ok(())
        } else {
            Err(D::Error::custom(format!("alpha must be \"auto\" or a number, got {s:?}")))
        }
    }
}

impl AlphaSetting {
    pub fn parse(text: &str) -> Result<Self, String> {
        if text.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        text.parse::<f64>()
            .map(Self::Fixed)
            .map_err(|_| format!("alpha must be \"auto\" or a number, got {text:?}"))
    }

    pub fn policy(self) -> AlphaPolicy {
        match self {
            Self::Auto => AlphaPolicy::Auto,
            Self::Fixed(v) => AlphaPolicy::Fixed(v),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn partition_path(&self) -> Option<PathBuf> {
        self.partition
            .clone()
            .or_else(|| self.system.as_ref().map(|s| s.join("partition.json")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_accepts_keyword_and_number() {
        let cfg: RunConfig = serde_json::from_str(r#"{"alpha": "auto"}"#).unwrap();
        assert_eq!(cfg.alpha, AlphaSetting::Auto);
        let cfg: RunConfig = serde_json::from_str(r#"{"alpha": 0.25}"#).unwrap();
        assert_eq!(cfg.alpha, AlphaSetting::Fixed(0.25));
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpha": "half"}"#).is_err());
        assert_eq!(AlphaSetting::parse("AUTO"), Ok(AlphaSetting::Auto));
        assert!(AlphaSetting::parse("x").is_err());
    }

    #[test]
    fn nested_algorithm_fields_and_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"system": "sys", "algorithm": {"max_iters": 7, "c": 1.5}}"#).unwrap();
        assert_eq!(cfg.algorithm.max_iters, 7);
        assert_eq!(cfg.algorithm.c, 1.5);
        assert_eq!(cfg.algorithm.c1, 1.0);
        assert_eq!(cfg.partition_path(), Some(PathBuf::from("sys/partition.json")));
        assert!(serde_json::from_str::<RunConfig>(r#"{"sytem": "x"}"#).is_err());
    }

    #[test]
    fn serializes_back_to_loadable_json() {
        let cfg = RunConfig { alpha: AlphaSetting::Fixed(0.5), ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.alpha, cfg.alpha);
        let auto = serde_json::to_string(&RunConfig::default()).unwrap();
        assert!(auto.contains(r#""alpha":"auto""#));
    }
}
