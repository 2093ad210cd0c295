//! JSON chain configuration.
//!
//! ```json
//! {
//!   "repeaters": 5,
//!   "honest_left": 2,
//!   "honest_right": 2,
//!   "links": [
//!     {"type": "depolarizing", "q": 0.03},
//!     {"type": "explicit", "probs": [0.97, 0.01, 0.01, 0.01]}
//!   ],
//!   "p_star_override": 0.05
//! }
//! ```
//!
//! `probs` is indexed `(bt,ph) = (0,0), (0,1), (1,0), (1,1)`.

use std::path::Path;

use serde::Deserialize;

use crate::bell::BellDiagonal;
use crate::error::{Error, Result};
use crate::noise::{ChainSpec, LinkNoise};

/// Normalization tolerance accepted for hand-written `probs`.
pub const CONFIG_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LinkConfig {
    Depolarizing { q: f64 },
    Explicit { probs: [f64; 4] },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfigFile {
    pub repeaters: usize,
    #[serde(default)]
    pub honest_left: usize,
    #[serde(default)]
    pub honest_right: usize,
    pub links: Vec<LinkConfig>,
    #[serde(default)]
    pub p_star_override: Option<f64>,
}

impl ChainConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ChainConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.link_noise()?;
        if let Some(p) = cfg.p_star_override {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::Config(format!(
                    "key `p_star_override`: {p} outside [0, 1/2)"
                )));
            }
        }
        cfg.chain()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Identical depolarizing chain.
    pub fn preset(repeaters: usize, q: f64) -> Self {
        ChainConfigFile {
            repeaters,
            honest_left: 0,
            honest_right: 0,
            links: vec![LinkConfig::Depolarizing { q }; repeaters + 1],
            p_star_override: None,
        }
    }

    pub fn link_noise(&self) -> Result<Vec<LinkNoise>> {
        self.links
            .iter()
            .enumerate()
            .map(|(i, link)| match *link {
                LinkConfig::Depolarizing { q } => {
                    if !(0.0..=1.0).contains(&q) {
                        return Err(Error::Config(format!("key `links[{i}].q`: {q} outside [0, 1]")));
                    }
                    Ok(LinkNoise::Depolarizing(q))
                }
                LinkConfig::Explicit { probs } => {
                    let d = BellDiagonal::with_tolerance(probs, CONFIG_NORM_TOL)
                        .map_err(|e| Error::Config(format!("key `links[{i}].probs`: {e}")))?;
                    let total: f64 = d.probs().iter().sum();
                    let normalized = BellDiagonal::new(d.probs().map(|p| p / total))
                        .map_err(|e| Error::Config(format!("key `links[{i}].probs`: {e}")))?;
                    Ok(LinkNoise::Explicit(normalized))
                }
            })
            .collect()
    }

    pub fn chain(&self) -> Result<ChainSpec> {
        ChainSpec::new(
            self.repeaters,
            self.honest_left,
            self.honest_right,
            &self.link_noise()?,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    /// The shared `q` when every link is depolarizing with the same parameter.
    pub fn uniform_q(&self) -> Option<f64> {
        let mut qs = self.links.iter().map(|l| match l {
            LinkConfig::Depolarizing { q } => Some(*q),
            LinkConfig::Explicit { .. } => None,
        });
        let first = qs.next()??;
        qs.all(|q| q == Some(first)).then_some(first)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_link_kinds() {
        let cfg = ChainConfigFile::parse(
            r#"{"repeaters": 1, "honest_left": 1, "links": [
                {"type": "depolarizing", "q": 0.1},
                {"type": "explicit", "probs": [0.7, 0.1, 0.1, 0.1]}
            ], "p_star_override": 0.02}"#,
        )
        .unwrap();
        assert_eq!(cfg.honest_right, 0);
        assert_eq!(cfg.p_star_override, Some(0.02));
        assert_eq!(cfg.uniform_q(), None);
        let chain = cfg.chain().unwrap();
        let probs = chain.links()[1].probs();
        assert!(probs.iter().zip([0.7, 0.1, 0.1, 0.1]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_documents() {
        let cases = [
            (r#"{"repeaters": 1, "links": [{"type": "depolarizing", "q": 0.1}]}"#, "links"),
            (r#"{"repeaters": 0, "links": [{"type": "explicit", "probs": [0.5, 0.1, 0.1, 0.1]}]}"#, "links[0].probs"),
            (r#"{"repeaters": 0, "links": [{"type": "depolarizing", "q": 2}]}"#, "links[0].q"),
            (r#"{"repeaters": 0, "links": [{"type": "lossy", "q": 0.1}]}"#, "lossy"),
            (r#"{"repeaters": 0, "links": [], "extra": 1}"#, "extra"),
            (r#"{"repeaters": 2, "honest_left": 2, "honest_right": 1, "links": [{"type": "depolarizing", "q": 0.1}, {"type": "depolarizing", "q": 0.1}, {"type": "depolarizing", "q": 0.1}]}"#, "honest"),
            (r#"{"repeaters": 0, "links": [{"type": "depolarizing", "q": 0.1}], "p_star_override": 0.5}"#, "p_star_override"),
            ("{\"repeaters\": 0,\n \"links\": [}", "line 2"),
        ];
        for (doc, needle) in cases {
            let err = ChainConfigFile::parse(doc).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn tolerates_rounded_probabilities() {
        let cfg = ChainConfigFile::parse(
            r#"{"repeaters": 0, "links": [{"type": "explicit", "probs": [0.3333333333, 0.3333333333, 0.3333333334, 0.0]}]}"#,
        )
        .unwrap();
        let total: f64 = cfg.chain().unwrap().links()[0].probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn preset_is_uniform() {
        let cfg = ChainConfigFile::preset(5, 0.03);
        assert_eq!(cfg.links.len(), 6);
        assert_eq!(cfg.uniform_q(), Some(0.03));
    }
}
