use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Article, Label};
use crate::error::{Error, Result};

/// Bucketing and code parameters for the non-semantic characteristics.
///
/// Each edge list defines `edges.len()` buckets: `[e0, e1), ..., [e_last, inf)`.
/// Values below the first edge fall in the first bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdditionalConfig {
    pub loc_bins: Vec<f64>,
    pub cite_bins: Vec<f64>,
    pub ft_bins: Vec<f64>,
    pub code_dim: usize,
    pub seed: u64,
}

impl Default for AdditionalConfig {
    fn default() -> Self {
        AdditionalConfig {
            loc_bins: (0..10).map(|i| i as f64 / 10.0).collect(),
            cite_bins: vec![0.0, 1.0, 2.0, 3.0, 6.0, 11.0],
            ft_bins: vec![0.0, 1.0, 2.0, 3.0, 5.0],
            code_dim: 10,
            seed: 42,
        }
    }
}

impl AdditionalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.code_dim == 0 {
            return Err(Error::Config("additional.code_dim must be at least 1".into()));
        }
        for (name, edges) in [
            ("loc_bins", &self.loc_bins),
            ("cite_bins", &self.cite_bins),
            ("ft_bins", &self.ft_bins),
        ] {
            if edges.is_empty() {
                return Err(Error::Config(format!("additional.{name} is empty")));
            }
            if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config(format!(
                    "additional.{name} must be finite and strictly increasing"
                )));
            }
        }
        Ok(())
    }
}

/// Subset of characteristics appended to a lexical vector. Codes are always
/// concatenated in the order loc, cite, f&t.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Characteristics {
    pub loc: bool,
    pub cite: bool,
    pub ft: bool,
}

impl Characteristics {
    pub const NONE: Characteristics = Characteristics { loc: false, cite: false, ft: false };
    pub const ALL: Characteristics = Characteristics { loc: true, cite: true, ft: true };
    pub const LOC: Characteristics = Characteristics { loc: true, cite: false, ft: false };

    pub fn count(self) -> usize {
        self.loc as usize + self.cite as usize + self.ft as usize
    }

    pub fn is_empty(self) -> bool {
        self.count() == 0
    }

    /// Parses "loc+cite+ft" style specs; "none" and "" give the empty set.
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = Characteristics::NONE;
        for part in s.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "loc" => out.loc = true,
                "cite" => out.cite = true,
                "ft" | "f&t" => out.ft = true,
                "all" => out = Characteristics::ALL,
                "none" => {}
                other => return Err(Error::Config(format!("unknown characteristic `{other}`"))),
            }
        }
        Ok(out)
    }

    /// Suffix such as `+loc+cite`, empty for no characteristics.
    pub fn suffix(self) -> String {
        let mut s = String::new();
        if self.loc {
            s.push_str("+loc");
        }
        if self.cite {
            s.push_str("+cite");
        }
        if self.ft {
            s.push_str("+f&t");
        }
        s
    }
}

fn bucket(value: f64, edges: &[f64]) -> usize {
    edges.partition_point(|&e| e <= value).saturating_sub(1)
}

/// Seeded per-bucket code vectors, drawn once when the encoder is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditionalEncoder {
    config: AdditionalConfig,
    codes: [Vec<Vec<f64>>; 3],
}

impl AdditionalEncoder {
    pub fn new(config: AdditionalConfig) -> Result<Self> {
        config.validate()?;
        let draw = |stream: u64, buckets: usize| -> Vec<Vec<f64>> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream);
            (0..buckets)
                .map(|_| (0..config.code_dim).map(|_| rng.random::<f64>()).collect())
                .collect()
        };
        let codes = [
            draw(1, config.loc_bins.len()),
            draw(2, config.cite_bins.len()),
            draw(3, config.ft_bins.len()),
        ];
        Ok(AdditionalEncoder { config, codes })
    }

    pub fn config(&self) -> &AdditionalConfig {
        &self.config
    }

    pub fn output_dim(&self, enabled: Characteristics) -> usize {
        self.config.code_dim * enabled.count()
    }

    pub fn encode(&self, loc: f64, cites: u32, figtabs: u32, enabled: Characteristics) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.output_dim(enabled));
        if enabled.loc {
            out.extend_from_slice(&self.codes[0][bucket(loc, &self.config.loc_bins)]);
        }
        if enabled.cite {
            out.extend_from_slice(&self.codes[1][bucket(cites as f64, &self.config.cite_bins)]);
        }
        if enabled.ft {
            out.extend_from_slice(&self.codes[2][bucket(figtabs as f64, &self.config.ft_bins)]);
        }
        out
    }
}

/// Free-function form: builds the code tables from `cfg` and encodes.
pub fn encode_additional(
    loc: f64,
    cites: u32,
    figtabs: u32,
    cfg: &AdditionalConfig,
    enabled: Characteristics,
) -> Result<Vec<f64>> {
    Ok(AdditionalEncoder::new(cfg.clone())?.encode(loc, cites, figtabs, enabled))
}

fn is_other(label: Option<Label>) -> bool {
    label == Some(Label::Other)
}

/// Relative position of every chapter of `article`.
///
/// Chapters labeled `other` are excluded from the ranking and inherit the
/// position of the nearest preceding non-`other` chapter (0 if none).
/// Unlabeled chapters count as non-`other`.
pub fn relative_positions(article: &Article) -> Result<Vec<f64>> {
    let total = article.chapters.iter().filter(|c| !is_other(c.label)).count();
    if total == 0 {
        return Err(Error::DegenerateArticle(article.id.clone()));
    }
    let mut rank = 0usize;
    Ok(article
        .chapters
        .iter()
        .map(|c| {
            if !is_other(c.label) {
                rank += 1;
            }
            rank as f64 / total as f64
        })
        .collect())
}

/// As [`relative_positions`], but an article whose chapters are all
/// `other` falls back to plain `ordinal / n`.
pub fn relative_positions_or_ordinal(article: &Article) -> Vec<f64> {
    relative_positions(article).unwrap_or_else(|_| {
        let n = article.chapters.len() as f64;
        (1..=article.chapters.len()).map(|i| i as f64 / n).collect()
    })
}

/// Relative position of the chapter at 0-based `index`.
pub fn relative_position(article: &Article, index: usize) -> Result<f64> {
    if index >= article.chapters.len() {
        return Err(Error::InvalidInput(format!(
            "chapter index {index} out of range for article `{}`",
            article.id
        )));
    }
    Ok(relative_positions(article)?[index])
}
