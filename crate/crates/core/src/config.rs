//! Flat `key=value` configuration text shared by training and data
//! generation. `#` starts a comment; blank lines are ignored.

use crate::corpus::GenConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: cannot parse `{value}`")]
    Value { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("unknown preset `{0}` (expected `paper` or `synthetic`)")]
    Preset(String),
}

pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub(crate) fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

impl GenConfig {
    pub const KEYS: &'static [&'static str] = &[
        "seed",
        "sentences",
        "vocab_size",
        "types",
        "frac_1seg",
        "frac_2seg",
        "frac_3seg",
        "overlap_fraction",
        "max_segment_len",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "sentences" => self.sentences = parse_value(key, value)?,
            "vocab_size" => self.vocab_size = parse_value(key, value)?,
            "types" => self.types = parse_list(value),
            "frac_1seg" => self.segment_fractions[0] = parse_value(key, value)?,
            "frac_2seg" => self.segment_fractions[1] = parse_value(key, value)?,
            "frac_3seg" => self.segment_fractions[2] = parse_value(key, value)?,
            "overlap_fraction" => self.overlap_fraction = parse_value(key, value)?,
            "max_segment_len" => self.max_segment_len = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        format!(
            "seed={}\nsentences={}\nvocab_size={}\ntypes={}\nfrac_1seg={}\nfrac_2seg={}\nfrac_3seg={}\noverlap_fraction={}\nmax_segment_len={}\n",
            self.seed,
            self.sentences,
            self.vocab_size,
            self.types.join(","),
            self.segment_fractions[0],
            self.segment_fractions[1],
            self.segment_fractions[2],
            self.overlap_fraction,
            self.max_segment_len
        )
    }
}
