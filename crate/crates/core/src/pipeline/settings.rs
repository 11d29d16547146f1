use crate::config::{parse_kv, parse_value, ConfigError};

/// Training and architecture settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// ℓ2 coefficient λ of the `λ/2 · ‖θ‖²` penalty.
    pub l2: f64,
    /// Drop probability applied to word embeddings during training.
    pub dropout: f64,
    pub emb_dim: usize,
    pub hidden_word: usize,
    pub hidden_span: usize,
    pub hidden_entity: usize,
    /// Maximal segment length `c`.
    pub max_segment_len: usize,
    /// Maximal number of segments per entity candidate.
    pub max_entity_segments: usize,
    pub seed: u64,
    /// Epochs without dev-F1 improvement before stopping.
    pub patience: usize,
    /// Extraction and merging read the same word/span encoder.
    pub shared_encoder: bool,
    /// Probability of replacing a training token seen at most once by UNK.
    pub unk_replace_prob: f64,
}

impl TrainConfig {
    /// Hyperparameters for the full-size clinical setting. Dropout 0.8 is
    /// read as a drop probability.
    pub fn paper() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.001,
            l2: 1e-4,
            dropout: 0.8,
            emb_dim: 200,
            hidden_word: 128,
            hidden_span: 128,
            hidden_entity: 64,
            max_segment_len: 6,
            max_entity_segments: 3,
            seed: 0,
            patience: 10,
            shared_encoder: true,
            unk_replace_prob: 0.5,
        }
    }

    /// Small dimensions that train in minutes on the synthetic corpus.
    pub fn synthetic() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.003,
            l2: 1e-6,
            dropout: 0.5,
            emb_dim: 24,
            hidden_word: 24,
            hidden_span: 24,
            hidden_entity: 16,
            max_segment_len: 6,
            max_entity_segments: 3,
            seed: 0,
            patience: 10,
            shared_encoder: true,
            unk_replace_prob: 0.5,
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        match name {
            "paper" => Ok(Self::paper()),
            "synthetic" => Ok(Self::synthetic()),
            other => Err(ConfigError::Preset(other.to_string())),
        }
    }

    pub const KEYS: &'static [&'static str] = &[
        "epochs",
        "learning_rate",
        "l2",
        "dropout",
        "emb_dim",
        "hidden_word",
        "hidden_span",
        "hidden_entity",
        "max_segment_len",
        "max_entity_segments",
        "seed",
        "patience",
        "shared_encoder",
        "unk_replace_prob",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "epochs" => self.epochs = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "l2" => self.l2 = parse_value(key, value)?,
            "dropout" => self.dropout = parse_value(key, value)?,
            "emb_dim" => self.emb_dim = parse_value(key, value)?,
            "hidden_word" => self.hidden_word = parse_value(key, value)?,
            "hidden_span" => self.hidden_span = parse_value(key, value)?,
            "hidden_entity" => self.hidden_entity = parse_value(key, value)?,
            "max_segment_len" => self.max_segment_len = parse_value(key, value)?,
            "max_entity_segments" => self.max_entity_segments = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "patience" => self.patience = parse_value(key, value)?,
            "shared_encoder" => self.shared_encoder = parse_value(key, value)?,
            "unk_replace_prob" => self.unk_replace_prob = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.emb_dim == 0 || self.hidden_word == 0 || self.hidden_span == 0 || self.hidden_entity == 0 {
            return bad("dimensions must be positive");
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return bad("l2 must be non-negative");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.unk_replace_prob) {
            return bad("unk_replace_prob must lie in [0, 1]");
        }
        if self.max_segment_len == 0 || self.max_entity_segments == 0 {
            return bad("max_segment_len and max_entity_segments must be positive");
        }
        Ok(())
    }

    /// Every field as `key=value` lines; floats use shortest round-trip
    /// formatting so parsing gives back identical bits.
    pub fn to_kv(&self) -> String {
        format!(
            "epochs={}\nlearning_rate={}\nl2={}\ndropout={}\nemb_dim={}\nhidden_word={}\nhidden_span={}\nhidden_entity={}\nmax_segment_len={}\nmax_entity_segments={}\nseed={}\npatience={}\nshared_encoder={}\nunk_replace_prob={}\n",
            self.epochs,
            self.learning_rate,
            self.l2,
            self.dropout,
            self.emb_dim,
            self.hidden_word,
            self.hidden_span,
            self.hidden_entity,
            self.max_segment_len,
            self.max_entity_segments,
            self.seed,
            self.patience,
            self.shared_encoder,
            self.unk_replace_prob
        )
    }

    /// Applies `key=value` text on top of `self`.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), ConfigError> {
        for (k, v) in parse_kv(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::synthetic();
        cfg.apply_kv(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
