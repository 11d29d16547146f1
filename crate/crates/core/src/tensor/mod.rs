//! Minimal differentiable core: parameter storage, a reverse-mode tape,
//! LSTM encoders and the Adam optimizer.

mod adam;
mod lstm;
mod params;
mod tape;

use std::collections::HashMap;
use std::io::BufRead;

use rand::Rng;

pub use adam::Adam;
pub use lstm::{BiLstm, Lstm, SpanTable, INIT_SCALE};
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use tape::{NodeId, Tape};

#[derive(Debug, thiserror::Error)]
pub enum TensorError {
    #[error("dropout rate {0} must lie in [0, 1)")]
    DropoutRate(f64),
    #[error("embedding file line {line}: {message}")]
    EmbeddingFile { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Logistic function, evaluated without overflow for large |x|.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn check_dropout_rate(rate: f64) -> Result<(), TensorError> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(TensorError::DropoutRate(rate))
    }
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, otherwise
/// `1 / (1 - rate)`.
pub fn dropout_mask<R: Rng>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

pub fn dropout<R: Rng>(v: &[f64], rate: f64, mode: Mode, rng: &mut R) -> Result<Vec<f64>, TensorError> {
    check_dropout_rate(rate)?;
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(v.to_vec());
    }
    let mask = dropout_mask(v.len(), rate, rng);
    Ok(v.iter().zip(mask).map(|(x, m)| x * m).collect())
}

/// Reads a whitespace-separated embedding file: a token followed by `dim`
/// decimals per line. Blank lines are skipped.
pub fn read_embeddings<R: BufRead>(reader: R, dim: usize) -> Result<HashMap<String, Vec<f64>>, TensorError> {
    let mut out = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let values = values.map_err(|e| TensorError::EmbeddingFile {
            line: i + 1,
            message: e.to_string(),
        })?;
        if values.len() != dim {
            return Err(TensorError::EmbeddingFile {
                line: i + 1,
                message: format!("expected {dim} values, found {}", values.len()),
            });
        }
        out.insert(token.to_string(), values);
    }
    Ok(out)
}
