//! Binary checkpoint container. All integers and floats are little-endian;
//! strings are a `u32` byte length followed by UTF-8.
//!
//! ```text
//! magic "DISCOCKP" | u32 version | u8 kind | str config | u32 n, n × str vocab
//! | u32 n, n × str types | u32 n, n × (str name, u32 rows, u32 cols, f64…)
//! | u32 n, n × (u32 epoch, f64 loss, f64 p, f64 r, f64 f1)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::tensor::{Param, ParamStore};

use super::settings::TrainConfig;
use super::PipelineError;

pub const MAGIC: &[u8; 8] = b"DISCOCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Joint,
    Crf,
}

impl ModelKind {
    fn code(self) -> u8 {
        match self {
            ModelKind::Joint => 0,
            ModelKind::Crf => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(ModelKind::Joint),
            1 => Some(ModelKind::Crf),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Joint => "joint",
            ModelKind::Crf => "crf",
        })
    }
}

/// One line of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Everything needed to rebuild and run a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub vocab: Vec<String>,
    pub types: Vec<String>,
    pub params: ParamStore,
    pub history: Vec<EpochRecord>,
}

fn bad(msg: impl Into<String>) -> PipelineError {
    PipelineError::Checkpoint(msg.into())
}

fn write_str<W: Write>(w: &mut W, s: &str) -> std::io::Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_len<R: Read>(r: &mut R) -> Result<usize, PipelineError> {
    Ok(r.read_u32::<LE>().map_err(truncated)? as usize)
}

fn read_str<R: Read>(r: &mut R) -> Result<String, PipelineError> {
    let len = read_len(r)?;
    let mut buf = Vec::new();
    r.take(len as u64).read_to_end(&mut buf)?;
    if buf.len() != len {
        return Err(bad("truncated string"));
    }
    String::from_utf8(buf).map_err(|_| bad("string is not UTF-8"))
}

fn truncated(e: std::io::Error) -> PipelineError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        bad("file ends early")
    } else {
        PipelineError::Io(e)
    }
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), PipelineError> {
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(FORMAT_VERSION)?;
        w.write_u8(self.kind.code())?;
        write_str(w, &self.config.to_kv())?;
        w.write_u32::<LE>(self.vocab.len() as u32)?;
        for s in &self.vocab {
            write_str(w, s)?;
        }
        w.write_u32::<LE>(self.types.len() as u32)?;
        for s in &self.types {
            write_str(w, s)?;
        }
        w.write_u32::<LE>(self.params.len() as u32)?;
        for (_, p) in self.params.iter() {
            write_str(w, &p.name)?;
            w.write_u32::<LE>(p.rows as u32)?;
            w.write_u32::<LE>(p.cols as u32)?;
            for &x in &p.data {
                w.write_f64::<LE>(x)?;
            }
        }
        w.write_u32::<LE>(self.history.len() as u32)?;
        for h in &self.history {
            w.write_u32::<LE>(h.epoch as u32)?;
            for x in [h.loss, h.precision, h.recall, h.f1] {
                w.write_f64::<LE>(x)?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, PipelineError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        let version = r.read_u32::<LE>().map_err(truncated)?;
        if version != FORMAT_VERSION {
            return Err(PipelineError::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let code = r.read_u8().map_err(truncated)?;
        let kind = ModelKind::from_code(code).ok_or_else(|| bad(format!("unknown model kind {code}")))?;
        let config = TrainConfig::from_kv(&read_str(r)?)?;
        let n = read_len(r)?;
        let vocab = (0..n).map(|_| read_str(r)).collect::<Result<Vec<_>, _>>()?;
        let n = read_len(r)?;
        let types = (0..n).map(|_| read_str(r)).collect::<Result<Vec<_>, _>>()?;
        let n = read_len(r)?;
        let mut params = ParamStore::new();
        for _ in 0..n {
            let name = read_str(r)?;
            let rows = read_len(r)?;
            let cols = read_len(r)?;
            let len = rows.checked_mul(cols).ok_or_else(|| bad("parameter too large"))?;
            let mut data = Vec::with_capacity(len.min(1 << 24));
            for _ in 0..len {
                data.push(r.read_f64::<LE>().map_err(truncated)?);
            }
            params.push(Param { name, rows, cols, data });
        }
        let n = read_len(r)?;
        let mut history = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let epoch = read_len(r)?;
            let mut v = [0.0; 4];
            for x in &mut v {
                *x = r.read_f64::<LE>().map_err(truncated)?;
            }
            history.push(EpochRecord {
                epoch,
                loss: v[0],
                precision: v[1],
                recall: v[2],
                f1: v[3],
            });
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after checkpoint"));
        }
        Ok(Checkpoint {
            kind,
            config,
            vocab,
            types,
            params,
            history,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PipelineError> {
        Self::read_from(&mut &bytes[..])
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn expect_kind(&self, kind: ModelKind) -> Result<(), PipelineError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(PipelineError::WrongKind {
                expected: kind,
                found: self.kind,
            })
        }
    }
}
