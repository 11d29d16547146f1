//! Exact-match micro-averaged precision, recall and F1.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::Entity;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{pred} predicted sentences but {gold} gold sentences")]
    LengthMismatch { pred: usize, gold: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Prf {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn finish(mut self) -> Self {
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        self.precision = div(self.tp, self.tp + self.fp);
        self.recall = div(self.tp, self.tp + self.fn_);
        let s = self.precision + self.recall;
        self.f1 = if s == 0.0 {
            0.0
        } else {
            2.0 * self.precision * self.recall / s
        };
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub overall: Prf,
    /// Entities with 1, 2 and 3+ segments.
    pub by_segments: [Prf; 3],
    pub overlapping: Prf,
    pub non_overlapping: Prf,
}

impl EvalReport {
    pub fn precision(&self) -> f64 {
        self.overall.precision
    }

    pub fn recall(&self) -> f64 {
        self.overall.recall
    }

    pub fn f1(&self) -> f64 {
        self.overall.f1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8}", "subset", "tp", "fp", "fn", "P", "R", "F1");
        let mut row = |name: &str, p: &Prf| {
            let _ = writeln!(
                s,
                "{:<16} {:>6} {:>6} {:>6} {:>8.4} {:>8.4} {:>8.4}",
                name, p.tp, p.fp, p.fn_, p.precision, p.recall, p.f1
            );
        };
        row("all", &self.overall);
        row("1 segment", &self.by_segments[0]);
        row("2 segments", &self.by_segments[1]);
        row("3+ segments", &self.by_segments[2]);
        row("overlapping", &self.overlapping);
        row("non-overlapping", &self.non_overlapping);
        s
    }
}

fn overlaps_another(e: &Entity, all: &BTreeSet<Entity>) -> bool {
    all.iter().any(|o| o != e && e.shares_token_with(o))
}

/// Scores aligned prediction and gold entity sets; an entity matches only
/// when its type and full span list are identical.
pub fn score(pred: &[Vec<Entity>], gold: &[Vec<Entity>]) -> Result<EvalReport, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let mut r = EvalReport::default();
    for (p, g) in pred.iter().zip(gold) {
        let p: BTreeSet<Entity> = p.iter().cloned().collect();
        let g: BTreeSet<Entity> = g.iter().cloned().collect();
        let bucket = |e: &Entity| e.spans.len().clamp(1, 3) - 1;
        for e in &g {
            let ol = overlaps_another(e, &g);
            let hit = p.contains(e);
            for prf in [&mut r.overall, &mut r.by_segments[bucket(e)]] {
                if hit {
                    prf.tp += 1;
                } else {
                    prf.fn_ += 1;
                }
            }
            let side = if ol { &mut r.overlapping } else { &mut r.non_overlapping };
            if hit {
                side.tp += 1;
            } else {
                side.fn_ += 1;
            }
        }
        for e in p.iter().filter(|e| !g.contains(*e)) {
            r.overall.fp += 1;
            r.by_segments[bucket(e)].fp += 1;
            if overlaps_another(e, &p) {
                r.overlapping.fp += 1;
            } else {
                r.non_overlapping.fp += 1;
            }
        }
    }
    r.overall = r.overall.finish();
    for b in &mut r.by_segments {
        *b = b.finish();
    }
    r.overlapping = r.overlapping.finish();
    r.non_overlapping = r.non_overlapping.finish();
    Ok(r)
}
