use crate::tensor::{log_add_exp, log_sum_exp};

use super::tags::TagSet;

/// Scores of a linear-chain CRF over one sentence. Disallowed starts and
/// transitions are skipped, which is the same as scoring them `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainScores<'a> {
    pub tags: TagSet,
    /// `n × T` per-token tag scores.
    pub emissions: &'a [Vec<f64>],
    /// `T` scores of the first tag.
    pub start: &'a [f64],
    /// `T × T`, row = previous tag.
    pub transitions: &'a [Vec<f64>],
}

/// Expected feature counts under the CRF.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMarginals {
    pub log_z: f64,
    /// `n × T` tag posteriors.
    pub unary: Vec<Vec<f64>>,
    pub start: Vec<f64>,
    /// `T × T` expected transition counts summed over positions.
    pub transitions: Vec<Vec<f64>>,
}

impl ChainScores<'_> {
    fn t(&self) -> usize {
        self.tags.len()
    }

    fn forward(&self) -> Vec<Vec<f64>> {
        let t = self.t();
        let mut alpha = Vec::with_capacity(self.emissions.len());
        for (i, em) in self.emissions.iter().enumerate() {
            let row: Vec<f64> = (0..t)
                .map(|y| {
                    if i == 0 {
                        if self.tags.can_start(y) {
                            self.start[y] + em[y]
                        } else {
                            f64::NEG_INFINITY
                        }
                    } else {
                        let prev: &Vec<f64> = &alpha[i - 1];
                        log_sum_exp(
                            (0..t)
                                .filter(|&p| self.tags.allowed(p, y))
                                .map(|p| prev[p] + self.transitions[p][y]),
                        ) + em[y]
                    }
                })
                .collect();
            alpha.push(row);
        }
        alpha
    }

    fn backward(&self) -> Vec<Vec<f64>> {
        let t = self.t();
        let n = self.emissions.len();
        let mut beta = vec![vec![0.0; t]; n];
        for i in (0..n.saturating_sub(1)).rev() {
            for y in 0..t {
                beta[i][y] = log_sum_exp(
                    (0..t)
                        .filter(|&z| self.tags.allowed(y, z))
                        .map(|z| self.transitions[y][z] + self.emissions[i + 1][z] + beta[i + 1][z]),
                );
            }
        }
        beta
    }

    /// Log-sum over all allowed tag sequences; 0 for an empty sentence.
    pub fn log_z(&self) -> f64 {
        match self.forward().last() {
            Some(a) => log_sum_exp(a.iter().copied()),
            None => 0.0,
        }
    }

    /// Score of a tag sequence, `-inf` if it breaks the mask.
    pub fn sequence_score(&self, seq: &[usize]) -> f64 {
        assert_eq!(seq.len(), self.emissions.len());
        let Some(&first) = seq.first() else { return 0.0 };
        if !self.tags.can_start(first) {
            return f64::NEG_INFINITY;
        }
        let mut s = self.start[first] + self.emissions[0][first];
        for i in 1..seq.len() {
            if !self.tags.allowed(seq[i - 1], seq[i]) {
                return f64::NEG_INFINITY;
            }
            s += self.transitions[seq[i - 1]][seq[i]] + self.emissions[i][seq[i]];
        }
        s
    }

    pub fn nll(&self, gold: &[usize]) -> f64 {
        self.log_z() - self.sequence_score(gold)
    }

    /// Best allowed sequence and its score. Ties go to the lower previous tag
    /// at every step and the lower final tag.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let n = self.emissions.len();
        if n == 0 {
            return (Vec::new(), 0.0);
        }
        let t = self.t();
        let mut best = vec![vec![f64::NEG_INFINITY; t]; n];
        let mut back = vec![vec![0usize; t]; n];
        for y in (0..t).filter(|&y| self.tags.can_start(y)) {
            best[0][y] = self.start[y] + self.emissions[0][y];
        }
        for i in 1..n {
            for y in 0..t {
                let mut arg = usize::MAX;
                let mut val = f64::NEG_INFINITY;
                for p in (0..t).filter(|&p| self.tags.allowed(p, y)) {
                    let s = best[i - 1][p] + self.transitions[p][y];
                    if arg == usize::MAX || s > val {
                        arg = p;
                        val = s;
                    }
                }
                best[i][y] = val + self.emissions[i][y];
                back[i][y] = arg;
            }
        }
        let mut y = 0;
        for k in 1..t {
            if best[n - 1][k] > best[n - 1][y] {
                y = k;
            }
        }
        let score = best[n - 1][y];
        let mut seq = vec![y; n];
        for i in (1..n).rev() {
            y = back[i][y];
            seq[i - 1] = y;
        }
        (seq, score)
    }

    pub fn marginals(&self) -> ChainMarginals {
        let t = self.t();
        let n = self.emissions.len();
        let alpha = self.forward();
        let beta = self.backward();
        let log_z = alpha.last().map_or(0.0, |a| log_sum_exp(a.iter().copied()));
        let unary: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..t).map(|y| (alpha[i][y] + beta[i][y] - log_z).exp()).collect())
            .collect();
        let start = if n > 0 { unary[0].clone() } else { vec![0.0; t] };
        let mut trans = vec![vec![f64::NEG_INFINITY; t]; t];
        for i in 1..n {
            for p in 0..t {
                for y in (0..t).filter(|&y| self.tags.allowed(p, y)) {
                    let w = alpha[i - 1][p] + self.transitions[p][y] + self.emissions[i][y] + beta[i][y] - log_z;
                    trans[p][y] = log_add_exp(trans[p][y], w);
                }
            }
        }
        let transitions = trans
            .into_iter()
            .map(|row| row.into_iter().map(f64::exp).collect())
            .collect();
        ChainMarginals {
            log_z,
            unary,
            start,
            transitions,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_token_zero_scores() {
        let ts = TagSet::new(1);
        let em = vec![vec![0.0; 7]];
        let start = vec![0.0; 7];
        let tr = vec![vec![0.0; 7]; 7];
        let c = ChainScores {
            tags: ts,
            emissions: &em,
            start: &start,
            transitions: &tr,
        };
        assert!((c.log_z() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(c.viterbi(), (vec![0], 0.0));
        let m = c.marginals();
        assert!((m.unary[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(m.unary[0][2], 0.0);
    }

    #[test]
    fn empty_sentence() {
        let ts = TagSet::new(1);
        let tr = vec![vec![0.0; 7]; 7];
        let start = vec![0.0; 7];
        let c = ChainScores {
            tags: ts,
            emissions: &[],
            start: &start,
            transitions: &tr,
        };
        assert_eq!(c.log_z(), 0.0);
        assert_eq!(c.viterbi(), (vec![], 0.0));
    }
}
