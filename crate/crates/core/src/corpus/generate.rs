//! Seedable synthetic corpus generator.
//!
//! Sentences are assembled from clause templates whose slots draw from
//! disjoint word pools (findings per entity type, modifiers, anatomy,
//! qualifiers, function words), so segment boundaries and segment grouping
//! are recoverable from lexical context. The clause mix is steered towards
//! the configured structure rates while generating.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnnotatedSentence, CorpusError, Entity, Span};

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub sentences: usize,
    /// Number of distinct word forms the generator may emit.
    pub vocab_size: usize,
    pub types: Vec<String>,
    /// Target fraction of entities with 1, 2 and 3 segments.
    pub segment_fractions: [f64; 3],
    /// Target fraction of entities sharing a token with another entity.
    pub overlap_fraction: f64,
    pub max_segment_len: usize,
}

impl Default for GenConfig {
    /// Structure rates of a clinical disorder corpus where every sentence has
    /// a discontiguous mention: 544/607/44 entities with 1/2/3 segments and
    /// 205 overlapping entities out of 1195.
    fn default() -> Self {
        let total = 1195.0;
        GenConfig {
            seed: 0,
            sentences: 500,
            vocab_size: 400,
            types: vec!["Disorder".to_string()],
            segment_fractions: [544.0 / total, 607.0 / total, 44.0 / total],
            overlap_fraction: 205.0 / total,
            max_segment_len: 6,
        }
    }
}

const SUBJECTS: &[&[&str]] = &[&["he"], &["she"], &["the", "patient"], &["patient"], &["exam"]];
const VERBS: &[&str] = &["had", "has", "reports", "showed", "shows", "noted", "denies", "developed"];
const LINKS: &[&[&str]] = &[&["of", "the"], &["in", "the"], &["at", "the"], &["near", "the"]];
const POSSESSIVES: &[&str] = &["his", "her"];
const SEPARATORS: &[&[&str]] = &[&[";"], &[",", "also"], &[",", "then"]];
const FILLERS: &[&[&str]] = &[
    &["today"],
    &["since", "monday"],
    &["per", "report"],
    &["on", "admission"],
    &["after", "surgery"],
];

const FINDINGS: &[&str] = &[
    "laceration", "bleeding", "pain", "swelling", "erosion", "ulcer", "lesion", "mass", "hernia",
    "thickening", "edema", "tenderness", "effusion", "rash", "fracture", "infarction", "blood",
    "polyp", "stricture", "nodule",
];
const MODIFIERS: &[&str] = &[
    "severe", "mild", "acute", "chronic", "small", "large", "focal", "diffuse",
];
const ANATOMY: &[&str] = &[
    "esophagus", "stomach", "mouth", "tongue", "knee", "liver", "colon", "lung", "kidney",
    "chest", "abdomen", "heart", "shoulder", "ankle", "spine", "bladder", "wrist", "hip",
];
const SIDES: &[&str] = &["left", "right", "distal", "proximal", "upper", "lower"];
const QUALIFIERS: &[&str] = &[
    "involvement", "dilation", "narrowing", "irritation", "scarring", "deformity",
];

const SYLLABLES: &[&str] = &["ba", "ko", "ri", "mu", "te", "sa", "lo", "ni", "pe", "du", "ga", "fi"];
const FINDING_SUFFIXES: &[&str] = &["itis", "osis", "algia", "oma", "emia", "uria"];

/// Closed-class words always present in the output vocabulary.
fn function_words() -> Vec<&'static str> {
    let mut v: Vec<&str> = Vec::new();
    v.extend(SUBJECTS.iter().flat_map(|s| s.iter().copied()));
    v.extend(VERBS.iter().copied());
    v.extend(LINKS.iter().flat_map(|s| s.iter().copied()));
    v.extend(POSSESSIVES.iter().copied());
    v.extend(SEPARATORS.iter().flat_map(|s| s.iter().copied()));
    v.extend(FILLERS.iter().flat_map(|s| s.iter().copied()));
    v.extend(["and", "on", "with", "."]);
    v.sort_unstable();
    v.dedup();
    v
}

fn pseudo_word(index: usize, suffix: &str) -> String {
    let n = SYLLABLES.len();
    let mut w = String::new();
    let mut i = index;
    loop {
        w.push_str(SYLLABLES[i % n]);
        i /= n;
        if i == 0 {
            break;
        }
    }
    w.push_str(suffix);
    w
}

/// Content-word pools sized to fill the requested vocabulary.
struct Pools {
    findings: Vec<Vec<String>>,
    modifiers: Vec<String>,
    anatomy: Vec<String>,
    sides: Vec<String>,
    qualifiers: Vec<String>,
}

const MIN_POOL: usize = 2;

impl Pools {
    fn new(vocab_size: usize, ntypes: usize) -> Result<Self, CorpusError> {
        let fixed = function_words().len();
        let npools = ntypes + 4;
        let needed = fixed + npools * MIN_POOL;
        if vocab_size < needed {
            return Err(CorpusError::Generation(format!(
                "vocabulary size {vocab_size} too small: need at least {needed} word forms"
            )));
        }
        let budget = vocab_size - fixed;
        // findings get half the budget, the rest is split over the shared pools
        let per_finding = (budget / 2 / ntypes).max(MIN_POOL);
        let rest = budget - per_finding * ntypes;
        let anatomy_n = (rest * 2 / 5).max(MIN_POOL);
        let modifier_n = (rest / 5).max(MIN_POOL);
        let side_n = (rest / 5).max(MIN_POOL);
        let qualifier_n = rest
            .saturating_sub(anatomy_n + modifier_n + side_n)
            .max(MIN_POOL);

        let fill = |seed: &[&str], count: usize, suffix: &str, offset: usize| -> Vec<String> {
            let mut out: Vec<String> = seed.iter().take(count).map(|s| s.to_string()).collect();
            let mut k = 0;
            while out.len() < count {
                out.push(pseudo_word(offset + k, suffix));
                k += 1;
            }
            out
        };

        let mut findings = Vec::with_capacity(ntypes);
        let mut seed_words = FINDINGS.iter();
        for t in 0..ntypes {
            // types never share finding words
            let own: Vec<&str> = seed_words
                .by_ref()
                .take(if ntypes == 1 { FINDINGS.len() } else { FINDINGS.len() / ntypes })
                .copied()
                .collect();
            let suffix = FINDING_SUFFIXES[t % FINDING_SUFFIXES.len()];
            let suffix = if t < FINDING_SUFFIXES.len() {
                suffix.to_string()
            } else {
                format!("{suffix}{t}")
            };
            findings.push(fill(&own, per_finding, &suffix, 0));
        }
        Ok(Pools {
            findings,
            modifiers: fill(MODIFIERS, modifier_n, "ive", 0),
            anatomy: fill(ANATOMY, anatomy_n, "al", 0),
            sides: fill(SIDES, side_n, "ward", 0),
            qualifiers: fill(QUALIFIERS, qualifier_n, "ment", 0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Clause {
    /// one contiguous entity
    Single,
    /// finding LINK anatomy
    Pair,
    /// finding LINK anatomy with qualifier
    Triple,
    /// finding LINK anatomy and anatomy: two entities sharing the finding
    Coordinated,
    /// finding in POSS anatomy and on POSS anatomy: a contiguous entity and a
    /// discontiguous one sharing the finding
    Nested,
}

impl Clause {
    /// (1-seg, 2-seg, 3-seg, overlapping) entity counts contributed.
    fn counts(self) -> [usize; 4] {
        match self {
            Clause::Single => [1, 0, 0, 0],
            Clause::Pair => [0, 1, 0, 0],
            Clause::Triple => [0, 0, 1, 0],
            Clause::Coordinated => [0, 2, 0, 2],
            Clause::Nested => [1, 1, 0, 2],
        }
    }
}

struct Builder<'a> {
    tokens: Vec<String>,
    entities: Vec<Entity>,
    pools: &'a Pools,
}

impl<'a> Builder<'a> {
    fn push(&mut self, w: &str) -> usize {
        self.tokens.push(w.to_string());
        self.tokens.len() - 1
    }

    fn push_all(&mut self, ws: &[&str]) {
        for w in ws {
            self.push(w);
        }
    }

    fn pick<'b, R: Rng>(rng: &mut R, pool: &'b [String]) -> &'b str {
        pool.choose(rng).expect("pools are never empty")
    }

    /// `[modifier] finding`, at most `max_len` tokens.
    fn finding_segment<R: Rng>(&mut self, rng: &mut R, ty: usize, max_len: usize) -> Span {
        let start = self.tokens.len();
        if max_len >= 2 && rng.gen_bool(0.35) {
            let m = Self::pick(rng, &self.pools.modifiers).to_string();
            self.push(&m);
        }
        let f = Self::pick(rng, &self.pools.findings[ty]).to_string();
        let end = self.push(&f);
        Span::new(start, end)
    }

    /// `[side] anatomy`.
    fn anatomy_segment<R: Rng>(&mut self, rng: &mut R, max_len: usize) -> Span {
        let start = self.tokens.len();
        if max_len >= 2 && rng.gen_bool(0.35) {
            let s = Self::pick(rng, &self.pools.sides).to_string();
            self.push(&s);
        }
        let a = Self::pick(rng, &self.pools.anatomy).to_string();
        let end = self.push(&a);
        Span::new(start, end)
    }

    fn clause<R: Rng>(&mut self, rng: &mut R, kind: Clause, etype: &str, ty: usize, c: usize) {
        match kind {
            Clause::Single => {
                let f = self.finding_segment(rng, ty, c);
                self.entities.push(Entity::new(etype, vec![f]));
            }
            Clause::Pair => {
                let f = self.finding_segment(rng, ty, c);
                self.push_all(LINKS.choose(rng).unwrap());
                let a = self.anatomy_segment(rng, c);
                self.entities.push(Entity::new(etype, vec![f, a]));
            }
            Clause::Triple => {
                let f = self.finding_segment(rng, ty, c);
                self.push_all(LINKS.choose(rng).unwrap());
                let a = self.anatomy_segment(rng, c);
                self.push("with");
                let q = Self::pick(rng, &self.pools.qualifiers).to_string();
                let qi = self.push(&q);
                self.entities
                    .push(Entity::new(etype, vec![f, a, Span::single(qi)]));
            }
            Clause::Coordinated => {
                let f = self.finding_segment(rng, ty, c);
                self.push_all(LINKS.choose(rng).unwrap());
                let a1 = self.anatomy_segment(rng, c);
                self.push("and");
                let a2 = self.anatomy_segment(rng, c);
                self.entities.push(Entity::new(etype, vec![f, a1]));
                self.entities.push(Entity::new(etype, vec![f, a2]));
            }
            Clause::Nested => {
                // finding in POSS anatomy: needs 4 tokens in one segment
                let fw = Self::pick(rng, &self.pools.findings[ty]).to_string();
                let fi = self.push(&fw);
                self.push("in");
                let poss = *POSSESSIVES.choose(rng).unwrap();
                self.push(poss);
                let aw = Self::pick(rng, &self.pools.anatomy).to_string();
                let ai = self.push(&aw);
                self.push_all(&["and", "on", poss]);
                let a2 = self.anatomy_segment(rng, c);
                self.entities.push(Entity::new(etype, vec![Span::new(fi, ai)]));
                self.entities
                    .push(Entity::new(etype, vec![Span::single(fi), a2]));
            }
        }
    }
}

fn check_config(cfg: &GenConfig) -> Result<(), CorpusError> {
    let err = |m: String| Err(CorpusError::Generation(m));
    if cfg.types.is_empty() {
        return err("type inventory is empty".into());
    }
    if cfg.max_segment_len < 1 {
        return err("max segment length must be at least 1".into());
    }
    let f = cfg.segment_fractions;
    if f.iter().any(|x| !(0.0..=1.0).contains(x)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return err(format!("segment fractions {f:?} must be in [0,1] and sum to 1"));
    }
    if !(0.0..=1.0).contains(&cfg.overlap_fraction) {
        return err(format!("overlap fraction {} outside [0,1]", cfg.overlap_fraction));
    }
    // overlapping entities come from coordinated pairs (2-seg) and nested
    // pairs (one 1-seg plus one 2-seg)
    let reachable = if nested_allowed(cfg) {
        f[1] + f[0].min(f[1])
    } else {
        f[1]
    };
    if cfg.overlap_fraction > reachable + 1e-9 {
        return err(format!(
            "overlap fraction {} not reachable with segment fractions {f:?} and max segment length {}",
            cfg.overlap_fraction, cfg.max_segment_len
        ));
    }
    Ok(())
}

fn nested_allowed(cfg: &GenConfig) -> bool {
    cfg.max_segment_len >= 4
}

/// Clause type whose counts move the running statistics closest to target.
fn steer<R: Rng>(rng: &mut R, counts: &[usize; 4], total: usize, cfg: &GenConfig) -> Clause {
    let mut options = vec![Clause::Single, Clause::Pair, Clause::Triple, Clause::Coordinated];
    if nested_allowed(cfg) {
        options.push(Clause::Nested);
    }
    let f = cfg.segment_fractions;
    options.retain(|c| {
        let k = c.counts();
        (k[0] == 0 || f[0] > 0.0)
            && (k[1] == 0 || f[1] > 0.0)
            && (k[2] == 0 || f[2] > 0.0)
            && (k[3] == 0 || cfg.overlap_fraction > 0.0)
    });
    if rng.gen_bool(0.2) {
        return *options.choose(rng).unwrap();
    }
    let target = [f[0], f[1], f[2], cfg.overlap_fraction];
    let mut best = Vec::new();
    let mut best_err = f64::INFINITY;
    for &c in &options {
        let k = c.counts();
        let t = (total + k[0] + k[1] + k[2]) as f64;
        let err: f64 = (0..4)
            .map(|i| ((counts[i] + k[i]) as f64 / t - target[i]).powi(2))
            .sum();
        if err < best_err - 1e-12 {
            best_err = err;
            best.clear();
            best.push(c);
        } else if (err - best_err).abs() <= 1e-12 {
            best.push(c);
        }
    }
    *best.choose(rng).unwrap()
}

/// Generates `train + dev + test` sentences in one stream and cuts them in
/// that order. `cfg.sentences` is ignored.
pub fn generate_split(
    cfg: &GenConfig,
    train: usize,
    dev: usize,
    test: usize,
) -> Result<[Vec<AnnotatedSentence>; 3], CorpusError> {
    let all = generate_corpus(&GenConfig {
        sentences: train + dev + test,
        ..cfg.clone()
    })?;
    let mut it = all.into_iter();
    let a: Vec<_> = it.by_ref().take(train).collect();
    let b: Vec<_> = it.by_ref().take(dev).collect();
    Ok([a, b, it.collect()])
}

pub fn generate_corpus(cfg: &GenConfig) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    check_config(cfg)?;
    let pools = Pools::new(cfg.vocab_size, cfg.types.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut counts = [0usize; 4];
    let mut total = 0usize;
    let mut corpus = Vec::with_capacity(cfg.sentences);
    for _ in 0..cfg.sentences {
        let mut b = Builder {
            tokens: Vec::new(),
            entities: Vec::new(),
            pools: &pools,
        };
        b.push_all(SUBJECTS.choose(&mut rng).unwrap());
        b.push(VERBS.choose(&mut rng).unwrap());
        let nclauses = rng.gen_range(1..=2);
        for ci in 0..nclauses {
            if ci > 0 {
                b.push_all(SEPARATORS.choose(&mut rng).unwrap());
            }
            let kind = steer(&mut rng, &counts, total, cfg);
            let ty = rng.gen_range(0..cfg.types.len());
            b.clause(&mut rng, kind, &cfg.types[ty], ty, cfg.max_segment_len);
            let k = kind.counts();
            for i in 0..4 {
                counts[i] += k[i];
            }
            total += k[0] + k[1] + k[2];
        }
        if rng.gen_bool(0.3) {
            b.push_all(FILLERS.choose(&mut rng).unwrap());
        }
        b.push(".");
        let sentence = AnnotatedSentence::new(b.tokens, b.entities);
        debug_assert!(sentence.check().is_ok());
        corpus.push(sentence);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_stats;

    #[test]
    fn default_config_matches_targets() {
        let cfg = GenConfig::default();
        let corpus = generate_corpus(&cfg).unwrap();
        let st = corpus_stats(&corpus);
        assert_eq!(st.sentences, 500);
        for k in 0..3 {
            let got = st.segment_fraction(k + 1);
            assert!(
                (got - cfg.segment_fractions[k]).abs() <= 0.05,
                "{k}-seg fraction {got}"
            );
        }
        assert!((st.overlap_fraction() - cfg.overlap_fraction).abs() <= 0.05);
        assert_eq!(st.by_segments[3], 0);
        for s in &corpus {
            s.check().unwrap();
            for e in &s.entities {
                for sp in &e.spans {
                    assert!(sp.len() <= cfg.max_segment_len);
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = GenConfig {
            sentences: 50,
            ..Default::default()
        };
        assert_eq!(generate_corpus(&cfg).unwrap(), generate_corpus(&cfg).unwrap());
        let other = GenConfig { seed: 1, ..cfg.clone() };
        assert_ne!(generate_corpus(&cfg).unwrap(), generate_corpus(&other).unwrap());
    }

    #[test]
    fn zero_overlap_means_disjoint_entities() {
        let cfg = GenConfig {
            overlap_fraction: 0.0,
            sentences: 300,
            ..Default::default()
        };
        for s in generate_corpus(&cfg).unwrap() {
            for (i, a) in s.entities.iter().enumerate() {
                for b in &s.entities[i + 1..] {
                    assert!(!a.shares_token_with(b));
                }
            }
        }
    }

    #[test]
    fn vocabulary_bound_respected() {
        let cfg = GenConfig {
            vocab_size: 120,
            types: vec!["A".into(), "B".into(), "C".into()],
            ..Default::default()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        let words: std::collections::BTreeSet<&str> = corpus
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect();
        assert!(words.len() <= 120, "{}", words.len());
    }

    #[test]
    fn infeasible_configs() {
        let bad = [
            GenConfig { types: vec![], ..Default::default() },
            GenConfig { max_segment_len: 0, ..Default::default() },
            GenConfig { segment_fractions: [0.5, 0.6, 0.0], ..Default::default() },
            GenConfig { vocab_size: 10, ..Default::default() },
            GenConfig {
                segment_fractions: [1.0, 0.0, 0.0],
                overlap_fraction: 0.2,
                ..Default::default()
            },
            GenConfig {
                max_segment_len: 2,
                segment_fractions: [0.5, 0.1, 0.4],
                overlap_fraction: 0.3,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(
                matches!(generate_corpus(&cfg), Err(CorpusError::Generation(_))),
                "{cfg:?}"
            );
        }
    }

    #[test]
    fn short_segments_still_generate() {
        let cfg = GenConfig {
            max_segment_len: 1,
            sentences: 200,
            ..Default::default()
        };
        let corpus = generate_corpus(&cfg).unwrap();
        assert!(corpus
            .iter()
            .flat_map(|s| s.entities.iter().flat_map(|e| e.spans.iter()))
            .all(|sp| sp.len() == 1));
    }
}
