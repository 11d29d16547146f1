//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any of them fails.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use disco_core::corpus::fixtures::{self, gastro::*};
use disco_core::corpus::{generate_split, GenConfig};
use disco_core::crf::{decode_all, decode_enough, encode_tags, train_crf, ChainScores, CrfTagger, Heuristic, Tag, TagSet};
use disco_core::hypergraph::SegmentalHypergraph;
use disco_core::merger::{decode_entities, merge_probability, Candidate};
use disco_core::pipeline::{evaluate, train, JointModel, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_instance(rng: &mut ChaCha8Rng) -> (SegmentalHypergraph, Vec<f64>) {
    let n = rng.gen_range(1..=5);
    let types = rng.gen_range(1..=2);
    let c = rng.gen_range(1..=3);
    let hg = SegmentalHypergraph::build(n, types, c);
    let s = random_scores(rng, hg.num_edges(), 2.0);
    (hg, s)
}

fn partition_function() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (hg, s) = random_instance(&mut rng);
        let bf = brute_force(&hg, &s);
        worst = worst.max((hg.inside_log_z(&s) - bf.log_z).abs());
    }
    let took = t0.elapsed();
    check(worst < 1e-8, format!("max |logZ error| {worst:.2e}"))?;
    check(took < Duration::from_secs(10), format!("took {took:.1?}"))?;
    Ok(format!("100 instances, max error {worst:.1e}, {took:.1?}"))
}

fn map_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut hits = 0;
    for _ in 0..100 {
        let (hg, s) = random_instance(&mut rng);
        let bf = brute_force(&hg, &s);
        let map = hg.map_decode(&s);
        let path_ok = (set_score(&hg, &s, &map.segments) - map.score).abs() < 1e-9;
        if (map.score - bf.max).abs() < 1e-9 && path_ok {
            hits += 1;
        }
    }
    check(hits == 100, format!("{hits}/100 match"))?;
    Ok("100/100 match".into())
}

fn hyperpath_bijection() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for t in 0..1000 {
        let n = rng.gen_range(1..=8);
        let types = rng.gen_range(1..=3);
        let c = rng.gen_range(1..=4);
        let hg = SegmentalHypergraph::build(n, types, c);
        let set = random_segment_set(&mut rng, n, types, c, 0.25);
        let path = hg.segments_to_hyperpath(&set).map_err(|e| format!("set {t}: {e}"))?;
        check(hg.read_hyperpath(&path) == set, format!("set {t} does not round-trip"))?;
    }
    let mut paths = 0;
    for n in 1..=3 {
        for types in 1..=2 {
            for c in 1..=3 {
                let hg = SegmentalHypergraph::build(n, types, c);
                let all = derivations(&hg, hg.root());
                let readings: HashSet<Vec<_>> = all
                    .iter()
                    .map(|d| hg.read_hyperpath(d).into_iter().collect())
                    .collect();
                check(
                    readings.len() == all.len(),
                    format!("n={n} types={types} c={c}: {} paths, {} readings", all.len(), readings.len()),
                )?;
                let segs: usize = all_segments(n, types, c).iter().map(|g| g.len()).sum();
                check(all.len() == 1 << segs, format!("n={n} types={types} c={c}: path count"))?;
                paths += all.len();
            }
        }
    }
    Ok(format!("1000 round trips, {paths} enumerated paths all distinct"))
}

fn gradient_fidelity() -> Outcome {
    const WORDS: &[&str] = &["a", "b", "c", "d", "e"];
    const TYPES: &[&str] = &["X", "Y"];
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = (0.0f64, String::new());
    let mut families = BTreeSet::new();
    for shared in [true, false] {
        let mut cfg = tiny_config();
        cfg.shared_encoder = shared;
        let vocab = disco_core::pipeline::Vocab::from_words(WORDS.iter().map(|w| w.to_string()).collect());
        let types = disco_core::pipeline::TypeInventory::new(TYPES.iter().map(|t| t.to_string()).collect());
        for _ in 0..10 {
            let mut model = JointModel::new(cfg.clone(), vocab.clone(), types.clone()).map_err(|e| e.to_string())?;
            randomize(&mut model, &mut rng, 0.5);
            let s = random_small_sentence(&mut rng, WORDS, TYPES);
            for (name, err) in gradient_check(&mut model, &s, &mut rng) {
                families.insert(name.clone());
                if err > worst.0 {
                    worst = (err, name);
                }
            }
        }
    }
    check(worst.0 < 1e-4, format!("{}: relative error {:.2e}", worst.1, worst.0))?;
    Ok(format!("{} tensors, max relative error {:.1e}", families.len(), worst.0))
}

fn merge_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let cands = |m: usize| -> Vec<Candidate> { (0..m).map(|i| cand(&[(2 * i, 2 * i)])).collect() };
    let mut worst: f64 = 0.0;
    for m in 0..=10 {
        let cs = cands(m);
        let probs: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
        let mut total = 0.0;
        for mask in 0..(1usize << m) {
            let members: Vec<Candidate> = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| cs[i].clone()).collect();
            total += merge_probability(&members, &cs, &probs).map_err(|e| e.to_string())?;
        }
        worst = worst.max((total - 1.0).abs());
    }
    check(worst < 1e-10, format!("pattern sum off by {worst:.2e}"))?;
    for t in 0..100 {
        let m = rng.gen_range(1..=10);
        let cs = cands(m);
        let probs: Vec<f64> = (0..m).map(|_| rng.gen()).collect();
        let (_, best) = membership_patterns(&probs);
        let want: Vec<Candidate> = (0..m).filter(|&i| best[i]).map(|i| cs[i].clone()).collect();
        check(decode_entities(&cs, &probs, 0.5) == want, format!("draw {t}: decode differs from argmax"))?;
    }
    Ok(format!("sums within {worst:.1e}, 100/100 argmax"))
}

fn crf_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let ts = TagSet::new(1);
    let t = ts.len();
    check(t == 7, format!("{t} tags"))?;
    for d in 0..100 {
        let n = rng.gen_range(1..=5);
        let em: Vec<Vec<f64>> = (0..n).map(|_| random_scores(&mut rng, t, 2.0)).collect();
        let start = random_scores(&mut rng, t, 2.0);
        let trans: Vec<Vec<f64>> = (0..t).map(|_| random_scores(&mut rng, t, 2.0)).collect();
        let c = ChainScores {
            tags: ts,
            emissions: &em,
            start: &start,
            transitions: &trans,
        };
        let (lz, max, arg) = crf_brute_force(ts, &em, &start, &trans);
        check((c.log_z() - lz).abs() < 1e-9, format!("draw {d}: forward"))?;
        let (seq, score) = c.viterbi();
        check((score - max).abs() < 1e-9 && seq == arg, format!("draw {d}: viterbi"))?;
    }
    Ok("100/100 forward and viterbi".into())
}

fn random_valid_tags(rng: &mut ChaCha8Rng, ts: TagSet) -> Vec<Tag> {
    let n = rng.gen_range(0..16);
    let mut out: Vec<usize> = Vec::new();
    for _ in 0..n {
        let r = rng.gen_range(0..ts.len());
        let ok = match out.last() {
            None => ts.can_start(r),
            Some(&p) => ts.allowed(p, r),
        };
        out.push(if ok { r } else { 0 });
    }
    out.into_iter().map(|i| ts.tag(i)).collect()
}

fn heuristic_fidelity() -> Outcome {
    let gold: Vec<Candidate> = fixtures::gastro_sentence()
        .entities
        .iter()
        .map(|e| Candidate::new(0, e.spans.clone()))
        .collect();
    let tags = encode_tags(&gold, 14);
    let one = |i| (i, i);
    let want_all: BTreeSet<Candidate> = [
        cand(&[one(LACERATION), one(ESOPHAGUS)]),
        cand(&[one(STOMACH), one(LAC)]),
        cand(&[(BLOOD, STOMACH)]),
        cand(&[one(LACERATION), one(LAC)]),
        cand(&[one(ESOPHAGUS), one(LAC)]),
        cand(&[one(LACERATION), one(ESOPHAGUS), one(LAC)]),
        cand(&[one(LACERATION), one(STOMACH)]),
        cand(&[one(ESOPHAGUS), one(STOMACH)]),
        cand(&[one(LACERATION), one(STOMACH), one(LAC)]),
        cand(&[one(ESOPHAGUS), one(STOMACH), one(LAC)]),
    ]
    .into_iter()
    .collect();
    let all = decode_all(&tags, 3);
    check(all.len() == 10, format!("all reading gives {} entities", all.len()))?;
    check(all.iter().cloned().collect::<BTreeSet<_>>() == want_all, "all reading differs")?;
    let enough = decode_enough(&tags, 3);
    check(enough.len() == 3, format!("enough reading gives {} entities", enough.len()))?;
    check(enough.contains(&cand(&[(BLOOD, STOMACH)])), "blood in stomach missing")?;
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for d in 0..1000 {
        let ts = TagSet::new(rng.gen_range(1..=2));
        let tags = random_valid_tags(&mut rng, ts);
        let k = rng.gen_range(1..=3);
        let all: BTreeSet<Candidate> = decode_all(&tags, k).into_iter().collect();
        check(
            decode_enough(&tags, k).iter().all(|e| all.contains(e)),
            format!("sequence {d}: enough not within all"),
        )?;
    }
    Ok("10 / 3 entities, 1000/1000 subset".into())
}

fn end_to_end() -> Outcome {
    let [tr, dev, test] = generate_split(&GenConfig::default(), 500, 100, 100).map_err(|e| e.to_string())?;
    let mut cfg = TrainConfig::synthetic();
    cfg.seed = 0;
    let t0 = Instant::now();
    let shared = train(&tr, &dev, &cfg, None).map_err(|e| e.to_string())?;
    let took = t0.elapsed();
    let model = JointModel::from_checkpoint(&shared).map_err(|e| e.to_string())?;
    let f1 = evaluate(&model, &test).f1();
    cfg.shared_encoder = false;
    let split = train(&tr, &dev, &cfg, None).map_err(|e| e.to_string())?;
    let best = |h: &[disco_core::pipeline::EpochRecord]| h.iter().map(|r| r.f1).fold(0.0, f64::max);
    let (dev_shared, dev_split) = (best(&shared.history), best(&split.history));
    let summary = format!(
        "test F1 {f1:.3} in {} epochs, {took:.1?}; dev F1 shared {dev_shared:.4} vs split {dev_split:.4}",
        shared.history.len()
    );
    check(f1 >= 0.90, format!("{summary}: test F1 below 0.90"))?;
    check(shared.history.len() <= 30, format!("{summary}: too many epochs"))?;
    check(took < Duration::from_secs(600), format!("{summary}: too slow"))?;
    check(dev_shared >= dev_split, format!("{summary}: shared below split"))?;
    Ok(summary)
}

fn determinism() -> Outcome {
    let [tr, dev, test] = generate_split(&GenConfig::default(), 40, 10, 20).map_err(|e| e.to_string())?;
    let mut cfg = TrainConfig::synthetic();
    cfg.epochs = 3;
    let a = train(&tr, &dev, &cfg, None).map_err(|e| e.to_string())?;
    let b = train(&tr, &dev, &cfg, None).map_err(|e| e.to_string())?;
    check(a.to_bytes() == b.to_bytes(), "joint checkpoints differ")?;
    let (ma, mb) = (
        JointModel::from_checkpoint(&a).map_err(|e| e.to_string())?,
        JointModel::from_checkpoint(&b).map_err(|e| e.to_string())?,
    );
    check(
        test.iter().all(|s| ma.predict(&s.tokens) == mb.predict(&s.tokens)),
        "joint predictions differ",
    )?;
    let a = train_crf(&tr, &dev, &cfg, Heuristic::Enough).map_err(|e| e.to_string())?;
    let b = train_crf(&tr, &dev, &cfg, Heuristic::Enough).map_err(|e| e.to_string())?;
    check(a.to_bytes() == b.to_bytes(), "crf checkpoints differ")?;
    let (ca, cb) = (
        CrfTagger::from_checkpoint(&a).map_err(|e| e.to_string())?,
        CrfTagger::from_checkpoint(&b).map_err(|e| e.to_string())?,
    );
    for h in [Heuristic::Enough, Heuristic::All] {
        check(
            test.iter().all(|s| ca.predict(&s.tokens, h) == cb.predict(&s.tokens, h)),
            "crf predictions differ",
        )?;
    }
    Ok("joint and crf checkpoints and predictions identical".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("partition function", partition_function),
        ("map decoding", map_exactness),
        ("hyperpath bijection", hyperpath_bijection),
        ("gradients", gradient_fidelity),
        ("merge normalization", merge_normalization),
        ("crf oracles", crf_oracles),
        ("tag heuristics", heuristic_fidelity),
        ("synthetic end-to-end", end_to_end),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("PASS criterion {} ({name}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all 9 criteria passed");
        ExitCode::SUCCESS
    }
}
