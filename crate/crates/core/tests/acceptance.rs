//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Checks recompute the claimed quantities with test-local integer arithmetic
//! rather than reusing the library's own comparison helpers.

use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use rldc::daisy::{build_daisy_sequence, default_scale, pick_heavy_level, pluck_simple_daisy, DaisyLevel};
use rldc::decoder::{
    hadamard_code, identity_code, output_distribution, repetition_code, shared_pivot_code, AdaptiveDecoder, Code,
    CodeSpec, DecisionTree, LocalDecoder, NonAdaptiveDecoder, Symbol,
};
use rldc::harness::claims::{random_system, random_weights, SystemProfile};
use rldc::harness::{scaling_study, simulate, strategy_error, stream, wrapup_sanity, ExperimentConfig};
use rldc::preprocess::{amplify, flatten_adaptive, preprocess, CorpusEntry, PipelineConfig};
use rldc::set_system::{SetSystem, WeightedSetSystem};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn ratio(a: u64, b: u64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn pow(base: u64, e: usize) -> BigUint {
    BigUint::from(base).pow(e as u32)
}

/// Independent checks of one daisy sequence built with `c = |T|/n = 1`.
/// Returns (partition, kernel, degree) violation counts.
fn audit_sequence(system: &SetSystem, levels: &[DaisyLevel], l: usize) -> (usize, usize, usize) {
    let n = system.universe_size();
    let mut seen = vec![0usize; system.len()];
    for level in levels {
        for &m in &level.members {
            seen[m] += 1;
        }
    }
    let partition = seen.iter().filter(|&&c| c != 1).count() + usize::from(levels.len() != l);

    let mut kernel = 0;
    let mut degree = 0;
    for level in levels {
        let i = level.level;
        // |K_i| < ℓ·n^(1-i/ℓ)  <=>  |K_i|^ℓ < ℓ^ℓ · n^(ℓ-i)
        if pow(level.kernel.len() as u64, l) >= pow(l as u64, l) * pow(n as u64, l - i) {
            kernel += 1;
        }
        // petal degree ≤ n^(max(1,i-1)/ℓ)  <=>  deg^ℓ ≤ n^max(1,i-1)
        let mut in_kernel = vec![false; n];
        for &u in &level.kernel {
            in_kernel[u] = true;
        }
        let mut deg = vec![0u64; n];
        for &m in &level.members {
            let set = system.set(m);
            if set.iter().filter(|&&u| !in_kernel[u]).count() > i {
                degree += 1;
            }
            for &u in set {
                if !in_kernel[u] {
                    deg[u] += 1;
                }
            }
        }
        let cap = pow(n as u64, i.saturating_sub(1).max(1));
        degree += deg.iter().filter(|&&d| pow(d, l) > cap).count();
    }
    (partition, kernel, degree)
}

fn sequence_instance(n: usize, l: usize, instance: u64) -> (SetSystem, WeightedSetSystem) {
    let mut rng = stream(SEED, &format!("acceptance/sequence/{n}/{l}"), instance);
    let profile = if instance.is_multiple_of(2) { SystemProfile::Uniform } else { SystemProfile::Skewed };
    let system = random_system(n, l, n, profile, &mut rng).unwrap();
    let weighted = if instance % 4 < 2 {
        WeightedSetSystem::uniform(system.clone()).unwrap()
    } else {
        WeightedSetSystem::new(system.clone(), random_weights(n, &mut rng)).unwrap()
    };
    (system, weighted)
}

fn criteria_1_and_2() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut counts = (0usize, 0usize, 0usize);
    let mut heavy_failures = 0usize;
    let mut min_density_ratio = f64::INFINITY;
    let mut instances = 0usize;
    for n in [64, 256, 1024] {
        for l in [2, 3, 4] {
            let results: Vec<_> = (0..1000u64)
                .into_par_iter()
                .map(|instance| {
                    let (system, weighted) = sequence_instance(n, l, instance);
                    let levels = build_daisy_sequence(&system, l, &default_scale(&system)).unwrap();
                    let audit = audit_sequence(&system, &levels, l);
                    let heavy = pick_heavy_level(&levels, &weighted);
                    let (ok, ratio_seen) = match heavy {
                        Ok(h) => {
                            // recompute the level's weight independently
                            let level = &levels[h.level - 1];
                            let mut total = BigRational::zero();
                            for &m in &level.members {
                                total += &weighted.weights()[m];
                            }
                            let share = BigRational::new(BigInt::one(), BigInt::from(l));
                            let r = (&total / &share).to_f64().unwrap();
                            (total == h.density && total >= share && h.members == level.members, r)
                        }
                        Err(_) => (false, 0.0),
                    };
                    (audit, ok, ratio_seen)
                })
                .collect();
            for ((p, k, d), ok, r) in results {
                counts.0 += p;
                counts.1 += k;
                counts.2 += d;
                heavy_failures += usize::from(!ok);
                min_density_ratio = min_density_ratio.min(r);
                instances += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let c1 = outcome(
        counts == (0, 0, 0) && elapsed < Duration::from_secs(60),
        format!(
            "{instances} systems: partition {} / kernel {} / degree {} violations, {:.1}s (limit 60s)",
            counts.0,
            counts.1,
            counts.2,
            elapsed.as_secs_f64()
        ),
    );
    let c2 = outcome(
        heavy_failures == 0,
        format!("{heavy_failures} heavy levels below 1/ℓ; smallest density·ℓ = {min_density_ratio:.4}"),
    );
    (c1, c2)
}

fn criterion_3() -> Outcome {
    let sizes = [64usize, 128, 256, 512, 1024];
    let mut violations = Vec::new();
    let mut plucked_total = 0usize;
    for instance in 0..200u64 {
        let mut rng = stream(SEED, "acceptance/pluck", instance);
        let n = sizes[instance as usize % sizes.len()];
        let l = 2 + (instance as usize / sizes.len()) % 3;
        let profile = if instance % 2 == 0 { SystemProfile::Skewed } else { SystemProfile::Uniform };
        let system = random_system(n, l, n, profile, &mut rng).unwrap();
        let levels = build_daisy_sequence(&system, l, &default_scale(&system)).unwrap();
        let nonempty: Vec<&DaisyLevel> = levels.iter().filter(|lv| !lv.members.is_empty()).collect();
        let level = nonempty[rng.gen_range(0..nonempty.len())];
        assert!(system.verify_daisy(&level.certificate()).unwrap().is_valid());
        let s = level.level;
        let plucked = pluck_simple_daisy(&system, &level.members, &level.kernel, s, &level.degree_bound).unwrap();
        plucked_total += plucked.len();

        let mut in_kernel = vec![false; n];
        for &u in &level.kernel {
            in_kernel[u] = true;
        }
        let mut owner = vec![usize::MAX; n];
        let mut disjoint = true;
        for &m in &plucked {
            for &u in system.set(m).iter().filter(|&&u| !in_kernel[u]) {
                if owner[u] != usize::MAX {
                    disjoint = false;
                }
                owner[u] = m;
            }
        }
        let mut covered = vec![false; n];
        for &m in &level.members {
            for &u in system.set(m) {
                covered[u] = true;
            }
        }
        let target = (covered.iter().filter(|&&c| c).count() as u64).saturating_sub(level.kernel.len() as u64);
        let p = plucked.len() as u64;
        // s = 1: P ≥ D.  s > 1 with t = n^(e/ℓ): P·s²·t ≥ D  <=>  n^e·(P·s²)^ℓ ≥ D^ℓ
        let size_ok = if s == 1 {
            p >= target
        } else {
            let e = (s - 1).max(1);
            pow(n as u64, e) * pow(p * (s * s) as u64, l) >= pow(target, l)
        };
        if !disjoint || !size_ok {
            violations.push(instance);
        }
    }
    outcome(
        violations.is_empty(),
        format!("200 daisies, {plucked_total} sets plucked, violations at instances {violations:?}"),
    )
}

fn random_tree(n: usize, depth: usize, path: &mut Vec<usize>, rng: &mut impl Rng) -> DecisionTree {
    if depth == 0 || rng.gen_bool(0.15) {
        let s = [Symbol::Zero, Symbol::One, Symbol::Reject][rng.gen_range(0..3)];
        return DecisionTree::Leaf(s);
    }
    let j = loop {
        let j = rng.gen_range(0..n);
        if !path.contains(&j) {
            break j;
        }
    };
    path.push(j);
    let zero = random_tree(n, depth - 1, path, rng);
    let one = random_tree(n, depth - 1, path, rng);
    path.pop();
    DecisionTree::query(j, zero, one)
}

fn criterion_4() -> Outcome {
    let shapes = [(4usize, 1usize, 1usize, 3usize), (6, 2, 2, 16), (8, 2, 3, 64), (10, 3, 3, 256), (12, 1, 3, 1024), (12, 2, 2, 1024), (5, 3, 4, 8)];
    let mut checked = 0u64;
    let mut mismatches = 0u64;
    let mut oversized = 0u64;
    for (idx, &(n, k, l, trees)) in shapes.iter().enumerate() {
        let mut rng = stream(SEED, "acceptance/flatten", idx as u64);
        let lists = (0..k)
            .map(|_| {
                (0..trees)
                    .map(|_| (random_tree(n, l, &mut Vec::new(), &mut rng), ratio(1, trees as u64)))
                    .collect()
            })
            .collect();
        let adaptive = AdaptiveDecoder::new(k, n, l, lists).unwrap();
        let flat = flatten_adaptive(&adaptive).unwrap();
        let words: Vec<Vec<bool>> = (0..1usize << n).map(|w| (0..n).map(|j| w >> j & 1 == 1).collect()).collect();
        for i in 0..k {
            oversized += flat.views(i).iter().filter(|v| v.queries.len() > 1 << l).count() as u64;
            let (c, m) = (0..trees)
                .into_par_iter()
                .map(|t| {
                    let (tree, _) = &adaptive.trees(i)[t];
                    let view = &flat.views(i)[t];
                    let bad = words
                        .iter()
                        .filter(|w| tree.run(*w).unwrap() != view.eval(*w).unwrap())
                        .count() as u64;
                    (words.len() as u64, bad)
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
            checked += c;
            mismatches += m;
        }
    }
    outcome(
        mismatches == 0 && oversized == 0,
        format!("{checked} (word, index, coin) cases, {mismatches} mismatches, {oversized} query sets above 2^ℓ"),
    )
}

fn encode_all(code: &Code) -> Vec<(Vec<bool>, Vec<bool>)> {
    let k = code.dimension();
    (0..1usize << k)
        .map(|x| {
            let msg: Vec<bool> = (0..k).map(|i| x >> i & 1 == 1).collect();
            let w = code.encode(&msg).unwrap();
            (msg, w)
        })
        .collect()
}

fn criterion_5() -> Outcome {
    let third = ratio(1, 3);
    let sixteenth = ratio(1, 16);
    let cases: Vec<((Code, NonAdaptiveDecoder), &BigRational)> = vec![
        (identity_code(8).unwrap(), &sixteenth),
        (repetition_code(4, 3).unwrap(), &sixteenth),
        (hadamard_code(3).unwrap(), &sixteenth),
        (hadamard_code(4).unwrap(), &sixteenth),
        (hadamard_code(6).unwrap(), &third),
        (shared_pivot_code(2, 3, 3).unwrap(), &sixteenth),
    ];
    let mut incomplete = 0u64;
    let mut evaluated = 0u64;
    for ((code, dec), eps) in &cases {
        let amp = amplify(dec, eps).unwrap();
        for (msg, w) in encode_all(code) {
            for (i, &bit) in msg.iter().enumerate() {
                let dist = output_distribution(&amp, &w, i, 1 << 22).unwrap().expect("enumerable");
                evaluated += 1;
                if !dist.correct(bit).is_one() {
                    incomplete += 1;
                }
            }
        }
    }

    let (code, dec) = hadamard_code(8).unwrap();
    let code = code.with_radius(sixteenth.clone()).unwrap();
    let amp = amplify(&dec, &sixteenth).unwrap();
    let trials = 10_000u64;
    let wrong: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(SEED, "acceptance/amplify", t);
            let (msg, word) = code.in_radius_word(&mut rng).unwrap();
            let i = rng.gen_range(0..msg.len());
            let o = amp.sample_outcome(i, &mut rng);
            let out = amp.outcome(i, o).eval(&word).unwrap();
            u64::from(out.is_wrong_for(msg[i]))
        })
        .sum();
    let rate = wrong as f64 / trials as f64;
    let limit = 1.0 / 16.0 + 0.02;
    outcome(
        incomplete == 0 && rate <= limit,
        format!(
            "completeness: {incomplete} of {evaluated} (codeword, index) pairs short of 1; \
             corrupted Hadamard m=8 wrong rate {rate:.4} over {trials} trials (limit {limit:.4})"
        ),
    )
}

fn criterion_6() -> Outcome {
    let (code, dec) = hadamard_code(6).unwrap();
    let adaptive = AdaptiveDecoder::from_non_adaptive(&dec).unwrap();
    let n = code.length();
    let coin_cap = (n as f64).log2().ceil() as u32 + 2;
    let config = PipelineConfig { epsilon: Some(ratio(1, 16)), ..PipelineConfig::default() };
    let results: Vec<(bool, u32)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = stream(seed, "acceptance/reduce/corpus", 0);
            let corpus: Vec<CorpusEntry> = (0..50)
                .map(|_| {
                    let (message, word) = code.in_radius_word(&mut rng).unwrap();
                    CorpusEntry { message, word }
                })
                .collect();
            let mut rng = stream(seed, "acceptance/reduce", 0);
            match preprocess(&adaptive, &corpus, &config, &mut rng) {
                Ok(out) => {
                    let rows = out.reduced.views(0).len() as u64;
                    let bits = 64 - (rows - 1).leading_zeros();
                    (out.report.passed && out.report.attempts <= 4, bits)
                }
                Err(_) => (false, 0),
            }
        })
        .collect();
    let passes = results.iter().filter(|r| r.0).count();
    let max_bits = results.iter().map(|r| r.1).max().unwrap_or(0);
    outcome(
        passes >= 95 && max_bits <= coin_cap,
        format!("{passes}/100 seeds passed within 3 retries (need 95); coin bits {max_bits} (cap {coin_cap})"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut config = ExperimentConfig::new("hadamard:m=10".parse().unwrap(), 200, SEED);
    config.timing = false;
    let sim = simulate(&config).unwrap();
    let elapsed = start.elapsed();
    let s = &sim.summary;
    let sigma_mean = s.expected_queries_std / (s.trials as f64).sqrt();
    let deviation = (s.mean_queries - s.expected_queries).abs();
    let p_ok = (s.p - 1024f64.powf(-1.0 / 8.0)).abs() < 1e-12;
    outcome(
        p_ok && s.success_rate >= 0.90 && deviation <= 3.0 * sigma_mean && s.wrong_bits == 0 && elapsed < Duration::from_secs(120),
        format!(
            "success {:.3} (need 0.90); mean |Q| {:.2} vs p·n {:.2} (3σ of mean = {:.2}); wrong bits {}; {:.1}s",
            s.success_rate,
            s.mean_queries,
            s.expected_queries,
            3.0 * sigma_mean,
            s.wrong_bits,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut config = ExperimentConfig::new("shared-pivot:kappa=2,r=64,k=16".parse().unwrap(), 200, SEED);
    config.audit = true;
    config.timing = false;
    let sim = simulate(&config).unwrap();
    let s = &sim.summary;
    outcome(
        s.success_rate >= 2.0 / 3.0 && s.unanimous_wrong == 0 && s.wrong_bits == 0,
        format!(
            "success {:.3} (need 0.667); unanimous-wrong assignments {}; wrong bits {}",
            s.success_rate, s.unanimous_wrong, s.wrong_bits
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut instances = 0;
    let mut violations = 0;
    for k in 1..=10 {
        let r = wrapup_sanity(k).unwrap();
        instances += r.instances;
        violations += r.violations.len();
    }
    // random concrete strategies never beat the floor either
    let mut below_half = 0;
    let half = ratio(1, 2);
    let mut rng = stream(SEED, "acceptance/wrapup", 0);
    for _ in 0..500 {
        let k = rng.gen_range(1..=8usize);
        let reads: Vec<usize> = (0..k).filter(|_| rng.gen_bool(0.5)).take(k - 1).collect();
        let table: Vec<Vec<bool>> = (0..1usize << reads.len())
            .map(|_| (0..k).map(|_| rng.gen_bool(0.5)).collect())
            .collect();
        let guess = |view: &[bool]| table[view.iter().enumerate().fold(0, |a, (b, &v)| a | usize::from(v) << b)].clone();
        if strategy_error(k, &reads, guess).unwrap() < half {
            below_half += 1;
        }
    }
    outcome(
        violations == 0 && below_half == 0,
        format!("{instances} query sets for k ≤ 10, {violations} counterexamples"),
    )
}

fn criterion_10() -> Outcome {
    let codes: Vec<CodeSpec> = [8, 10, 12].iter().map(|m| format!("hadamard:m={m}").parse().unwrap()).collect();
    let mut base = ExperimentConfig::new(codes[0].clone(), 200, SEED);
    base.timing = false;
    let report = scaling_study(&codes, &base);
    match report.fit {
        Some(fit) => outcome(
            report.skipped.is_empty() && (fit.exponent - 0.875).abs() <= 0.08,
            format!("fitted exponent {:.4} (target 0.875 ± 0.08) over n = 256, 1024, 4096", fit.exponent),
        ),
        None => outcome(false, "no fit produced".into()),
    }
}

fn main() {
    let (c1, c2) = criteria_1_and_2();
    let results = [
        ("1", "daisy-sequence claims", c1),
        ("2", "heavy-level pigeonhole", c2),
        ("3", "simple-daisy bound", criterion_3()),
        ("4", "flatten equivalence", criterion_4()),
        ("5", "amplification", criterion_5()),
        ("6", "randomness reduction", criterion_6()),
        ("7", "global decoder, empty kernel", criterion_7()),
        ("8", "global decoder, nonempty kernel", criterion_8()),
        ("9", "wrap-up counting", criterion_9()),
        ("10", "query scaling", criterion_10()),
    ];
    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id} ({name}): {}", o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
