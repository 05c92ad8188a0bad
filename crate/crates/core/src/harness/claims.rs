//! Randomized suites checking the daisy-sequence, plucking and global-decoder
//! claims on generated instances.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::seq::index::sample_weighted;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seeds::stream;
use super::wrapup::wrapup_sanity;
use crate::daisy::{build_daisy_sequence, default_scale, pick_heavy_level, pluck_simple_daisy, plucked_size_meets_bound};
use crate::decoder::{CodeSpec, Symbol};
use crate::error::{argument, Result};
use crate::global::{outputs_under_true_kernel, GlobalDecoder, GlobalDecoderConfig};
use crate::radical::Radical;
use crate::set_system::{DaisyCertificate, SetSystem, WeightedSetSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimId {
    Coresub,
    Partition,
    External,
    HeavyLevel,
    SimpleDaisyBound,
    Completeness,
    Soundness,
    Wrapup,
}

impl ClaimId {
    pub fn name(self) -> &'static str {
        match self {
            ClaimId::Coresub => "coresub",
            ClaimId::Partition => "partition",
            ClaimId::External => "external",
            ClaimId::HeavyLevel => "heavy-level",
            ClaimId::SimpleDaisyBound => "simple-daisy-bound",
            ClaimId::Completeness => "completeness",
            ClaimId::Soundness => "soundness",
            ClaimId::Wrapup => "wrapup",
        }
    }
}

/// A failed check, with the stream that regenerates its instance:
/// `stream(seed, stream, instance)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub seed: u64,
    pub stream: String,
    pub instance: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim: ClaimId,
    pub instances: u64,
    pub violations: Vec<Violation>,
    /// Smallest relative slack seen (negative on violation), when the claim
    /// has a numeric bound.
    pub worst_margin: Option<f64>,
}

impl ClaimReport {
    pub fn new(claim: ClaimId) -> Self {
        ClaimReport { claim, instances: 0, violations: Vec::new(), worst_margin: None }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn note_margin(&mut self, margin: f64) {
        self.worst_margin = Some(self.worst_margin.map_or(margin, |m| m.min(margin)));
    }

    fn absorb(&mut self, other: ClaimReport) {
        self.instances += other.instances;
        self.violations.extend(other.violations);
        if let Some(m) = other.worst_margin {
            self.note_margin(m);
        }
    }
}

/// How element frequencies are skewed in generated set systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemProfile {
    Uniform,
    /// Element `j` is drawn with weight `1/(j+1)`, creating high-degree hubs.
    Skewed,
}

/// `count` sets of exactly `size` distinct elements of `[n]`.
pub fn random_system(n: usize, size: usize, count: usize, profile: SystemProfile, rng: &mut impl Rng) -> Result<SetSystem> {
    if size == 0 || size > n {
        return Err(argument(format!("cannot draw sets of size {size} from {n} elements")));
    }
    let sets = match profile {
        SystemProfile::Uniform => (0..count)
            .map(|_| rand::seq::index::sample(rng, n, size).into_vec())
            .collect(),
        SystemProfile::Skewed => {
            let hubs = WeightedIndex::new((0..n).map(|j| 1.0 / (j as f64 + 1.0))).expect("positive finite weights");
            (0..count)
                .map(|_| {
                    // rejection keeps the draw distinct; only small sets are drawn this way
                    if 2 * size > n {
                        return sample_weighted(&mut *rng, n, |j| 1.0 / (j as f64 + 1.0), size)
                            .expect("positive finite weights")
                            .into_vec();
                    }
                    let mut set = Vec::with_capacity(size);
                    while set.len() < size {
                        let j = hubs.sample(&mut *rng);
                        if !set.contains(&j) {
                            set.push(j);
                        }
                    }
                    set
                })
                .collect()
        }
    };
    SetSystem::new(n, sets)
}

/// Positive integer weights in `1..=16`, normalized exactly.
pub fn random_weights(count: usize, rng: &mut impl Rng) -> Vec<BigRational> {
    let raw: Vec<u64> = (0..count).map(|_| rng.gen_range(1..=16)).collect();
    let total: u64 = raw.iter().sum();
    raw.into_iter()
        .map(|w| BigRational::new(BigInt::from(w), BigInt::from(total)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct ClaimSuiteConfig {
    pub seed: u64,
    /// `(n, ℓ)` points for the daisy-sequence suite; `|T| = n`.
    pub points: Vec<(usize, usize)>,
    pub instances: u64,
    pub pluck_instances: u64,
    pub decoder_codes: Vec<CodeSpec>,
    pub decoder_trials: u64,
    pub wrapup_max_k: usize,
    /// Plants a corrupted certificate in the external-degree suite.
    pub inject_fault: bool,
}

impl Default for ClaimSuiteConfig {
    fn default() -> Self {
        let points = [64, 256, 1024]
            .into_iter()
            .flat_map(|n| [2, 3, 4].into_iter().map(move |l| (n, l)))
            .collect();
        let decoder_codes = ["hadamard:m=6", "shared-pivot:kappa=2,r=16,k=4", "repetition:k=4,r=3", "identity:k=4"]
            .iter()
            .map(|s| s.parse().expect("built-in spec"))
            .collect();
        ClaimSuiteConfig {
            seed: 0,
            points,
            instances: 1000,
            pluck_instances: 200,
            decoder_codes,
            decoder_trials: 100,
            wrapup_max_k: 10,
            inject_fault: false,
        }
    }
}

fn profile_for(instance: u64) -> SystemProfile {
    if instance.is_multiple_of(2) {
        SystemProfile::Uniform
    } else {
        SystemProfile::Skewed
    }
}

/// Reports for coresub, partition, external and heavy-level over one `(n, ℓ)`.
pub fn daisy_sequence_suite(seed: u64, n: usize, locality: usize, instances: u64, inject_fault: bool) -> Result<Vec<ClaimReport>> {
    let label = format!("claims/daisy-sequence/n={n}/l={locality}");
    let per_instance = (0..instances)
        .into_par_iter()
        .map(|instance| {
            let mut rng = stream(seed, &label, instance);
            let system = random_system(n, locality, n, profile_for(instance), &mut rng)?;
            let weights = if instance % 4 < 2 {
                WeightedSetSystem::uniform(system.clone())?
            } else {
                WeightedSetSystem::new(system.clone(), random_weights(n, &mut rng))?
            };
            check_daisy_sequence(&system, &weights, locality, inject_fault && instance == 0)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reports = [ClaimId::Coresub, ClaimId::Partition, ClaimId::External, ClaimId::HeavyLevel].map(ClaimReport::new);
    for (instance, checks) in per_instance.into_iter().enumerate() {
        for (report, check) in reports.iter_mut().zip(checks) {
            report.instances += 1;
            if let Some(m) = check.margin {
                report.note_margin(m);
            }
            if let Some(detail) = check.failure {
                report.violations.push(Violation { seed, stream: label.clone(), instance: instance as u64, detail });
            }
        }
    }
    Ok(reports.into())
}

#[derive(Default)]
struct Check {
    margin: Option<f64>,
    failure: Option<String>,
}

fn check_daisy_sequence(system: &SetSystem, weights: &WeightedSetSystem, locality: usize, corrupt: bool) -> Result<[Check; 4]> {
    let n = system.universe_size();
    let levels = build_daisy_sequence(system, locality, &default_scale(system))?;

    let mut coresub = Check::default();
    for level in &levels {
        // |K_i| < ℓ·n^(1 - i/ℓ)
        let bound = Radical::new(
            BigRational::from(BigInt::from(locality)),
            n as u64,
            (locality - level.level) as u32,
            locality as u32,
        )?;
        let size = level.kernel.len() as u64;
        let margin = 1.0 - size as f64 / bound.to_f64();
        coresub.margin = Some(coresub.margin.map_or(margin, |m: f64| m.min(margin)));
        if bound.cmp_integer(size) != Ordering::Greater && coresub.failure.is_none() {
            coresub.failure = Some(format!("level {}: |K| = {size} reaches bound {bound}", level.level));
        }
    }

    let mut partition = Check::default();
    let mut seen = vec![0u32; system.len()];
    for level in &levels {
        for &m in &level.members {
            seen[m] += 1;
        }
    }
    if let Some(idx) = seen.iter().position(|&c| c != 1) {
        partition.failure = Some(format!("set {idx} appears in {} levels", seen[idx]));
    }

    let mut external = Check::default();
    for level in &levels {
        let report = system.verify_daisy(&level.certificate())?;
        if !report.is_valid() {
            external.failure = Some(format!(
                "level {}: {} degree and {} petal violation(s)",
                level.level,
                report.degree_violations.len(),
                report.petal_violations.len()
            ));
            break;
        }
    }
    if corrupt {
        let cert = corrupted_certificate(system);
        let report = system.verify_daisy(&cert)?;
        if !report.is_valid() {
            external.failure = Some(format!(
                "planted certificate: {} degree and {} petal violation(s)",
                report.degree_violations.len(),
                report.petal_violations.len()
            ));
        }
    }

    let mut heavy = Check::default();
    let share = 1.0 / locality as f64;
    match pick_heavy_level(&levels, weights) {
        Ok(daisy) => {
            heavy.margin = daisy.density.to_f64().map(|d| d / share - 1.0);
            if daisy.density * BigInt::from(locality) < BigRational::from(BigInt::from(1)) {
                heavy.failure = Some(format!("level {} has density below 1/{locality}", daisy.level));
            }
        }
        Err(e) => heavy.failure = Some(e.to_string()),
    }
    Ok([coresub, partition, external, heavy])
}

/// All sets through a most frequent element, with an empty kernel and a
/// petal bound of zero: never a valid daisy.
fn corrupted_certificate(system: &SetSystem) -> DaisyCertificate {
    let degrees = system.degrees_unchecked(0..system.len());
    let hub = (0..degrees.len()).max_by_key(|&u| (degrees[u], std::cmp::Reverse(u))).unwrap_or(0);
    let members = (0..system.len()).filter(|&m| system.set(m).binary_search(&hub).is_ok()).collect();
    DaisyCertificate {
        members,
        kernel: Vec::new(),
        petal_bound: 0,
        degree_bound: Radical::integer(1).expect("positive"),
    }
}

/// Plucks simple daisies out of levels of random daisy sequences.
pub fn pluck_suite(seed: u64, points: &[(usize, usize)], instances: u64) -> Result<ClaimReport> {
    if points.is_empty() {
        return Err(argument("no parameter points for the pluck suite"));
    }
    let label = "claims/pluck";
    let outcomes = (0..instances)
        .into_par_iter()
        .map(|instance| {
            let (n, l) = points[instance as usize % points.len()];
            let mut rng = stream(seed, label, instance);
            let system = random_system(n, l, n, profile_for(instance / points.len() as u64), &mut rng)?;
            let levels = build_daisy_sequence(&system, l, &default_scale(&system))?;
            let nonempty: Vec<_> = levels.iter().filter(|lv| !lv.members.is_empty()).collect();
            let level = nonempty[rng.gen_range(0..nonempty.len())];
            let plucked = pluck_simple_daisy(&system, &level.members, &level.kernel, level.level, &level.degree_bound)?;

            let simple = DaisyCertificate {
                members: plucked.clone(),
                kernel: level.kernel.clone(),
                petal_bound: level.level,
                degree_bound: Radical::integer(1)?,
            };
            let mut failure = None;
            if !system.verify_daisy(&simple)?.is_valid() {
                failure = Some("plucked petals are not pairwise disjoint".to_string());
            }
            if plucked.iter().any(|m| level.members.binary_search(m).is_err()) {
                failure = Some("plucked a set outside the daisy".to_string());
            }
            let covered = system.covered_elements(&level.members)?.len();
            let k = level.kernel.len();
            if !plucked_size_meets_bound(covered, k, level.level, &level.degree_bound, plucked.len()) {
                failure = Some(format!(
                    "plucked {} sets from covered {covered}, kernel {k}, s = {}, t = {}",
                    plucked.len(),
                    level.level,
                    level.degree_bound
                ));
            }
            let target = covered.saturating_sub(k) as f64;
            let required = if level.level <= 1 {
                target
            } else {
                target / (level.degree_bound.to_f64() * (level.level * level.level) as f64)
            };
            let margin = if required > 0.0 { plucked.len() as f64 / required - 1.0 } else { f64::INFINITY };
            Ok((margin, failure))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut report = ClaimReport::new(ClaimId::SimpleDaisyBound);
    for (instance, (margin, failure)) in outcomes.into_iter().enumerate() {
        report.instances += 1;
        if margin.is_finite() {
            report.note_margin(margin);
        }
        if let Some(detail) = failure {
            report.violations.push(Violation { seed, stream: label.into(), instance: instance as u64, detail });
        }
    }
    Ok(report)
}

/// On valid codewords: every fully queried view outputs `x_i` under the true
/// kernel values, and no kernel assignment is unanimous for `¬x_i`.
pub fn decoder_suite(seed: u64, spec: &CodeSpec, trials: u64) -> Result<[ClaimReport; 2]> {
    let (code, decoder) = spec.build()?;
    let config = GlobalDecoderConfig { audit: true, ..Default::default() };
    let global = GlobalDecoder::prepare(&decoder, config)?;
    let label = format!("claims/decoder/{spec}");
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = stream(seed, &label, trial);
            let message = code.random_message(&mut rng);
            let word = code.encode(&message)?;
            let plan = global.draw_plan(&mut rng)?;
            let outcome = global.run_with_plan(&word, &plan)?;
            let mut incomplete = Vec::new();
            for (i, pkg) in global.packages().iter().enumerate() {
                let outputs = outputs_under_true_kernel(pkg, &decoder, &word, &plan)?;
                if outputs.iter().any(|&s| s != Symbol::from_bit(message[i])) {
                    incomplete.push(i);
                }
            }
            let unsound: Vec<usize> = (0..message.len())
                .filter(|&i| outcome.diagnostics[i].unanimous_wrong(message[i]) > 0)
                .collect();
            Ok((incomplete, unsound))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut completeness = ClaimReport::new(ClaimId::Completeness);
    let mut soundness = ClaimReport::new(ClaimId::Soundness);
    let k = code.dimension() as u64;
    for (trial, (incomplete, unsound)) in outcomes.into_iter().enumerate() {
        completeness.instances += k;
        soundness.instances += k;
        let violation = |what: &str, idx: &[usize]| Violation {
            seed,
            stream: label.clone(),
            instance: trial as u64,
            detail: format!("{what} at indices {idx:?}"),
        };
        if !incomplete.is_empty() {
            completeness.violations.push(violation("view disagrees with x_i under the true kernel", &incomplete));
        }
        if !unsound.is_empty() {
            soundness.violations.push(violation("assignment unanimous for the wrong bit", &unsound));
        }
    }
    Ok([completeness, soundness])
}

/// Runs every suite and returns one merged report per claim.
pub fn verify_claims(config: &ClaimSuiteConfig) -> Result<Vec<ClaimReport>> {
    let order = [
        ClaimId::Coresub,
        ClaimId::Partition,
        ClaimId::External,
        ClaimId::HeavyLevel,
        ClaimId::SimpleDaisyBound,
        ClaimId::Completeness,
        ClaimId::Soundness,
        ClaimId::Wrapup,
    ];
    let mut merged: Vec<ClaimReport> = order.iter().map(|&c| ClaimReport::new(c)).collect();
    let mut add = |report: ClaimReport| {
        let slot = order.iter().position(|&c| c == report.claim).expect("known claim");
        merged[slot].absorb(report);
    };

    for (p, &(n, l)) in config.points.iter().enumerate() {
        for report in daisy_sequence_suite(config.seed, n, l, config.instances, config.inject_fault && p == 0)? {
            add(report);
        }
    }
    if config.pluck_instances > 0 {
        add(pluck_suite(config.seed, &config.points, config.pluck_instances)?);
    }
    for spec in &config.decoder_codes {
        for report in decoder_suite(config.seed, spec, config.decoder_trials)? {
            add(report);
        }
    }
    for k in 1..=config.wrapup_max_k {
        add(wrapup_sanity(k)?);
    }
    Ok(merged)
}
