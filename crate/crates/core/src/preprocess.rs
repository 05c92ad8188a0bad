//! Decoder transformations: flattening decision trees, amplification by
//! unanimous repetition, and randomness reduction by multiset sampling.

use std::borrow::Cow;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{
    AdaptiveDecoder, LocalDecoder, LocalView, NonAdaptiveDecoder, OutputDistribution, Predicate, PredicatePart,
    Symbol, MAX_TABLE_ARITY,
};
use crate::error::{argument, contract, Error, Result};
use crate::radical::{ceil_log2_inverse, ratio};

/// Replaces each decision tree by a view reading every coordinate that labels
/// one of its nodes; the predicate replays the tree on those answers.
pub fn flatten_adaptive(decoder: &AdaptiveDecoder) -> Result<NonAdaptiveDecoder> {
    let bound = 1usize
        .checked_shl(decoder.depth_bound() as u32)
        .unwrap_or(usize::MAX);
    let mut views = Vec::with_capacity(decoder.dimension());
    for i in 0..decoder.dimension() {
        let mut list = Vec::new();
        for (tree, weight) in decoder.trees(i) {
            let queries: Vec<usize> = tree.labels().into_iter().collect();
            if queries.len() > bound {
                return Err(contract(format!("index {i}: tree reads {} coordinates", queries.len())));
            }
            if queries.len() > MAX_TABLE_ARITY {
                return Err(argument(format!(
                    "index {i}: tree reads {} coordinates, too many to tabulate",
                    queries.len()
                )));
            }
            let table = (0..1usize << queries.len())
                .map(|a| {
                    tree.walk(|j| {
                        let pos = queries.binary_search(&j).expect("label collected above");
                        Ok(a >> pos & 1 == 1)
                    })
                })
                .collect::<Result<Vec<Symbol>>>()?;
            list.push(LocalView::new(queries, weight.clone(), Predicate::table(table))?);
        }
        views.push(list);
    }
    NonAdaptiveDecoder::new(decoder.dimension(), decoder.length(), views)
}

/// `R` parallel executions of a base decoder with independent coins, merged
/// into one view that outputs `b` only when every execution outputs `b`.
///
/// A coin outcome is the mixed-radix number whose `r`-th digit (base
/// `outcome_count(i)` of the base decoder, least significant first) selects
/// the `r`-th execution's view. Views are built on demand.
#[derive(Clone, Debug)]
pub struct AmplifiedDecoder {
    base: NonAdaptiveDecoder,
    repetitions: u32,
}

impl AmplifiedDecoder {
    pub fn base(&self) -> &NonAdaptiveDecoder {
        &self.base
    }

    pub fn repetitions(&self) -> u32 {
        self.repetitions
    }

    fn digits(&self, index: usize, mut outcome: u128) -> Vec<usize> {
        let radix = self.base.outcome_count(index);
        (0..self.repetitions)
            .map(|_| {
                let d = outcome % radix;
                outcome /= radix;
                d as usize
            })
            .collect()
    }

    /// Merges the given base views (one per execution) into a single view.
    fn merge(&self, index: usize, picks: &[usize]) -> LocalView {
        let views = self.base.views(index);
        let mut queries: Vec<usize> = picks.iter().flat_map(|&p| views[p].queries.iter().copied()).collect();
        queries.sort_unstable();
        queries.dedup();
        let mut weight = BigRational::one();
        let parts = picks
            .iter()
            .map(|&p| {
                let v = &views[p];
                weight *= &v.weight;
                PredicatePart {
                    positions: v
                        .queries
                        .iter()
                        .map(|j| queries.binary_search(j).expect("merged above"))
                        .collect(),
                    predicate: v.predicate.clone(),
                }
            })
            .collect();
        LocalView { queries, weight, predicate: Predicate::Unanimous(parts) }
    }

    /// Lists every coin outcome as an explicit decoder, if no index has more
    /// than `limit` outcomes.
    pub fn materialize(&self, limit: u128) -> Result<NonAdaptiveDecoder> {
        let mut views = Vec::with_capacity(self.base.dimension());
        for i in 0..self.base.dimension() {
            let count = self.outcome_count(i);
            if count > limit {
                return Err(argument(format!("index {i} has {count} outcomes, above {limit}")));
            }
            views.push((0..count).map(|o| self.outcome(i, o).into_owned()).collect());
        }
        NonAdaptiveDecoder::new(self.base.dimension(), self.base.length(), views)
    }
}

impl LocalDecoder for AmplifiedDecoder {
    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    fn length(&self) -> usize {
        self.base.length()
    }

    /// `R·ℓ`, an upper bound on every merged query set.
    fn locality(&self) -> usize {
        self.repetitions as usize * self.base.locality()
    }

    fn outcome_count(&self, index: usize) -> u128 {
        self.base.outcome_count(index).pow(self.repetitions)
    }

    fn outcome(&self, index: usize, outcome: u128) -> Cow<'_, LocalView> {
        Cow::Owned(self.merge(index, &self.digits(index, outcome)))
    }

    fn sample_outcome(&self, index: usize, rng: &mut dyn RngCore) -> u128 {
        let radix = self.base.outcome_count(index);
        (0..self.repetitions).fold((0u128, 1u128), |(acc, place), _| {
            (acc + self.base.sample_outcome(index, rng) * place, place * radix)
        })
        .0
    }
}

/// Amplifies `decoder` to soundness error `epsilon ∈ (0, 1/3]` with
/// `R = ⌈log₂(1/ε)⌉` unanimous repetitions.
pub fn amplify(decoder: &NonAdaptiveDecoder, epsilon: &BigRational) -> Result<AmplifiedDecoder> {
    if !epsilon.is_positive() || *epsilon > ratio(1, 3) {
        return Err(argument(format!("epsilon must lie in (0, 1/3], got {epsilon}")));
    }
    amplify_times(decoder, ceil_log2_inverse(epsilon))
}

/// Amplification with an explicit repetition count `R ≥ 1`.
pub fn amplify_times(decoder: &NonAdaptiveDecoder, repetitions: u32) -> Result<AmplifiedDecoder> {
    if repetitions == 0 {
        return Err(argument("at least one repetition is needed"));
    }
    for i in 0..decoder.dimension() {
        if decoder.outcome_count(i).checked_pow(repetitions).is_none() {
            return Err(argument(format!(
                "index {i}: {} outcomes to the power {repetitions} overflow the coin space",
                decoder.outcome_count(i)
            )));
        }
    }
    Ok(AmplifiedDecoder { base: decoder.clone(), repetitions })
}

/// Output distribution of `R` independent unanimous executions of a decoder
/// with output distribution `base`.
pub fn unanimity_distribution(base: &OutputDistribution, repetitions: u32) -> OutputDistribution {
    let zero = Pow::pow(&base.zero, repetitions);
    let one = Pow::pow(&base.one, repetitions);
    let reject = BigRational::one() - &zero - &one;
    OutputDistribution { zero, one, reject }
}

/// How the amplification target is read off the locality.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetReading {
    /// `ε = 1/ℓ'²` with `ℓ' = R₀·ℓ` and `R₀ = ⌈log₂ ℓ²⌉`: one fixed-point step
    /// toward the final locality.
    #[default]
    FinalLocality,
    /// `ε = 1/ℓ²` on the locality before amplification.
    InputLocality,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmplificationTarget {
    #[serde(with = "crate::radical::rational_string")]
    pub epsilon: BigRational,
    pub repetitions: u32,
    /// `R·ℓ`
    pub final_locality: usize,
}

/// Target error for a decoder of locality `locality`, capped at `1/3`.
pub fn amplification_target(locality: usize, reading: TargetReading) -> Result<AmplificationTarget> {
    if locality == 0 {
        return Err(argument("locality must be at least 1"));
    }
    let square = |x: usize| BigInt::from(x) * BigInt::from(x);
    let denom = match reading {
        TargetReading::InputLocality => square(locality),
        TargetReading::FinalLocality => {
            let first = ceil_log2_inverse(&BigRational::new(BigInt::one(), square(locality))).max(1);
            square(first as usize * locality)
        }
    };
    let epsilon = BigRational::new(BigInt::one(), denom).min(ratio(1, 3));
    let repetitions = ceil_log2_inverse(&epsilon);
    Ok(AmplificationTarget { epsilon, repetitions, final_locality: repetitions as usize * locality })
}

/// A validation input: a word and the message it should decode to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub message: Vec<bool>,
    pub word: Vec<bool>,
}

/// Outcome of validating a sampled multiset against a corpus.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionReport {
    /// `t`, the number of retained coin outcomes per index.
    pub multiset_size: usize,
    pub validation_corpus_size: usize,
    /// Largest entry of `entry_rates`.
    #[serde(with = "crate::radical::rational_string")]
    pub max_wrong_rate: BigRational,
    #[serde(with = "crate::radical::rational_string")]
    pub tolerance: BigRational,
    pub passed: bool,
    /// Sampling rounds used, the first included.
    pub attempts: u32,
    /// `⌈log₂ t⌉`
    pub coin_bits: u32,
    /// Per corpus entry, the largest over indices of the fraction of retained
    /// rows that output the wrong bit.
    #[serde(with = "crate::radical::rational_vec")]
    pub entry_rates: Vec<BigRational>,
}

/// Keeps `t` coin outcomes per index, sampled with the decoder's own coin
/// distribution, and checks on `corpus` that each entry sees at most a
/// `tolerance` fraction of wrong rows. Indices with a failing entry are
/// resampled up to `retry_limit` more times.
pub fn reduce_randomness<D: LocalDecoder + ?Sized>(
    decoder: &D,
    multiset_size: usize,
    corpus: &[CorpusEntry],
    tolerance: &BigRational,
    retry_limit: u32,
    rng: &mut dyn RngCore,
) -> Result<(NonAdaptiveDecoder, ReductionReport)> {
    if multiset_size == 0 {
        return Err(argument("multiset size must be positive"));
    }
    if tolerance.is_negative() {
        return Err(argument("tolerance must be non-negative"));
    }
    let k = decoder.dimension();
    for (e, entry) in corpus.iter().enumerate() {
        if entry.message.len() != k || entry.word.len() != decoder.length() {
            return Err(argument(format!("corpus entry {e} has the wrong shape")));
        }
    }
    let weight = ratio(1, multiset_size as u64);
    let sample_rows = |i: usize, rng: &mut dyn RngCore| -> Vec<LocalView> {
        (0..multiset_size)
            .map(|_| {
                let mut view = decoder.outcome(i, decoder.sample_outcome(i, rng)).into_owned();
                view.weight = weight.clone();
                view
            })
            .collect()
    };

    let mut rows: Vec<Vec<LocalView>> = (0..k).map(|i| sample_rows(i, rng)).collect();
    let mut attempts = 1;
    loop {
        // wrong[e][i]: wrong rows for entry e at index i
        let wrong: Vec<Vec<usize>> = corpus
            .par_iter()
            .map(|entry| {
                (0..k)
                    .map(|i| {
                        rows[i]
                            .iter()
                            .map(|v| v.eval(&entry.word).map(|s| s.is_wrong_for(entry.message[i])))
                            .try_fold(0usize, |acc, w| w.map(|w| acc + usize::from(w)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;

        let entry_rates: Vec<BigRational> = wrong
            .iter()
            .map(|per| ratio(per.iter().copied().max().unwrap_or(0) as u64, multiset_size as u64))
            .collect();
        let max_wrong_rate = entry_rates.iter().max().cloned().unwrap_or_else(BigRational::zero);
        let passed = max_wrong_rate <= *tolerance;
        let report = ReductionReport {
            multiset_size,
            validation_corpus_size: corpus.len(),
            max_wrong_rate,
            tolerance: tolerance.clone(),
            passed,
            attempts,
            coin_bits: ceil_log2_inverse(&weight),
            entry_rates,
        };
        if passed {
            return Ok((NonAdaptiveDecoder::new(k, decoder.length(), rows)?, report));
        }
        if attempts > retry_limit {
            return Err(Error::ReductionFailed(Box::new(report)));
        }
        let limit = tolerance * BigInt::from(multiset_size);
        for i in 0..k {
            if wrong.iter().any(|per| BigRational::from(BigInt::from(per[i])) > limit) {
                rows[i] = sample_rows(i, rng);
            }
        }
        attempts += 1;
    }
}

/// Settings for the full flatten → amplify → reduce pipeline.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Explicit target; when absent it comes from [`amplification_target`].
    pub epsilon: Option<BigRational>,
    pub reading: TargetReading,
    /// `t = multiset_factor · n`
    pub multiset_factor: usize,
    /// Tolerance is `tolerance_factor · ε`.
    pub tolerance_factor: BigRational,
    pub retry_limit: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            epsilon: None,
            reading: TargetReading::default(),
            multiset_factor: 4,
            tolerance_factor: ratio(2, 1),
            retry_limit: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub flattened: NonAdaptiveDecoder,
    pub epsilon: BigRational,
    pub amplified: AmplifiedDecoder,
    pub reduced: NonAdaptiveDecoder,
    pub report: ReductionReport,
}

pub fn preprocess(
    decoder: &AdaptiveDecoder,
    corpus: &[CorpusEntry],
    config: &PipelineConfig,
    rng: &mut dyn RngCore,
) -> Result<PipelineOutput> {
    let flattened = flatten_adaptive(decoder)?;
    let epsilon = match &config.epsilon {
        Some(e) => e.clone(),
        None => amplification_target(flattened.locality().max(1), config.reading)?.epsilon,
    };
    let amplified = amplify(&flattened, &epsilon)?;
    let tolerance = &config.tolerance_factor * &epsilon;
    let t = config
        .multiset_factor
        .checked_mul(flattened.length())
        .ok_or_else(|| argument("multiset size overflows"))?;
    let (reduced, report) = reduce_randomness(&amplified, t, corpus, &tolerance, config.retry_limit, rng)?;
    Ok(PipelineOutput { flattened, epsilon, amplified, reduced, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::{hadamard_code, output_distribution, DecisionTree};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn leaf(s: Symbol) -> DecisionTree {
        DecisionTree::Leaf(s)
    }

    #[test]
    fn flatten_depth_two_replays_every_answer() {
        // read 0; on 0 output bit 1, on 1 output bit 2
        let tree = DecisionTree::query(
            0,
            DecisionTree::query(1, leaf(Symbol::Zero), leaf(Symbol::One)),
            DecisionTree::query(2, leaf(Symbol::Zero), leaf(Symbol::Reject)),
        );
        let adaptive = AdaptiveDecoder::new(1, 3, 2, vec![vec![(tree.clone(), ratio(1, 1))]]).unwrap();
        let flat = flatten_adaptive(&adaptive).unwrap();
        let view = &flat.views(0)[0];
        assert_eq!(view.queries, vec![0, 1, 2]);
        for w in 0..8usize {
            let word: Vec<bool> = (0..3).map(|j| w >> j & 1 == 1).collect();
            let expected = match (word[0], word[1], word[2]) {
                (false, b, _) => Symbol::from_bit(b),
                (true, _, false) => Symbol::Zero,
                (true, _, true) => Symbol::Reject,
            };
            assert_eq!(view.eval(&word).unwrap(), expected);
            assert_eq!(tree.run(&word).unwrap(), expected);
        }
    }

    #[test]
    fn flatten_single_query_and_redundant_branch() {
        let (_, had) = hadamard_code(2).unwrap();
        let single = DecisionTree::query(1, leaf(Symbol::Zero), leaf(Symbol::One));
        let adaptive = AdaptiveDecoder::new(1, 2, 1, vec![vec![(single, ratio(1, 1))]]).unwrap();
        let flat = flatten_adaptive(&adaptive).unwrap();
        assert_eq!(flat.views(0)[0].queries, vec![1]);
        assert_eq!(flat.views(0)[0].predicate, Predicate::read_bit(1, 0));

        let redundant = DecisionTree::query(0, leaf(Symbol::One), leaf(Symbol::One));
        let adaptive = AdaptiveDecoder::new(1, 2, 1, vec![vec![(redundant, ratio(1, 1))]]).unwrap();
        let flat = flatten_adaptive(&adaptive).unwrap();
        assert_eq!(flat.views(0)[0].predicate, Predicate::constant(1, Symbol::One));

        let round = flatten_adaptive(&AdaptiveDecoder::from_non_adaptive(&had).unwrap()).unwrap();
        assert_eq!(round, had);
    }

    #[test]
    fn repetition_counts() {
        let (_, had) = hadamard_code(2).unwrap();
        assert_eq!(amplify(&had, &ratio(1, 3)).unwrap().repetitions(), 2);
        assert_eq!(amplify(&had, &ratio(1, 16)).unwrap().repetitions(), 4);
        assert_eq!(amplify(&had, &ratio(1, 17)).unwrap().repetitions(), 5);
        assert!(amplify(&had, &ratio(1, 2)).is_err());
        assert!(amplify(&had, &ratio(0, 1)).is_err());
    }

    #[test]
    fn targets() {
        let t = amplification_target(2, TargetReading::FinalLocality).unwrap();
        assert_eq!((t.epsilon.clone(), t.repetitions, t.final_locality), (ratio(1, 16), 4, 8));
        let t = amplification_target(2, TargetReading::InputLocality).unwrap();
        assert_eq!((t.epsilon.clone(), t.repetitions), (ratio(1, 4), 2));
        let t = amplification_target(1, TargetReading::FinalLocality).unwrap();
        assert_eq!((t.epsilon.clone(), t.repetitions), (ratio(1, 3), 2));
        let t = amplification_target(3, TargetReading::FinalLocality).unwrap();
        // R0 = ⌈log₂ 9⌉ = 4, ℓ' = 12
        assert_eq!(t.epsilon, ratio(1, 144));
    }

    /// A one-bit decoder that reads one of three copies; the third copy is
    /// stored flipped, so on a word with all copies equal it errs with
    /// probability exactly 1/3.
    fn planted_third() -> NonAdaptiveDecoder {
        let views = (0..3)
            .map(|j| {
                let pred = if j == 2 {
                    Predicate::table(vec![Symbol::One, Symbol::Zero])
                } else {
                    Predicate::read_bit(1, 0)
                };
                LocalView::new(vec![j], ratio(1, 3), pred).unwrap()
            })
            .collect();
        NonAdaptiveDecoder::new(1, 3, vec![views]).unwrap()
    }

    #[test]
    fn amplified_error_is_power_of_base_error() {
        let base = planted_third();
        let word = vec![true; 3];
        let dist = output_distribution(&base, &word, 0, 10).unwrap().unwrap();
        assert_eq!(dist.wrong(true), &ratio(1, 3));
        let amp = amplify_times(&base, 4).unwrap();
        let exact = output_distribution(&amp, &word, 0, 1000).unwrap().unwrap();
        assert_eq!(exact.wrong(true), &ratio(1, 81));
        assert_eq!(exact, unanimity_distribution(&dist, 4));
        assert_eq!(amp.materialize(100).unwrap().views(0).len(), 81);
        assert!(amp.materialize(80).is_err());
    }

    #[test]
    fn amplified_completeness_on_codewords() {
        let (code, had) = hadamard_code(3).unwrap();
        let amp = amplify_times(&had, 3).unwrap();
        for x in 0..8usize {
            let msg: Vec<bool> = (0..3).map(|i| x >> i & 1 == 1).collect();
            let w = code.encode(&msg).unwrap();
            for (i, &bit) in msg.iter().enumerate() {
                let d = output_distribution(&amp, &w, i, 1 << 12).unwrap().unwrap();
                assert!(d.correct(bit).is_one(), "x={x} i={i}");
            }
        }
    }

    #[test]
    fn deterministic_decoder_reduces_to_copies() {
        let view = LocalView::new(vec![0], ratio(1, 1), Predicate::read_bit(1, 0)).unwrap();
        let dec = NonAdaptiveDecoder::new(1, 1, vec![vec![view]]).unwrap();
        let corpus = vec![CorpusEntry { message: vec![true], word: vec![true] }];
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (reduced, report) = reduce_randomness(&dec, 5, &corpus, &ratio(0, 1), 0, &mut rng).unwrap();
        assert_eq!(reduced.views(0).len(), 5);
        assert!(reduced.views(0).iter().all(|v| v.queries == vec![0] && v.weight == ratio(1, 5)));
        assert!(report.passed);
        assert_eq!(report.coin_bits, 3);
    }

    #[test]
    fn single_row_fails_adversarial_corpus() {
        let (code, had) = hadamard_code(4).unwrap();
        let msg = vec![true, false, true, true];
        let w = code.encode(&msg).unwrap();
        let corpus: Vec<CorpusEntry> = (0..w.len())
            .map(|j| {
                let mut bad = w.clone();
                bad[j] = !bad[j];
                CorpusEntry { message: msg.clone(), word: bad }
            })
            .collect();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        match reduce_randomness(&had, 1, &corpus, &ratio(1, 8), 3, &mut rng) {
            Err(Error::ReductionFailed(report)) => {
                assert!(!report.passed);
                assert_eq!(report.attempts, 4);
                assert!(report.max_wrong_rate.is_one());
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }
}
