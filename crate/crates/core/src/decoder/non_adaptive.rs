use std::borrow::Cow;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore};

use super::{CountingOracle, Oracle, Predicate, Symbol};
use crate::error::{argument, contract, Result};
use crate::set_system::{exact_sum, SetSystem, WeightedSetSystem};

/// One coin outcome of a non-adaptive decoder: which coordinates it reads,
/// with what probability, and how it rules on the answers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalView {
    /// Sorted, distinct coordinates.
    pub queries: Vec<usize>,
    pub weight: BigRational,
    pub predicate: Predicate,
}

impl LocalView {
    pub fn new(mut queries: Vec<usize>, weight: BigRational, predicate: Predicate) -> Result<Self> {
        queries.sort_unstable();
        if queries.windows(2).any(|w| w[0] == w[1]) {
            return Err(argument("local view repeats a coordinate"));
        }
        if !predicate.accepts_arity(queries.len()) {
            return Err(argument(format!(
                "predicate does not match a view of {} queries",
                queries.len()
            )));
        }
        Ok(LocalView { queries, weight, predicate })
    }

    /// Reads the view's coordinates from `oracle` and applies the predicate.
    pub fn eval(&self, oracle: &dyn Oracle) -> Result<Symbol> {
        let answers = self
            .queries
            .iter()
            .map(|&j| oracle.read(j))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.predicate.eval(&answers))
    }
}

/// Anything that, per message index, draws a local view from a finite
/// distribution of coin outcomes.
pub trait LocalDecoder: Sync {
    /// Message length `k`.
    fn dimension(&self) -> usize;

    /// Block length `n`.
    fn length(&self) -> usize;

    /// Largest query set over all indices and outcomes.
    fn locality(&self) -> usize;

    /// Number of coin outcomes for `index`.
    fn outcome_count(&self, index: usize) -> u128;

    /// The view selected by coin outcome `outcome < outcome_count(index)`,
    /// carrying that outcome's probability.
    fn outcome(&self, index: usize, outcome: u128) -> Cow<'_, LocalView>;

    fn sample_outcome(&self, index: usize, rng: &mut dyn RngCore) -> u128;
}

/// Samples an index proportionally to exact rational weights.
///
/// When the common denominator fits in 64 bits sampling is exact; otherwise
/// it falls back to a floating-point cumulative table.
#[derive(Clone, Debug)]
pub(crate) enum WeightedChoice {
    Exact { cumulative: Vec<u64> },
    Approx { cumulative: Vec<f64> },
}

impl WeightedChoice {
    pub(crate) fn new(weights: &[BigRational]) -> Self {
        let common = weights
            .iter()
            .fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
        let exact: Option<Vec<u64>> = weights
            .iter()
            .scan(0u64, |acc, w| {
                let scaled = (w.numer() * (&common / w.denom())).to_u64()?;
                *acc = acc.checked_add(scaled)?;
                Some(Some(*acc))
            })
            .collect::<Option<Vec<u64>>>()
            .filter(|c| c.len() == weights.len());
        match exact {
            Some(cumulative) => WeightedChoice::Exact { cumulative },
            None => {
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w.to_f64().unwrap_or(0.0);
                        acc
                    })
                    .collect();
                WeightedChoice::Approx { cumulative }
            }
        }
    }

    pub(crate) fn sample(&self, rng: &mut dyn RngCore) -> usize {
        match self {
            WeightedChoice::Exact { cumulative } => {
                let total = *cumulative.last().expect("nonempty distribution");
                let x = rng.gen_range(0..total);
                cumulative.partition_point(|&c| c <= x)
            }
            WeightedChoice::Approx { cumulative } => {
                let total = *cumulative.last().expect("nonempty distribution");
                let x = rng.gen::<f64>() * total;
                cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
            }
        }
    }
}

/// A non-adaptive relaxed decoder given explicitly: for every message index,
/// the full list of local views with their probabilities.
#[derive(Clone, Debug)]
pub struct NonAdaptiveDecoder {
    dimension: usize,
    length: usize,
    locality: usize,
    views: Vec<Vec<LocalView>>,
    samplers: Vec<WeightedChoice>,
}

impl PartialEq for NonAdaptiveDecoder {
    fn eq(&self, other: &Self) -> bool {
        self.dimension == other.dimension && self.length == other.length && self.views == other.views
    }
}

impl NonAdaptiveDecoder {
    pub fn new(dimension: usize, length: usize, views: Vec<Vec<LocalView>>) -> Result<Self> {
        if views.len() != dimension {
            return Err(argument(format!(
                "{} view lists given for dimension {dimension}",
                views.len()
            )));
        }
        for (i, list) in views.iter().enumerate() {
            if list.is_empty() {
                return Err(argument(format!("index {i} has no local views")));
            }
            for view in list {
                if !view.weight.is_positive() {
                    return Err(argument(format!("index {i} has a non-positive view weight")));
                }
                if view.queries.last().is_some_and(|&j| j >= length) {
                    return Err(argument(format!("index {i} queries outside block length {length}")));
                }
                if view.queries.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(argument(format!("index {i} has an unsorted query set")));
                }
                if !view.predicate.accepts_arity(view.queries.len()) {
                    return Err(argument(format!("index {i} has a predicate of the wrong arity")));
                }
            }
            let total = exact_sum(list.iter().map(|v| &v.weight));
            if !total.is_one() {
                return Err(argument(format!("weights of index {i} sum to {total}")));
            }
        }
        let locality = views.iter().flatten().map(|v| v.queries.len()).max().unwrap_or(0);
        let samplers = views
            .iter()
            .map(|list| WeightedChoice::new(&list.iter().map(|v| v.weight.clone()).collect::<Vec<_>>()))
            .collect();
        Ok(NonAdaptiveDecoder { dimension, length, locality, views, samplers })
    }

    pub fn views(&self, index: usize) -> &[LocalView] {
        &self.views[index]
    }

    /// The query distribution `μ_i` as a weighted set system.
    pub fn query_distribution(&self, index: usize) -> Result<WeightedSetSystem> {
        if index >= self.dimension {
            return Err(argument(format!("index {index} out of range")));
        }
        let list = &self.views[index];
        let system = SetSystem::new(self.length, list.iter().map(|v| v.queries.clone()).collect())?;
        WeightedSetSystem::new(system, list.iter().map(|v| v.weight.clone()).collect())
    }
}

impl LocalDecoder for NonAdaptiveDecoder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn length(&self) -> usize {
        self.length
    }

    fn locality(&self) -> usize {
        self.locality
    }

    fn outcome_count(&self, index: usize) -> u128 {
        self.views[index].len() as u128
    }

    fn outcome(&self, index: usize, outcome: u128) -> Cow<'_, LocalView> {
        Cow::Borrowed(&self.views[index][outcome as usize])
    }

    fn sample_outcome(&self, index: usize, rng: &mut dyn RngCore) -> u128 {
        self.samplers[index].sample(rng) as u128
    }
}

/// Draws coins from `rng`, reads the selected view from `oracle`, and returns
/// the decoder's output together with the coordinates actually read.
pub fn run_decoder<D: LocalDecoder + ?Sized>(
    decoder: &D,
    oracle: &dyn Oracle,
    index: usize,
    rng: &mut dyn RngCore,
) -> Result<(Symbol, Vec<usize>)> {
    if index >= decoder.dimension() {
        return Err(argument(format!(
            "index {index} out of range for dimension {}",
            decoder.dimension()
        )));
    }
    if oracle.len() != decoder.length() {
        return Err(contract(format!(
            "oracle has length {}, decoder expects {}",
            oracle.len(),
            decoder.length()
        )));
    }
    let outcome = decoder.sample_outcome(index, rng);
    let view = decoder.outcome(index, outcome);
    let counting = CountingOracle::new(oracle);
    let symbol = view.eval(&counting)?;
    Ok((symbol, counting.queried()))
}

/// Exact output probabilities of one decoder invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputDistribution {
    pub zero: BigRational,
    pub one: BigRational,
    pub reject: BigRational,
}

impl OutputDistribution {
    /// Probability of emitting the bit opposite to `truth`.
    pub fn wrong(&self, truth: bool) -> &BigRational {
        if truth {
            &self.zero
        } else {
            &self.one
        }
    }

    pub fn correct(&self, truth: bool) -> &BigRational {
        if truth {
            &self.one
        } else {
            &self.zero
        }
    }
}

/// Enumerates every coin outcome of `decoder` on `index` and sums the exact
/// output probabilities. Returns `None` when there are more than `limit`
/// outcomes.
pub fn output_distribution<D: LocalDecoder + ?Sized>(
    decoder: &D,
    oracle: &dyn Oracle,
    index: usize,
    limit: u128,
) -> Result<Option<OutputDistribution>> {
    if index >= decoder.dimension() {
        return Err(argument(format!("index {index} out of range")));
    }
    let count = decoder.outcome_count(index);
    if count > limit {
        return Ok(None);
    }
    let mut buckets: [Vec<BigRational>; 3] = Default::default();
    for outcome in 0..count {
        let view = decoder.outcome(index, outcome);
        let slot = match view.eval(oracle)? {
            Symbol::Zero => 0,
            Symbol::One => 1,
            Symbol::Reject => 2,
        };
        buckets[slot].push(view.weight.clone());
    }
    let [zero, one, reject] = buckets.map(|b| {
        if b.is_empty() {
            BigRational::zero()
        } else {
            exact_sum(b.iter())
        }
    });
    Ok(Some(OutputDistribution { zero, one, reject }))
}
