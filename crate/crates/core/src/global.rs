//! Whole-message decoding of a valid codeword from one binomial sample of
//! coordinates, using a heavy daisy of each index's query distribution.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::daisy::{build_daisy_sequence, default_scale, pick_heavy_level, HeavyDaisy};
use crate::decoder::{LocalDecoder, NonAdaptiveDecoder, Oracle, Symbol};
use crate::error::{argument, contract, Result};
use crate::set_system::{ElementIndex, SetIndex, SetSystem};

/// When a kernel assignment's unanimous verdict becomes the output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsensusRule {
    /// Output at the first assignment, in lexicographic order, on which every
    /// fully queried view agrees.
    #[default]
    FirstUnanimous,
    /// Output `b` only if some assignment is unanimous for `b` and none is
    /// unanimous for `¬b`.
    TwoSided,
}

/// The constant `c` of the degree thresholds `c·n^(i/ℓ)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum ScalePolicy {
    /// `max(|T|/n, 1)`.
    #[default]
    AtLeastOne,
    /// `|T|/n`.
    SetsPerElement,
    Fixed(BigRational),
}

impl ScalePolicy {
    pub fn scale_for(&self, system: &SetSystem) -> BigRational {
        match self {
            ScalePolicy::AtLeastOne => default_scale(system).max(BigRational::one()),
            ScalePolicy::SetsPerElement => default_scale(system),
            ScalePolicy::Fixed(c) => c.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GlobalDecoderConfig {
    /// Replaces the canonical `p = n^(-1/(2ℓ²))`.
    pub p_override: Option<f64>,
    /// Largest kernel whose `2^|K|` assignments are enumerated.
    pub kernel_cap: usize,
    /// Runs sampling more coordinates than this are aborted.
    pub query_budget: Option<usize>,
    pub rule: ConsensusRule,
    pub scale: ScalePolicy,
    /// Keep scanning all assignments after the verdict, counting unanimous
    /// ones, without changing the output.
    pub audit: bool,
}

impl Default for GlobalDecoderConfig {
    fn default() -> Self {
        GlobalDecoderConfig {
            p_override: None,
            kernel_cap: 20,
            query_budget: None,
            rule: ConsensusRule::default(),
            scale: ScalePolicy::default(),
            audit: false,
        }
    }
}

/// `n^(-1/(2ℓ²))`.
pub fn canonical_p(length: usize, locality: usize) -> f64 {
    let l = locality.max(1) as f64;
    (length as f64).powf(-1.0 / (2.0 * l * l))
}

/// Includes each of `0..n` independently with probability `p`.
pub fn sample_coordinates(n: usize, p: f64, rng: &mut dyn RngCore) -> Result<Vec<ElementIndex>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(argument(format!("sampling probability {p} outside [0, 1]")));
    }
    Ok((0..n).filter(|_| rng.gen_bool(p)).collect())
}

/// One binomial sample `Q` with membership lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    pub p: f64,
    pub queried: Vec<ElementIndex>,
    pub query_budget: Option<usize>,
    mask: Vec<bool>,
}

impl SamplePlan {
    pub fn new(n: usize, p: f64, queried: Vec<ElementIndex>, query_budget: Option<usize>) -> Result<Self> {
        let mut mask = vec![false; n];
        for &j in &queried {
            if j >= n || std::mem::replace(&mut mask[j], true) {
                return Err(argument(format!("sampled coordinate {j} out of range or repeated")));
            }
        }
        let mut queried = queried;
        queried.sort_unstable();
        Ok(SamplePlan { p, queried, query_budget, mask })
    }

    pub fn draw(n: usize, p: f64, query_budget: Option<usize>, rng: &mut dyn RngCore) -> Result<Self> {
        let queried = sample_coordinates(n, p, rng)?;
        SamplePlan::new(n, p, queried, query_budget)
    }

    pub fn contains(&self, j: ElementIndex) -> bool {
        self.mask.get(j).copied().unwrap_or(false)
    }

    pub fn aborted(&self) -> bool {
        self.query_budget.is_some_and(|b| self.queried.len() > b)
    }
}

/// A word that may only be read on the sampled coordinates.
struct Restricted<'a> {
    word: &'a [bool],
    plan: &'a SamplePlan,
}

impl Oracle for Restricted<'_> {
    fn len(&self) -> usize {
        self.word.len()
    }

    fn read(&self, j: usize) -> Result<bool> {
        if !self.plan.contains(j) {
            return Err(contract(format!("coordinate {j} read outside the sample")));
        }
        self.word.read(j)
    }
}

/// The heavy daisy of one index, with each member's petal.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexDecodePackage {
    pub index: usize,
    pub daisy: HeavyDaisy,
    /// `petals[p]` is member `daisy.members[p]` minus the kernel.
    pub petals: Vec<Vec<ElementIndex>>,
}

impl IndexDecodePackage {
    pub fn build(decoder: &NonAdaptiveDecoder, index: usize, scale: &ScalePolicy) -> Result<Self> {
        let weighted = decoder.query_distribution(index)?;
        let system = weighted.system();
        let levels = build_daisy_sequence(system, decoder.locality(), &scale.scale_for(system))?;
        let daisy = pick_heavy_level(&levels, &weighted)?;
        if !system.verify_daisy(&daisy.certificate())?.is_valid() {
            return Err(contract(format!("heavy daisy of index {index} fails verification")));
        }
        let petals = daisy
            .members
            .iter()
            .map(|&m| {
                system
                    .set(m)
                    .iter()
                    .copied()
                    .filter(|u| daisy.kernel.binary_search(u).is_err())
                    .collect()
            })
            .collect();
        Ok(IndexDecodePackage { index, daisy, petals })
    }

    pub fn kernel(&self) -> &[ElementIndex] {
        &self.daisy.kernel
    }
}

/// Positions (into `daisy.members`) of members whose petal is nonempty and
/// lies inside the sample.
pub fn fully_queried_petals(pkg: &IndexDecodePackage, plan: &SamplePlan) -> Vec<usize> {
    pkg.petals
        .iter()
        .enumerate()
        .filter(|(_, petal)| !petal.is_empty() && petal.iter().all(|&j| plan.contains(j)))
        .map(|(pos, _)| pos)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexResult {
    Decoded(bool),
    NoConsensus,
    KernelTooLarge,
    Aborted,
}

impl IndexResult {
    pub fn bit(self) -> Option<bool> {
        match self {
            IndexResult::Decoded(b) => Some(b),
            _ => None,
        }
    }

    /// `ok`, `wrong`, `no-consensus`, `kernel-too-large` or `aborted`.
    pub fn code(self, truth: bool) -> &'static str {
        match self {
            IndexResult::Decoded(b) if b == truth => "ok",
            IndexResult::Decoded(_) => "wrong",
            IndexResult::NoConsensus => "no-consensus",
            IndexResult::KernelTooLarge => "kernel-too-large",
            IndexResult::Aborted => "aborted",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexDiagnostics {
    pub level: usize,
    pub kernel_size: usize,
    pub fully_queried: usize,
    pub assignments_tried: u64,
    /// Assignments, among those tried, on which every view output 0.
    pub unanimous_zero: u64,
    pub unanimous_one: u64,
}

impl IndexDiagnostics {
    /// Tried assignments unanimous for the wrong bit.
    pub fn unanimous_wrong(&self, truth: bool) -> u64 {
        if truth {
            self.unanimous_zero
        } else {
            self.unanimous_one
        }
    }
}

/// A query of a fully queried view: either a petal coordinate already read,
/// or the `p`-th kernel element.
#[derive(Clone, Copy)]
enum Answer {
    Read(bool),
    Kernel(usize),
}

fn prepared_views(
    pkg: &IndexDecodePackage,
    decoder: &NonAdaptiveDecoder,
    chosen: &[usize],
    oracle: &dyn Oracle,
) -> Result<Vec<(SetIndex, Vec<Answer>)>> {
    let views = decoder.views(pkg.index);
    chosen
        .iter()
        .map(|&pos| {
            let member = pkg.daisy.members[pos];
            let answers = views[member]
                .queries
                .iter()
                .map(|&j| match pkg.daisy.kernel.binary_search(&j) {
                    Ok(p) => Ok(Answer::Kernel(p)),
                    Err(_) => oracle.read(j).map(Answer::Read),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((member, answers))
        })
        .collect()
}

/// Unanimous verdict of the prepared views under kernel assignment `kappa`
/// (kernel position `p` holds bit `|K|-1-p` of `kappa`).
fn verdict(
    decoder: &NonAdaptiveDecoder,
    index: usize,
    kernel_size: usize,
    prepared: &[(SetIndex, Vec<Answer>)],
    kappa: u64,
    scratch: &mut Vec<bool>,
) -> Option<bool> {
    let views = decoder.views(index);
    let mut agreed = None;
    for (member, answers) in prepared {
        scratch.clear();
        scratch.extend(answers.iter().map(|a| match *a {
            Answer::Read(b) => b,
            Answer::Kernel(p) => kappa >> (kernel_size - 1 - p) & 1 == 1,
        }));
        let bit = views[*member].predicate.eval(scratch).bit()?;
        match agreed {
            None => agreed = Some(bit),
            Some(prev) if prev != bit => return None,
            Some(_) => {}
        }
    }
    agreed
}

/// Runs the kernel-assignment enumeration for one index against a word that
/// may only be read on the sample.
pub fn decode_index(
    pkg: &IndexDecodePackage,
    decoder: &NonAdaptiveDecoder,
    word: &[bool],
    plan: &SamplePlan,
    config: &GlobalDecoderConfig,
) -> Result<(IndexResult, IndexDiagnostics)> {
    let kernel_size = pkg.daisy.kernel.len();
    let mut diag = IndexDiagnostics { level: pkg.daisy.level, kernel_size, ..Default::default() };
    if kernel_size > config.kernel_cap || kernel_size >= 64 {
        return Ok((IndexResult::KernelTooLarge, diag));
    }
    let chosen = fully_queried_petals(pkg, plan);
    diag.fully_queried = chosen.len();
    if chosen.is_empty() {
        return Ok((IndexResult::NoConsensus, diag));
    }
    let prepared = prepared_views(pkg, decoder, &chosen, &Restricted { word, plan })?;

    let mut first = None;
    let mut scratch = Vec::new();
    for kappa in 0..1u64 << kernel_size {
        diag.assignments_tried += 1;
        match verdict(decoder, pkg.index, kernel_size, &prepared, kappa, &mut scratch) {
            Some(false) => diag.unanimous_zero += 1,
            Some(true) => diag.unanimous_one += 1,
            None => continue,
        }
        if first.is_none() {
            first = Some(diag.unanimous_one > 0);
        }
        if config.rule == ConsensusRule::FirstUnanimous && !config.audit {
            break;
        }
    }
    let result = match config.rule {
        ConsensusRule::FirstUnanimous => first.map_or(IndexResult::NoConsensus, IndexResult::Decoded),
        ConsensusRule::TwoSided => match (diag.unanimous_zero > 0, diag.unanimous_one > 0) {
            (true, false) => IndexResult::Decoded(false),
            (false, true) => IndexResult::Decoded(true),
            _ => IndexResult::NoConsensus,
        },
    };
    Ok((result, diag))
}

/// Outputs of the fully queried views when the kernel carries its true values
/// `word|_K`.
pub fn outputs_under_true_kernel(
    pkg: &IndexDecodePackage,
    decoder: &NonAdaptiveDecoder,
    word: &[bool],
    plan: &SamplePlan,
) -> Result<Vec<Symbol>> {
    let views = decoder.views(pkg.index);
    fully_queried_petals(pkg, plan)
        .into_iter()
        .map(|pos| views[pkg.daisy.members[pos]].eval(&word))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalDecodeOutcome {
    pub results: Vec<IndexResult>,
    /// `|Q|`
    pub queries: usize,
    pub p: f64,
    pub diagnostics: Vec<IndexDiagnostics>,
}

impl GlobalDecodeOutcome {
    /// The decoded message, if every index decoded.
    pub fn message(&self) -> Option<Vec<bool>> {
        self.results.iter().map(|r| r.bit()).collect()
    }

    pub fn success(&self, truth: &[bool]) -> bool {
        self.message().as_deref() == Some(truth)
    }

    pub fn wrong_bits(&self, truth: &[bool]) -> usize {
        self.results
            .iter()
            .zip(truth)
            .filter(|(r, &t)| r.bit() == Some(!t))
            .count()
    }

    /// Assignments unanimous for the wrong bit, summed over indices.
    pub fn unanimous_wrong(&self, truth: &[bool]) -> u64 {
        self.diagnostics.iter().zip(truth).map(|(d, &t)| d.unanimous_wrong(t)).sum()
    }
}

/// A decoder with its per-index heavy daisies computed once.
#[derive(Clone, Debug)]
pub struct GlobalDecoder {
    decoder: NonAdaptiveDecoder,
    packages: Vec<IndexDecodePackage>,
    config: GlobalDecoderConfig,
}

impl GlobalDecoder {
    pub fn prepare(decoder: &NonAdaptiveDecoder, config: GlobalDecoderConfig) -> Result<Self> {
        if let Some(p) = config.p_override {
            if !(0.0..=1.0).contains(&p) {
                return Err(argument(format!("p override {p} outside [0, 1]")));
            }
        }
        let packages = (0..decoder.dimension())
            .into_par_iter()
            .map(|i| IndexDecodePackage::build(decoder, i, &config.scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(GlobalDecoder { decoder: decoder.clone(), packages, config })
    }

    pub fn decoder(&self) -> &NonAdaptiveDecoder {
        &self.decoder
    }

    pub fn packages(&self) -> &[IndexDecodePackage] {
        &self.packages
    }

    pub fn config(&self) -> &GlobalDecoderConfig {
        &self.config
    }

    pub fn p(&self) -> f64 {
        self.config
            .p_override
            .unwrap_or_else(|| canonical_p(self.decoder.length(), self.decoder.locality()))
    }

    pub fn draw_plan(&self, rng: &mut dyn RngCore) -> Result<SamplePlan> {
        SamplePlan::draw(self.decoder.length(), self.p(), self.config.query_budget, rng)
    }

    /// Samples once and decodes every index from that sample.
    pub fn run(&self, word: &[bool], rng: &mut dyn RngCore) -> Result<GlobalDecodeOutcome> {
        let plan = self.draw_plan(rng)?;
        self.run_with_plan(word, &plan)
    }

    pub fn run_with_plan(&self, word: &[bool], plan: &SamplePlan) -> Result<GlobalDecodeOutcome> {
        if word.len() != self.decoder.length() {
            return Err(contract(format!(
                "word has length {}, decoder expects {}",
                word.len(),
                self.decoder.length()
            )));
        }
        let k = self.decoder.dimension();
        if plan.aborted() {
            return Ok(GlobalDecodeOutcome {
                results: vec![IndexResult::Aborted; k],
                queries: plan.queried.len(),
                p: plan.p,
                diagnostics: vec![IndexDiagnostics::default(); k],
            });
        }
        let (results, diagnostics) = self
            .packages
            .par_iter()
            .map(|pkg| decode_index(pkg, &self.decoder, word, plan, &self.config))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(GlobalDecodeOutcome { results, queries: plan.queried.len(), p: plan.p, diagnostics })
    }
}

pub fn run_global_decoder(
    decoder: &NonAdaptiveDecoder,
    word: &[bool],
    rng: &mut dyn RngCore,
    config: GlobalDecoderConfig,
) -> Result<GlobalDecodeOutcome> {
    GlobalDecoder::prepare(decoder, config)?.run(word, rng)
}

/// Expected `|Q|` and its standard deviation for a binomial sample.
pub fn sample_size_moments(n: usize, p: f64) -> (f64, f64) {
    let n = n as f64;
    (n * p, (n * p * (1.0 - p)).sqrt())
}

/// `n^(1 - 1/(2ℓ²))` as an exact exponent, for reference in scaling fits.
pub fn canonical_exponent(locality: usize) -> BigRational {
    let l2 = BigInt::from(2 * locality * locality);
    BigRational::one() - BigRational::new(BigInt::one(), l2)
}
