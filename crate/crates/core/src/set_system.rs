//! Weighted collections of subsets of `[n]`, element degrees, and daisy
//! verification.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::radical::{format_rational, parse_rational, Radical};

/// A coordinate in `[n]`.
pub type ElementIndex = usize;

/// Position of a set inside its [`SetSystem`]. Set identity is positional.
pub type SetIndex = usize;

/// An ordered list of nonempty subsets of `[n]`.
///
/// Duplicate sets are allowed and are counted with multiplicity everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetSystem {
    universe: usize,
    sets: Vec<Vec<ElementIndex>>,
}

impl SetSystem {
    /// Elements of each set are sorted; a repeated element or an element
    /// outside `[universe)` is rejected.
    pub fn new(universe: usize, sets: Vec<Vec<ElementIndex>>) -> Result<Self> {
        if universe == 0 {
            return Err(argument("universe size must be positive"));
        }
        let mut sorted = Vec::with_capacity(sets.len());
        for (idx, mut set) in sets.into_iter().enumerate() {
            if set.is_empty() {
                return Err(argument(format!("set {idx} is empty")));
            }
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(argument(format!("set {idx} repeats an element")));
            }
            if let Some(&last) = set.last() {
                if last >= universe {
                    return Err(argument(format!(
                        "set {idx} contains element {last} outside universe of size {universe}"
                    )));
                }
            }
            sorted.push(set);
        }
        Ok(SetSystem { universe, sets: sorted })
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[Vec<ElementIndex>] {
        &self.sets
    }

    pub fn set(&self, index: SetIndex) -> &[ElementIndex] {
        &self.sets[index]
    }

    pub fn all_indices(&self) -> Vec<SetIndex> {
        (0..self.sets.len()).collect()
    }

    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub(crate) fn check_scope(&self, scope: &[SetIndex]) -> Result<()> {
        let mut seen = vec![false; self.sets.len()];
        for &idx in scope {
            if idx >= self.sets.len() {
                return Err(argument(format!(
                    "set index {idx} out of range for system of {} sets",
                    self.sets.len()
                )));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(argument(format!("set index {idx} listed twice in scope")));
            }
        }
        Ok(())
    }

    fn check_element(&self, u: ElementIndex) -> Result<()> {
        if u >= self.universe {
            return Err(argument(format!(
                "element {u} outside universe of size {}",
                self.universe
            )));
        }
        Ok(())
    }

    /// Number of sets in `scope` containing `u`.
    pub fn degree(&self, scope: &[SetIndex], u: ElementIndex) -> Result<usize> {
        self.check_element(u)?;
        self.check_scope(scope)?;
        Ok(scope
            .iter()
            .filter(|&&idx| self.sets[idx].binary_search(&u).is_ok())
            .count())
    }

    /// Degree of every element of the universe with respect to `scope`.
    pub fn degrees(&self, scope: &[SetIndex]) -> Result<Vec<usize>> {
        self.check_scope(scope)?;
        Ok(self.degrees_unchecked(scope.iter().copied()))
    }

    pub(crate) fn degrees_unchecked(&self, scope: impl Iterator<Item = SetIndex>) -> Vec<usize> {
        let mut deg = vec![0usize; self.universe];
        for idx in scope {
            for &u in &self.sets[idx] {
                deg[u] += 1;
            }
        }
        deg
    }

    /// Union of the sets in `scope`, sorted.
    pub fn covered_elements(&self, scope: &[SetIndex]) -> Result<Vec<ElementIndex>> {
        self.check_scope(scope)?;
        let mut mark = vec![false; self.universe];
        for &idx in scope {
            for &u in &self.sets[idx] {
                mark[u] = true;
            }
        }
        Ok(mark
            .iter()
            .enumerate()
            .filter_map(|(u, &m)| m.then_some(u))
            .collect())
    }

    /// Checks `cert` against the daisy definition: every element outside the
    /// kernel lies in at most `degree_bound` petals, and every petal has at
    /// most `petal_bound` elements.
    pub fn verify_daisy(&self, cert: &DaisyCertificate) -> Result<DaisyReport> {
        self.check_scope(&cert.members)?;
        let mut in_kernel = vec![false; self.universe];
        for &u in &cert.kernel {
            self.check_element(u)?;
            in_kernel[u] = true;
        }

        let mut petal_degree = vec![0usize; self.universe];
        let mut report = DaisyReport::default();
        for &member in &cert.members {
            let mut petal_size = 0;
            for &u in &self.sets[member] {
                if !in_kernel[u] {
                    petal_degree[u] += 1;
                    petal_size += 1;
                }
            }
            if petal_size > cert.petal_bound {
                report.petal_violations.push(PetalViolation { member, petal_size });
            }
        }

        let limit = cert.degree_bound.smallest_exceeding();
        for (element, &degree) in petal_degree.iter().enumerate() {
            if degree as u64 >= limit {
                report.degree_violations.push(DegreeViolation { element, degree });
            }
        }
        Ok(report)
    }
}

/// A [`SetSystem`] carrying a probability distribution over its sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedSetSystem {
    system: SetSystem,
    weights: Vec<BigRational>,
}

impl WeightedSetSystem {
    /// Weights must be positive and sum to exactly one.
    pub fn new(system: SetSystem, weights: Vec<BigRational>) -> Result<Self> {
        if weights.len() != system.len() {
            return Err(argument(format!(
                "{} weights given for {} sets",
                weights.len(),
                system.len()
            )));
        }
        if let Some((idx, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_positive()) {
            return Err(argument(format!("weight {idx} is not positive: {w}")));
        }
        let total = exact_sum(weights.iter());
        if !total.is_one() {
            return Err(argument(format!("weights sum to {total}, not 1")));
        }
        Ok(WeightedSetSystem { system, weights })
    }

    pub fn uniform(system: SetSystem) -> Result<Self> {
        if system.is_empty() {
            return Err(argument("cannot put a uniform distribution on zero sets"));
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(system.len()));
        let weights = vec![w; system.len()];
        Ok(WeightedSetSystem { system, weights })
    }

    pub fn system(&self) -> &SetSystem {
        &self.system
    }

    pub fn weights(&self) -> &[BigRational] {
        &self.weights
    }

    /// Exact total weight of the sets in `scope`.
    pub fn weight_of(&self, scope: &[SetIndex]) -> Result<BigRational> {
        self.system.check_scope(scope)?;
        Ok(exact_sum(scope.iter().map(|&idx| &self.weights[idx])))
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SetSystemFile {
            n: self.system.universe,
            sets: self.system.sets.clone(),
            weights: Some(self.weights.iter().map(format_rational).collect()),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Reads the JSON set-system format; absent weights mean uniform.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SetSystemFile = serde_json::from_str(text)?;
        file.into_weighted()
    }
}

/// On-disk set-system layout: `{"n", "sets", "weights"?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SetSystemFile {
    pub n: usize,
    pub sets: Vec<Vec<ElementIndex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<String>>,
}

impl SetSystemFile {
    pub fn into_weighted(self) -> Result<WeightedSetSystem> {
        let system = SetSystem::new(self.n, self.sets)?;
        match self.weights {
            None => WeightedSetSystem::uniform(system),
            Some(ws) => {
                let weights = ws.iter().map(|w| parse_rational(w)).collect::<Result<Vec<_>>>()?;
                WeightedSetSystem::new(system, weights)
            }
        }
    }
}

/// Sums rationals exactly, grouping equal denominators so that uniform-ish
/// weight vectors need only a handful of gcd reductions.
pub fn exact_sum<'a>(values: impl Iterator<Item = &'a BigRational>) -> BigRational {
    let mut by_denom: HashMap<&BigInt, BigInt> = HashMap::new();
    for v in values {
        *by_denom.entry(v.denom()).or_insert_with(BigInt::zero) += v.numer();
    }
    let mut denoms: Vec<_> = by_denom.into_iter().collect();
    denoms.sort_by(|a, b| a.0.cmp(b.0));
    denoms
        .into_iter()
        .fold(BigRational::zero(), |acc, (d, n)| acc + BigRational::new(n, d.clone()))
}

/// A claimed daisy inside a parent [`SetSystem`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaisyCertificate {
    pub members: Vec<SetIndex>,
    pub kernel: Vec<ElementIndex>,
    pub petal_bound: usize,
    pub degree_bound: Radical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeViolation {
    pub element: ElementIndex,
    pub degree: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetalViolation {
    pub member: SetIndex,
    pub petal_size: usize,
}

/// Outcome of [`SetSystem::verify_daisy`]; empty iff the certificate holds.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaisyReport {
    pub degree_violations: Vec<DegreeViolation>,
    pub petal_violations: Vec<PetalViolation>,
}

impl DaisyReport {
    pub fn is_valid(&self) -> bool {
        self.degree_violations.is_empty() && self.petal_violations.is_empty()
    }
}
