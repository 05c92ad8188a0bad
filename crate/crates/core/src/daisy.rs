//! Daisy extraction: the level-by-level kernel construction, heavy-level
//! selection, and plucking a simple daisy out of a t-daisy.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{argument, contract, Result};
use crate::radical::Radical;
use crate::set_system::{DaisyCertificate, ElementIndex, SetIndex, SetSystem, WeightedSetSystem};

/// One level `i` of the daisy sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaisyLevel {
    /// `i` in `1..=ℓ`.
    pub level: usize,
    pub members: Vec<SetIndex>,
    /// Elements whose degree in the residual collection exceeds `threshold`.
    pub kernel: Vec<ElementIndex>,
    /// `c · n^(i/ℓ)`
    pub threshold: Radical,
    /// `c · n^(max(1, i-1)/ℓ)`
    pub degree_bound: Radical,
}

impl DaisyLevel {
    pub fn certificate(&self) -> DaisyCertificate {
        DaisyCertificate {
            members: self.members.clone(),
            kernel: self.kernel.clone(),
            petal_bound: self.level,
            degree_bound: self.degree_bound.clone(),
        }
    }
}

/// `|T| / n`, the scale the construction assumes when `|T| = c·n`.
pub fn default_scale(system: &SetSystem) -> BigRational {
    BigRational::new(BigInt::from(system.len()), BigInt::from(system.universe_size()))
}

/// Runs the daisy-sequence construction on `system`.
///
/// Starting from the full collection, level `i` takes as kernel every element
/// whose residual degree is strictly above `c·n^(i/ℓ)`, collects the residual
/// sets with at most `i` elements outside that kernel, and removes them. The
/// member lists of the `ℓ` levels partition the input.
pub fn build_daisy_sequence(
    system: &SetSystem,
    locality: usize,
    scale: &BigRational,
) -> Result<Vec<DaisyLevel>> {
    if locality == 0 {
        return Err(argument("locality must be at least 1"));
    }
    if !scale.is_positive() {
        return Err(argument(format!("scale must be positive, got {scale}")));
    }
    if let Some((idx, set)) = system.sets().iter().enumerate().find(|(_, s)| s.len() > locality) {
        return Err(argument(format!(
            "set {idx} has {} elements, more than locality {locality}",
            set.len()
        )));
    }
    let root = u32::try_from(locality).map_err(|_| argument("locality too large"))?;
    let n = system.universe_size() as u64;

    let mut residual: Vec<SetIndex> = system.all_indices();
    let mut levels = Vec::with_capacity(locality);
    let mut in_kernel = vec![false; system.universe_size()];

    for i in 1..=locality {
        let threshold = Radical::new(scale.clone(), n, i as u32, root)?;
        let degree_bound = Radical::new(scale.clone(), n, i.saturating_sub(1).max(1) as u32, root)?;
        let cutoff = threshold.smallest_exceeding();

        let degrees = system.degrees_unchecked(residual.iter().copied());
        in_kernel.iter_mut().for_each(|k| *k = false);
        let mut kernel = Vec::new();
        for (u, &d) in degrees.iter().enumerate() {
            if d as u64 >= cutoff {
                in_kernel[u] = true;
                kernel.push(u);
            }
        }

        let (members, rest): (Vec<SetIndex>, Vec<SetIndex>) = residual.into_iter().partition(|&idx| {
            system.set(idx).iter().filter(|&&u| !in_kernel[u]).count() <= i
        });
        residual = rest;
        levels.push(DaisyLevel { level: i, members, kernel, threshold, degree_bound });
    }
    debug_assert!(residual.is_empty());
    Ok(levels)
}

/// A level of the sequence carrying at least a `1/ℓ` share of the weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeavyDaisy {
    /// The chosen level `s`.
    pub level: usize,
    pub members: Vec<SetIndex>,
    pub kernel: Vec<ElementIndex>,
    pub petal_bound: usize,
    pub degree_bound: Radical,
    #[serde(with = "crate::radical::rational_string")]
    pub density: BigRational,
}

impl HeavyDaisy {
    pub fn certificate(&self) -> DaisyCertificate {
        DaisyCertificate {
            members: self.members.clone(),
            kernel: self.kernel.clone(),
            petal_bound: self.petal_bound,
            degree_bound: self.degree_bound.clone(),
        }
    }
}

/// Picks the first level whose weight under `weighted` is at least `1/ℓ`.
///
/// Such a level exists by pigeonhole whenever `levels` partition the support,
/// which is checked; anything else is a contract error.
pub fn pick_heavy_level(levels: &[DaisyLevel], weighted: &WeightedSetSystem) -> Result<HeavyDaisy> {
    let locality = levels.len();
    if locality == 0 {
        return Err(contract("empty daisy sequence"));
    }
    let support = weighted.system().len();
    let mut seen = vec![false; support];
    for level in levels {
        for &idx in &level.members {
            if idx >= support || std::mem::replace(&mut seen[idx], true) {
                return Err(contract(format!(
                    "levels do not partition the support: set {idx} is out of range or repeated"
                )));
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(contract(format!("levels do not cover set {missing}")));
    }

    let share = BigRational::new(BigInt::from(1), BigInt::from(locality));
    for level in levels {
        let density = weighted.weight_of(&level.members)?;
        if density >= share {
            return Ok(HeavyDaisy {
                level: level.level,
                members: level.members.clone(),
                kernel: level.kernel.clone(),
                petal_bound: level.level,
                degree_bound: level.degree_bound.clone(),
                density,
            });
        }
    }
    Err(contract("no level reaches weight 1/ℓ; weights do not sum to one"))
}

/// Greedily extracts a simple daisy (pairwise-disjoint petals) with kernel
/// `kernel` from a valid t-daisy.
///
/// Walks the covered non-kernel elements in ascending order. At each element
/// still covered by a surviving petal, the lexicographically smallest
/// surviving set containing it in its petal is kept, and every surviving set
/// whose petal meets the kept petal is discarded. Sets whose petal is empty
/// are never selected.
pub fn pluck_simple_daisy(
    system: &SetSystem,
    members: &[SetIndex],
    kernel: &[ElementIndex],
    petal_bound: usize,
    degree_bound: &Radical,
) -> Result<Vec<SetIndex>> {
    if petal_bound == 0 {
        return Err(argument("petal bound must be at least 1"));
    }
    let cert = DaisyCertificate {
        members: members.to_vec(),
        kernel: kernel.to_vec(),
        petal_bound,
        degree_bound: degree_bound.clone(),
    };
    let report = system.verify_daisy(&cert)?;
    if !report.is_valid() {
        return Err(contract(format!(
            "input is not a valid daisy: {} degree and {} petal violation(s)",
            report.degree_violations.len(),
            report.petal_violations.len()
        )));
    }

    let n = system.universe_size();
    let mut in_kernel = vec![false; n];
    for &u in kernel {
        in_kernel[u] = true;
    }
    let petals: Vec<Vec<ElementIndex>> = members
        .iter()
        .map(|&m| system.set(m).iter().copied().filter(|&u| !in_kernel[u]).collect())
        .collect();

    // element -> positions (into `members`) whose petal contains it
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, petal) in petals.iter().enumerate() {
        for &u in petal {
            holders[u].push(pos);
        }
    }

    let mut alive: Vec<bool> = petals.iter().map(|p| !p.is_empty()).collect();
    let mut chosen = Vec::new();
    for u in 0..n {
        let pick = holders[u]
            .iter()
            .copied()
            .filter(|&pos| alive[pos])
            .min_by(|&a, &b| {
                system
                    .set(members[a])
                    .cmp(system.set(members[b]))
                    .then(members[a].cmp(&members[b]))
            });
        let Some(pos) = pick else { continue };
        chosen.push(members[pos]);
        for &v in &petals[pos] {
            for &other in &holders[v] {
                alive[other] = false;
            }
        }
    }
    Ok(chosen)
}

/// Whether a plucked simple daisy of `plucked` sets meets the guaranteed size:
/// `|M| − |K|` when `s = 1`, otherwise `(|M| − |K|) / (t·s²)`, where `M` is the
/// union of all members.
pub fn plucked_size_meets_bound(
    covered: usize,
    kernel_size: usize,
    petal_bound: usize,
    degree_bound: &Radical,
    plucked: usize,
) -> bool {
    let Some(target) = covered.checked_sub(kernel_size) else {
        return true;
    };
    if petal_bound <= 1 {
        return plucked >= target;
    }
    let multiplier = (plucked as u64) * (petal_bound as u64).pow(2);
    degree_bound.scaled_cmp(multiplier, target as u64) != std::cmp::Ordering::Less
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radical::ratio;

    fn star() -> SetSystem {
        SetSystem::new(8, (1..8).map(|j| vec![0, j]).collect()).unwrap()
    }

    #[test]
    fn disjoint_pairs_land_in_level_two() {
        let sys = SetSystem::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let levels = build_daisy_sequence(&sys, 2, &ratio(1, 2)).unwrap();
        assert_eq!(levels.len(), 2);
        assert!(levels[0].kernel.is_empty());
        assert!(levels[0].members.is_empty());
        assert!(levels[1].kernel.is_empty());
        assert_eq!(levels[1].members, vec![0, 1]);
        for level in &levels {
            assert!(sys.verify_daisy(&level.certificate()).unwrap().is_valid());
        }

        let weighted = WeightedSetSystem::uniform(sys).unwrap();
        let heavy = pick_heavy_level(&levels, &weighted).unwrap();
        assert_eq!(heavy.level, 2);
        assert_eq!(heavy.density, ratio(1, 1));
    }

    #[test]
    fn star_kernel_is_the_centre() {
        let sys = star();
        let levels = build_daisy_sequence(&sys, 2, &ratio(7, 8)).unwrap();
        assert_eq!(levels[0].kernel, vec![0]);
        assert_eq!(levels[0].members, (0..7).collect::<Vec<_>>());
        assert!(levels[1].members.is_empty());
        // degree oracle: the centre has degree 7 > (7/8)·√8
        assert_eq!(sys.degree(&sys.all_indices(), 0).unwrap(), 7);
        assert!(levels[0].threshold.is_exceeded_by(7));
        assert!(levels[0].threshold.admits(1));
    }

    #[test]
    fn singletons_with_unit_locality() {
        let sys = SetSystem::new(5, vec![vec![0], vec![3], vec![3], vec![4]]).unwrap();
        let levels = build_daisy_sequence(&sys, 1, &ratio(1, 1)).unwrap();
        assert_eq!(levels.len(), 1);
        assert!(levels[0].kernel.is_empty());
        assert_eq!(levels[0].members, vec![0, 1, 2, 3]);
        let heavy = pick_heavy_level(&levels, &WeightedSetSystem::uniform(sys).unwrap()).unwrap();
        assert_eq!((heavy.level, heavy.density), (1, ratio(1, 1)));
    }

    #[test]
    fn oversized_set_is_rejected() {
        let sys = SetSystem::new(4, vec![vec![0, 1, 2]]).unwrap();
        assert!(build_daisy_sequence(&sys, 2, &ratio(1, 1)).is_err());
        assert!(build_daisy_sequence(&sys, 0, &ratio(1, 1)).is_err());
        assert!(build_daisy_sequence(&sys, 3, &ratio(0, 1)).is_err());
    }

    #[test]
    fn heavy_level_prefers_smallest_index() {
        let sys = SetSystem::new(6, vec![vec![0], vec![1, 2], vec![3, 4]]).unwrap();
        let weighted =
            WeightedSetSystem::new(sys, vec![ratio(3, 4), ratio(1, 8), ratio(1, 8)]).unwrap();
        let mk = |level, members: Vec<usize>| DaisyLevel {
            level,
            members,
            kernel: vec![],
            threshold: Radical::integer(1).unwrap(),
            degree_bound: Radical::integer(1).unwrap(),
        };
        let heavy = pick_heavy_level(&[mk(1, vec![0]), mk(2, vec![1, 2])], &weighted).unwrap();
        assert_eq!((heavy.level, heavy.density), (1, ratio(3, 4)));

        let err = pick_heavy_level(&[mk(1, vec![0]), mk(2, vec![1])], &weighted);
        assert!(matches!(err, Err(crate::Error::Contract(_))));
    }

    #[test]
    fn pluck_keeps_disjoint_petals() {
        let sys = SetSystem::new(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let t = Radical::integer(1).unwrap();
        assert_eq!(pluck_simple_daisy(&sys, &[0, 1], &[], 2, &t).unwrap(), vec![0, 1]);
    }

    #[test]
    fn pluck_star_keeps_all_singleton_petals() {
        let sys = star();
        let t = Radical::new(ratio(7, 8), 8, 1, 2).unwrap();
        let members = sys.all_indices();
        let plucked = pluck_simple_daisy(&sys, &members, &[0], 1, &t).unwrap();
        assert_eq!(plucked.len(), 7);
        // c'n = 8 covered elements, kernel of size 1
        assert!(plucked_size_meets_bound(8, 1, 1, &t, plucked.len()));
    }

    /// Largest family with pairwise-disjoint petals, by exhaustive search.
    fn max_disjoint_packing(petals: &[Vec<usize>]) -> usize {
        (0u32..1 << petals.len())
            .filter(|mask| {
                let mut used = std::collections::HashSet::new();
                (0..petals.len())
                    .filter(|b| mask & (1 << b) != 0)
                    .all(|b| petals[b].iter().all(|u| used.insert(*u)))
            })
            .map(|mask| mask.count_ones() as usize)
            .max()
            .unwrap()
    }

    #[test]
    fn pluck_overlapping_pairs() {
        let sys = SetSystem::new(5, vec![vec![0, 1], vec![1, 2], vec![3, 4]]).unwrap();
        let t = Radical::integer(2).unwrap();
        let plucked = pluck_simple_daisy(&sys, &[0, 1, 2], &[], 2, &t).unwrap();
        assert_eq!(plucked, vec![0, 2]);
        assert_eq!(max_disjoint_packing(sys.sets()), 2);
        // (5 - 0) / (2·4) rounds up to 1 ≤ 2
        assert!(plucked_size_meets_bound(5, 0, 2, &t, plucked.len()));
        assert!(!plucked_size_meets_bound(5, 0, 2, &t, 0));
    }

    #[test]
    fn pluck_rejects_invalid_daisy() {
        let sys = SetSystem::new(3, vec![vec![0, 1], vec![0, 2]]).unwrap();
        let t = Radical::integer(1).unwrap();
        assert!(matches!(
            pluck_simple_daisy(&sys, &[0, 1], &[], 2, &t),
            Err(crate::Error::Contract(_))
        ));
        assert!(pluck_simple_daisy(&sys, &[0, 1], &[0], 0, &t).is_err());
    }

    #[test]
    fn empty_petals_are_not_plucked() {
        let sys = SetSystem::new(3, vec![vec![0], vec![0, 1]]).unwrap();
        let t = Radical::integer(1).unwrap();
        assert_eq!(pluck_simple_daisy(&sys, &[0, 1], &[0], 1, &t).unwrap(), vec![1]);
    }
}
