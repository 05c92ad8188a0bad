//! Counting check that fewer than `k` queries to the identity code cannot
//! recover a uniformly random `k`-bit message with probability above 1/2.

use std::collections::HashSet;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::claims::{ClaimId, ClaimReport, Violation};
use crate::error::{argument, Result};
use crate::radical::ratio;

const MAX_K: usize = 16;

fn bits(x: u32, k: usize) -> Vec<bool> {
    (0..k).map(|i| x >> i & 1 == 1).collect()
}

/// Exact error over all `2^k` messages of the strategy that reads the
/// coordinates `reads` of the identity codeword and outputs `guess(view)`.
pub fn strategy_error(k: usize, reads: &[usize], guess: impl Fn(&[bool]) -> Vec<bool>) -> Result<BigRational> {
    if k > MAX_K || reads.iter().any(|&j| j >= k) {
        return Err(argument(format!("strategy on k = {k} with reads {reads:?}")));
    }
    let mut wrong = 0u64;
    for x in 0..1u32 << k {
        let message = bits(x, k);
        let view: Vec<bool> = reads.iter().map(|&j| message[j]).collect();
        if guess(&view) != message {
            wrong += 1;
        }
    }
    Ok(ratio(wrong, 1 << k))
}

/// Smallest error of any map from views of `reads` to messages: each view is
/// sent to one message consistent with it, so exactly one message per
/// realized view is decoded.
pub fn optimal_error(k: usize, reads: &[usize]) -> Result<BigRational> {
    if k > MAX_K || reads.iter().any(|&j| j >= k) {
        return Err(argument(format!("strategy on k = {k} with reads {reads:?}")));
    }
    let views: HashSet<Vec<bool>> = (0..1u32 << k)
        .map(|x| {
            let message = bits(x, k);
            reads.iter().map(|&j| message[j]).collect()
        })
        .collect();
    Ok(ratio((1u64 << k) - views.len() as u64, 1 << k))
}

/// Checks every query set of size at most `k - 1` against the 1/2 floor.
pub fn wrapup_sanity(k: usize) -> Result<ClaimReport> {
    if k == 0 || k > 10 {
        return Err(argument(format!("wrapup check needs 1 ≤ k ≤ 10, got {k}")));
    }
    let half = ratio(1, 2);
    let mut report = ClaimReport::new(ClaimId::Wrapup);
    for mask in 0u32..1 << k {
        if mask.count_ones() as usize >= k {
            continue;
        }
        let reads: Vec<usize> = (0..k).filter(|&j| mask >> j & 1 == 1).collect();
        let error = optimal_error(k, &reads)?;
        report.instances += 1;
        let slack = (&error - &half) / &half;
        report.note_margin(slack.to_f64().unwrap_or(f64::NAN));
        if error < half {
            report.violations.push(Violation {
                seed: 0,
                stream: format!("wrapup/k={k}"),
                instance: u64::from(mask),
                detail: format!("reading {reads:?} errs on only {error} of messages"),
            });
        }
    }
    Ok(report)
}
