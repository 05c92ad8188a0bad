use serde::{Deserialize, Serialize};

use super::{LocalDecoder, LocalView, NonAdaptiveDecoder, Predicate, Symbol};
use crate::error::{argument, Result};
use crate::radical::{format_rational, parse_rational};

/// On-disk decoder layout. Predicates are truth tables written as strings
/// over `0`, `1`, `-` (for ⊥), indexed like [`Predicate::Table`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderFile {
    pub k: usize,
    pub n: usize,
    pub locality: usize,
    pub indices: Vec<IndexFile>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexFile {
    pub sets: Vec<Vec<usize>>,
    pub weights: Vec<String>,
    pub predicates: Vec<String>,
}

impl DecoderFile {
    /// Enumerates every coin outcome of `decoder`; fails if some index has
    /// more than `limit` outcomes.
    pub fn from_decoder<D: LocalDecoder + ?Sized>(decoder: &D, limit: u128) -> Result<Self> {
        let mut indices = Vec::with_capacity(decoder.dimension());
        for i in 0..decoder.dimension() {
            let count = decoder.outcome_count(i);
            if count > limit {
                return Err(argument(format!(
                    "index {i} has {count} coin outcomes, above the export limit {limit}"
                )));
            }
            let mut file = IndexFile { sets: Vec::new(), weights: Vec::new(), predicates: Vec::new() };
            for o in 0..count {
                let view = decoder.outcome(i, o);
                let table = view.predicate.to_table(view.queries.len())?;
                file.sets.push(view.queries.clone());
                file.weights.push(format_rational(&view.weight));
                file.predicates.push(table.iter().map(|s| s.as_char()).collect());
            }
            indices.push(file);
        }
        Ok(DecoderFile {
            k: decoder.dimension(),
            n: decoder.length(),
            locality: decoder.locality(),
            indices,
        })
    }

    pub fn into_decoder(self) -> Result<NonAdaptiveDecoder> {
        let mut views = Vec::with_capacity(self.indices.len());
        for (i, file) in self.indices.into_iter().enumerate() {
            if file.sets.len() != file.weights.len() || file.sets.len() != file.predicates.len() {
                return Err(argument(format!("index {i}: sets, weights and predicates differ in length")));
            }
            let mut list = Vec::with_capacity(file.sets.len());
            for ((set, weight), pred) in file.sets.into_iter().zip(file.weights).zip(file.predicates) {
                let table = pred
                    .chars()
                    .map(|c| Symbol::from_char(c).ok_or_else(|| argument(format!("index {i}: bad predicate symbol {c:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                list.push(LocalView::new(set, parse_rational(&weight)?, Predicate::table(table))?);
            }
            views.push(list);
        }
        let decoder = NonAdaptiveDecoder::new(self.k, self.n, views)?;
        if decoder.locality() > self.locality {
            return Err(argument(format!(
                "declared locality {} is below the largest query set {}",
                self.locality,
                decoder.locality()
            )));
        }
        Ok(decoder)
    }
}
