use std::sync::Arc;

use super::Symbol;
use crate::error::{argument, Result};

/// Largest arity for which a predicate is materialized as a truth table.
pub const MAX_TABLE_ARITY: usize = 24;

/// The decision rule `f_{i,I}` applied to the answers of a query set `I`.
///
/// Answers are passed in ascending coordinate order of `I`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    /// Entry `a` is the output when bit `j` of `a` equals the `j`-th answer.
    Table(Arc<[Symbol]>),
    /// Outputs `b` when every part outputs the same bit `b`, otherwise ⊥.
    Unanimous(Vec<PredicatePart>),
}

/// A sub-predicate reading the answers at `positions` of the enclosing view.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicatePart {
    pub positions: Vec<usize>,
    pub predicate: Predicate,
}

impl Predicate {
    pub fn table(entries: Vec<Symbol>) -> Self {
        Predicate::Table(entries.into())
    }

    pub fn constant(arity: usize, symbol: Symbol) -> Self {
        Predicate::table(vec![symbol; 1 << arity])
    }

    /// Outputs the answer at `position` as a bit.
    pub fn read_bit(arity: usize, position: usize) -> Self {
        Predicate::table(
            (0..1usize << arity)
                .map(|a| Symbol::from_bit(a >> position & 1 == 1))
                .collect(),
        )
    }

    pub fn eval(&self, answers: &[bool]) -> Symbol {
        match self {
            Predicate::Table(table) => {
                let idx = answers
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (j, &b)| acc | (usize::from(b) << j));
                table[idx]
            }
            Predicate::Unanimous(parts) => {
                let mut agreed: Option<Symbol> = None;
                let mut scratch = Vec::new();
                for part in parts {
                    scratch.clear();
                    scratch.extend(part.positions.iter().map(|&p| answers[p]));
                    let out = part.predicate.eval(&scratch);
                    if out == Symbol::Reject {
                        return Symbol::Reject;
                    }
                    match agreed {
                        None => agreed = Some(out),
                        Some(prev) if prev != out => return Symbol::Reject,
                        Some(_) => {}
                    }
                }
                agreed.unwrap_or(Symbol::Reject)
            }
        }
    }

    /// Whether the predicate is well formed for `arity` answers.
    pub fn accepts_arity(&self, arity: usize) -> bool {
        match self {
            Predicate::Table(table) => arity <= MAX_TABLE_ARITY && table.len() == 1 << arity,
            Predicate::Unanimous(parts) => {
                !parts.is_empty()
                    && parts.iter().all(|p| {
                        p.positions.iter().all(|&q| q < arity)
                            && p.predicate.accepts_arity(p.positions.len())
                    })
            }
        }
    }

    /// Full truth table over `arity` answers.
    pub fn to_table(&self, arity: usize) -> Result<Vec<Symbol>> {
        if arity > MAX_TABLE_ARITY {
            return Err(argument(format!("arity {arity} too large to tabulate")));
        }
        if let Predicate::Table(t) = self {
            return Ok(t.to_vec());
        }
        let mut answers = vec![false; arity];
        Ok((0..1usize << arity)
            .map(|a| {
                for (j, slot) in answers.iter_mut().enumerate() {
                    *slot = a >> j & 1 == 1;
                }
                self.eval(&answers)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_indexing_uses_low_bit_first() {
        let xor = Predicate::table(vec![Symbol::Zero, Symbol::One, Symbol::One, Symbol::Zero]);
        assert_eq!(xor.eval(&[true, false]), Symbol::One);
        assert_eq!(xor.eval(&[true, true]), Symbol::Zero);
        let second = Predicate::read_bit(2, 1);
        assert_eq!(second.eval(&[false, true]), Symbol::One);
        assert_eq!(second.eval(&[true, false]), Symbol::Zero);
    }

    #[test]
    fn unanimity() {
        let id = Predicate::read_bit(1, 0);
        let both = Predicate::Unanimous(vec![
            PredicatePart { positions: vec![0], predicate: id.clone() },
            PredicatePart { positions: vec![1], predicate: id },
        ]);
        assert!(both.accepts_arity(2));
        assert!(!both.accepts_arity(1));
        assert_eq!(both.eval(&[true, true]), Symbol::One);
        assert_eq!(both.eval(&[false, false]), Symbol::Zero);
        assert_eq!(both.eval(&[true, false]), Symbol::Reject);
        assert_eq!(
            both.to_table(2).unwrap(),
            vec![Symbol::Zero, Symbol::Reject, Symbol::Reject, Symbol::One]
        );
    }
}
