//! Relaxed local decoders: adaptive (decision trees) and non-adaptive
//! (predicate over a weighted query set), oracle access, and the built-in
//! codes used for experiments.

mod codes;
mod non_adaptive;
mod predicate;
mod serial;
mod tree;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

pub use codes::{measured_distance, hadamard_code, identity_code, repetition_code, shared_pivot_code, Code, CodeKind, CodeSpec};
pub use non_adaptive::{output_distribution, run_decoder, LocalDecoder, LocalView, NonAdaptiveDecoder, OutputDistribution};
pub use predicate::{Predicate, PredicatePart, MAX_TABLE_ARITY};
pub use serial::{DecoderFile, IndexFile};
pub use tree::{AdaptiveDecoder, DecisionTree};

/// A decoder output: a bit, or the reject symbol ⊥.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Zero,
    One,
    Reject,
}

impl Symbol {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    pub fn bit(self) -> Option<bool> {
        match self {
            Symbol::Zero => Some(false),
            Symbol::One => Some(true),
            Symbol::Reject => None,
        }
    }

    /// `'0'`, `'1'`, or `'-'` for ⊥.
    pub fn as_char(self) -> char {
        match self {
            Symbol::Zero => '0',
            Symbol::One => '1',
            Symbol::Reject => '-',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Symbol::Zero),
            '1' => Some(Symbol::One),
            '-' => Some(Symbol::Reject),
            _ => None,
        }
    }

    /// True when this output is the wrong bit for `truth`.
    pub fn is_wrong_for(self, truth: bool) -> bool {
        self.bit() == Some(!truth)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Reject => f.write_str("⊥"),
            s => write!(f, "{}", s.as_char()),
        }
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_char(self.as_char())
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let c = char::deserialize(d)?;
        Symbol::from_char(c).ok_or_else(|| serde::de::Error::custom(format!("bad symbol {c:?}")))
    }
}

/// Read-by-index access to a word in `{0,1}^n`.
pub trait Oracle {
    fn len(&self) -> usize;

    fn read(&self, j: usize) -> Result<bool>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Oracle for [bool] {
    fn len(&self) -> usize {
        <[bool]>::len(self)
    }

    fn read(&self, j: usize) -> Result<bool> {
        self.get(j)
            .copied()
            .ok_or_else(|| contract(format!("oracle read at {j} outside word of length {}", <[bool]>::len(self))))
    }
}

impl Oracle for Vec<bool> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn read(&self, j: usize) -> Result<bool> {
        self.as_slice().read(j)
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn read(&self, j: usize) -> Result<bool> {
        (**self).read(j)
    }
}

/// Wraps an oracle and records every coordinate read through it.
pub struct CountingOracle<'a> {
    inner: &'a dyn Oracle,
    queried: RefCell<BTreeSet<usize>>,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn Oracle) -> Self {
        CountingOracle { inner, queried: RefCell::new(BTreeSet::new()) }
    }

    pub fn queried(&self) -> Vec<usize> {
        self.queried.borrow().iter().copied().collect()
    }

    pub fn query_count(&self) -> usize {
        self.queried.borrow().len()
    }
}

impl Oracle for CountingOracle<'_> {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn read(&self, j: usize) -> Result<bool> {
        let bit = self.inner.read(j)?;
        self.queried.borrow_mut().insert(j);
        Ok(bit)
    }
}
