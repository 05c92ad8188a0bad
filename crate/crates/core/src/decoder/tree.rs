use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::RngCore;

use super::non_adaptive::WeightedChoice;
use super::{LocalDecoder, NonAdaptiveDecoder, Oracle, Symbol};
use crate::error::{argument, Result};
use crate::set_system::exact_sum;

/// A binary decision tree over coordinates of the input word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionTree {
    Leaf(Symbol),
    Query {
        coordinate: usize,
        zero: Box<DecisionTree>,
        one: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn query(coordinate: usize, zero: DecisionTree, one: DecisionTree) -> Self {
        DecisionTree::Query { coordinate, zero: Box::new(zero), one: Box::new(one) }
    }

    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf(_) => 0,
            DecisionTree::Query { zero, one, .. } => 1 + zero.depth().max(one.depth()),
        }
    }

    /// Every coordinate labelling an internal node.
    pub fn labels(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut BTreeSet<usize>) {
        if let DecisionTree::Query { coordinate, zero, one } = self {
            out.insert(*coordinate);
            zero.collect_labels(out);
            one.collect_labels(out);
        }
    }

    /// Walks the tree, asking `answer` for each coordinate on the path.
    pub fn walk(&self, mut answer: impl FnMut(usize) -> Result<bool>) -> Result<Symbol> {
        let mut node = self;
        loop {
            match node {
                DecisionTree::Leaf(s) => return Ok(*s),
                DecisionTree::Query { coordinate, zero, one } => {
                    node = if answer(*coordinate)? { one } else { zero };
                }
            }
        }
    }

    pub fn run(&self, oracle: &dyn Oracle) -> Result<Symbol> {
        self.walk(|j| oracle.read(j))
    }

    fn paths_distinct(&self, path: &mut Vec<usize>) -> bool {
        match self {
            DecisionTree::Leaf(_) => true,
            DecisionTree::Query { coordinate, zero, one } => {
                if path.contains(coordinate) {
                    return false;
                }
                path.push(*coordinate);
                let ok = zero.paths_distinct(path) && one.paths_distinct(path);
                path.pop();
                ok
            }
        }
    }

    /// A complete tree querying `queries` in order and ruling by `rule` on
    /// the answers.
    pub fn complete(queries: &[usize], rule: &dyn Fn(&[bool]) -> Symbol) -> Self {
        fn build(queries: &[usize], answers: &mut Vec<bool>, rule: &dyn Fn(&[bool]) -> Symbol) -> DecisionTree {
            match queries.split_first() {
                None => DecisionTree::Leaf(rule(answers)),
                Some((&j, rest)) => {
                    answers.push(false);
                    let zero = build(rest, answers, rule);
                    answers.pop();
                    answers.push(true);
                    let one = build(rest, answers, rule);
                    answers.pop();
                    DecisionTree::query(j, zero, one)
                }
            }
        }
        build(queries, &mut Vec::with_capacity(queries.len()), rule)
    }
}

/// An adaptive relaxed decoder: per index, a distribution over decision trees
/// of depth at most `depth_bound`.
#[derive(Clone, Debug)]
pub struct AdaptiveDecoder {
    dimension: usize,
    length: usize,
    depth_bound: usize,
    trees: Vec<Vec<(DecisionTree, BigRational)>>,
    samplers: Vec<WeightedChoice>,
}

impl AdaptiveDecoder {
    pub fn new(
        dimension: usize,
        length: usize,
        depth_bound: usize,
        trees: Vec<Vec<(DecisionTree, BigRational)>>,
    ) -> Result<Self> {
        if trees.len() != dimension {
            return Err(argument(format!("{} tree lists for dimension {dimension}", trees.len())));
        }
        for (i, list) in trees.iter().enumerate() {
            if list.is_empty() {
                return Err(argument(format!("index {i} has no trees")));
            }
            for (tree, weight) in list {
                if !weight.is_positive() {
                    return Err(argument(format!("index {i} has a non-positive tree weight")));
                }
                if tree.depth() > depth_bound {
                    return Err(argument(format!(
                        "index {i} has a tree of depth {} > {depth_bound}",
                        tree.depth()
                    )));
                }
                if tree.labels().last().is_some_and(|&j| j >= length) {
                    return Err(argument(format!("index {i} queries outside length {length}")));
                }
                if !tree.paths_distinct(&mut Vec::new()) {
                    return Err(argument(format!("index {i} has a path repeating a coordinate")));
                }
            }
            let total = exact_sum(list.iter().map(|(_, w)| w));
            if !total.is_one() {
                return Err(argument(format!("tree weights of index {i} sum to {total}")));
            }
        }
        let samplers = trees
            .iter()
            .map(|list| WeightedChoice::new(&list.iter().map(|(_, w)| w.clone()).collect::<Vec<_>>()))
            .collect();
        Ok(AdaptiveDecoder { dimension, length, depth_bound, trees, samplers })
    }

    /// Re-expresses a non-adaptive decoder as complete trees over each view.
    pub fn from_non_adaptive(decoder: &NonAdaptiveDecoder) -> Result<Self> {
        let trees = (0..decoder.dimension())
            .map(|i| {
                decoder
                    .views(i)
                    .iter()
                    .map(|v| {
                        let rule = |answers: &[bool]| v.predicate.eval(answers);
                        (DecisionTree::complete(&v.queries, &rule), v.weight.clone())
                    })
                    .collect()
            })
            .collect();
        AdaptiveDecoder::new(decoder.dimension(), decoder.length(), decoder.locality(), trees)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn depth_bound(&self) -> usize {
        self.depth_bound
    }

    pub fn trees(&self, index: usize) -> &[(DecisionTree, BigRational)] {
        &self.trees[index]
    }

    pub fn sample_tree(&self, index: usize, rng: &mut dyn RngCore) -> usize {
        self.samplers[index].sample(rng)
    }

    /// Runs the tree chosen by coin outcome `tree` for `index`.
    pub fn run(&self, index: usize, tree: usize, oracle: &dyn Oracle) -> Result<Symbol> {
        let (t, _) = self
            .trees
            .get(index)
            .and_then(|l| l.get(tree))
            .ok_or_else(|| argument(format!("no tree {tree} for index {index}")))?;
        t.run(oracle)
    }
}
