//! The absorbing random walk induced by a seed set.
//!
//! Seeds lose their outgoing edges and become absorbing; every other node
//! is transient and steps to a uniformly random neighbour, where the degree
//! is taken in the original graph. With transient states listed first the
//! transition matrix has the block form `[[Q, R], [0, I]]`. Neither block is
//! materialised: consumers iterate transition rows instead.

use crate::error::{Error, Result};
use crate::graph::{check_seed_reachability, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Transient(usize),
    Absorbing(usize),
}

#[derive(Debug, Clone)]
pub struct AbsorbingChain<'g> {
    graph: &'g Graph,
    seeds: Vec<usize>,
    transient: Vec<usize>,
    state: Vec<State>,
}

impl<'g> AbsorbingChain<'g> {
    /// Makes every node in `seeds` absorbing.
    ///
    /// Fails if the seed set is empty, names an unknown node, or leaves some
    /// node without a path to any seed. Duplicate seeds are ignored. A seed
    /// set covering every node yields a chain without transient states.
    pub fn new(graph: &'g Graph, seeds: &[usize]) -> Result<Self> {
        let unreachable = check_seed_reachability(graph, seeds)?;
        if !unreachable.is_empty() {
            return Err(Error::Unreachable { nodes: unreachable });
        }

        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        seeds.dedup();

        let n = graph.node_count();
        let mut state = vec![State::Transient(usize::MAX); n];
        for (j, &s) in seeds.iter().enumerate() {
            state[s] = State::Absorbing(j);
        }
        let mut transient = Vec::with_capacity(n - seeds.len());
        for (v, slot) in state.iter_mut().enumerate() {
            if let State::Transient(_) = slot {
                *slot = State::Transient(transient.len());
                transient.push(v);
            }
        }

        Ok(AbsorbingChain {
            graph,
            seeds,
            transient,
            state,
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    /// Absorbing nodes in ascending id order.
    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    /// Transient nodes in ascending id order.
    pub fn transient_nodes(&self) -> &[usize] {
        &self.transient
    }

    pub fn transient_count(&self) -> usize {
        self.transient.len()
    }

    pub fn absorbing_count(&self) -> usize {
        self.seeds.len()
    }

    pub fn transient_index(&self, v: usize) -> Option<usize> {
        match self.state.get(v)? {
            State::Transient(i) => Some(*i),
            State::Absorbing(_) => None,
        }
    }

    pub fn absorbing_index(&self, v: usize) -> Option<usize> {
        match self.state.get(v)? {
            State::Absorbing(j) => Some(*j),
            State::Transient(_) => None,
        }
    }

    pub fn is_seed(&self, v: usize) -> bool {
        self.absorbing_index(v).is_some()
    }

    /// Outgoing transitions of transient node `v` as `(neighbour, probability)`.
    pub fn transition_row(
        &self,
        v: usize,
    ) -> Result<impl ExactSizeIterator<Item = (usize, f64)> + 'g> {
        self.graph.check_node(v)?;
        if self.is_seed(v) {
            return Err(Error::NotTransient(v));
        }
        let nbrs = self.graph.neighbors(v);
        let p = 1.0 / nbrs.len() as f64;
        Ok(nbrs.iter().map(move |&w| (w, p)))
    }

    /// `out = Q x` over transient indices.
    pub fn apply_transient(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.transient_count());
        assert_eq!(out.len(), self.transient_count());
        for (i, &v) in self.transient.iter().enumerate() {
            let nbrs = self.graph.neighbors(v);
            let sum: f64 = nbrs
                .iter()
                .filter_map(|&w| self.transient_index(w))
                .map(|k| x[k])
                .sum();
            out[i] = sum / nbrs.len() as f64;
        }
    }
}
