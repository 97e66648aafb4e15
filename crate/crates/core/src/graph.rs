//! Connectivity primitives on the component multigraph.

use std::collections::VecDeque;

use crate::bitset::ComponentSet;
use crate::scalar::Real;
use crate::system::ReliabilitySystem;

#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n], sets: n }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        self.rank.iter_mut().for_each(|r| *r = 0);
        self.sets = self.parent.len();
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.sets -= 1;
        true
    }

    pub fn sets(&self) -> usize {
        self.sets
    }
}

/// Reusable buffers for repeated terminal-connectivity checks.
#[derive(Clone, Debug)]
pub struct Traversal {
    seen: Vec<bool>,
    stack: Vec<usize>,
}

impl Traversal {
    pub fn new(n: usize) -> Self {
        Self { seen: vec![false; n], stack: Vec::with_capacity(n) }
    }

    /// True when every terminal is reachable from the first terminal using
    /// only components for which `is_down` is false.
    pub fn terminals_connected<R: Real>(
        &mut self,
        sys: &ReliabilitySystem<R>,
        is_down: impl Fn(usize) -> bool,
    ) -> bool {
        self.seen.iter_mut().for_each(|s| *s = false);
        self.stack.clear();
        let start = sys.terminals()[0];
        self.seen[start] = true;
        self.stack.push(start);
        while let Some(v) = self.stack.pop() {
            for &(u, c) in sys.neighbors(v) {
                if !self.seen[u] && !is_down(c) {
                    self.seen[u] = true;
                    self.stack.push(u);
                }
            }
        }
        sys.terminals().iter().all(|&t| self.seen[t])
    }

    /// Same check restricted to a node subset: true when the nodes with
    /// `in_side[v]` are connected through components that are not down.
    pub fn side_connected<R: Real>(
        &mut self,
        sys: &ReliabilitySystem<R>,
        in_side: &[bool],
        is_down: impl Fn(usize) -> bool,
    ) -> bool {
        let Some(start) = in_side.iter().position(|&b| b) else {
            return true;
        };
        self.seen.iter_mut().for_each(|s| *s = false);
        self.stack.clear();
        self.seen[start] = true;
        self.stack.push(start);
        while let Some(v) = self.stack.pop() {
            for &(u, c) in sys.neighbors(v) {
                if in_side[u] && !self.seen[u] && !is_down(c) {
                    self.seen[u] = true;
                    self.stack.push(u);
                }
            }
        }
        in_side.iter().zip(&self.seen).all(|(&inside, &seen)| !inside || seen)
    }
}

/// True when removing the components in `down` leaves all terminals connected.
pub fn terminals_connected<R: Real>(sys: &ReliabilitySystem<R>, down: &ComponentSet) -> bool {
    Traversal::new(sys.n()).terminals_connected(sys, |c| down.contains(c))
}

/// Minimum number of components whose joint failure separates the terminals,
/// i.e. the minimum cutset cardinality. Computed as the smallest unit-capacity
/// max-flow from the first terminal to any other terminal.
pub fn min_cutset_cardinality<R: Real>(sys: &ReliabilitySystem<R>) -> usize {
    let source = sys.terminals()[0];
    sys.terminals()
        .iter()
        .skip(1)
        .map(|&sink| unit_max_flow(sys, source, sink))
        .min()
        .unwrap_or(0)
}

// Each undirected component becomes a pair of unit arcs. Edmonds-Karp.
fn unit_max_flow<R: Real>(sys: &ReliabilitySystem<R>, source: usize, sink: usize) -> usize {
    let m = sys.m();
    // flow[c] in {-1, 0, 1}: +1 means one unit from endpoints.0 to endpoints.1.
    let mut flow = vec![0i8; m];
    let mut total = 0;
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; sys.n()];
    loop {
        pred.iter_mut().for_each(|p| *p = None);
        let mut queue = VecDeque::from([source]);
        let mut reached = vec![false; sys.n()];
        reached[source] = true;
        while let Some(v) = queue.pop_front() {
            if v == sink {
                break;
            }
            for &(u, c) in sys.neighbors(v) {
                if reached[u] {
                    continue;
                }
                let (a, _) = sys.components()[c].endpoints;
                let forward = a == v;
                let residual = if forward { 1 - flow[c] } else { 1 + flow[c] };
                if residual > 0 {
                    reached[u] = true;
                    pred[u] = Some((v, c));
                    queue.push_back(u);
                }
            }
        }
        if !reached[sink] {
            return total;
        }
        let mut v = sink;
        while let Some((prev, c)) = pred[v] {
            let (a, _) = sys.components()[c].endpoints;
            if a == prev {
                flow[c] += 1;
            } else {
                flow[c] -= 1;
            }
            v = prev;
        }
        total += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::grid_system;

    #[test]
    fn grid_cardinality_is_two() {
        let g = grid_system::<f64>(3, 3, 1e-2, 1.0).unwrap();
        assert_eq!(min_cutset_cardinality(&g), 2);
        let ring = grid_system::<f64>(2, 2, 0.5, 1.0).unwrap();
        assert_eq!(min_cutset_cardinality(&ring), 2);
    }

    #[test]
    fn union_find_counts_sets() {
        let mut uf = UnionFind::new(4);
        assert!(uf.union(0, 1));
        assert!(!uf.union(1, 0));
        assert!(uf.union(2, 3));
        assert_eq!(uf.sets(), 2);
        uf.reset();
        assert_eq!(uf.sets(), 4);
    }
}
