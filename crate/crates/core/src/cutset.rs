//! Minimal cutsets: exhaustive enumeration, global minimum cut, and
//! randomized contraction for near-minimum (α-min) cutsets.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::bitset::ComponentSet;
use crate::error::{Error, Result};
use crate::graph::{terminals_connected, Traversal, UnionFind};
use crate::scalar::Real;
use crate::system::ReliabilitySystem;

/// Largest `m` the exhaustive enumerators accept by default.
pub const BRUTE_FORCE_CAP: usize = 25;

/// A minimal cutset and its weight `Σ w_i` and probability `∏ p_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutset<R> {
    pub members: ComponentSet,
    pub weight: R,
    pub prob: R,
}

impl<R: Real> Cutset<R> {
    pub fn new(sys: &ReliabilitySystem<R>, members: ComponentSet) -> Self {
        let comps = sys.components();
        let weight: R = members.iter().map(|c| comps[c].weight()).sum();
        let prob = members.iter().map(|c| comps[c].p()).fold(R::one(), |acc, p| acc * p);
        Self { members, weight, prob }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// 1-based component ids, ascending.
    pub fn ids(&self) -> Vec<usize> {
        self.members.ids()
    }

    /// Σ μ_i over members.
    pub fn mu_sum(&self, sys: &ReliabilitySystem<R>) -> R {
        self.members.iter().map(|c| sys.components()[c].mu).sum()
    }
}

/// Deduplicated minimal cutsets, sorted by weight then by id list.
#[derive(Clone, Debug, PartialEq)]
pub struct CutsetCollection<R> {
    pub cutsets: Vec<Cutset<R>>,
    pub w_star: R,
    pub p_star: R,
    pub s_star: usize,
}

impl<R: Real> CutsetCollection<R> {
    /// Sorts, deduplicates and computes the aggregates.
    pub fn from_cutsets(mut cutsets: Vec<Cutset<R>>) -> Result<Self> {
        if cutsets.is_empty() {
            return Err(Error::Empty("cutset collection"));
        }
        cutsets.sort_by(canonical_order);
        cutsets.dedup_by(|a, b| a.members == b.members);
        let w_star = cutsets[0].weight;
        let s_star = cutsets.iter().map(Cutset::len).min().unwrap_or(0);
        Ok(Self { cutsets, w_star, p_star: (-w_star).exp(), s_star })
    }

    /// N (or N^(α)).
    pub fn count(&self) -> usize {
        self.cutsets.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cutset<R>> {
        self.cutsets.iter()
    }

    /// Cutsets of weight at most `max_weight` (with rounding slack).
    pub fn restricted(&self, max_weight: R) -> Result<Self> {
        let limit = max_weight * (R::one() + R::tie_slack());
        Self::from_cutsets(self.cutsets.iter().filter(|c| c.weight <= limit).cloned().collect())
    }

    /// Writes one JSON object per line: `{"ids": [...], "weight": w, "prob": p}`.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        #[derive(Serialize)]
        struct Line {
            ids: Vec<usize>,
            weight: f64,
            prob: f64,
        }
        for c in &self.cutsets {
            let line = Line { ids: c.ids(), weight: c.weight.as_f64(), prob: c.prob.as_f64() };
            serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn canonical_order<R: Real>(a: &Cutset<R>, b: &Cutset<R>) -> Ordering {
    a.weight
        .partial_cmp(&b.weight)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.members.iter().cmp(b.members.iter()))
}

/// True when the joint unavailability of `members` disconnects some terminals.
pub fn is_cutset<R: Real>(sys: &ReliabilitySystem<R>, members: &ComponentSet) -> bool {
    !terminals_connected(sys, members)
}

/// True when `members` is a cutset and dropping any single member leaves a
/// non-cutset.
pub fn is_minimal<R: Real>(sys: &ReliabilitySystem<R>, members: &ComponentSet) -> bool {
    let mut trav = Traversal::new(sys.n());
    if trav.terminals_connected(sys, |c| members.contains(c)) {
        return false;
    }
    members
        .iter()
        .all(|skip| trav.terminals_connected(sys, |c| c != skip && members.contains(c)))
}

/// All minimal cutsets (of weight at most `max_weight`, when given).
///
/// Subsets are visited in increasing cardinality; any subset containing an
/// already found cutset is skipped, so every cutset admitted is minimal.
pub fn enumerate_bruteforce<R: Real>(
    sys: &ReliabilitySystem<R>,
    max_weight: Option<R>,
) -> Result<CutsetCollection<R>> {
    enumerate_bruteforce_capped(sys, max_weight, BRUTE_FORCE_CAP)
}

pub fn enumerate_bruteforce_capped<R: Real>(
    sys: &ReliabilitySystem<R>,
    max_weight: Option<R>,
    cap: usize,
) -> Result<CutsetCollection<R>> {
    let m = sys.m();
    if m > cap {
        return Err(Error::CapExceeded { what: "brute-force enumeration (m)", size: m, cap });
    }
    let weights = sys.weights();
    let limit = max_weight.map(|w| w * (R::one() + R::tie_slack()));
    let mut search = Search {
        sys,
        weights: &weights,
        limit,
        found: Vec::new(),
        current: ComponentSet::empty(m),
        trav: Traversal::new(sys.n()),
    };
    for size in 1..=m {
        let before = search.found.len();
        search.extend(0, size, R::zero());
        // No cutset of this size means the full set was already covered or
        // the weight limit excludes everything larger.
        if search.found.len() == before && size > 1 && search.exhausted(size) {
            break;
        }
    }
    let cutsets = search.found.into_iter().map(|s| Cutset::new(sys, s)).collect();
    CutsetCollection::from_cutsets(cutsets)
}

struct Search<'a, R> {
    sys: &'a ReliabilitySystem<R>,
    weights: &'a [R],
    limit: Option<R>,
    found: Vec<ComponentSet>,
    current: ComponentSet,
    trav: Traversal,
}

impl<R: Real> Search<'_, R> {
    fn extend(&mut self, start: usize, remaining: usize, weight: R) {
        if remaining == 0 {
            let cur = &self.current;
            if !self.trav.terminals_connected(self.sys, |c| cur.contains(c)) {
                self.found.push(self.current.clone());
            }
            return;
        }
        let m = self.sys.m();
        for i in start..=m - remaining {
            let w = weight + self.weights[i];
            if self.limit.is_some_and(|lim| w > lim) {
                continue;
            }
            self.current.insert(i);
            let dominated = self.found.iter().any(|f| f.is_subset_of(&self.current));
            if !dominated {
                self.extend(i + 1, remaining - 1, w);
            }
            self.current.remove(i);
        }
    }

    /// True when no subset of size `> size` can still be a new minimal cutset
    /// under the weight limit: the `size + 1` lightest components already
    /// exceed it.
    fn exhausted(&self, size: usize) -> bool {
        let Some(limit) = self.limit else {
            return size >= self.sys.m();
        };
        let mut ws = self.weights.to_vec();
        ws.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        ws.iter().take(size + 1).copied().sum::<R>() > limit
    }
}

/// Global minimum-weight cut of an all-terminal system (Stoer–Wagner with
/// edge weights `w_i`).
pub fn min_cut<R: Real>(sys: &ReliabilitySystem<R>) -> Result<Cutset<R>> {
    if !sys.is_all_terminal() {
        return Err(Error::NotAllTerminal);
    }
    let n = sys.n();
    let mut adj = vec![vec![0.0f64; n]; n];
    for c in sys.components() {
        let (a, b) = c.endpoints;
        let w = c.weight().as_f64();
        adj[a][b] += w;
        adj[b][a] += w;
    }
    // groups[v]: original nodes merged into v
    let mut groups: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    while active.len() > 1 {
        let mut key = vec![0.0f64; n];
        let mut added = vec![false; n];
        let mut prev = active[0];
        let mut last = active[0];
        added[last] = true;
        for &v in &active {
            key[v] = adj[last][v];
        }
        for _ in 1..active.len() {
            let next = active
                .iter()
                .copied()
                .filter(|&v| !added[v])
                .fold(None, |acc: Option<usize>, v| match acc {
                    Some(u) if key[u] >= key[v] => Some(u),
                    _ => Some(v),
                })
                .expect("an unadded node remains");
            added[next] = true;
            prev = last;
            last = next;
            for &v in &active {
                if !added[v] {
                    key[v] += adj[next][v];
                }
            }
        }
        let phase_cut = key[last];
        if best.as_ref().is_none_or(|(w, _)| phase_cut < *w) {
            best = Some((phase_cut, groups[last].clone()));
        }
        let moved = std::mem::take(&mut groups[last]);
        groups[prev].extend(moved);
        for &v in &active {
            adj[prev][v] += adj[last][v];
            adj[v][prev] = adj[prev][v];
        }
        adj[prev][prev] = 0.0;
        active.retain(|&v| v != last);
    }
    let (_, side) = best.ok_or(Error::Empty("min cut of a single node"))?;
    let mut in_side = vec![false; n];
    side.iter().for_each(|&v| in_side[v] = true);
    Ok(Cutset::new(sys, crossing(sys, &in_side)))
}

fn crossing<R: Real>(sys: &ReliabilitySystem<R>, in_side: &[bool]) -> ComponentSet {
    ComponentSet::from_indices(
        sys.m(),
        sys.components()
            .iter()
            .enumerate()
            .filter(|(_, c)| in_side[c.endpoints.0] != in_side[c.endpoints.1])
            .map(|(i, _)| i),
    )
}

/// Reusable state for contraction runs on one system.
pub struct Contractor<'a, R> {
    sys: &'a ReliabilitySystem<R>,
    weights: Vec<f64>,
    keys: Vec<(f64, usize)>,
    uf: UnionFind,
    trav: Traversal,
    label: Vec<usize>,
    in_side: Vec<bool>,
}

impl<'a, R: Real> Contractor<'a, R> {
    pub fn new(sys: &'a ReliabilitySystem<R>) -> Result<Self> {
        if !sys.is_all_terminal() {
            return Err(Error::NotAllTerminal);
        }
        let n = sys.n();
        Ok(Self {
            sys,
            weights: sys.weights().into_iter().map(Real::as_f64).collect(),
            keys: Vec::with_capacity(sys.m()),
            uf: UnionFind::new(n),
            trav: Traversal::new(n),
            label: vec![usize::MAX; n],
            in_side: vec![false; n],
        })
    }

    /// One contraction run down to `⌈2α⌉` meta-nodes followed by a uniform
    /// nonempty proper bipartition. Returns `None` when the cut is not a
    /// minimal cutset.
    ///
    /// Contracting a surviving edge with probability proportional to its
    /// weight is the same as processing edges in increasing order of
    /// independent `Exp(w_i)` keys and skipping self-loops, which is what is
    /// done here.
    pub fn run(&mut self, alpha: f64, rng: &mut (impl Rng + ?Sized)) -> Option<ComponentSet> {
        let n = self.sys.n();
        let target = ((2.0 * alpha).ceil() as usize).clamp(2, n);
        self.uf.reset();
        if target < n {
            self.keys.clear();
            for (i, &w) in self.weights.iter().enumerate() {
                let u: f64 = rng.random();
                self.keys.push((-(1.0 - u).ln() / w, i));
            }
            self.keys.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            for &(_, i) in &self.keys {
                let (a, b) = self.sys.components()[i].endpoints;
                if self.uf.union(a, b) && self.uf.sets() == target {
                    break;
                }
            }
        }
        let k = self.uf.sets();
        // label meta-nodes 0..k in order of first appearance
        self.label.iter_mut().for_each(|l| *l = usize::MAX);
        let mut next = 0;
        let mut meta = vec![0usize; n];
        for (v, slot) in meta.iter_mut().enumerate() {
            let r = self.uf.find(v);
            if self.label[r] == usize::MAX {
                self.label[r] = next;
                next += 1;
            }
            *slot = self.label[r];
        }
        debug_assert_eq!(next, k);
        let side = random_bipartition(k, rng);
        for v in 0..n {
            self.in_side[v] = side[meta[v]];
        }
        let sys = self.sys;
        if !self.trav.side_connected(sys, &self.in_side, |_| false) {
            return None;
        }
        self.in_side.iter_mut().for_each(|b| *b = !*b);
        if !self.trav.side_connected(sys, &self.in_side, |_| false) {
            return None;
        }
        Some(crossing(sys, &self.in_side))
    }
}

// Uniform over the 2^(k-1) - 1 nonempty proper bipartitions; meta-node k-1
// is always on the `false` side.
fn random_bipartition(k: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<bool> {
    if k <= 64 {
        let mask = rng.random_range(1..=(u64::MAX >> (65 - k)));
        (0..k).map(|i| i + 1 < k && (mask >> i) & 1 == 1).collect()
    } else {
        loop {
            let side: Vec<bool> = (0..k).map(|i| i + 1 < k && rng.random()).collect();
            if side.iter().any(|&b| b) {
                return side;
            }
        }
    }
}

/// Single contraction run; see [`Contractor::run`].
pub fn contraction_run<R: Real>(
    sys: &ReliabilitySystem<R>,
    alpha: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<Option<Cutset<R>>> {
    if alpha.is_nan() || alpha < 1.0 {
        return Err(Error::param(format!("alpha = {alpha} must be >= 1")));
    }
    Ok(Contractor::new(sys)?.run(alpha, rng).map(|s| Cutset::new(sys, s)))
}

/// Settings for [`enumerate_alpha_min`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RgcConfig {
    /// Confidence exponent: completeness holds with probability `1 - n^-c`.
    pub c: f64,
    /// Maximum number of contraction runs.
    pub budget: u64,
}

impl Default for RgcConfig {
    fn default() -> Self {
        Self { c: 2.0, budget: 10_000_000 }
    }
}

impl RgcConfig {
    /// `⌈n^{2α} · ln(n^{2α+c})⌉`, before applying the budget.
    pub fn required_runs(&self, n: usize, alpha: f64) -> f64 {
        let n = n as f64;
        (n.powf(2.0 * alpha) * (2.0 * alpha + self.c) * n.ln()).ceil()
    }
}

/// Output of [`enumerate_alpha_min`].
#[derive(Clone, Debug)]
pub struct AlphaMinEnumeration<R> {
    pub cutsets: CutsetCollection<R>,
    pub alpha: f64,
    pub runs: u64,
    /// The run count was cut to the budget; the completeness guarantee no
    /// longer holds.
    pub capped: bool,
}

/// All α-min cutsets (with high probability) by repeated contraction runs.
///
/// The collection is seeded with the Stoer–Wagner minimum cut, so `w_star`
/// is exact regardless of which cuts the runs happen to hit.
pub fn enumerate_alpha_min<R: Real>(
    sys: &ReliabilitySystem<R>,
    alpha: f64,
    config: &RgcConfig,
    rng: &mut (impl Rng + ?Sized),
) -> Result<AlphaMinEnumeration<R>> {
    if alpha.is_nan() || alpha < 1.0 {
        return Err(Error::param(format!("alpha = {alpha} must be >= 1")));
    }
    if !(config.c > 0.0) {
        return Err(Error::param(format!("c = {} must be positive", config.c)));
    }
    let best = min_cut(sys)?;
    let limit = best.weight * R::of(alpha) * (R::one() + R::tie_slack());
    let required = config.required_runs(sys.n(), alpha);
    let capped = required > config.budget as f64;
    let runs = if capped { config.budget } else { required as u64 };
    if capped {
        log::warn!(
            "contraction runs capped at {} (required {required:.3e}); completeness guarantee forfeited",
            config.budget
        );
    }
    let mut contractor = Contractor::new(sys)?;
    let mut seen: HashSet<ComponentSet> = HashSet::new();
    let mut found = vec![best.clone()];
    seen.insert(best.members);
    let weights = sys.weights();
    for _ in 0..runs {
        let Some(cut) = contractor.run(alpha, rng) else { continue };
        if seen.contains(&cut) {
            continue;
        }
        let w: R = cut.iter().map(|c| weights[c]).sum();
        if w <= limit {
            seen.insert(cut.clone());
            found.push(Cutset::new(sys, cut));
        }
    }
    Ok(AlphaMinEnumeration { cutsets: CutsetCollection::from_cutsets(found)?, alpha, runs, capped })
}
