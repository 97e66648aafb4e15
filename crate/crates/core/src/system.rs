//! Reliability systems: nodes, terminals and two-state components with
//! stationary failure and repair rates.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::terminals_connected;
use crate::bitset::ComponentSet;
use crate::scalar::Real;

/// Current network document version.
pub const DOCUMENT_VERSION: u32 = 1;

/// A two-state component (edge) with failure rate `lambda` and repair rate `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct Component<R> {
    /// 1-based id, contiguous in document order.
    pub id: usize,
    /// Node indices (0-based) of the two endpoints.
    pub endpoints: (usize, usize),
    pub lambda: R,
    pub mu: R,
}

impl<R: Real> Component<R> {
    /// Steady-state unavailability `lambda / (lambda + mu)`.
    pub fn p(&self) -> R {
        self.lambda / (self.lambda + self.mu)
    }

    /// `-ln p`.
    pub fn weight(&self) -> R {
        -self.p().ln()
    }

    fn joins(&self, a: usize, b: usize) -> bool {
        self.endpoints == (a, b) || self.endpoints == (b, a)
    }
}

/// A validated k-terminal reliability system.
///
/// Immutable after construction. Parallel components are allowed only on
/// systems built with [`ReliabilitySystem::new`]; [`load_system`] and
/// [`grid_system`] always return a normalized (simple) system.
#[derive(Clone, Debug)]
pub struct ReliabilitySystem<R> {
    name: Option<String>,
    node_names: Vec<String>,
    terminals: Vec<usize>,
    components: Vec<Component<R>>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl<R: Real> ReliabilitySystem<R> {
    /// Validates and builds a system. `components` are `(a, b, lambda, mu)`
    /// with 0-based node indices; parallel components are kept.
    pub fn new(
        node_names: Vec<String>,
        terminals: Vec<usize>,
        components: Vec<(usize, usize, R, R)>,
    ) -> Result<Self> {
        let n = node_names.len();
        let mut seen = HashMap::new();
        for name in &node_names {
            if seen.insert(name.as_str(), ()).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let mut terms = terminals;
        terms.sort_unstable();
        terms.dedup();
        if let Some(&bad) = terms.iter().find(|&&t| t >= n) {
            return Err(Error::param(format!("terminal index {bad} out of range")));
        }
        if terms.len() < 2 {
            return Err(Error::TooFewTerminals(terms.len()));
        }

        let mut comps = Vec::with_capacity(components.len());
        for (idx, (a, b, lambda, mu)) in components.into_iter().enumerate() {
            let edge = idx + 1;
            for v in [a, b] {
                if v >= n {
                    return Err(Error::UnknownNode { edge, node: format!("#{v}") });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(edge));
            }
            check_rate(edge, "lambda", lambda)?;
            check_rate(edge, "mu", mu)?;
            comps.push(Component { id: edge, endpoints: (a, b), lambda, mu });
        }

        let sys = Self::assemble(None, node_names, terms, comps);
        if !terminals_connected(&sys, &ComponentSet::empty(sys.m())) {
            return Err(Error::DisconnectedTerminals);
        }
        let stats = sys.stats_with(R::one());
        if stats.mu_min / stats.lambda_max <= R::of_usize(sys.m().saturating_sub(1)) {
            log::warn!(
                "mu_min/lambda_max = {} does not exceed m-1 = {}; frequency approximation plans may be invalid",
                stats.mu_min / stats.lambda_max,
                sys.m().saturating_sub(1)
            );
        }
        Ok(sys)
    }

    fn assemble(
        name: Option<String>,
        node_names: Vec<String>,
        terminals: Vec<usize>,
        components: Vec<Component<R>>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); node_names.len()];
        for (c, comp) in components.iter().enumerate() {
            let (a, b) = comp.endpoints;
            adjacency[a].push((b, c));
            adjacency[b].push((a, c));
        }
        Self { name, node_names, terminals, components, adjacency }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn n(&self) -> usize {
        self.node_names.len()
    }

    pub fn k(&self) -> usize {
        self.terminals.len()
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn is_all_terminal(&self) -> bool {
        self.k() == self.n()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn components(&self) -> &[Component<R>] {
        &self.components
    }

    /// `(neighbor, component index)` pairs incident to node `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn unavailabilities(&self) -> Vec<R> {
        self.components.iter().map(Component::p).collect()
    }

    pub fn weights(&self) -> Vec<R> {
        self.components.iter().map(Component::weight).collect()
    }

    pub fn repair_rates(&self) -> Vec<R> {
        self.components.iter().map(|c| c.mu).collect()
    }

    pub fn failure_rates(&self) -> Vec<R> {
        self.components.iter().map(|c| c.lambda).collect()
    }

    /// Σ μ_i over all components.
    pub fn mu_total(&self) -> R {
        self.components.iter().map(|c| c.mu).sum()
    }

    pub fn has_parallel_components(&self) -> bool {
        let mut pairs = std::collections::HashSet::new();
        self.components.iter().any(|c| {
            let (a, b) = c.endpoints;
            !pairs.insert((a.min(b), a.max(b)))
        })
    }

    /// Aggregate statistics with `rho` evaluated at an integer `s_star`.
    pub fn stats(&self, s_star: usize) -> Result<SystemStats<R>> {
        if s_star == 0 || s_star > self.m() {
            return Err(Error::param(format!("s_star = {s_star} outside 1..={}", self.m())));
        }
        Ok(self.stats_with(R::of_usize(s_star)))
    }

    /// Aggregate statistics with `rho` evaluated at a real-valued `s_star`
    /// (the all-terminal plan uses a weight-based surrogate).
    pub fn stats_with(&self, s_star: R) -> SystemStats<R> {
        let first = &self.components[0];
        let mut lambda_max = first.lambda;
        let mut mu_min = first.mu;
        let mut w_max = first.weight();
        for c in &self.components[1..] {
            lambda_max = lambda_max.max(c.lambda);
            mu_min = mu_min.min(c.mu);
            w_max = w_max.max(c.weight());
        }
        let lambda: R = self.components.iter().map(|c| c.lambda).sum();
        let mu = self.mu_total();
        let w: R = self.components.iter().map(Component::weight).sum();
        let m = R::of_usize(self.m());
        SystemStats {
            lambda_max,
            mu_min,
            w_max,
            lambda,
            mu,
            w,
            s_star,
            rho: mu_min * s_star - lambda_max * (m - s_star),
        }
    }

    /// Replaces each bundle of parallel components by one equivalent
    /// component. Bundles take the position of their first member.
    pub fn merge_parallel(&self) -> Self {
        let mut bundles: Vec<Vec<usize>> = Vec::new();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, comp) in self.components.iter().enumerate() {
            let (a, b) = comp.endpoints;
            let key = (a.min(b), a.max(b));
            match index.get(&key) {
                Some(&bi) => bundles[bi].push(c),
                None => {
                    index.insert(key, bundles.len());
                    bundles.push(vec![c]);
                }
            }
        }
        if bundles.iter().all(|b| b.len() == 1) {
            return self.clone();
        }
        let components = bundles
            .iter()
            .enumerate()
            .map(|(i, bundle)| {
                let head = &self.components[bundle[0]];
                if bundle.len() == 1 {
                    return Component { id: i + 1, ..head.clone() };
                }
                let p = bundle.iter().map(|&c| self.components[c].p()).fold(R::one(), |acc, x| acc * x);
                let mu: R = bundle.iter().map(|&c| self.components[c].mu).sum();
                let lambda = p * mu / (R::one() - p);
                debug_assert!(bundle.iter().all(|&c| self.components[c].joins(head.endpoints.0, head.endpoints.1)));
                Component { id: i + 1, endpoints: head.endpoints, lambda, mu }
            })
            .collect();
        Self::assemble(self.name.clone(), self.node_names.clone(), self.terminals.clone(), components)
    }

    /// Serializable form carrying `(lambda, mu)` per component.
    pub fn to_document(&self) -> NetworkDocument {
        let key = |v: usize| NodeKey::from_name(&self.node_names[v]);
        NetworkDocument {
            version: DOCUMENT_VERSION,
            name: self.name.clone(),
            nodes: (0..self.n()).map(key).collect(),
            terminals: if self.is_all_terminal() {
                None
            } else {
                Some(self.terminals.iter().map(|&t| key(t)).collect())
            },
            edges: self
                .components
                .iter()
                .map(|c| EdgeSpec {
                    from: key(c.endpoints.0),
                    to: key(c.endpoints.1),
                    lambda: Some(c.lambda.as_f64()),
                    p: None,
                    mu: c.mu.as_f64(),
                })
                .collect(),
        }
    }
}

impl<R: Real> fmt::Display for ReliabilitySystem<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: n={} k={} m={}",
            self.name.as_deref().unwrap_or("system"),
            self.n(),
            self.k(),
            self.m()
        )
    }
}

fn check_rate<R: Real>(edge: usize, which: &str, value: R) -> Result<()> {
    if !(value.is_finite() && value > R::zero()) {
        return Err(Error::NonpositiveRate { edge, detail: format!("{which} = {value}") });
    }
    Ok(())
}

/// Aggregates used by the approximation plans.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemStats<R> {
    pub lambda_max: R,
    pub mu_min: R,
    pub w_max: R,
    /// Σ λ_i
    pub lambda: R,
    /// Σ μ_i
    pub mu: R,
    /// Σ w_i
    pub w: R,
    pub s_star: R,
    /// `mu_min * s_star - lambda_max * (m - s_star)`
    pub rho: R,
}

impl<R: Real> SystemStats<R> {
    /// Returns `rho` when positive, else an invalid-plan error: the flux of
    /// every failure state is only bounded below when `rho > 0`.
    pub fn validate_rho(&self) -> Result<R> {
        if self.rho > R::zero() {
            Ok(self.rho)
        } else {
            Err(Error::InvalidPlan(format!(
                "rho = {} <= 0 (mu_min = {}, lambda_max = {}, s* = {})",
                self.rho, self.mu_min, self.lambda_max, self.s_star
            )))
        }
    }
}

/// Node identifier in a network document: an integer or a string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeKey {
    Int(u64),
    Name(String),
}

impl NodeKey {
    fn from_name(name: &str) -> Self {
        match name.parse::<u64>() {
            Ok(v) if v.to_string() == name => NodeKey::Int(v),
            _ => NodeKey::Name(name.to_owned()),
        }
    }

    fn as_name(&self) -> String {
        match self {
            NodeKey::Int(v) => v.to_string(),
            NodeKey::Name(s) => s.clone(),
        }
    }
}

/// One edge of a network document. Exactly one of `lambda` and `p` is given;
/// with `p`, `lambda = p * mu / (1 - p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: NodeKey,
    pub to: NodeKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub mu: f64,
}

/// Versioned on-disk network description.
///
/// ```json
/// {"version": 1, "nodes": [1, 2], "terminals": [1, 2],
///  "edges": [{"from": 1, "to": 2, "lambda": 1.0, "mu": 9.0}]}
/// ```
/// `terminals` may be omitted for an all-terminal system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nodes: Vec<NodeKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminals: Option<Vec<NodeKey>>,
    pub edges: Vec<EdgeSpec>,
}

impl NetworkDocument {
    /// Builds the raw system (parallel components kept).
    pub fn to_raw_system<R: Real>(&self) -> Result<ReliabilitySystem<R>> {
        if self.version != DOCUMENT_VERSION {
            return Err(Error::UnsupportedVersion(self.version));
        }
        let names: Vec<String> = self.nodes.iter().map(NodeKey::as_name).collect();
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateNode(name.clone()));
            }
        }
        let lookup = |edge: usize, key: &NodeKey| {
            let name = key.as_name();
            index.get(&name).copied().ok_or(Error::UnknownNode { edge, node: name })
        };
        let terminals = match &self.terminals {
            None => (0..names.len()).collect(),
            Some(ts) => ts
                .iter()
                .map(|t| {
                    let name = t.as_name();
                    index
                        .get(&name)
                        .copied()
                        .ok_or_else(|| Error::param(format!("terminal `{name}` is not a node")))
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let mut comps = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            let edge = i + 1;
            let a = lookup(edge, &e.from)?;
            let b = lookup(edge, &e.to)?;
            if !(e.mu.is_finite() && e.mu > 0.0) {
                return Err(Error::NonpositiveRate { edge, detail: format!("mu = {}", e.mu) });
            }
            let lambda = match (e.lambda, e.p) {
                (Some(l), None) => l,
                (None, Some(p)) => {
                    if !(p > 0.0 && p < 1.0) {
                        return Err(Error::InvalidProbability { edge, detail: format!("p = {p} not in (0, 1)") });
                    }
                    p * e.mu / (1.0 - p)
                }
                _ => return Err(Error::Parse(format!("edge {edge}: give exactly one of `lambda` and `p`"))),
            };
            comps.push((a, b, R::of(lambda), R::of(e.mu)));
        }
        let sys = ReliabilitySystem::new(names, terminals, comps)?;
        Ok(match &self.name {
            Some(n) => sys.with_name(n.clone()),
            None => sys,
        })
    }
}

/// Parses a network document and returns the validated, normalized system.
pub fn load_system<R: Real>(text: &str) -> Result<ReliabilitySystem<R>> {
    let doc: NetworkDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(doc.to_raw_system::<R>()?.merge_parallel())
}

pub fn load_system_file<R: Real>(path: impl AsRef<Path>) -> Result<ReliabilitySystem<R>> {
    let text = std::fs::read_to_string(path)?;
    load_system(&text)
}

/// `rows x cols` all-terminal grid with uniform unavailability `p` and repair
/// rate `mu`. Nodes are numbered row-major from 1; components are numbered
/// row by row, horizontal edges of a row before the vertical edges below it.
pub fn grid_system<R: Real>(rows: usize, cols: usize, p: f64, mu: f64) -> Result<ReliabilitySystem<R>> {
    if rows < 2 || cols < 2 {
        return Err(Error::param(format!("grid needs rows, cols >= 2 (got {rows}x{cols})")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("p = {p} not in (0, 1)")));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::param(format!("mu = {mu} must be positive")));
    }
    let node = |r: usize, c: usize| r * cols + c;
    let lambda = R::of(p * mu / (1.0 - p));
    let mu = R::of(mu);
    let mut comps = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    for r in 0..rows {
        for c in 0..cols - 1 {
            comps.push((node(r, c), node(r, c + 1), lambda, mu));
        }
        if r + 1 < rows {
            for c in 0..cols {
                comps.push((node(r, c), node(r + 1, c), lambda, mu));
            }
        }
    }
    let names = (1..=rows * cols).map(|i| i.to_string()).collect();
    let sys = ReliabilitySystem::new(names, (0..rows * cols).collect(), comps)?;
    Ok(sys.with_name(format!("grid-{rows}x{cols}")))
}

/// Network document for a grid, with edges given as `(p, mu)`.
pub fn grid_document(rows: usize, cols: usize, p: f64, mu: f64) -> Result<NetworkDocument> {
    let sys = grid_system::<f64>(rows, cols, p, mu)?;
    let mut doc = sys.to_document();
    for e in &mut doc.edges {
        e.lambda = None;
        e.p = Some(p);
    }
    Ok(doc)
}
