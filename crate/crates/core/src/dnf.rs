//! Weighted DNF formulas over cutsets and the Karp–Luby–Madras estimator.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;

use crate::bitset::ComponentSet;
use crate::cutset::CutsetCollection;
use crate::error::{Error, Result};
use crate::exact::union_terms;
use crate::scalar::{lower_median, Real};
use crate::stream::batch_stream;
use crate::system::ReliabilitySystem;

/// A DNF whose clause `j` is "every component of `C_j` is unavailable" and,
/// with exposure, "the exposed component is not in `C_j`".
#[derive(Clone, Debug)]
pub struct DnfInstance<R> {
    clauses: Vec<ComponentSet>,
    exposure: bool,
    p: Vec<R>,
    mu: Vec<R>,
    mu_total: R,
    clause_prob: Vec<R>,
    q_z: R,
}

impl<R: Real> DnfInstance<R> {
    /// `p[i]`, `mu[i]` per component; every clause must be over `p.len()`
    /// components.
    pub fn new(clauses: Vec<ComponentSet>, p: Vec<R>, mu: Vec<R>, exposure: bool) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::Empty("DNF clauses"));
        }
        let m = p.len();
        if mu.len() != m {
            return Err(Error::param("p and mu lengths differ"));
        }
        if let Some(bad) = clauses.iter().find(|c| c.universe() != m || c.is_empty()) {
            return Err(Error::param(format!("clause {bad:?} is empty or over the wrong universe")));
        }
        if p.iter().any(|&x| !(x > R::zero() && x < R::one())) {
            return Err(Error::param("component probabilities must lie in (0, 1)"));
        }
        let mu_total: R = mu.iter().copied().sum();
        let clause_prob: Vec<R> = clauses
            .iter()
            .map(|c| {
                let prob = c.iter().map(|i| p[i]).fold(R::one(), |a, x| a * x);
                if exposure {
                    let share: R = c.iter().map(|i| mu[i]).sum::<R>() / mu_total;
                    prob * (R::one() - share).max(R::zero())
                } else {
                    prob
                }
            })
            .collect();
        let q_z = clause_prob.iter().copied().sum();
        Ok(Self { clauses, exposure, p, mu, mu_total, clause_prob, q_z })
    }

    pub fn clauses(&self) -> &[ComponentSet] {
        &self.clauses
    }

    /// M.
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn components(&self) -> usize {
        self.p.len()
    }

    pub fn has_exposure(&self) -> bool {
        self.exposure
    }

    /// `P_Z(j)` (or `P_X(j)` without exposure).
    pub fn clause_prob(&self) -> &[R] {
        &self.clause_prob
    }

    /// `Σ_j P_Z(j)`.
    pub fn q_z(&self) -> R {
        self.q_z
    }

    pub fn mu_total(&self) -> R {
        self.mu_total
    }

    /// Exact truth probability by inclusion-exclusion (at most 20 clauses).
    pub fn exact_probability(&self) -> Result<R> {
        let weights: Vec<R> = self.p.iter().map(|&p| -p.ln()).collect();
        let (plain, _, exposed) = union_terms(&self.clauses, &weights, &self.mu)?;
        Ok(if self.exposure { exposed } else { plain })
    }
}

/// Clauses `X_j` for every cutset: the truth probability is `P_f`.
pub fn build_pf_dnf<R: Real>(cutsets: &CutsetCollection<R>, sys: &ReliabilitySystem<R>) -> Result<DnfInstance<R>> {
    build(cutsets, sys, false)
}

/// Clauses `Z_j = X_j ∧ Y_j`: the truth probability is `P`.
pub fn build_p_dnf<R: Real>(cutsets: &CutsetCollection<R>, sys: &ReliabilitySystem<R>) -> Result<DnfInstance<R>> {
    build(cutsets, sys, true)
}

fn build<R: Real>(cutsets: &CutsetCollection<R>, sys: &ReliabilitySystem<R>, exposure: bool) -> Result<DnfInstance<R>> {
    let clauses = cutsets.iter().map(|c| c.members.clone()).collect();
    DnfInstance::new(clauses, sys.unavailabilities(), sys.repair_rates(), exposure)
}

/// Truth assignment: which components are unavailable and, with exposure,
/// which single component is exposed.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub unavailable: ComponentSet,
    pub exposed: Option<usize>,
}

/// `N(z)`: number of clauses satisfied by `a`.
pub fn count_satisfied<R: Real>(dnf: &DnfInstance<R>, a: &Assignment) -> usize {
    dnf.clauses
        .iter()
        .filter(|c| {
            c.is_subset_of(&a.unavailable) && !(dnf.exposure && a.exposed.is_some_and(|e| c.contains(e)))
        })
        .count()
}

/// Inputs of one estimator call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorParams {
    /// Target multiplicative error.
    pub xi: f64,
    /// Target error probability.
    pub delta: f64,
    pub seed: u64,
}

impl EstimatorParams {
    pub fn new(xi: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::param(format!("xi = {xi} must be positive")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param(format!("delta = {delta} not in (0, 1)")));
        }
        Ok(Self { xi, delta, seed })
    }

    /// Inner trials per batch, `⌈4(M−1)/ξ²⌉` (1 when `M = 1`).
    pub fn inner_trials(&self, clauses: usize) -> u64 {
        if clauses <= 1 {
            1
        } else {
            (4.0 * (clauses as f64 - 1.0) / (self.xi * self.xi)).ceil() as u64
        }
    }

    /// Batches, `⌈12 ln(1/δ)⌉`.
    pub fn batches(&self) -> u64 {
        batches_for(self.delta)
    }
}

pub(crate) fn batches_for(delta: f64) -> u64 {
    ((12.0 * (1.0 / delta).ln()).ceil() as u64).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Multiplicative,
    Additive,
}

/// An estimate with the guarantee it was sized for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<R> {
    pub value: R,
    pub error_mode: ErrorMode,
    pub epsilon: f64,
    pub delta: f64,
    /// Total trials over all batches (and sub-estimates).
    pub samples: u64,
    pub elapsed: Duration,
    /// Set by Monte Carlo when no sampled state was a failure state.
    pub no_failure_observed: bool,
}

impl<R: Real> Estimate<R> {
    pub fn exact(value: R, elapsed: Duration) -> Self {
        Self {
            value,
            error_mode: ErrorMode::Multiplicative,
            epsilon: 0.0,
            delta: 0.0,
            samples: 0,
            elapsed,
            no_failure_observed: false,
        }
    }
}

/// Precomputed tables for drawing one KLM trial in `O(log M)` on the common
/// path where no component outside the chosen clause is unavailable.
pub struct KlmSampler<'a, R> {
    dnf: &'a DnfInstance<R>,
    words: usize,
    /// clause bitsets, `words` u64 per clause
    clause_bits: Vec<u64>,
    /// selection table over clauses with positive probability
    sel_cum: Vec<f64>,
    sel_clause: Vec<u32>,
    sel_total: f64,
    /// per clause: span into `outside` (non-members, ascending)
    span: Vec<(u32, u32)>,
    outside: Vec<u32>,
    /// per clause: `r + 1` prefix products of `1 - p` over non-members,
    /// stored at offset `span.0 + clause index`
    all_up: Vec<f64>,
    /// per clause: cumulative μ over non-members (same offsets as `outside`)
    mu_cum: Vec<f64>,
    /// per clause: number of clauses whose members are a subset of it
    within: Vec<u32>,
    p: Vec<f64>,
    scratch: Vec<u64>,
}

impl<'a, R: Real> KlmSampler<'a, R> {
    pub fn new(dnf: &'a DnfInstance<R>) -> Result<Self> {
        let m = dnf.components();
        let words = m.div_ceil(64).max(1);
        let mut clause_bits = vec![0u64; dnf.len() * words];
        for (j, c) in dnf.clauses.iter().enumerate() {
            for i in c.iter() {
                clause_bits[j * words + i / 64] |= 1 << (i % 64);
            }
        }
        let mut sel_cum = Vec::new();
        let mut sel_clause = Vec::new();
        let mut total = 0.0;
        for (j, &pz) in dnf.clause_prob.iter().enumerate() {
            let pz = pz.as_f64();
            if pz > 0.0 {
                total += pz;
                sel_cum.push(total);
                sel_clause.push(j as u32);
            }
        }
        if sel_clause.is_empty() {
            return Err(Error::FormulaAlmostSurelyFalse);
        }
        let p: Vec<f64> = dnf.p.iter().map(|x| x.as_f64()).collect();
        let mu: Vec<f64> = dnf.mu.iter().map(|x| x.as_f64()).collect();
        let mut span = Vec::with_capacity(dnf.len());
        let mut outside = Vec::new();
        let mut all_up = Vec::new();
        let mut mu_cum = Vec::new();
        for c in &dnf.clauses {
            let start = outside.len() as u32;
            let (mut a, mut s) = (1.0, 0.0);
            all_up.push(a);
            for i in (0..m).filter(|&i| !c.contains(i)) {
                outside.push(i as u32);
                a *= 1.0 - p[i];
                all_up.push(a);
                s += mu[i];
                mu_cum.push(s);
            }
            span.push((start, outside.len() as u32 - start));
        }
        let within = dnf
            .clauses
            .iter()
            .map(|cj| dnf.clauses.iter().filter(|ci| ci.is_subset_of(cj)).count() as u32)
            .collect();
        Ok(Self {
            dnf,
            words,
            clause_bits,
            sel_cum,
            sel_clause,
            sel_total: total,
            span,
            outside,
            all_up,
            mu_cum,
            within,
            p,
            scratch: vec![0; words],
        })
    }

    /// Draws a clause `j ∝ P_Z(j)` and an assignment satisfying it; returns
    /// `(j, N(z))`.
    #[inline]
    pub fn trial(&mut self, rng: &mut (impl Rng + ?Sized)) -> (usize, usize) {
        let v = rng.random::<f64>() * self.sel_total;
        let k = self.sel_cum.partition_point(|&c| c <= v).min(self.sel_cum.len() - 1);
        let j = self.sel_clause[k] as usize;
        let (start, r) = self.span[j];
        let (start, r) = (start as usize, r as usize);
        let up = &self.all_up[start + j..start + j + r + 1];
        let u = 1.0 - rng.random::<f64>();
        if u <= up[r] {
            // only the members of C_j are unavailable
            return (j, self.within[j] as usize);
        }
        let first = up.partition_point(|&a| a >= u) - 1;
        let w = self.words;
        self.scratch.copy_from_slice(&self.clause_bits[j * w..(j + 1) * w]);
        let outside = &self.outside[start..start + r];
        let i = outside[first] as usize;
        self.scratch[i / 64] |= 1 << (i % 64);
        for &i in &outside[first + 1..] {
            let i = i as usize;
            if rng.random::<f64>() < self.p[i] {
                self.scratch[i / 64] |= 1 << (i % 64);
            }
        }
        let exposed = if self.dnf.exposure {
            let cum = &self.mu_cum[start..start + r];
            let v = rng.random::<f64>() * cum[r - 1];
            let e = cum.partition_point(|&c| c <= v).min(r - 1);
            Some(outside[e] as usize)
        } else {
            None
        };
        let down = &self.scratch;
        let mut n = 0;
        for c in self.clause_bits.chunks_exact(w) {
            let covered = c.iter().zip(down).all(|(a, b)| a & !b == 0);
            let hit = exposed.is_some_and(|e| (c[e / 64] >> (e % 64)) & 1 == 1);
            n += (covered && !hit) as usize;
        }
        debug_assert!(n >= 1);
        (j, n)
    }

    /// Mean of `q_z / N(z)` over `trials` draws.
    pub fn batch_mean(&mut self, trials: u64, rng: &mut (impl Rng + ?Sized)) -> f64 {
        // histogram of N(z) keeps the mean exact regardless of the batch size
        let mut hist = vec![0u64; self.dnf.len() + 1];
        for _ in 0..trials {
            let (_, n) = self.trial(rng);
            hist[n] += 1;
        }
        let inv: f64 = hist.iter().enumerate().skip(1).map(|(n, &h)| h as f64 / n as f64).sum();
        self.dnf.q_z.as_f64() * inv / trials as f64
    }
}

/// `(ξ, δ)`-approximation of the truth probability of `dnf`: median of
/// `⌈12 ln(1/δ)⌉` batch means of `⌈4(M−1)/ξ²⌉` trials each.
pub fn klm_estimate<R: Real>(dnf: &DnfInstance<R>, params: &EstimatorParams) -> Result<Estimate<R>> {
    let started = Instant::now();
    let mut sampler = KlmSampler::new(dnf)?;
    let s = params.inner_trials(dnf.len());
    let t = params.batches();
    let means: Vec<f64> = (0..t)
        .map(|b| {
            let mut rng = batch_stream(params.seed, b);
            sampler.batch_mean(s, &mut rng)
        })
        .collect();
    let value = R::of(lower_median(&means));
    log::debug!("klm: M={} S={s} T={t} q_z={} -> {value}", dnf.len(), dnf.q_z);
    Ok(Estimate {
        value,
        error_mode: ErrorMode::Multiplicative,
        epsilon: params.xi,
        delta: params.delta,
        samples: s * t,
        elapsed: started.elapsed(),
        no_failure_observed: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutset::enumerate_bruteforce;
    use crate::stream::Stream;
    use crate::system::grid_system;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn sets(m: usize, clauses: &[&[usize]]) -> Vec<ComponentSet> {
        clauses.iter().map(|ids| ComponentSet::from_ids(m, ids)).collect()
    }

    fn params(xi: f64) -> EstimatorParams {
        EstimatorParams::new(xi, 0.05, 11).unwrap()
    }

    #[test]
    fn single_clause_is_exact() {
        let dnf = DnfInstance::new(sets(1, &[&[1]]), vec![0.3f64], vec![1.0], false).unwrap();
        assert!((dnf.q_z() - 0.3).abs() < 1e-15);
        let e = klm_estimate(&dnf, &params(0.1)).unwrap();
        assert!((e.value - 0.3).abs() < 1e-15);
        assert_eq!(e.samples, params(0.1).batches());
    }

    #[test]
    fn duplicate_clauses_are_exact() {
        let dnf = DnfInstance::new(sets(1, &[&[1], &[1]]), vec![0.3f64], vec![1.0], false).unwrap();
        let e = klm_estimate(&dnf, &params(0.5)).unwrap();
        assert!((e.value - 0.3).abs() < 1e-15);
    }

    #[test]
    fn clause_probabilities() {
        let dnf = DnfInstance::new(sets(2, &[&[1], &[2]]), vec![0.5f64, 0.5], vec![1.0, 1.0], false).unwrap();
        assert!((dnf.q_z() - 1.0).abs() < 1e-15);
        let exp = DnfInstance::new(sets(2, &[&[1], &[2]]), vec![0.5f64, 0.5], vec![1.0, 1.0], true).unwrap();
        assert_eq!(exp.clause_prob(), &[0.25, 0.25]);

        let degenerate = DnfInstance::new(sets(2, &[&[1, 2]]), vec![0.5f64, 0.5], vec![1.0, 1.0], true).unwrap();
        assert_eq!(degenerate.clause_prob(), &[0.0]);
        assert!(matches!(klm_estimate(&degenerate, &params(0.1)), Err(Error::FormulaAlmostSurelyFalse)));
    }

    #[test]
    fn grid_formulas() {
        let g = grid_system::<f64>(3, 3, 1e-2, 1.0).unwrap();
        let w0 = -(1e-2f64).ln();
        let small = enumerate_bruteforce(&g, Some(3.0 * w0)).unwrap();
        let pf = build_pf_dnf(&small, &g).unwrap();
        assert_eq!(pf.len(), 20);
        assert!(pf.clause_prob().iter().all(|&x| (x - 1e-4).abs() < 1e-17 || (x - 1e-6).abs() < 1e-19));
        let p = build_p_dnf(&small, &g).unwrap();
        assert!((p.clause_prob()[0] - 1e-4 * (1.0 - 2.0 / 12.0)).abs() < 1e-17);
    }

    #[test]
    fn count_satisfied_examples() {
        let g = grid_system::<f64>(3, 3, 1e-2, 1.0).unwrap();
        let w0 = -(1e-2f64).ln();
        let table = enumerate_bruteforce(&g, Some(3.0 * w0)).unwrap();
        let dnf = build_p_dnf(&table, &g).unwrap();
        let a = Assignment { unavailable: ComponentSet::from_ids(12, &[1, 3]), exposed: Some(4) };
        assert_eq!(count_satisfied(&dnf, &a), 1);
        let all = Assignment { unavailable: ComponentSet::full(12), exposed: None };
        let plain = build_pf_dnf(&table, &g).unwrap();
        assert_eq!(count_satisfied(&plain, &all), 20);
        let none = Assignment { unavailable: ComponentSet::empty(12), exposed: None };
        assert_eq!(count_satisfied(&plain, &none), 0);
    }

    #[test]
    fn sizes() {
        let p = EstimatorParams::new(0.1, 0.01, 0).unwrap();
        assert_eq!(p.inner_trials(1), 1);
        assert_eq!(p.inner_trials(5), 1600);
        assert_eq!(p.batches(), 56);
        assert!(EstimatorParams::new(0.0, 0.1, 0).is_err());
        assert!(EstimatorParams::new(0.1, 1.0, 0).is_err());
    }

    fn random_instance(
        m: usize,
        raw: &[Vec<usize>],
        p: &[f64],
        mu: &[f64],
        exposure: bool,
    ) -> Option<DnfInstance<f64>> {
        let clauses: Vec<ComponentSet> = raw
            .iter()
            .map(|c| ComponentSet::from_indices(m, c.iter().map(|&i| i % m)))
            .collect();
        let d = DnfInstance::new(clauses, p[..m].to_vec(), mu[..m].to_vec(), exposure).ok()?;
        d.clause_prob().iter().any(|&x| x > 0.0).then_some(d)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn trial_is_unbiased_and_bounded(
            m in 2usize..7,
            raw in proptest::collection::vec(proptest::collection::vec(0usize..7, 1..4), 1..6),
            p in proptest::collection::vec(0.05f64..0.6, 7),
            mu in proptest::collection::vec(0.5f64..3.0, 7),
            exposure in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let Some(dnf) = random_instance(m, &raw, &p, &mu, exposure) else { return Ok(()) };
            let exact = dnf.exact_probability().unwrap();
            let mut sampler = KlmSampler::new(&dnf).unwrap();
            let mut rng = Stream::seed_from_u64(seed);
            let n = 100_000;
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..n {
                let (_, k) = sampler.trial(&mut rng);
                prop_assert!(k >= 1 && k <= dnf.len());
                let pi = dnf.q_z() / k as f64;
                sum += pi;
                sq += pi * pi;
            }
            let mean = sum / n as f64;
            let se = ((sq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
            prop_assert!((mean - exact).abs() <= 3.5 * se + 1e-12, "mean {mean} exact {exact} se {se}");
        }

        #[test]
        fn reordering_keeps_exact_value(
            raw in proptest::collection::vec(proptest::collection::vec(0usize..6, 1..4), 2..6),
            p in proptest::collection::vec(0.05f64..0.6, 6),
            mu in proptest::collection::vec(0.5f64..3.0, 6),
        ) {
            let Some(a) = random_instance(6, &raw, &p, &mu, true) else { return Ok(()) };
            let mut rev = raw.clone();
            rev.reverse();
            let b = random_instance(6, &rev, &p, &mu, true).unwrap();
            let (x, y) = (a.exact_probability().unwrap(), b.exact_probability().unwrap());
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300));
        }

        #[test]
        fn exposure_law_sums_to_one(
            members in proptest::collection::vec(any::<bool>(), 6),
            mu in proptest::collection::vec(0.1f64..5.0, 6),
        ) {
            prop_assume!(members.iter().any(|&b| !b));
            let total: f64 = mu.iter().sum();
            let inside: f64 = mu.iter().zip(&members).filter(|(_, &b)| b).map(|(m, _)| m).sum();
            let s: f64 = mu.iter().zip(&members).filter(|(_, &b)| !b).map(|(m, _)| m / (total - inside)).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
