//! Monte Carlo simulation over component states.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::bitset::ComponentSet;
use crate::dnf::{batches_for, ErrorMode, Estimate};
use crate::error::{Error, Result};
use crate::graph::{min_cutset_cardinality, Traversal};
use crate::scalar::{lower_median, Real};
use crate::stream::batch_stream;
use crate::system::ReliabilitySystem;

const LN_8: f64 = 2.079_441_541_679_835_8;

/// Component availability snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub down: ComponentSet,
}

impl SystemState {
    /// `∏_{down} p_i · ∏_{up} (1 − p_i)`.
    pub fn prob<R: Real>(&self, sys: &ReliabilitySystem<R>) -> R {
        sys.components()
            .iter()
            .enumerate()
            .map(|(i, c)| if self.down.contains(i) { c.p() } else { R::one() - c.p() })
            .fold(R::one(), |a, x| a * x)
    }

    /// `Σ_{down} μ_i − Σ_{up} λ_i`.
    pub fn flux<R: Real>(&self, sys: &ReliabilitySystem<R>) -> R {
        sys.components()
            .iter()
            .enumerate()
            .map(|(i, c)| if self.down.contains(i) { c.mu } else { -c.lambda })
            .sum()
    }

    pub fn is_failure<R: Real>(&self, sys: &ReliabilitySystem<R>) -> bool {
        !crate::graph::terminals_connected(sys, &self.down)
    }
}

/// How trials are drawn. Both give the same distribution of outputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum McsSampler {
    /// Each trial draws every component and traverses the graph.
    #[default]
    Naive,
    /// States with fewer unavailable components than the minimum cutset
    /// cardinality cannot be failures. Per batch, the number of remaining
    /// trials is drawn from a binomial law and only those states are drawn,
    /// conditioned on their size, and traversed.
    Skip,
}

/// Raw output of [`mcs_run`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McsRun<R> {
    /// Median over batches of the batch failure fraction.
    pub p_f: R,
    /// Median over batches of the batch mean flux into failure.
    pub f_f: R,
    /// Grand means over all trials and their standard errors.
    pub mean_p_f: f64,
    pub mean_f_f: f64,
    pub se_p_f: f64,
    pub se_f_f: f64,
    pub samples: u64,
    pub failures: u64,
    pub elapsed: Duration,
}

impl<R: Real> McsRun<R> {
    /// `(P_f, F_f)` estimates labelled with the guarantee they were sized for.
    pub fn estimates(&self, mode: ErrorMode, epsilon: f64, delta: f64) -> (Estimate<R>, Estimate<R>) {
        let make = |value| Estimate {
            value,
            error_mode: mode,
            epsilon,
            delta,
            samples: self.samples,
            elapsed: self.elapsed,
            no_failure_observed: self.failures == 0,
        };
        (make(self.p_f), make(self.f_f))
    }
}

/// `T` batches of `S` trials; returns batch-mean medians of the failure
/// indicator and of the flux of failure states.
pub fn mcs_run<R: Real>(
    sys: &ReliabilitySystem<R>,
    s: u64,
    t: u64,
    seed: u64,
    sampler: McsSampler,
) -> Result<McsRun<R>> {
    if s == 0 || t == 0 {
        return Err(Error::param("S and T must be at least 1"));
    }
    let started = Instant::now();
    let mut engine = Engine::new(sys);
    let mut pi_means = Vec::with_capacity(t as usize);
    let mut phi_means = Vec::with_capacity(t as usize);
    let mut tot = Totals::default();
    for b in 0..t {
        let mut rng = batch_stream(seed, b);
        let mut batch = Totals::default();
        match sampler {
            McsSampler::Naive => engine.naive_batch(s, &mut rng, &mut batch),
            McsSampler::Skip => engine.skip_batch(s, &mut rng, &mut batch)?,
        }
        pi_means.push(batch.failures as f64 / s as f64);
        phi_means.push(batch.flux / s as f64);
        tot.merge(&batch);
    }
    let n = (s * t) as f64;
    let se = |sum: f64, sq: f64| {
        let mean = sum / n;
        ((sq / n - mean * mean).max(0.0) / n).sqrt()
    };
    Ok(McsRun {
        p_f: R::of(lower_median(&pi_means)),
        f_f: R::of(lower_median(&phi_means)),
        mean_p_f: tot.failures as f64 / n,
        mean_f_f: tot.flux / n,
        se_p_f: se(tot.failures as f64, tot.failures as f64),
        se_f_f: se(tot.flux, tot.flux_sq),
        samples: s * t,
        failures: tot.failures,
        elapsed: started.elapsed(),
    })
}

#[derive(Default)]
struct Totals {
    failures: u64,
    flux: f64,
    flux_sq: f64,
}

impl Totals {
    fn merge(&mut self, o: &Totals) {
        self.failures += o.failures;
        self.flux += o.flux;
        self.flux_sq += o.flux_sq;
    }
}

struct Engine<'a, R> {
    sys: &'a ReliabilitySystem<R>,
    p: Vec<f64>,
    /// μ_i + λ_i, so that flux = Σ_down (μ_i + λ_i) − λ
    gain: Vec<f64>,
    lambda: f64,
    min_card: usize,
    down: Vec<bool>,
    trav: Traversal,
    /// tail[i][k] = P(exactly k of components i.. are down)
    tail: Vec<Vec<f64>>,
}

impl<'a, R: Real> Engine<'a, R> {
    fn new(sys: &'a ReliabilitySystem<R>) -> Self {
        let p: Vec<f64> = sys.unavailabilities().into_iter().map(Real::as_f64).collect();
        let gain = sys.components().iter().map(|c| (c.mu + c.lambda).as_f64()).collect();
        let lambda = sys.failure_rates().into_iter().map(Real::as_f64).sum();
        Self {
            sys,
            min_card: min_cutset_cardinality(sys).max(1),
            down: vec![false; sys.m()],
            trav: Traversal::new(sys.n()),
            p,
            gain,
            lambda,
            tail: Vec::new(),
        }
    }

    fn score(&mut self, out: &mut Totals) {
        let down = &self.down;
        if !self.trav.terminals_connected(self.sys, |c| down[c]) {
            let flux: f64 = down.iter().zip(&self.gain).filter(|(d, _)| **d).map(|(_, g)| g).sum::<f64>() - self.lambda;
            out.failures += 1;
            out.flux += flux;
            out.flux_sq += flux * flux;
        }
    }

    fn naive_batch(&mut self, s: u64, rng: &mut impl Rng, out: &mut Totals) {
        for _ in 0..s {
            let mut k = 0;
            for (d, &p) in self.down.iter_mut().zip(&self.p) {
                *d = rng.random::<f64>() < p;
                k += *d as usize;
            }
            // fewer unavailable components than any cutset: certainly up
            if k >= self.min_card {
                self.score(out);
            }
        }
    }

    fn prepare_tail(&mut self) {
        if !self.tail.is_empty() {
            return;
        }
        let m = self.p.len();
        self.tail = vec![vec![0.0; m + 2]; m + 1];
        self.tail[m][0] = 1.0;
        for i in (0..m).rev() {
            let p = self.p[i];
            for k in 0..=m - i {
                let stay = self.tail[i + 1][k] * (1.0 - p);
                let fail = if k > 0 { self.tail[i + 1][k - 1] * p } else { 0.0 };
                self.tail[i][k] = stay + fail;
            }
        }
    }

    fn skip_batch(&mut self, s: u64, rng: &mut impl Rng, out: &mut Totals) -> Result<()> {
        self.prepare_tail();
        let m = self.p.len();
        let c = self.min_card;
        let q: f64 = self.tail[0][c..=m].iter().sum();
        let eligible = Binomial::new(s, q.min(1.0))
            .map_err(|e| Error::param(format!("binomial law: {e}")))?
            .sample(rng);
        for _ in 0..eligible {
            // size of the down set, conditioned on being at least c
            let mut v = rng.random::<f64>() * q;
            let mut k = m;
            for (size, &w) in self.tail[0].iter().enumerate().take(m + 1).skip(c) {
                if v < w {
                    k = size;
                    break;
                }
                v -= w;
            }
            // which components, given the size
            for i in 0..m {
                let here = if k == 0 {
                    false
                } else {
                    let denom = self.tail[i][k];
                    rng.random::<f64>() * denom < self.p[i] * self.tail[i + 1][k - 1]
                };
                self.down[i] = here;
                k -= here as usize;
            }
            self.score(out);
        }
        Ok(())
    }
}

/// `S = ⌈μ(2+ε) ln 8 / (p* ρ ε²)⌉`, `T = ⌈12 ln(1/δ)⌉`.
pub fn mcs_multiplicative_params<R: Real>(
    sys: &ReliabilitySystem<R>,
    epsilon: f64,
    delta: f64,
    p_star: f64,
    rho: f64,
) -> Result<(u64, u64)> {
    check_eps_delta(epsilon, delta)?;
    if !(rho > 0.0) {
        return Err(Error::InvalidPlan(format!("rho = {rho} <= 0")));
    }
    if !(p_star > 0.0 && p_star < 1.0) {
        return Err(Error::param(format!("p* = {p_star} not in (0, 1)")));
    }
    let mu = sys.mu_total().as_f64();
    let s = (mu * (2.0 + epsilon) * LN_8 / (p_star * rho * epsilon * epsilon)).ceil();
    Ok((to_count(s)?, batches_for(delta)))
}

/// `S = ⌈μ(2μ+ε) ln 8 / ε²⌉`, `T = ⌈12 ln(1/δ)⌉` (additive error ε on `F_f`).
pub fn mcs_additive_params<R: Real>(sys: &ReliabilitySystem<R>, epsilon: f64, delta: f64) -> Result<(u64, u64)> {
    check_eps_delta(epsilon, delta)?;
    let mu = sys.mu_total().as_f64();
    let s = (mu * (2.0 * mu + epsilon) * LN_8 / (epsilon * epsilon)).ceil();
    Ok((to_count(s)?, batches_for(delta)))
}

/// Multiplicative ε that [`mcs_multiplicative_params`] would need `s` inner
/// trials for: the positive root of `S p* ρ ε² − μ ln 8 ε − 2μ ln 8 = 0`.
pub fn mcs_epsilon_for_trials(s: u64, mu: f64, p_star: f64, rho: f64) -> f64 {
    let a = s as f64 * p_star * rho;
    let b = mu * LN_8;
    (b + (b * b + 8.0 * a * b).sqrt()) / (2.0 * a)
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(format!("epsilon = {epsilon} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta = {delta} not in (0, 1)")));
    }
    Ok(())
}

fn to_count(s: f64) -> Result<u64> {
    if s.is_finite() && s < u64::MAX as f64 {
        Ok((s as u64).max(1))
    } else {
        Err(Error::CapExceeded { what: "Monte Carlo trials", size: usize::MAX, cap: u64::MAX as usize })
    }
}
