//! Failure-frequency approximation: the poly(N) algorithm for k-terminal
//! systems and the poly(n) algorithm for all-terminal systems.

use std::time::Instant;

use serde::Serialize;

use crate::cutset::{
    enumerate_alpha_min, enumerate_bruteforce, min_cut, CutsetCollection, RgcConfig, BRUTE_FORCE_CAP,
};
use crate::dnf::{build_p_dnf, build_pf_dnf, klm_estimate, ErrorMode, Estimate, EstimatorParams};
use crate::error::{Error, Result};
use crate::mcs::{mcs_epsilon_for_trials, mcs_multiplicative_params, mcs_run, McsSampler};
use crate::scalar::Real;
use crate::stream::{derive_seed, Stream};
use crate::system::ReliabilitySystem;
use rand::SeedableRng;

const TAG_P: u64 = 1;
const TAG_PF: u64 = 2;
const TAG_RGC: u64 = 3;
const TAG_MCS: u64 = 4;

/// Sizing of the poly(N) algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PolyNPlan {
    pub epsilon: f64,
    pub delta: f64,
    /// `(ε/2)(ρ/μ)`
    pub xi: f64,
    pub rho: f64,
    pub mu: f64,
    pub s_star: usize,
    pub cutsets: usize,
}

/// Builds the poly(N) plan from a complete minimal-cutset list.
pub fn plan_poly_n<R: Real>(
    sys: &ReliabilitySystem<R>,
    cutsets: &CutsetCollection<R>,
    epsilon: f64,
    delta: f64,
) -> Result<PolyNPlan> {
    check_eps_delta(epsilon, delta)?;
    let stats = sys.stats(cutsets.s_star)?;
    let rho = stats.validate_rho()?.as_f64();
    let mu = stats.mu.as_f64();
    Ok(PolyNPlan {
        epsilon,
        delta,
        xi: 0.5 * epsilon * rho / mu,
        rho,
        mu,
        s_star: cutsets.s_star,
        cutsets: cutsets.count(),
    })
}

/// `F̃_f` together with the two probability estimates it is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyEstimate<R> {
    pub f_f: Estimate<R>,
    pub p_f: Estimate<R>,
    pub p: Estimate<R>,
}

/// (ε, δ)-approximation of `F_f` from all minimal cutsets (enumerated by
/// brute force).
pub fn approx_ff_poly_n<R: Real>(
    sys: &ReliabilitySystem<R>,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<FrequencyEstimate<R>> {
    let cutsets = enumerate_bruteforce(sys, None)?;
    approx_ff_poly_n_with(sys, &cutsets, epsilon, delta, seed)
}

/// As [`approx_ff_poly_n`] with a caller-supplied complete cutset list.
pub fn approx_ff_poly_n_with<R: Real>(
    sys: &ReliabilitySystem<R>,
    cutsets: &CutsetCollection<R>,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<FrequencyEstimate<R>> {
    let started = Instant::now();
    let plan = plan_poly_n(sys, cutsets, epsilon, delta)?;
    let (p_f, p) = estimate_pair(sys, cutsets, plan.xi, 0.5 * delta, seed)?;
    Ok(combine(sys, p_f, p, epsilon, delta, started))
}

/// (ε, δ)-approximation of `P_f` (KLM on the plain cutset formula).
pub fn approx_pf_poly_n<R: Real>(
    sys: &ReliabilitySystem<R>,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<Estimate<R>> {
    check_eps_delta(epsilon, delta)?;
    let cutsets = enumerate_bruteforce(sys, None)?;
    let dnf = build_pf_dnf(&cutsets, sys)?;
    klm_estimate(&dnf, &EstimatorParams::new(epsilon, delta, derive_seed(seed, TAG_PF))?)
}

// KLM on the plain and on the exposure formula with the same (ξ, δ).
fn estimate_pair<R: Real>(
    sys: &ReliabilitySystem<R>,
    cutsets: &CutsetCollection<R>,
    xi: f64,
    delta: f64,
    seed: u64,
) -> Result<(Estimate<R>, Estimate<R>)> {
    let p_f = klm_estimate(
        &build_pf_dnf(cutsets, sys)?,
        &EstimatorParams::new(xi, delta, derive_seed(seed, TAG_PF))?,
    )?;
    let p_params = EstimatorParams::new(xi, delta, derive_seed(seed, TAG_P))?;
    let p = match klm_estimate(&build_p_dnf(cutsets, sys)?, &p_params) {
        Ok(e) => e,
        // every cutset holds every component: P is exactly zero
        Err(Error::FormulaAlmostSurelyFalse) => Estimate { epsilon: xi, delta, ..Estimate::exact(R::zero(), Default::default()) },
        Err(e) => return Err(e),
    };
    Ok((p_f, p))
}

fn combine<R: Real>(
    sys: &ReliabilitySystem<R>,
    p_f: Estimate<R>,
    p: Estimate<R>,
    epsilon: f64,
    delta: f64,
    started: Instant,
) -> FrequencyEstimate<R> {
    // (P̃_f − P̃)μ can only go negative through estimation error
    let value = ((p_f.value - p.value) * sys.mu_total()).max(R::zero());
    FrequencyEstimate {
        f_f: Estimate {
            value,
            error_mode: ErrorMode::Multiplicative,
            epsilon,
            delta,
            samples: p_f.samples + p.samples,
            elapsed: started.elapsed(),
            no_failure_observed: false,
        },
        p_f,
        p,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Branch {
    /// `p* > n^-threshold`: plain Monte Carlo is efficient.
    Mcs,
    /// Enumerate α-min cutsets and run KLM on them.
    AlphaMin,
}

/// Options of the all-terminal algorithm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllTerminalOptions {
    /// The MCS branch applies when `p* > n^-threshold_exponent`.
    pub threshold_exponent: f64,
    pub rgc: RgcConfig,
    pub mcs_sampler: McsSampler,
}

impl Default for AllTerminalOptions {
    fn default() -> Self {
        Self { threshold_exponent: 4.0, rgc: RgcConfig::default(), mcs_sampler: McsSampler::Naive }
    }
}

/// Sizing of the all-terminal algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AllTerminalPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub w_star: f64,
    pub p_star: f64,
    /// Σ μ_i over the minimum cut.
    pub mu_star: f64,
    /// `min{max{w*/w_max, 1}, m}`
    pub s_star: f64,
    pub mu: f64,
    pub mu_min: f64,
    pub rho: f64,
    pub xi: f64,
    /// `w*/ln n − 2`
    pub gamma: f64,
    /// `None` on the MCS branch.
    pub alpha: Option<f64>,
    pub threshold: f64,
    pub branch: Branch,
}

impl AllTerminalPlan {
    /// α for a given KLM error target `xi`, clamped to at least 1.
    pub fn alpha_for(&self, xi: f64) -> f64 {
        alpha_formula(self.n, self.gamma, self.mu, self.mu_min, self.mu_star, self.s_star, xi)
    }
}

fn alpha_formula(n: usize, gamma: f64, mu: f64, mu_min: f64, mu_star: f64, s_star: f64, xi: f64) -> f64 {
    if n <= 2 || mu - mu_star <= 0.0 {
        // two nodes: the minimum cut is the only minimal cutset
        return 1.0;
    }
    let ln_n = (n as f64).ln();
    let arg = 2.0 * (gamma + 2.0) * (mu - s_star * mu_min) / (xi * gamma * (mu - mu_star));
    if arg <= 0.0 {
        return 1.0;
    }
    (1.0 + 2.0 / gamma + arg.ln() / (gamma * ln_n)).max(1.0)
}

/// Computes the all-terminal plan: minimum cut, surrogate `s*`, `ρ`, the
/// branch, and on the α-min branch `γ` and `α`.
pub fn plan_all_terminal<R: Real>(
    sys: &ReliabilitySystem<R>,
    epsilon: f64,
    delta: f64,
    threshold_exponent: f64,
) -> Result<AllTerminalPlan> {
    check_eps_delta(epsilon, delta)?;
    if !sys.is_all_terminal() {
        return Err(Error::NotAllTerminal);
    }
    let cut = min_cut(sys)?;
    let w_star = cut.weight.as_f64();
    let n = sys.n();
    let m = sys.m() as f64;
    let base = sys.stats_with(R::one());
    let s_star = (w_star / base.w_max.as_f64()).max(1.0).min(m);
    let stats = sys.stats_with(R::of(s_star));
    let rho = stats.validate_rho()?.as_f64();
    let mu = stats.mu.as_f64();
    let mu_min = stats.mu_min.as_f64();
    let mu_star = cut.mu_sum(sys).as_f64();
    let p_star = (-w_star).exp();
    let threshold = (n as f64).powf(-threshold_exponent);
    let xi = 0.5 * epsilon * rho / mu;
    let gamma = w_star / (n as f64).ln() - 2.0;
    let branch = if n > 2 && p_star > threshold { Branch::Mcs } else { Branch::AlphaMin };
    let alpha = match branch {
        Branch::Mcs => None,
        Branch::AlphaMin => {
            if n > 2 && gamma <= 0.0 {
                return Err(Error::InvalidPlan(format!(
                    "gamma = {gamma} <= 0; the threshold exponent must exceed 2"
                )));
            }
            Some(alpha_formula(n, gamma, mu, mu_min, mu_star, s_star, xi))
        }
    };
    Ok(AllTerminalPlan {
        epsilon,
        delta,
        n,
        w_star,
        p_star,
        mu_star,
        s_star,
        mu,
        mu_min,
        rho,
        xi,
        gamma,
        alpha,
        threshold,
        branch,
    })
}

/// Result of [`approx_ff_all_terminal`].
#[derive(Clone, Debug)]
pub struct AllTerminalEstimate<R> {
    pub f_f: Estimate<R>,
    /// `P̃_f^(α)` (α-min branch) or the MCS `P_f` estimate.
    pub p_f: Estimate<R>,
    /// `P̃^(α)`; `None` on the MCS branch.
    pub p: Option<Estimate<R>>,
    pub plan: AllTerminalPlan,
    /// N^(α); `None` on the MCS branch.
    pub cutsets: Option<CutsetCollection<R>>,
    pub rgc_runs: u64,
    /// The contraction-run budget was hit.
    pub rgc_capped: bool,
}

/// (ε, δ)-approximation of `F_f` for an all-terminal system.
pub fn approx_ff_all_terminal<R: Real>(
    sys: &ReliabilitySystem<R>,
    epsilon: f64,
    delta: f64,
    seed: u64,
    options: &AllTerminalOptions,
) -> Result<AllTerminalEstimate<R>> {
    let started = Instant::now();
    let plan = plan_all_terminal(sys, epsilon, delta, options.threshold_exponent)?;
    match plan.branch {
        Branch::Mcs => {
            let (s, t) = mcs_multiplicative_params(sys, epsilon, delta, plan.p_star, plan.rho)?;
            let run = mcs_run(sys, s, t, derive_seed(seed, TAG_MCS), options.mcs_sampler)?;
            let (p_f, f_f) = run.estimates(ErrorMode::Multiplicative, epsilon, delta);
            Ok(AllTerminalEstimate { f_f, p_f, p: None, plan, cutsets: None, rgc_runs: 0, rgc_capped: false })
        }
        Branch::AlphaMin => {
            let alpha = plan.alpha.expect("alpha-min plans carry alpha");
            let mut rng = Stream::seed_from_u64(derive_seed(seed, TAG_RGC));
            let found = enumerate_alpha_min(sys, alpha, &options.rgc, &mut rng)?;
            let (p_f, p) = estimate_pair(sys, &found.cutsets, 0.5 * plan.xi, 0.5 * delta, seed)?;
            let est = combine(sys, p_f, p, epsilon, delta, started);
            Ok(AllTerminalEstimate {
                f_f: est.f_f,
                p_f: est.p_f,
                p: Some(est.p),
                plan,
                cutsets: Some(found.cutsets),
                rgc_runs: found.runs,
                rgc_capped: found.capped,
            })
        }
    }
}

/// ε chosen so that every KLM call fits a per-batch trial budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AutoEpsilon {
    pub epsilon: f64,
    /// α at that ε (α-min branch only).
    pub alpha: Option<f64>,
    /// Cutsets the KLM calls would use at that ε.
    pub cutsets: Option<usize>,
    /// α exceeded `alpha_cap`, so the cutset count is a lower bound.
    pub alpha_capped: bool,
}

/// Smallest ε for which the poly(N) KLM calls need at most `budget` inner
/// trials: `ε = (2μ/ρ)·sqrt(4(N−1)/budget)`.
pub fn auto_epsilon_poly_n<R: Real>(
    sys: &ReliabilitySystem<R>,
    cutsets: &CutsetCollection<R>,
    budget: u64,
) -> Result<AutoEpsilon> {
    let stats = sys.stats(cutsets.s_star)?;
    let rho = stats.validate_rho()?.as_f64();
    let n = cutsets.count() as f64;
    let epsilon = 2.0 * stats.mu.as_f64() / rho * (4.0 * (n - 1.0).max(0.0) / budget as f64).sqrt();
    Ok(AutoEpsilon { epsilon, alpha: None, cutsets: Some(cutsets.count()), alpha_capped: false })
}

/// Smallest ε for which the all-terminal algorithm stays within `budget`
/// trials per batch.
///
/// On the α-min branch each KLM call runs `4(N^(α)−1)/(ξ/2)²` inner trials
/// with `ξ/2 = ερ/(4μ)`, and α (hence N^(α)) shrinks as ε grows, so
/// `ε − (4μ/ρ)·sqrt(4(N^(α(ε))−1)/budget)` is increasing and the root is
/// found by bisection. Cutsets are counted from a list enumerated once up to
/// `alpha_cap · w*` (brute force when small enough, contraction otherwise).
/// On the MCS branch ε solves the multiplicative MCS sizing for `budget`.
pub fn auto_epsilon_all_terminal<R: Real>(
    sys: &ReliabilitySystem<R>,
    delta: f64,
    budget: u64,
    alpha_cap: f64,
    seed: u64,
    options: &AllTerminalOptions,
) -> Result<AutoEpsilon> {
    if budget == 0 {
        return Err(Error::param("sample budget must be positive"));
    }
    // ε only enters the plan through ξ and α
    let probe = plan_all_terminal(sys, 1.0, delta, options.threshold_exponent)?;
    if probe.branch == Branch::Mcs {
        let epsilon = mcs_epsilon_for_trials(budget, probe.mu, probe.p_star, probe.rho);
        return Ok(AutoEpsilon { epsilon, alpha: None, cutsets: None, alpha_capped: false });
    }
    let pool = if sys.m() <= BRUTE_FORCE_CAP {
        enumerate_bruteforce(sys, Some(R::of(alpha_cap * probe.w_star)))?
    } else {
        let mut rng = Stream::seed_from_u64(derive_seed(seed, TAG_RGC));
        enumerate_alpha_min(sys, alpha_cap, &options.rgc, &mut rng)?.cutsets
    };
    let weights: Vec<f64> = pool.iter().map(|c| c.weight.as_f64()).collect();
    let slack = 1.0 + f64::EPSILON * 64.0;
    let count = |alpha: f64| {
        let limit = alpha.min(alpha_cap) * probe.w_star * slack;
        weights.iter().filter(|&&w| w <= limit).count()
    };
    let alpha_at = |eps: f64| probe.alpha_for(0.5 * eps * probe.rho / probe.mu);
    let scale = 4.0 * probe.mu / probe.rho;
    let gap = |eps: f64| {
        let n = count(alpha_at(eps)) as f64;
        eps - scale * (4.0 * (n - 1.0).max(0.0) / budget as f64).sqrt()
    };
    let mut hi = 1.0;
    while gap(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidPlan("no feasible epsilon for the sample budget".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha = alpha_at(hi);
    Ok(AutoEpsilon { epsilon: hi, alpha: Some(alpha), cutsets: Some(count(alpha)), alpha_capped: alpha > alpha_cap })
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
