//! Failure probability and failure frequency of k-terminal reliability
//! networks.
//!
//! Components fail and are repaired independently with stationary rates
//! `λ_i`, `μ_i`. The system fails when some terminals are disconnected.
//! This crate estimates the steady-state failure probability `P_f` and the
//! failure frequency `F_f` within a multiplicative error `ε` with
//! probability at least `1 − δ`:
//!
//! - [`approx_ff_poly_n`] runs the Karp–Luby–Madras estimator on DNF
//!   formulas built from all minimal cutsets. It works for any k-terminal
//!   system.
//! - [`approx_ff_all_terminal`] is for all-terminal systems. It either runs
//!   Monte Carlo, when the minimum cut is likely enough, or runs the
//!   estimator on the near-minimum cutsets found by randomized contraction.
//!
//! Exact oracles ([`exact_by_states`], [`exact_by_inclusion_exclusion`]),
//! first-order bounds and a Monte Carlo baseline ([`mcs_run`]) are provided
//! for verification.
//!
//! All numeric routines are generic over [`Real`] (`f32` or `f64`). The
//! aliases below fix the scalar.

pub mod bitset;
pub mod cutset;
pub mod dnf;
pub mod error;
pub mod exact;
pub mod frequency;
pub mod graph;
pub mod mcs;
pub mod scalar;
pub mod stream;
pub mod system;

pub use bitset::ComponentSet;
pub use cutset::{
    contraction_run, enumerate_alpha_min, enumerate_bruteforce, is_cutset, is_minimal, min_cut, AlphaMinEnumeration,
    Cutset, CutsetCollection, RgcConfig,
};
pub use dnf::{
    build_p_dnf, build_pf_dnf, count_satisfied, klm_estimate, Assignment, DnfInstance, ErrorMode, Estimate,
    EstimatorParams,
};
pub use error::{Error, Result};
pub use exact::{exact_by_inclusion_exclusion, exact_by_states, first_order_bounds, trunc, Exact, FirstOrderBounds};
pub use frequency::{
    approx_ff_all_terminal, approx_ff_poly_n, approx_ff_poly_n_with, approx_pf_poly_n, auto_epsilon_all_terminal,
    auto_epsilon_poly_n, plan_all_terminal, plan_poly_n, AllTerminalEstimate, AllTerminalOptions, AllTerminalPlan,
    AutoEpsilon, Branch, FrequencyEstimate, PolyNPlan,
};
pub use mcs::{mcs_additive_params, mcs_multiplicative_params, mcs_run, McsRun, McsSampler, SystemState};
pub use scalar::Real;
pub use system::{
    grid_document, grid_system, load_system, load_system_file, Component, NetworkDocument, ReliabilitySystem,
    SystemStats,
};

pub type SystemF64 = ReliabilitySystem<f64>;
pub type SystemF32 = ReliabilitySystem<f32>;
pub type CutsetsF64 = CutsetCollection<f64>;
pub type CutsetsF32 = CutsetCollection<f32>;
pub type EstimateF64 = Estimate<f64>;
pub type EstimateF32 = Estimate<f32>;
pub type DnfF64 = DnfInstance<f64>;
pub type DnfF32 = DnfInstance<f32>;
