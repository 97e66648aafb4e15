//! Exact oracles at desk scale and first-order bounds.

use crate::bitset::ComponentSet;
use crate::cutset::{CutsetCollection, BRUTE_FORCE_CAP};
use crate::error::{Error, Result};
use crate::graph::Traversal;
use crate::scalar::{CompensatedSum, Real};
use crate::system::ReliabilitySystem;

/// Largest number of cutsets (clauses) inclusion-exclusion accepts.
pub const INCLUSION_EXCLUSION_CAP: usize = 20;

/// Exact failure probability and failure frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exact<R> {
    pub p_f: R,
    pub f_f: R,
    /// Probability that the system is failed and the exposed component is not
    /// in any failed cutset. `None` for state enumeration.
    pub p: Option<R>,
}

/// `P_f = Σ p(s)` and `F_f = Σ p(s)·flux(s)` over all failure states.
pub fn exact_by_states<R: Real>(sys: &ReliabilitySystem<R>) -> Result<Exact<R>> {
    let m = sys.m();
    if m > BRUTE_FORCE_CAP {
        return Err(Error::CapExceeded { what: "state enumeration (m)", size: m, cap: BRUTE_FORCE_CAP });
    }
    let comps = sys.components();
    let p: Vec<R> = comps.iter().map(|c| c.p()).collect();
    let q: Vec<R> = p.iter().map(|&p| R::one() - p).collect();
    let mut trav = Traversal::new(sys.n());
    let mut p_f = CompensatedSum::new();
    let mut f_f = CompensatedSum::new();
    for mask in 0u64..(1u64 << m) {
        let down = |c: usize| (mask >> c) & 1 == 1;
        if trav.terminals_connected(sys, down) {
            continue;
        }
        let mut prob = R::one();
        let mut flux = R::zero();
        for (c, comp) in comps.iter().enumerate() {
            if down(c) {
                prob = prob * p[c];
                flux = flux + comp.mu;
            } else {
                prob = prob * q[c];
                flux = flux - comp.lambda;
            }
        }
        p_f.add(prob);
        f_f.add(prob * flux);
    }
    Ok(Exact { p_f: p_f.value(), f_f: f_f.value(), p: None })
}

/// Alternating sums over all nonempty subsets `I` of `sets`, with
/// `C_I = ∪_{j∈I} sets[j]`:
/// `(Σ ±p(C_I), Σ ±p(C_I)μ(C_I), Σ ±p(C_I)(1 − μ(C_I)/μ))`.
///
/// `p(C_I)` is evaluated as `exp(−Σ w_i)`.
pub fn union_terms<R: Real>(sets: &[ComponentSet], weights: &[R], mu: &[R]) -> Result<(R, R, R)> {
    if sets.len() > INCLUSION_EXCLUSION_CAP {
        return Err(Error::CapExceeded {
            what: "inclusion-exclusion (clauses)",
            size: sets.len(),
            cap: INCLUSION_EXCLUSION_CAP,
        });
    }
    let mu_total: R = mu.iter().copied().sum();
    let mut acc = [CompensatedSum::new(); 3];
    let universe = weights.len();
    let mut stack = vec![ComponentSet::empty(universe); sets.len() + 1];
    walk(sets, weights, mu, mu_total, 0, 0, &mut stack, &mut acc);
    Ok((acc[0].value(), acc[1].value(), acc[2].value()))
}

#[allow(clippy::too_many_arguments)]
fn walk<R: Real>(
    sets: &[ComponentSet],
    weights: &[R],
    mu: &[R],
    mu_total: R,
    start: usize,
    depth: usize,
    stack: &mut [ComponentSet],
    acc: &mut [CompensatedSum<R>; 3],
) {
    for j in start..sets.len() {
        let (head, tail) = stack.split_at_mut(depth + 1);
        let union = &mut tail[0];
        union.copy_from(&head[depth]);
        union.union_with(&sets[j]);
        let w: R = union.iter().map(|c| weights[c]).sum();
        let m: R = union.iter().map(|c| mu[c]).sum();
        let prob = (-w).exp();
        let sign = if depth.is_multiple_of(2) { R::one() } else { -R::one() };
        acc[0].add(sign * prob);
        acc[1].add(sign * prob * m);
        acc[2].add(sign * prob * (R::one() - m / mu_total));
        walk(sets, weights, mu, mu_total, j + 1, depth + 1, stack, acc);
    }
}

/// Exact `(P_f, F_f, P)` by inclusion-exclusion over a complete list of
/// minimal cutsets.
pub fn exact_by_inclusion_exclusion<R: Real>(
    cutsets: &CutsetCollection<R>,
    sys: &ReliabilitySystem<R>,
) -> Result<Exact<R>> {
    let sets: Vec<ComponentSet> = cutsets.iter().map(|c| c.members.clone()).collect();
    let (p_f, f_f, p) = union_terms(&sets, &sys.weights(), &sys.repair_rates())?;
    Ok(Exact { p_f, f_f, p: Some(p) })
}

/// A pair of first-order bounds and their decimal agreement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstOrderBounds<R> {
    pub lower: R,
    pub upper: R,
    /// Number of leading decimal places on which `lower` and `upper` agree.
    pub matched_decimals: u32,
    /// The bounds are within one ulp; `matched_decimals` is then the number
    /// of decimal places carried by 17 significant digits.
    pub machine_precision: bool,
    /// `trunc(upper, d) = trunc(lower, d)` when `d > 0`.
    pub truncated: Option<R>,
}

impl<R: Real> FirstOrderBounds<R> {
    pub fn new(lower: R, upper: R) -> Self {
        let (lo, hi) = (lower.as_f64(), upper.as_f64());
        let machine_precision = (hi - lo).abs() <= ulp(hi.abs().max(lo.abs()));
        let (d, prefix) = if machine_precision {
            let d = if hi == 0.0 { 17 } else { (16 - hi.abs().log10().floor() as i32).max(0) as u32 };
            (d, Some(trunc(hi, d)))
        } else {
            matched_prefix(lo, hi)
        };
        Self {
            lower,
            upper,
            matched_decimals: d,
            machine_precision,
            truncated: if d > 0 { prefix.map(R::of) } else { None },
        }
    }

    pub fn contains(&self, x: R) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn ulp(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else {
        f64::from_bits(x.to_bits() + 1) - x
    }
}

// Leading decimal places on which the exact decimal expansions agree, and
// the truncation to that many places.
fn matched_prefix(a: f64, b: f64) -> (u32, Option<f64>) {
    if a.is_sign_negative() != b.is_sign_negative() {
        return (0, None);
    }
    let (sa, sb) = (format!("{:.80}", a.abs()), format!("{:.80}", b.abs()));
    let (ia, fa) = sa.split_once('.').expect("fixed notation has a point");
    let (ib, fb) = sb.split_once('.').expect("fixed notation has a point");
    if ia != ib {
        return (0, None);
    }
    let d = fa.bytes().zip(fb.bytes()).take_while(|(x, y)| x == y).count();
    let value: f64 = format!("{ia}.{}", &fa[..d]).parse().expect("decimal prefix parses");
    (d as u32, Some(if a.is_sign_negative() { -value } else { value }))
}

/// `⌊10^d · x⌋ / 10^d`.
pub fn trunc(x: f64, d: u32) -> f64 {
    let scale = 10f64.powi(d as i32);
    (x * scale).floor() / scale
}

/// Bounds on `(P_f, F_f)` from the singleton and pairwise terms of the
/// inclusion-exclusion series.
pub fn first_order_bounds<R: Real>(
    cutsets: &CutsetCollection<R>,
    sys: &ReliabilitySystem<R>,
) -> Result<(FirstOrderBounds<R>, FirstOrderBounds<R>)> {
    if cutsets.count() == 0 {
        return Err(Error::Empty("cutset collection"));
    }
    let weights = sys.weights();
    let mu = sys.repair_rates();
    let mu_of = |s: &ComponentSet| s.iter().map(|c| mu[c]).sum::<R>();
    let w_of = |s: &ComponentSet| s.iter().map(|c| weights[c]).sum::<R>();
    let mut p1 = CompensatedSum::new();
    let mut f1 = CompensatedSum::new();
    for c in cutsets.iter() {
        let prob = (-w_of(&c.members)).exp();
        p1.add(prob);
        f1.add(prob * mu_of(&c.members));
    }
    let mut p2 = CompensatedSum::new();
    let mut f2 = CompensatedSum::new();
    let mut union = ComponentSet::empty(sys.m());
    let list = &cutsets.cutsets;
    for (i, a) in list.iter().enumerate() {
        for b in &list[i + 1..] {
            union.copy_from(&a.members);
            union.union_with(&b.members);
            let prob = (-w_of(&union)).exp();
            p2.add(prob);
            f2.add(prob * mu_of(&union));
        }
    }
    let (pu, fu) = (p1.value(), f1.value());
    Ok((
        FirstOrderBounds::new(pu - p2.value(), pu),
        FirstOrderBounds::new(fu - f2.value(), fu),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutset::enumerate_bruteforce;
    use crate::system::{grid_system, load_system};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn series2() -> ReliabilitySystem<f64> {
        let l = 0.1 / 0.9;
        ReliabilitySystem::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0, 2],
            vec![(0, 1, l, 1.0), (1, 2, l, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn single_edge_states() {
        let sys = load_system::<f64>(r#"{"version":1,"nodes":[1,2],"edges":[{"from":1,"to":2,"lambda":1.0,"mu":9.0}]}"#).unwrap();
        let e = exact_by_states(&sys).unwrap();
        assert!((e.p_f - 0.1).abs() < 1e-15 && (e.f_f - 0.9).abs() < 1e-14);
    }

    #[test]
    fn raw_parallel_pair_states() {
        let raw = ReliabilitySystem::<f64>::new(
            vec!["a".into(), "b".into()],
            vec![0, 1],
            vec![(0, 1, 1.0, 9.0), (0, 1, 1.0, 9.0)],
        )
        .unwrap();
        let e = exact_by_states(&raw).unwrap();
        assert!((e.p_f - 0.01).abs() < 1e-15 && (e.f_f - 0.18).abs() < 1e-14);
        let merged = exact_by_states(&raw.merge_parallel()).unwrap();
        assert!(rel(merged.p_f, e.p_f) < 1e-13 && rel(merged.f_f, e.f_f) < 1e-13);
    }

    #[test]
    fn two_edge_series_inclusion_exclusion() {
        let sys = series2();
        let cs = enumerate_bruteforce(&sys, None).unwrap();
        let e = exact_by_inclusion_exclusion(&cs, &sys).unwrap();
        let p = e.p.unwrap();
        assert!((e.p_f - 0.19).abs() < 1e-15);
        assert!((e.f_f - 0.18).abs() < 1e-15);
        assert!((p - 0.1).abs() < 1e-15);
        assert!(((e.p_f - p) * 2.0 - e.f_f).abs() < 1e-15);
        let s = exact_by_states(&sys).unwrap();
        assert!(rel(s.f_f, e.f_f) < 1e-13);
    }

    #[test]
    fn grid_cross_oracle() {
        let g = grid_system::<f64>(3, 3, 1e-2, 1.0).unwrap();
        let all = enumerate_bruteforce(&g, None).unwrap();
        assert!(matches!(exact_by_inclusion_exclusion(&all, &g), Err(Error::CapExceeded { .. })));
        // the 2x3 grid has few enough cutsets
        let small = grid_system::<f64>(2, 3, 1e-2, 1.0).unwrap();
        let cs = enumerate_bruteforce(&small, None).unwrap();
        assert!(cs.count() <= INCLUSION_EXCLUSION_CAP);
        let a = exact_by_states(&small).unwrap();
        let b = exact_by_inclusion_exclusion(&cs, &small).unwrap();
        assert!(rel(a.p_f, b.p_f) < 1e-12 && rel(a.f_f, b.f_f) < 1e-12);
    }

    #[test]
    fn grid_bounds_match_printed_table() {
        for (p, lo, hi) in [(1e-3, 8.04785e-6, 8.04807e-6), (1e-2, 8.46433e-4, 8.48688e-4)] {
            let g = grid_system::<f64>(3, 3, p, 1.0).unwrap();
            let all = enumerate_bruteforce(&g, None).unwrap();
            let (pb, fb) = first_order_bounds(&all, &g).unwrap();
            assert_eq!(format!("{:.5e}", fb.lower), format!("{lo:.5e}"));
            assert_eq!(format!("{:.5e}", fb.upper), format!("{hi:.5e}"));
            let ex = exact_by_states(&g).unwrap();
            assert!(fb.contains(ex.f_f) && pb.contains(ex.p_f));
        }
    }

    #[test]
    fn single_cutset_bounds_are_machine_precision() {
        let sys = load_system::<f64>(r#"{"version":1,"nodes":[1,2],"edges":[{"from":1,"to":2,"lambda":1.0,"mu":9.0}]}"#).unwrap();
        let cs = enumerate_bruteforce(&sys, None).unwrap();
        let (_, fb) = first_order_bounds(&cs, &sys).unwrap();
        assert_eq!(fb.lower, fb.upper);
        assert!(fb.machine_precision);
        assert!((fb.upper - 0.9).abs() < 1e-15);
        assert_eq!(fb.matched_decimals, 17);
    }

    #[test]
    fn matched_decimals_and_trunc() {
        let b = FirstOrderBounds::new(8.04785e-6f64, 8.04807e-6);
        assert_eq!(b.matched_decimals, 8);
        assert_eq!(b.truncated, Some(8.04e-6));
        assert_eq!(trunc(0.123456, 3), 0.123);
        let none = FirstOrderBounds::new(0.1f64, 0.2);
        assert_eq!(none.matched_decimals, 0);
        assert_eq!(none.truncated, None);
    }
}
