use failfreq::*;
use proptest::prelude::*;

type Spec = (usize, Vec<usize>, Vec<(usize, usize, f64, f64)>);

// Connected simple graph: a random spanning tree plus extra distinct edges.
fn system_spec() -> impl Strategy<Value = Spec> {
    (3usize..=6).prop_flat_map(|n| {
        let tree = proptest::collection::vec(any::<prop::sample::Index>(), n - 1);
        let extra = proptest::collection::vec((0..n, 0..n), 0..5);
        let rates = proptest::collection::vec((0.001f64..0.5, 0.5f64..4.0), n - 1 + 5);
        let terms = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 2..=n);
        (Just(n), terms, tree, extra, rates).prop_map(|(n, terms, tree, extra, rates)| {
            let mut pairs: Vec<(usize, usize)> = tree.iter().enumerate().map(|(i, ix)| (ix.index(i + 1), i + 1)).collect();
            for (a, b) in extra {
                let e = (a.min(b), a.max(b));
                if a != b && !pairs.iter().any(|&(x, y)| (x.min(y), x.max(y)) == e) {
                    pairs.push(e);
                }
            }
            let comps = pairs.into_iter().zip(rates).map(|((a, b), (l, mu))| (a, b, l, mu)).collect();
            (n, terms, comps)
        })
    })
}

fn build((n, terms, comps): &Spec) -> SystemF64 {
    ReliabilitySystem::new((0..*n).map(|i| format!("v{i}")).collect(), terms.clone(), comps.clone()).unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracles_agree_and_frequency_identity_holds(spec in system_spec()) {
        let sys = build(&spec);
        let states = exact_by_states(&sys).unwrap();
        let all = enumerate_bruteforce(&sys, None).unwrap();
        let ie = exact_by_inclusion_exclusion(&all, &sys).unwrap();
        prop_assert!(close(states.p_f, ie.p_f, 1e-11), "{} vs {}", states.p_f, ie.p_f);
        prop_assert!(close(states.f_f, ie.f_f, 1e-11), "{} vs {}", states.f_f, ie.f_f);
        let identity = (ie.p_f - ie.p.unwrap()) * sys.mu_total();
        prop_assert!(close(ie.f_f, identity, 1e-11));
        prop_assert!(ie.f_f <= ie.p_f * sys.mu_total() * (1.0 + 1e-12));
    }

    #[test]
    fn enumerated_cutsets_are_minimal_and_bracket_the_truth(spec in system_spec()) {
        let sys = build(&spec);
        let all = enumerate_bruteforce(&sys, None).unwrap();
        prop_assert!(all.count() >= 1);
        for c in all.iter() {
            prop_assert!(is_cutset(&sys, &c.members) && is_minimal(&sys, &c.members));
        }
        let exact = exact_by_states(&sys).unwrap();
        let (pb, fb) = first_order_bounds(&all, &sys).unwrap();
        let slack = 1e-12;
        prop_assert!(pb.lower <= exact.p_f * (1.0 + slack) && exact.p_f <= pb.upper * (1.0 + slack));
        prop_assert!(fb.lower <= exact.f_f * (1.0 + slack) && exact.f_f <= fb.upper * (1.0 + slack));
    }

    #[test]
    fn min_cut_weight_is_the_lightest_cutset(spec in system_spec()) {
        let sys = build(&spec);
        if !sys.is_all_terminal() {
            return Ok(());
        }
        let cut = min_cut(&sys).unwrap();
        let all = enumerate_bruteforce(&sys, None).unwrap();
        prop_assert!(close(cut.weight, all.w_star, 1e-9));
    }

    #[test]
    fn documents_round_trip(spec in system_spec()) {
        let sys = build(&spec);
        let text = serde_json::to_string(&sys.to_document()).unwrap();
        let back: SystemF64 = load_system(&text).unwrap();
        prop_assert_eq!(back.terminals(), sys.terminals());
        prop_assert_eq!(back.m(), sys.m());
        for (a, b) in back.components().iter().zip(sys.components()) {
            prop_assert_eq!(a.endpoints, b.endpoints);
            prop_assert!(close(a.p(), b.p(), 1e-12) && close(a.mu, b.mu, 1e-12));
        }
    }

    #[test]
    fn single_precision_tracks_double(spec in system_spec()) {
        let sys = build(&spec);
        let (n, terms, comps) = &spec;
        let comps32 = comps.iter().map(|&(a, b, l, mu)| (a, b, l as f32, mu as f32)).collect();
        let sys32 = SystemF32::new((0..*n).map(|i| format!("v{i}")).collect(), terms.clone(), comps32).unwrap();
        let (e64, e32) = (exact_by_states(&sys).unwrap(), exact_by_states(&sys32).unwrap());
        prop_assert!(close(e64.f_f, e32.f_f as f64, 1e-4));
    }

    #[test]
    fn one_clause_estimate_is_exact(spec in system_spec(), seed in any::<u64>()) {
        let sys = build(&spec);
        let all = enumerate_bruteforce(&sys, None).unwrap();
        let first = all.iter().next().unwrap().members.clone();
        let dnf = DnfF64::new(vec![first], sys.unavailabilities(), sys.repair_rates(), false).unwrap();
        let est = klm_estimate(&dnf, &EstimatorParams::new(0.1, 0.1, seed).unwrap()).unwrap();
        prop_assert!(close(est.value, dnf.exact_probability().unwrap(), 1e-12));
    }
}
