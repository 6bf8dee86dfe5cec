use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hfwit::calculus::parse_derivation;
use hfwit::classes::{derive_size_poly, parse_defs, print_defs};
use hfwit::corpus;
use hfwit::eval::evaluate;
use hfwit::hf::{self, HFSet};

/// Sets of rank at most 4, drawn as random subsets of V3.
fn arb_set() -> impl Strategy<Value = HFSet> {
    any::<u64>().prop_map(|seed| {
        let v3 = hf::universe(3).unwrap();
        hf::random_subset(&v3, &mut ChaCha8Rng::seed_from_u64(seed))
    })
}

#[test]
fn derivations_print_and_parse_back() {
    let reg = corpus::registry();
    for e in corpus::golden(&reg) {
        let s = e.derivation.to_string();
        let d = parse_derivation(&s).unwrap_or_else(|err| panic!("{}: {}", e.name, err));
        assert_eq!(d.to_string(), s, "{}", e.name);
    }
}

#[test]
fn library_prints_and_parses_back() {
    let lib = corpus::library();
    let s = print_defs(&lib);
    assert_eq!(print_defs(&parse_defs(&s).unwrap()), s);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn set_literals_round_trip(a in arb_set()) {
        prop_assert_eq!(HFSet::parse(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn library_matches_kernel(a in arb_set(), b in arb_set()) {
        let reg = corpus::library_registry();
        for d in corpus::library() {
            let args: Vec<HFSet> = [a.clone(), b.clone()].into_iter().take(d.arity()).collect();
            let (ns, ss) = args.split_at(d.normal_arity);
            let got = evaluate(&d, ns, ss, &reg).unwrap().result;
            prop_assert_eq!(Some(got), corpus::library_oracle(&d.name, &args), "{}", d.name);
        }
    }

    #[test]
    fn derived_size_bounds_hold(a in arb_set(), b in arb_set()) {
        let reg = corpus::library_registry();
        for d in corpus::library() {
            let Ok(p) = derive_size_poly(&d, &reg) else { continue };
            let args: Vec<HFSet> = [a.clone(), b.clone()].into_iter().take(d.arity()).collect();
            let (ns, ss) = args.split_at(d.normal_arity);
            let r = evaluate(&d, ns, ss, &reg).unwrap().result;
            let xs: Vec<u64> = ns.iter().map(|x| x.tc_card() as u64).collect();
            let extra: u64 = ss.iter().map(|x| x.tc_card() as u64).sum();
            prop_assert!(r.tc_card() as u64 <= p.widen(d.normal_arity).eval(&xs) + extra, "{}", d.name);
        }
    }

    #[test]
    fn union_and_pair_laws(a in arb_set(), b in arb_set()) {
        let p = hf::pair(&a, &b);
        prop_assert!(p.contains(&a) && p.contains(&b));
        prop_assert_eq!(hf::big_union(&p), hf::union2(&a, &b));
        prop_assert!(hf::diff(&a, &b).children().iter().all(|x| a.contains(x) && !b.contains(x)));
        let k = hf::kpair(&a, &b);
        prop_assert_eq!(hf::unpair(&k), Some((a, b)));
    }
}
