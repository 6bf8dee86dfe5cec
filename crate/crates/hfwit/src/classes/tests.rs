use super::*;
use crate::eval::{check_size_bound, evaluate, SizeCheck};
use crate::formula::{classify, eval, FormulaClass, Universe, Valuation};

fn def(s: &str) -> FunctionDef {
    parse_def(s).unwrap_or_else(|e| panic!("{}: {}", s, e))
}

fn set(s: &str) -> HFSet {
    HFSet::parse(s).unwrap()
}

fn ok(d: &FunctionDef, tag: ClassTag) -> bool {
    validate_class(d, tag, &Registry::standard()).is_ok()
}

#[test]
fn bounded_union_is_rudimentary_only() {
    let d = def("(def f ((x0 x1) ()) (bunion (comp (lib singleton) (proj 1))))");
    assert!(ok(&d, ClassTag::Rud));
    assert!(ok(&d, ClassTag::PrimRec));
    let e = validate_class(&d, ClassTag::PcsfIota, &Registry::standard()).unwrap_err();
    assert!(e.to_string().contains("not in the grammar"), "{}", e);
}

#[test]
fn normal_inner_functions_take_no_safe_arguments() {
    let tc = Arc::new(FunctionDef::anon(1, 0, SchemeNode::Lib(Builtin::Tc)));
    let leak = Arc::new(FunctionDef::anon(1, 1, SchemeNode::Proj(1)));
    let d = FunctionDef::new(
        "f",
        1,
        1,
        SchemeNode::SafeCompose {
            h: tc,
            rs: vec![leak],
            ts: vec![],
        },
    );
    assert!(validate_class(&d, ClassTag::Srsf, &Registry::standard()).is_err());
    let fine = def("(def f ((x0) (a0)) (safecomp (lib tc) ((proj 0)) ()))");
    assert!(ok(&fine, ClassTag::Srsf));
}

#[test]
fn separation_formula_must_be_stratified() {
    // the element is safe, so it cannot fill the normal slot of tc
    let d = def("(def f ((x0) (a0)) (sep (in (app tc (%e) ()) %0)))");
    let e = validate_class(&d, ClassTag::PcsfIota, &Registry::standard()).unwrap_err();
    assert!(e.to_string().contains("clause 1(b)"), "{}", e);
    let d = def("(def f ((x0) (a0)) (sep (in %e (app tc (%0) ()))))");
    assert!(ok(&d, ClassTag::PcsfIota));
}

#[test]
fn normal_separation_needs_the_flag() {
    let d = def("(def f ((x0) (a0)) (nsep (proj 0)))");
    let reg = Registry::standard();
    assert!(validate_class(&d, ClassTag::PcsfIota, &reg).is_err());
    let plus = ValidateOpts { pcsf_plus: true };
    assert!(validate_class_with(&d, ClassTag::PcsfIota, &reg, plus).is_ok());
}

#[test]
fn smaller_classes_embed() {
    for d in crate::corpus::library() {
        if ok(&d, ClassTag::PcsfMinus) {
            assert!(ok(&d, ClassTag::PcsfIota), "{}", d.name);
        }
        if ok(&d, ClassTag::PcsfIota) && !matches!(d.body, SchemeNode::Iota { .. }) {
            assert!(ok(&d, ClassTag::Srsf), "{}", d.name);
        }
    }
    let d = def("(def u ((x0 x1)()) (comp (lib union2) (proj 0) (proj 1)))");
    assert!(ok(&d, ClassTag::Rud) && ok(&d, ClassTag::PrimRec));
}

fn holds(f: &Formula, pairs: Vec<(String, HFSet)>, rank: usize) -> bool {
    let reg = Registry::standard();
    let ctx = EvalCtx::new(&reg, Arc::new(Universe::new(hf::universe(rank).unwrap())));
    eval(f, &mut Valuation::from_pairs(pairs), &ctx).unwrap()
}

#[test]
fn projection_formula_is_an_equation() {
    let d = def("(def p ((x0) ()) (proj 0))");
    let f = synth_sigma1(&d, &Registry::standard()).unwrap();
    assert_eq!(f, Formula::Eq(formula::var("b"), formula::nvar("x0")));
}

#[test]
fn pair_formula_defines_the_pair() {
    let d = def("(def p (() (a0 a1)) (pair))");
    let f = synth_sigma1(&d, &Registry::standard()).unwrap();
    let v2 = hf::universe(2).unwrap();
    for a in &v2 {
        for c in &v2 {
            let want = hf::pair(a, c);
            for b in &v2 {
                let pairs = vec![
                    ("a0".to_string(), a.clone()),
                    ("a1".to_string(), c.clone()),
                    ("b".to_string(), b.clone()),
                ];
                assert_eq!(holds(&f, pairs, 2), *b == want, "{} {} {}", a, c, b);
            }
        }
    }
}

#[test]
fn recursion_formula_quantifies_the_course_of_values() {
    let d = def(
        "(def tcr ((x0) ()) (setrec (comp (lib union2) (proj 0) (comp (lib union) (proj 1)))))",
    );
    let reg = Registry::standard();
    let f = synth_sigma1(&d, &reg).unwrap();
    assert!(matches!(f, Formula::Ex(..)));
    assert_eq!(classify(&f, 0, &reg).unwrap(), FormulaClass::Sigma1);
    for x in hf::universe(2).unwrap() {
        let want = hf::transitive_closure(&x);
        for b in [want.clone(), hf::union2(&want, &hf::pair(&want, &want))] {
            let pairs = vec![("x0".to_string(), x.clone()), ("b".to_string(), b.clone())];
            assert_eq!(holds(&f, pairs, 3), b == want, "{} {}", x, b);
        }
    }
}

#[test]
fn iota_needs_the_unique_form() {
    let d = def("(def t (() (a0)) (iota (safecomp (pair) () ((proj 0) (proj 0)))))");
    let reg = Registry::standard();
    let e = synth_sigma1(&d, &reg).unwrap_err();
    assert!(matches!(e, Error::UnsupportedScheme(_)), "{}", e);
    let f = synth_sigma1_bang(&d, &reg).unwrap();
    assert!(matches!(f, Formula::ExBang(..)));
    for c in hf::universe(2).unwrap() {
        let want = evaluate(&d, &[], &[c.clone()], &reg).unwrap().result;
        let pairs = vec![
            ("a0".to_string(), c.clone()),
            ("b".to_string(), want.clone()),
        ];
        assert!(holds(&f, pairs, 3), "{}", c);
        let wrong = hf::pair(&want, &want);
        let pairs = vec![("a0".to_string(), c.clone()), ("b".to_string(), wrong)];
        assert!(!holds(&f, pairs, 3), "{}", c);
    }
}

#[test]
fn initial_size_polynomials() {
    let reg = Registry::standard();
    let pair = FunctionDef::new("pair", 2, 0, SchemeNode::Pair);
    assert_eq!(
        derive_size_poly(&pair, &reg).unwrap().to_string(),
        "x1+x2+3"
    );
    let proj = FunctionDef::new("p", 2, 0, SchemeNode::Proj(1));
    assert_eq!(derive_size_poly(&proj, &reg).unwrap().to_string(), "x2");
    let p0 = Arc::new(FunctionDef::anon(1, 0, SchemeNode::Proj(0)));
    let sq = FunctionDef::new(
        "sq",
        1,
        0,
        SchemeNode::Compose {
            h: Arc::new(FunctionDef::anon(2, 0, SchemeNode::Pair)),
            gs: vec![p0.clone(), p0],
        },
    );
    assert_eq!(derive_size_poly(&sq, &reg).unwrap().to_string(), "2x1+3");
    let bu = def("(def f ((x0 x1) ()) (bunion (comp (lib singleton) (proj 1))))");
    assert!(matches!(
        derive_size_poly(&bu, &reg),
        Err(Error::UnsupportedScheme(_))
    ));
}

#[test]
fn false_pair_bound_is_refuted() {
    let reg = Registry::standard();
    let pair = FunctionDef::new("pair", 2, 0, SchemeNode::Pair);
    let good = SizePolynomial::parse("x1+x2+3").unwrap();
    assert!(matches!(
        check_size_bound(&pair, &good, 200, 1, &reg).unwrap(),
        SizeCheck::Pass { .. }
    ));
    let bad = SizePolynomial::parse("1").unwrap();
    match check_size_bound(&pair, &bad, 200, 1, &reg).unwrap() {
        SizeCheck::Counterexample { tc_card, bound, .. } => assert!(tc_card as u64 > bound),
        SizeCheck::Pass { .. } => panic!("p = 1 should fail for pair"),
    }
}

#[test]
fn powerset_oracle() {
    let reg = Registry::standard();
    let d = def("(def p (() (a0)) (oracle powerset))");
    assert!(ok(&d, ClassTag::PcsfIota));
    let r = evaluate(&d, &[], &[set("{{}}")], &reg).unwrap();
    assert_eq!(r.result, set("{{} {{}}}"));
}

#[test]
fn duplicate_oracle_is_refused() {
    let mut reg = Registry::standard();
    let e = reg.register_oracle(OracleEntry::powerset()).unwrap_err();
    assert!(matches!(e, Error::DuplicateSymbol(_)));
}

#[test]
fn oracle_normal_slot_rejects_safe_argument() {
    let mut reg = Registry::standard();
    let mut o = OracleEntry::powerset();
    o.symbol = "npow".into();
    o.normal_arity = 1;
    o.safe_arity = 0;
    reg.register_oracle(o).unwrap();
    let d = def("(def f (() (a0)) (oracle npow))");
    assert!(validate_class(&d, ClassTag::PcsfIota, &reg).is_err());
    let d = def("(def f ((x0) ()) (oracle npow))");
    assert!(validate_class(&d, ClassTag::PcsfIota, &reg).is_ok());
}
