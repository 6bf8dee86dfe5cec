//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line to
//! stderr (uncaptured) and the test fails if any criterion fails.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hfwit::calculus::{check_derivation, Theory};
use hfwit::classes::{
    derive_size_poly, has_recursion, synth_sigma1, synth_sigma1_bang, validate_class, ClassTag,
    FunctionDef, SizePolynomial,
};
use hfwit::corpus::{self, Entry};
use hfwit::error::Error;
use hfwit::eval::{check_size_bound, evaluate, SizeCheck};
use hfwit::extract::{definable_function, extract_with, verify_bundle, verify_phi, GridOpts};
use hfwit::formula::{check_stratified, eval, eval_term, EvalCtx, Formula, Universe, Valuation};
use hfwit::hf::{self, HFSet};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let el = t.elapsed();
    o.detail = format!("{} [{:.2}s]", o.detail, el.as_secs_f64());
    if let Some(l) = limit {
        if el > l {
            o.ok = false;
            o.detail.push_str(&format!(" over the {}s limit", l.as_secs()));
        }
    }
    o
}

fn tc_fixpoint(x: &HFSet) -> HFSet {
    let mut cur = x.clone();
    loop {
        let next = hf::union2(&cur, &hf::big_union(&cur));
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn c1_kernel() -> Outcome {
    let mut sets = hf::universe(3).unwrap();
    let n3 = sets.len();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v3 = sets.clone();
    while sets.len() < n3 + 200 {
        let s = hf::random_subset(&v3, &mut rng);
        if s.rank() == 4 {
            sets.push(s);
        }
    }
    let mut bad = 0;
    for s in &sets {
        let t = hf::transitive_closure(s);
        let o = tc_fixpoint(s);
        if t != o || s.tc_card() != o.len() {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("{} sets of rank <= 3 and 200 of rank 4, {} mismatches", n3, bad),
    )
}

fn c2_checker() -> Outcome {
    let reg = corpus::registry();
    let golden = corpus::golden(&reg);
    let mutants = corpus::mutants(&reg);
    let t = Instant::now();
    let accepted = golden
        .iter()
        .filter(|e| check_derivation(&e.derivation, &reg).ok())
        .count();
    let mut wrong = Vec::new();
    for m in &mutants {
        let rep = check_derivation(&m.derivation, &reg);
        if !rep.violations.iter().any(|v| v.kind == m.expected) {
            wrong.push(m.name);
        }
    }
    let el = t.elapsed();
    let ok = golden.len() >= 12
        && accepted == golden.len()
        && mutants.len() >= 12
        && wrong.is_empty()
        && el < Duration::from_secs(1);
    outcome(
        ok,
        format!(
            "golden {}/{} accepted, mutants {}/{} rejected as expected {:?}, checking {:.3}s",
            accepted,
            golden.len(),
            mutants.len() - wrong.len(),
            mutants.len(),
            wrong,
            el.as_secs_f64()
        ),
    )
}

fn grid() -> GridOpts {
    GridOpts::default()
}

/// Extracts and verifies every extractable entry; returns failures and the
/// number of checked points.
fn soundness(entries: &[Entry], reg: &hfwit::classes::Registry) -> (Vec<String>, usize) {
    let mut bad = Vec::new();
    let mut checked = 0;
    for e in entries.iter().filter(|e| e.extractable) {
        let r = extract_with(&e.derivation, reg, &e.given).and_then(|b| {
            let rep = verify_bundle(&b, reg, &grid())?;
            let phi = verify_phi(&b, reg, &grid())?;
            Ok((rep, phi))
        });
        match r {
            Ok((rep, phi)) => {
                checked += rep.checked + phi.checked;
                if !rep.ok() || !phi.ok() {
                    bad.push(format!("{}: {:?} {:?}", e.name, rep.failures, phi.failures));
                } else if rep.checked == 0 {
                    bad.push(format!("{}: no grid point satisfied the hypotheses", e.name));
                }
            }
            Err(err) => bad.push(format!("{}: {}", e.name, err)),
        }
    }
    (bad, checked)
}

fn c3_t01() -> Outcome {
    let reg = corpus::registry();
    let es = corpus::t0_t1(&reg);
    let n = es.iter().filter(|e| e.extractable).count();
    let (bad, checked) = soundness(&es, &reg);
    outcome(
        bad.is_empty() && n > 0,
        format!("{} derivations, {} obligations checked, failures {:?}", n, checked, bad),
    )
}

fn c4_t2() -> Outcome {
    let reg = corpus::registry();
    let es = corpus::t2(&reg);
    let depths: BTreeSet<usize> = es
        .iter()
        .map(|e| check_derivation(&e.derivation, &reg).nesting)
        .collect();
    let (bad, checked) = soundness(&es, &reg);
    let ok = bad.is_empty() && (0..=2).all(|d| depths.contains(&d));
    outcome(
        ok,
        format!(
            "{} derivations, nesting depths {:?}, {} obligations checked, failures {:?}",
            es.len(),
            depths,
            checked,
            bad
        ),
    )
}

fn c5_t3() -> Outcome {
    let reg = corpus::registry();
    let es = corpus::t3(&reg);
    let covered: BTreeSet<&str> = es.iter().flat_map(|e| e.cases.iter().copied()).collect();
    let need = ["0", "1", "3", "4.1", "5", "6", "7", "8", "9", "10"];
    let missing: Vec<&str> = need
        .iter()
        .copied()
        .filter(|c| !covered.contains(c))
        .collect();
    // verify_bundle checks each obligation at λ and at the weakened λ ∪ {0}
    let with_condition = es
        .iter()
        .filter(|e| e.extractable)
        .filter(|e| {
            extract_with(&e.derivation, &reg, &e.given)
                .map(|b| b.condition.is_some())
                .unwrap_or(false)
        })
        .count();
    let (bad, checked) = soundness(&es, &reg);
    outcome(
        bad.is_empty() && missing.is_empty() && with_condition > 0,
        format!(
            "{} derivations ({} with a condition, each also checked weakened), cases missing {:?}, {} obligations checked, failures {:?}",
            es.len(),
            with_condition,
            missing,
            checked,
            bad
        ),
    )
}

fn c6_classes() -> Outcome {
    let reg = corpus::registry();
    let mut bad = Vec::new();
    let mut n = 0;
    for e in corpus::golden(&reg).iter().filter(|e| e.extractable) {
        let r = extract_with(&e.derivation, &reg, &e.given).and_then(|b| {
            let defs = b.compile(&reg)?;
            for d in &defs {
                validate_class(d, b.class(), &reg)?;
                if b.theory == Theory::T0 && has_recursion(d) {
                    return Err(Error::ClassViolation(format!("{} recurses", d.name)));
                }
            }
            Ok(defs.len())
        });
        match r {
            Ok(k) => n += k,
            Err(err) => bad.push(format!("{}: {}", e.name, err)),
        }
    }
    outcome(
        bad.is_empty() && n > 0,
        format!("{} witnesses validated, failures {:?}", n, bad),
    )
}

fn c7_unique() -> Outcome {
    let reg = corpus::registry();
    let goals = corpus::unique_goals(&reg);
    let v3 = hf::universe(3).unwrap();
    let mut ctx = EvalCtx::new(&reg, Arc::new(Universe::new(v3.clone())));
    ctx.max_steps = 10_000_000;
    let mut bad = Vec::new();
    let mut points = 0;
    for (e, goal, args) in &goals {
        let r = extract_with(&e.derivation, &reg, &e.given)
            .and_then(|b| definable_function(&b, goal));
        let t = match r {
            Ok(t) => t,
            Err(err) => {
                bad.push(format!("{}: {}", e.name, err));
                continue;
            }
        };
        let tuples: Vec<Vec<HFSet>> = if args.len() == 1 {
            v3.iter().map(|a| vec![a.clone()]).collect()
        } else {
            v3.iter()
                .flat_map(|a| v3.iter().map(move |b| vec![a.clone(), b.clone()]))
                .collect()
        };
        for tup in tuples {
            let want = match (e.name, tup.as_slice()) {
                ("unique pair", [x, y]) => hf::pair(x, y),
                ("unique union", [a]) => hf::big_union(a),
                ("unique closure", [x]) => hf::transitive_closure(x),
                _ => {
                    bad.push(format!("{}: no kernel function", e.name));
                    break;
                }
            };
            let mut val =
                Valuation::from_pairs(args.iter().map(|s| s.to_string()).zip(tup.iter().cloned()));
            ctx.reset_steps();
            points += 1;
            match eval_term(&t, &mut val, &ctx) {
                Ok(got) if got == want => {}
                Ok(got) => {
                    bad.push(format!("{} at {:?}: {} not {}", e.name, tup, got, want));
                    break;
                }
                Err(err) => {
                    bad.push(format!("{} at {:?}: {}", e.name, tup, err));
                    break;
                }
            }
        }
    }
    outcome(
        goals.len() >= 3 && bad.is_empty(),
        format!("{} goals, {} points, failures {:?}", goals.len(), points, bad),
    )
}

/// Five values other than `v`, deterministic.
fn perturb(v: &HFSet) -> Vec<HFSet> {
    let e = HFSet::empty();
    let mut cands = vec![
        hf::union2(v, &HFSet::singleton(v.clone())),
        HFSet::singleton(v.clone()),
        e.clone(),
        HFSet::singleton(e.clone()),
        hf::union2(v, &HFSet::singleton(e.clone())),
        hf::pair(v, &e),
        hf::kpair(v, v),
    ];
    if let Some(x) = v.children().last() {
        cands.insert(0, hf::diff(v, &HFSet::singleton(x.clone())));
    }
    let mut out = Vec::new();
    for c in cands {
        if c != *v && !out.contains(&c) {
            out.push(c);
        }
        if out.len() == 5 {
            break;
        }
    }
    out
}

fn c8_sigma1() -> Outcome {
    let reg = corpus::library_registry();
    let lib = corpus::library();
    let v3 = hf::universe(3).unwrap();
    let v4 = Arc::new(Universe::new(hf::universe(4).unwrap()));
    let mut ctx = EvalCtx::new(&reg, v4);
    ctx.max_steps = 50_000_000;
    let mut bad = Vec::new();
    let mut checks = 0;
    for d in &lib {
        let f = match synth_sigma1(d, &reg) {
            Ok(f) => f,
            Err(Error::UnsupportedScheme(_)) => match synth_sigma1_bang(d, &reg) {
                Ok(f) => f,
                Err(err) => {
                    bad.push(format!("{}: {}", d.name, err));
                    continue;
                }
            },
            Err(err) => {
                bad.push(format!("{}: {}", d.name, err));
                continue;
            }
        };
        let k = d.arity();
        let tuples: Vec<Vec<HFSet>> = if k == 1 {
            v3.iter().map(|a| vec![a.clone()]).collect()
        } else {
            v3.iter()
                .flat_map(|a| v3.iter().map(move |b| vec![a.clone(), b.clone()]))
                .collect()
        };
        let names: Vec<String> = (0..d.normal_arity)
            .map(|i| format!("x{}", i))
            .chain((0..d.safe_arity).map(|i| format!("a{}", i)))
            .collect();
        'tuples: for tup in tuples {
            let (ns, ss) = tup.split_at(d.normal_arity);
            let out = match evaluate(d, ns, ss, &reg) {
                Ok(r) => r.result,
                Err(err) => {
                    bad.push(format!("{}: {}", d.name, err));
                    break;
                }
            };
            let mut trial = vec![(out.clone(), true)];
            trial.extend(perturb(&out).into_iter().map(|p| (p, false)));
            for (b, want) in trial {
                let mut val = Valuation::from_pairs(
                    names
                        .iter()
                        .cloned()
                        .zip(tup.iter().cloned())
                        .chain([("b".to_string(), b.clone())]),
                );
                ctx.reset_steps();
                checks += 1;
                match eval(&f, &mut val, &ctx) {
                    Ok(got) if got == want => {}
                    Ok(got) => {
                        bad.push(format!("{} at {:?} b={}: {}", d.name, tup, b, got));
                        break 'tuples;
                    }
                    Err(err) => {
                        bad.push(format!("{} at {:?} b={}: {}", d.name, tup, b, err));
                        break 'tuples;
                    }
                }
            }
        }
    }
    outcome(
        lib.len() >= 8 && bad.is_empty(),
        format!("{} definitions, {} evaluations, failures {:?}", lib.len(), checks, bad),
    )
}

fn c9_size() -> Outcome {
    let reg = corpus::library_registry();
    let mut bad = Vec::new();
    let mut n = 0;
    for d in corpus::library()
        .iter()
        .filter(|d| d.tag == Some(ClassTag::PcsfIota))
    {
        let r = derive_size_poly(d, &reg).and_then(|p| check_size_bound(d, &p, 1000, 11, &reg));
        match r {
            Ok(SizeCheck::Pass { .. }) => n += 1,
            Ok(c) => bad.push(format!("{}: {:?}", d.name, c)),
            Err(err) => bad.push(format!("{}: {}", d.name, err)),
        }
    }
    let pair = FunctionDef::new("pair", 2, 0, hfwit::classes::SchemeNode::Pair);
    let wrong = SizePolynomial::parse("1").unwrap();
    let refuted = match check_size_bound(&pair, &wrong, 1000, 11, &reg) {
        Ok(SizeCheck::Counterexample {
            normals,
            tc_card,
            bound,
            ..
        }) => {
            let again = evaluate(&pair, &normals, &[], &reg).unwrap().result;
            again.tc_card() == tc_card && tc_card as u64 > bound
        }
        _ => false,
    };
    outcome(
        bad.is_empty() && refuted && n > 0,
        format!(
            "{} polynomials hold on 1000 samples, false pair bound refuted: {}, failures {:?}",
            n, refuted, bad
        ),
    )
}

fn c10_strat() -> Outcome {
    let rows = corpus::strat_table();
    let mut bad = Vec::new();
    for r in &rows {
        let n: BTreeSet<String> = r.normals.iter().map(|s| s.to_string()).collect();
        let s: BTreeSet<String> = r.safes.iter().map(|s| s.to_string()).collect();
        let f: Formula = corpus::f(r.formula);
        let got = check_stratified(&f, &n, &s).err().map(|v| v.clause);
        if got != r.expect {
            bad.push(r.label);
        }
    }
    outcome(
        rows.len() >= 20 && bad.is_empty(),
        format!(
            "{}/{} rows agree, disagreeing {:?}",
            rows.len() - bad.len(),
            rows.len(),
            bad
        ),
    )
}

#[test]
fn acceptance() {
    let secs = |s| Some(Duration::from_secs(s));
    let runs: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("1 kernel tc oracle", secs(5), c1_kernel),
        ("2 checker discrimination", None, c2_checker),
        ("3 T0/T1 witness soundness", secs(60), c3_t01),
        ("4 T2 witness soundness", None, c4_t2),
        ("5 T3 witness soundness", None, c5_t3),
        ("6 class discipline", None, c6_classes),
        ("7 unique-existence drivers", None, c7_unique),
        ("8 sigma1 round trip", None, c8_sigma1),
        ("9 size monitor", secs(30), c9_size),
        ("10 stratification table", None, c10_strat),
    ];
    let mut failed = Vec::new();
    let mut seen = HashSet::new();
    for (name, limit, f) in runs {
        assert!(seen.insert(name));
        let o = timed(limit, f);
        let line = format!(
            "criterion {}: {} {}\n",
            name,
            if o.ok { "PASS" } else { "FAIL" },
            o.detail
        );
        let _ = std::io::stderr().write_all(line.as_bytes());
        if !o.ok {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {:?}", failed);
}
