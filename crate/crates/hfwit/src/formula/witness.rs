use super::*;
use crate::error::{Error, Result};

fn kpair(a: Term, b: Term) -> Term {
    app("kpair", vec![a, b])
}

fn first(d: Term) -> Term {
    app("first", vec![d])
}

fn second(d: Term) -> Term {
    app("second", vec![d])
}

/// Component `i` of a right-nested `k`-tuple `⟨c0, ⟨c1, … c(k-1)⟩⟩`.
pub fn tuple_component(d: &Term, i: usize, k: usize) -> Term {
    let mut t = d.clone();
    for _ in 0..i {
        t = second(t);
    }
    if i + 1 < k {
        first(t)
    } else {
        t
    }
}

/// Right-nested tuple of the given terms.
pub fn tuple(ts: &[Term]) -> Term {
    match ts.len() {
        0 => Term::Zero,
        1 => ts[0].clone(),
        _ => kpair(ts[0].clone(), tuple(&ts[1..])),
    }
}

/// A name for a binder that does not occur free in any of `ts`.
fn binder_avoiding(pref: &str, ts: &[&Term]) -> String {
    if ts.iter().any(|t| fv_term(t).contains(pref)) {
        fresh(pref)
    } else {
        pref.to_string()
    }
}

/// "`c` is a function on `y`" as a bounded formula.
pub fn fun_on(c: &Term, y: &Term) -> Formula {
    let d = fresh("d");
    let e = fresh("e");
    let x = fresh("x");
    let dv = var(&d);
    let ev = var(&e);
    let is_pairs = ball(
        &d,
        c.clone(),
        and(
            Formula::Eq(dv.clone(), kpair(first(dv.clone()), second(dv.clone()))),
            Formula::In(first(dv.clone()), y.clone()),
        ),
    );
    let total = ball(
        &x,
        y.clone(),
        bex(&d, c.clone(), Formula::Eq(first(dv.clone()), var(&x))),
    );
    let single = ball(
        &d,
        c.clone(),
        ball(
            &e,
            c.clone(),
            or(
                Formula::Neq(first(dv.clone()), first(ev.clone())),
                Formula::Eq(dv, ev),
            ),
        ),
    );
    and_all(vec![is_pairs, total, single])
}

/// `w_φ(b)`: bounded formula saying `b` is a set of witnesses for `φ`.
pub fn witness_predicate(f: &Formula, b: &Term) -> Result<Formula> {
    if is_delta0(f) {
        return Ok(f.clone());
    }
    if let Some((vars, psi)) = sigma1_parts(f) {
        return Ok(and(
            Formula::Neq(b.clone(), Term::Zero),
            witness_set(&vars, psi, b),
        ));
    }
    if let Formula::BAll(x, y, s) = f {
        if let Some((vars, psi)) = sigma1_parts(s) {
            let nx = binder_avoiding(x, &[b, y]);
            let psi = subst_formula(psi, x, &var(&nx));
            let bx = apply(b.clone(), var(&nx));
            return Ok(and(
                fun_on(b, y),
                ball(
                    &nx,
                    y.clone(),
                    and(
                        Formula::Neq(bx.clone(), Term::Zero),
                        witness_set(&vars, &psi, &bx),
                    ),
                ),
            ));
        }
    }
    Err(Error::NotSigma(f.to_string()))
}

/// `∀d∈s ψ[c⃗ := components of d]`.
fn witness_set(vars: &[String], psi: &Formula, s: &Term) -> Formula {
    if vars.len() == 1 {
        let c = binder_avoiding(&vars[0], &[s]);
        return ball(&c, s.clone(), subst_formula(psi, &vars[0], &var(&c)));
    }
    let d = fresh("d");
    let dv = var(&d);
    let k = vars.len();
    let sub = Subst::new(
        vars.iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), tuple_component(&dv, i, k)))
            .collect(),
    );
    ball(&d, s.clone(), sub.formula(psi))
}

/// `b ∈ X ∧ ∀d∈X (ψ(d) → b = d)`.
pub fn unique_in(x: &ClassRef, c: &str, psi: &Formula, b: &Term) -> Formula {
    let d = fresh("d");
    let dv = var(&d);
    and(
        Formula::ClassEx(
            d.clone(),
            x.clone(),
            Box::new(Formula::Eq(dv.clone(), b.clone())),
        ),
        Formula::ClassAll(
            d.clone(),
            x.clone(),
            Box::new(or(
                negate(&subst_formula(psi, c, &dv)),
                Formula::Eq(b.clone(), dv),
            )),
        ),
    )
}

/// `∃a∃a'(θ(a) ∧ θ(a') ∧ a ≠ a')`.
pub fn not_unique(a: &str, theta: &Formula) -> Formula {
    let a2 = fresh(a.trim_start_matches(RESERVED));
    ex(
        a,
        ex(
            &a2,
            and(
                and(theta.clone(), subst_formula(theta, a, &var(&a2))),
                Formula::Neq(var(a), var(&a2)),
            ),
        ),
    )
}

/// The same inside a class: `∃a∈X ∃a'∈X(θ(a) ∧ θ(a') ∧ a ≠ a')`.
pub fn not_unique_in(x: &ClassRef, a: &str, theta: &Formula) -> Formula {
    let a2 = fresh(a.trim_start_matches(RESERVED));
    Formula::ClassEx(
        a.to_string(),
        x.clone(),
        Box::new(Formula::ClassEx(
            a2.clone(),
            x.clone(),
            Box::new(and(
                and(theta.clone(), subst_formula(theta, a, &var(&a2))),
                Formula::Neq(var(a), var(&a2)),
            )),
        )),
    )
}

/// `w!^X_φ(b)`: `b` is a witness for `φ` that is unique within `X`.
pub fn witness_bang_predicate(f: &Formula, b: &Term, x: &ClassRef) -> Result<Formula> {
    if is_delta0(f) {
        return Ok(f.clone());
    }
    if let Formula::ExBang(c, psi) = f {
        if is_delta0(psi) {
            return Ok(and(subst_formula(psi, c, b), unique_in(x, c, psi, b)));
        }
    }
    if let Formula::BAll(xv, y, s) = f {
        if let Formula::ExBang(c, psi) = &**s {
            if is_delta0(psi) {
                let nx = binder_avoiding(xv, &[b, y]);
                let psi = subst_formula(psi, xv, &var(&nx));
                let bx = apply(b.clone(), var(&nx));
                let inner = and(subst_formula(&psi, c, &bx), unique_in(x, c, &psi, &bx));
                return Ok(and(fun_on(b, y), ball(&nx, y.clone(), inner)));
            }
        }
    }
    Err(Error::NotSigmaBang(f.to_string()))
}

// ---------------------------------------------------------------- classes

/// Rebuilds `f` bottom-up, letting `on_class` replace class quantifiers.
fn map_classes(
    f: &Formula,
    on_class: &dyn Fn(bool, &str, &ClassRef, Formula) -> Formula,
) -> Formula {
    use Formula::*;
    let t = |x: &Term| map_classes_term(x, on_class);
    let r = |x: &Formula| Box::new(map_classes(x, on_class));
    match f {
        In(a, b) => In(t(a), t(b)),
        NotIn(a, b) => NotIn(t(a), t(b)),
        Eq(a, b) => Eq(t(a), t(b)),
        Neq(a, b) => Neq(t(a), t(b)),
        DPred(a) => DPred(t(a)),
        NotDPred(a) => NotDPred(t(a)),
        Or(a, b) => Or(r(a), r(b)),
        And(a, b) => And(r(a), r(b)),
        BEx(v, a, p) => BEx(v.clone(), t(a), r(p)),
        BAll(v, a, p) => BAll(v.clone(), t(a), r(p)),
        Ex(v, p) => Ex(v.clone(), r(p)),
        All(v, p) => All(v.clone(), r(p)),
        ExBang(v, p) => ExBang(v.clone(), r(p)),
        AllBangNeg(v, p) => AllBangNeg(v.clone(), r(p)),
        ClassAll(v, c, p) => on_class(true, v, c, map_classes(p, on_class)),
        ClassEx(v, c, p) => on_class(false, v, c, map_classes(p, on_class)),
    }
}

fn map_classes_term(
    t: &Term,
    on_class: &dyn Fn(bool, &str, &ClassRef, Formula) -> Formula,
) -> Term {
    let tt = |x: &Term| Box::new(map_classes_term(x, on_class));
    match t {
        Term::Var(_) | Term::Zero => t.clone(),
        Term::App(s, ns, ss) => Term::App(
            s.clone(),
            ns.iter().map(|a| map_classes_term(a, on_class)).collect(),
            ss.iter().map(|a| map_classes_term(a, on_class)).collect(),
        ),
        Term::BUnion(y, b, e) => Term::BUnion(y.clone(), tt(b), tt(e)),
        Term::Image(y, b, e) => Term::Image(y.clone(), tt(b), tt(e)),
        Term::Iota(y, b, e) => Term::Iota(y.clone(), tt(b), tt(e)),
        Term::Sep(y, b, f) => Term::Sep(y.clone(), tt(b), Box::new(map_classes(f, on_class))),
        Term::Cases(f, a, b) => Term::Cases(Box::new(map_classes(f, on_class)), tt(a), tt(b)),
        Term::Rec(r) => Term::Rec(Box::new(RecTerm {
            x: r.x.clone(),
            prev: r.prev.clone(),
            step: map_classes_term(&r.step, on_class),
            arg: map_classes_term(&r.arg, on_class),
        })),
    }
}

fn expand_one(all_q: bool, d: &str, l: &Condition, p: &Formula) -> Formula {
    match l {
        Condition::Point(t) => subst_formula(p, d, t),
        Condition::Or(a, b) => {
            let x = expand_one(all_q, d, a, p);
            let y = expand_one(all_q, d, b, p);
            if all_q {
                and(x, y)
            } else {
                or(x, y)
            }
        }
        Condition::BEx(a, t, inner) => {
            let mut avoid = fv_formula(p);
            avoid.insert(d.to_string());
            let na = if avoid.contains(a) {
                fresh(a.trim_start_matches(RESERVED))
            } else {
                a.clone()
            };
            let inner = subst_condition(inner, a, &var(&na));
            let body = expand_one(all_q, d, &inner, p);
            if all_q {
                ball(&na, t.clone(), body)
            } else {
                bex(&na, t.clone(), body)
            }
        }
    }
}

/// Replaces every quantifier over a condition-defined class by the bounded
/// formula it abbreviates. Quantifiers over the parameter `X` stay.
pub fn expand_classes(f: &Formula) -> Formula {
    map_classes(f, &|all_q, v, c, p| match c {
        ClassRef::Param => {
            if all_q {
                Formula::ClassAll(v.to_string(), ClassRef::Param, Box::new(p))
            } else {
                Formula::ClassEx(v.to_string(), ClassRef::Param, Box::new(p))
            }
        }
        ClassRef::Cond(l) => expand_one(all_q, v, l, &p),
    })
}

pub fn expand_classes_term(t: &Term) -> Term {
    map_classes_term(t, &|all_q, v, c, p| match c {
        ClassRef::Param => {
            if all_q {
                Formula::ClassAll(v.to_string(), ClassRef::Param, Box::new(p))
            } else {
                Formula::ClassEx(v.to_string(), ClassRef::Param, Box::new(p))
            }
        }
        ClassRef::Cond(l) => expand_one(all_q, v, l, &p),
    })
}

/// Substitutes the condition `l` for the class parameter `X`, renaming
/// binders that would capture its free variables.
pub fn replace_param(f: &Formula, l: &Condition) -> Formula {
    let renamed = Subst::new(vec![]).avoiding(&fv_condition(l)).formula(f);
    let c = ClassRef::Cond(Box::new(l.clone()));
    map_classes(&renamed, &|all_q, v, cr, p| {
        let cr = match cr {
            ClassRef::Param => c.clone(),
            o => o.clone(),
        };
        if all_q {
            Formula::ClassAll(v.to_string(), cr, Box::new(p))
        } else {
            Formula::ClassEx(v.to_string(), cr, Box::new(p))
        }
    })
}

pub fn replace_param_term(t: &Term, l: &Condition) -> Term {
    let renamed = Subst::new(vec![]).avoiding(&fv_condition(l)).term(t);
    let c = ClassRef::Cond(Box::new(l.clone()));
    map_classes_term(&renamed, &|all_q, v, cr, p| {
        let cr = match cr {
            ClassRef::Param => c.clone(),
            o => o.clone(),
        };
        if all_q {
            Formula::ClassAll(v.to_string(), cr, Box::new(p))
        } else {
            Formula::ClassEx(v.to_string(), cr, Box::new(p))
        }
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::classes::Registry;
    use crate::formula::eval::Universe;
    use crate::formula::{eval, parse_formula, EvalCtx, FormulaClass, ParseOpts, Valuation};
    use crate::hf::{self, HFSet};

    fn p(s: &str) -> Formula {
        parse_formula(s, ParseOpts::default()).unwrap()
    }

    #[test]
    fn shapes() {
        let psi = p("(in x c)");
        assert_eq!(witness_predicate(&psi, &var("b")).unwrap(), psi);
        let s = p("(ex c (in x c))");
        assert_eq!(
            witness_predicate(&s, &var("b")).unwrap(),
            p("(and (neq b zero) (ball c b (in x c)))")
        );
        let reg = Registry::standard();
        let w = witness_predicate(&p("(ball x y (ex c (in x c)))"), &var("b")).unwrap();
        assert_eq!(classify(&w, 0, &reg).unwrap(), FormulaClass::Delta0);
        assert!(witness_predicate(&p("(all c (in x c))"), &var("b")).is_err());
        assert!(witness_bang_predicate(&s, &var("b"), &ClassRef::Param).is_err());
    }

    #[test]
    fn point_class_collapses() {
        // ∃!c ψ with X = X_{t=*}: ψ(b) ∧ b = t ∧ (ψ(t) → b = t)
        let f = p("(exu c (in c x))");
        let l = Condition::Point(var("t"));
        let w = witness_bang_predicate(&f, &var("b"), &ClassRef::Cond(Box::new(l))).unwrap();
        let e = expand_classes(&w);
        assert_eq!(
            e,
            p("(and (in b x) (and (eq t b) (or (notin t x) (eq b t))))")
        );
    }

    #[test]
    fn multi_witness_blocks_decode_tuples() {
        let reg = Registry::standard();
        let ctx = EvalCtx::new(&reg, Arc::new(Universe::new(hf::universe(3).unwrap())));
        let f = p("(ex c (ex e (and (in c x) (in e c))))");
        let w = witness_predicate(&f, &var("b")).unwrap();
        let x = HFSet::parse("{{{}}}").unwrap();
        let good = hf::make_set(vec![hf::kpair(
            &HFSet::parse("{{}}").unwrap(),
            &HFSet::empty(),
        )]);
        let mut v = Valuation::from_pairs([("x".to_string(), x.clone()), ("b".into(), good)]);
        assert!(eval(&w, &mut v, &ctx).unwrap());
        v.set(
            "b",
            hf::make_set(vec![hf::kpair(&HFSet::empty(), &HFSet::empty())]),
        );
        assert!(!eval(&w, &mut v, &ctx).unwrap());
    }

    #[test]
    fn replace_param_avoids_capture() {
        let f = p("(bex t y (cex d X (eq d t)))");
        let l = Condition::Point(var("t"));
        let g = replace_param(&f, &l);
        match &g {
            Formula::BEx(nv, _, _) => assert_ne!(nv, "t"),
            _ => panic!(),
        }
        assert!(fv_formula(&g).contains("t"));
    }
}
