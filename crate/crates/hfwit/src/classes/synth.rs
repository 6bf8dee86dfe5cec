//! Defining formulas for scheme definitions.

use super::*;
use crate::formula::{
    and, and_all, app, app2, ball, bex, fresh, fun_on, nvar, or, singleton, svar, var, Subst, Sym,
};

fn default_args(d: &FunctionDef) -> Vec<Term> {
    let mut v: Vec<Term> = (0..d.normal_arity)
        .map(|i| nvar(&format!("x{}", i)))
        .collect();
    v.extend((0..d.safe_arity).map(|i| svar(&format!("a{}", i))));
    v
}

/// `φ_f(x⃗, a⃗, b)`: a Σ1 formula with `f(x⃗/a⃗) = b` (Δ0 when no inner
/// value needs a quantifier).
pub fn synth_sigma1(d: &FunctionDef, reg: &Registry) -> Result<Formula> {
    synth_sigma1_at(d, &default_args(d), &var("b"), reg)
}

pub fn synth_sigma1_at(
    d: &FunctionDef,
    args: &[Term],
    value: &Term,
    reg: &Registry,
) -> Result<Formula> {
    let (vars, m) = sigma(d, args, value, reg)?;
    Ok(vars.iter().rev().fold(m, |acc, v| formula::ex(v, acc)))
}

/// `∃!e(β(x⃗, a⃗, e) ∧ e = b)` with β bounded over the definitions' symbols.
pub fn synth_sigma1_bang(d: &FunctionDef, reg: &Registry) -> Result<Formula> {
    synth_sigma1_bang_at(d, &default_args(d), &var("b"), reg)
}

pub fn synth_sigma1_bang_at(
    d: &FunctionDef,
    args: &[Term],
    value: &Term,
    reg: &Registry,
) -> Result<Formula> {
    let e = fresh("e");
    let beta = bang(d, args, &var(&e), reg)?;
    Ok(formula::exbang(
        &e,
        and(beta, Formula::Eq(var(&e), value.clone())),
    ))
}

fn pair_def(a: &Term, b: &Term, v: &Term) -> Formula {
    let z = fresh("z");
    and_all(vec![
        Formula::In(a.clone(), v.clone()),
        Formula::In(b.clone(), v.clone()),
        ball(
            &z,
            v.clone(),
            or(
                Formula::Eq(var(&z), a.clone()),
                Formula::Eq(var(&z), b.clone()),
            ),
        ),
    ])
}

fn diff_def(a: &Term, b: &Term, v: &Term) -> Formula {
    let z = fresh("z");
    and(
        ball(
            &z,
            v.clone(),
            and(
                Formula::In(var(&z), a.clone()),
                Formula::NotIn(var(&z), b.clone()),
            ),
        ),
        ball(
            &z,
            a.clone(),
            or(
                Formula::In(var(&z), b.clone()),
                Formula::In(var(&z), v.clone()),
            ),
        ),
    )
}

fn named_app(name: &str, args: &[Term], reg: &Registry) -> Term {
    let (n, _) = reg.signature(name).unwrap_or((0, args.len()));
    app2(name, args[..n].to_vec(), args[n..].to_vec())
}

fn def_app(d: &Arc<FunctionDef>, args: &[Term]) -> Term {
    Term::App(
        Sym::Def(d.clone()),
        args[..d.normal_arity].to_vec(),
        args[d.normal_arity..].to_vec(),
    )
}

/// Index of the bound argument of a bounded scheme.
fn bound_index(d: &FunctionDef, on: Sort) -> usize {
    if on == Sort::Safe {
        d.normal_arity + d.safe_arity - 1
    } else {
        d.normal_arity - 1
    }
}

fn sep_theta(theta: &Formula, args: &[Term], e: &Term) -> Formula {
    let mut pairs: Vec<(String, Term)> = args
        .iter()
        .enumerate()
        .map(|(i, a)| (arg_name(i), a.clone()))
        .collect();
    pairs.push((ELEM.to_string(), e.clone()));
    Subst::new(pairs).formula(theta)
}

fn sep_def(theta: &Formula, c: &Term, args: &[Term], v: &Term) -> Formula {
    let e = fresh("e");
    let th = sep_theta(theta, args, &var(&e));
    and(
        ball(
            &e,
            v.clone(),
            and(Formula::In(var(&e), c.clone()), th.clone()),
        ),
        ball(
            &e,
            c.clone(),
            or(formula::negate(&th), Formula::In(var(&e), v.clone())),
        ),
    )
}

fn tc_bound(x: &Term) -> Term {
    app2(
        "tc",
        vec![app("union2", vec![x.clone(), singleton(x.clone())])],
        vec![],
    )
}

fn sigma(
    d: &FunctionDef,
    args: &[Term],
    v: &Term,
    reg: &Registry,
) -> Result<(Vec<String>, Formula)> {
    use SchemeNode::*;
    if args.len() != d.arity() {
        return Err(Error::Arity(format!(
            "definition `{}` takes {} arguments",
            d.name,
            d.arity()
        )));
    }
    if matches!(d.body, Pair | Diff) && args.len() != 2 {
        return Err(Error::Arity("pair/diff take two arguments".into()));
    }
    Ok(match &d.body {
        Proj(i) => (vec![], Formula::Eq(v.clone(), args[*i].clone())),
        Pair => (vec![], pair_def(&args[0], &args[1], v)),
        Diff => (vec![], diff_def(&args[0], &args[1], v)),
        Lib(b) => (
            vec![],
            Formula::Eq(v.clone(), named_app(b.name(), args, reg)),
        ),
        Oracle(g) => (vec![], Formula::Eq(v.clone(), named_app(g, args, reg))),
        Compose { h, gs } => compose(h, gs.iter(), args, v, reg)?,
        SafeCompose { h, rs, ts } => {
            let normals = &args[..d.normal_arity];
            let mut vars = Vec::new();
            let mut parts = Vec::new();
            let mut inner = Vec::new();
            for r in rs {
                inner_value(r, normals, "r", &mut vars, &mut parts, &mut inner, reg)?;
            }
            for t in ts {
                inner_value(t, args, "t", &mut vars, &mut parts, &mut inner, reg)?;
            }
            let (vs, m) = sigma(h, &inner, v, reg)?;
            vars.extend(vs);
            parts.push(m);
            (vars, and_all(parts))
        }
        BoundedUnion { g, on } => {
            let zi = bound_index(d, *on);
            let z = args[zi].clone();
            let y = fresh("y");
            let u = fresh("u");
            let e = fresh("e");
            let bb = fresh("B");
            let mut gargs = args.to_vec();
            gargs[zi] = var(&y);
            let (vs, mg) = sigma(g, &gargs, &var(&u), reg)?;
            if !vs.is_empty() {
                return Err(Error::UnsupportedScheme(
                    "bounded union over a body that needs a quantifier".into(),
                ));
            }
            let sub = ball(&e, var(&u), Formula::In(var(&e), v.clone()));
            let cover = ball(&y, z.clone(), bex(&u, var(&bb), and(mg.clone(), sub)));
            let exact = ball(
                &e,
                v.clone(),
                bex(
                    &y,
                    z,
                    bex(&u, var(&bb), and(mg, Formula::In(var(&e), var(&u)))),
                ),
            );
            (vec![bb], and(cover, exact))
        }
        SetRecursion { h } | PredicativeSetRecursion { h } => {
            let x = &args[0];
            let c = fresh("c");
            let z = fresh("z");
            let cv = var(&c);
            let t = tc_bound(x);
            let mut hargs = vec![var(&z)];
            hargs.extend(args[1..].iter().cloned());
            hargs.push(app("image", vec![cv.clone(), var(&z)]));
            let (vs, mh) = sigma(h, &hargs, &formula::apply(cv.clone(), var(&z)), reg)?;
            if !vs.is_empty() {
                return Err(Error::UnsupportedScheme(
                    "recursion step that needs a quantifier".into(),
                ));
            }
            let m = and_all(vec![
                fun_on(&cv, &t),
                ball(&z, t, mh),
                Formula::Eq(v.clone(), formula::apply(cv, x.clone())),
            ]);
            (vec![c], m)
        }
        Delta0Separation { theta, on } => {
            let c = args[bound_index(d, *on)].clone();
            (vec![], sep_def(theta, &c, args, v))
        }
        Iota { .. } => {
            return Err(Error::UnsupportedScheme(
                "iota has a Sigma1-bang definition only".into(),
            ))
        }
        NormalSeparation { .. } => {
            return Err(Error::UnsupportedScheme("normal separation".into()))
        }
    })
}

/// Defines the value of `g(args)` for use as an argument of an outer
/// function. A value given by an equation `u = t` is passed on as `t`.
fn inner_value(
    g: &FunctionDef,
    args: &[Term],
    base: &str,
    vars: &mut Vec<String>,
    parts: &mut Vec<Formula>,
    inner: &mut Vec<Term>,
    reg: &Registry,
) -> Result<()> {
    let u = fresh(base);
    let (vs, m) = sigma(g, args, &var(&u), reg)?;
    if vs.is_empty() {
        if let Formula::Eq(Term::Var(x), t) = &m {
            if x.name == u && !formula::fv_term(t).contains(&u) {
                inner.push(t.clone());
                return Ok(());
            }
        }
    }
    vars.push(u.clone());
    vars.extend(vs);
    parts.push(m);
    inner.push(var(&u));
    Ok(())
}

fn compose<'a, I: Iterator<Item = &'a Arc<FunctionDef>>>(
    h: &FunctionDef,
    gs: I,
    args: &[Term],
    v: &Term,
    reg: &Registry,
) -> Result<(Vec<String>, Formula)> {
    let mut vars = Vec::new();
    let mut parts = Vec::new();
    let mut inner = Vec::new();
    for g in gs {
        inner_value(g, args, "r", &mut vars, &mut parts, &mut inner, reg)?;
    }
    let (vs, m) = sigma(h, &inner, v, reg)?;
    vars.extend(vs);
    parts.push(m);
    Ok((vars, and_all(parts)))
}

/// Bounded defining formula `β(args, v)`; inner values are bound by
/// `∃u∈{g(args)}`.
fn bang(d: &FunctionDef, args: &[Term], v: &Term, reg: &Registry) -> Result<Formula> {
    use SchemeNode::*;
    if args.len() != d.arity() {
        return Err(Error::Arity(format!(
            "definition `{}` takes {} arguments",
            d.name,
            d.arity()
        )));
    }
    let d_arc = Arc::new(d.clone());
    Ok(match &d.body {
        Proj(_) | Pair | Diff | Lib(_) | Oracle(_) | Delta0Separation { .. } => {
            sigma(d, args, v, reg)?.1
        }
        Compose { h, gs } => inner_values(h, gs.iter().map(|g| (g, args.to_vec())), v, reg)?,
        SafeCompose { h, rs, ts } => {
            let normals = args[..d.normal_arity].to_vec();
            let items = rs
                .iter()
                .map(|r| (r, normals.clone()))
                .chain(ts.iter().map(|t| (t, args.to_vec())));
            inner_values(h, items, v, reg)?
        }
        BoundedUnion { g, on } => {
            let zi = bound_index(d, *on);
            let y = fresh("y");
            let mut gargs = args.to_vec();
            gargs[zi] = var(&y);
            Formula::Eq(
                v.clone(),
                Term::BUnion(y, Box::new(args[zi].clone()), Box::new(def_app(g, &gargs))),
            )
        }
        SetRecursion { h } | PredicativeSetRecursion { h } => {
            let x = &args[0];
            let c = fresh("c");
            let z = fresh("z");
            let w = fresh("w");
            let cv = var(&c);
            let t = tc_bound(x);
            let mut zargs = args.to_vec();
            zargs[0] = var(&w);
            let graph = Term::Image(
                w.clone(),
                Box::new(t.clone()),
                Box::new(app("kpair", vec![var(&w), def_app(&d_arc, &zargs)])),
            );
            let mut hargs = vec![var(&z)];
            hargs.extend(args[1..].iter().cloned());
            hargs.push(app("image", vec![cv.clone(), var(&z)]));
            let step = bang(h, &hargs, &formula::apply(cv.clone(), var(&z)), reg)?;
            bex(
                &c,
                singleton(graph),
                and_all(vec![
                    fun_on(&cv, &t),
                    ball(&z, t, step),
                    Formula::Eq(v.clone(), formula::apply(cv, x.clone())),
                ]),
            )
        }
        Iota { g, on } => {
            // (∃b∈c β_g(b, v) ∧ ∀b'∈c g(b') = v) ∨ (v = ∅ ∧ (c = ∅ ∨ ∃b0,b1∈c g(b0) ≠ g(b1)))
            let zi = bound_index(d, *on);
            let c = args[zi].clone();
            let at = |b: &str| {
                let mut a = args.to_vec();
                a[zi] = var(b);
                a
            };
            let b = fresh("b");
            let b1 = fresh("b");
            let b2 = fresh("b");
            let unique = and(
                bex(&b, c.clone(), bang(g, &at(&b), v, reg)?),
                ball(&b1, c.clone(), Formula::Eq(def_app(g, &at(&b1)), v.clone())),
            );
            let collide = bex(
                &b1,
                c.clone(),
                bex(
                    &b2,
                    c.clone(),
                    Formula::Neq(def_app(g, &at(&b1)), def_app(g, &at(&b2))),
                ),
            );
            or(
                unique,
                and(
                    Formula::Eq(v.clone(), Term::Zero),
                    or(Formula::Eq(c, Term::Zero), collide),
                ),
            )
        }
        NormalSeparation { g, on } => {
            let zi = bound_index(d, *on);
            let c = args[zi].clone();
            let e = fresh("e");
            let mut ga = args.to_vec();
            ga[zi] = var(&e);
            let keep = Formula::Neq(def_app(g, &ga), Term::Zero);
            and(
                ball(
                    &e,
                    v.clone(),
                    and(Formula::In(var(&e), c.clone()), keep.clone()),
                ),
                ball(
                    &e,
                    c,
                    or(formula::negate(&keep), Formula::In(var(&e), v.clone())),
                ),
            )
        }
    })
}

fn inner_values<'a, I>(h: &FunctionDef, items: I, v: &Term, reg: &Registry) -> Result<Formula>
where
    I: Iterator<Item = (&'a Arc<FunctionDef>, Vec<Term>)>,
{
    let mut binders = Vec::new();
    let mut inner = Vec::new();
    let mut parts = Vec::new();
    for (g, a) in items {
        let u = fresh("u");
        parts.push(bang(g, &a, &var(&u), reg)?);
        binders.push((u.clone(), singleton(def_app(g, &a))));
        inner.push(var(&u));
    }
    parts.push(bang(h, &inner, v, reg)?);
    let body = and_all(parts);
    Ok(binders
        .into_iter()
        .rev()
        .fold(body, |acc, (u, t)| bex(&u, t, acc)))
}
