use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::*;
use crate::classes::Registry;
use crate::error::{Error, Result};
use crate::hf::{self, HFSet};

/// A finite scratch universe for unbounded quantifiers.
#[derive(Debug)]
pub struct Universe {
    pub elems: Vec<HFSet>,
    index: HashSet<HFSet>,
}

impl Universe {
    pub fn new(elems: Vec<HFSet>) -> Universe {
        let index = elems.iter().cloned().collect();
        Universe { elems, index }
    }

    pub fn contains(&self, x: &HFSet) -> bool {
        self.index.contains(x)
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }
}

/// Values of free variables; later bindings shadow earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Valuation(Vec<(String, HFSet)>);

impl Valuation {
    pub fn new() -> Valuation {
        Valuation(Vec::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, HFSet)>>(it: I) -> Valuation {
        Valuation(it.into_iter().collect())
    }

    pub fn get(&self, name: &str) -> Option<&HFSet> {
        self.0.iter().rev().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn push(&mut self, name: &str, v: HFSet) {
        self.0.push((name.to_string(), v));
    }

    pub fn pop(&mut self) {
        self.0.pop();
    }

    pub fn set(&mut self, name: &str, v: HFSet) {
        self.0.retain(|(n, _)| n != name);
        self.0.push((name.to_string(), v));
    }

    pub fn pairs(&self) -> &[(String, HFSet)] {
        &self.0
    }
}

/// Everything evaluation needs besides the valuation.
pub struct EvalCtx<'a> {
    pub reg: &'a Registry,
    pub universe: Arc<Universe>,
    /// `None` means every set is in 𝒟.
    pub d_universe: Option<Arc<HashSet<HFSet>>>,
    /// Members of the class parameter `X`, once bound.
    pub class_param: Option<Arc<Vec<HFSet>>>,
    pub max_steps: u64,
    pub max_tc: usize,
    steps: Cell<u64>,
}

impl<'a> EvalCtx<'a> {
    pub fn new(reg: &'a Registry, universe: Arc<Universe>) -> EvalCtx<'a> {
        EvalCtx {
            reg,
            universe,
            d_universe: None,
            class_param: None,
            max_steps: 10_000_000,
            max_tc: 10_000,
            steps: Cell::new(0),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps.get()
    }

    pub fn reset_steps(&self) {
        self.steps.set(0)
    }

    pub fn tick(&self) -> Result<()> {
        let n = self.steps.get() + 1;
        self.steps.set(n);
        if n > self.max_steps {
            Err(Error::ResourceLimit(format!(
                "more than {} evaluation steps",
                self.max_steps
            )))
        } else {
            Ok(())
        }
    }

    pub fn check_size(&self, v: &HFSet) -> Result<()> {
        if v.tc_card() > self.max_tc {
            Err(Error::ResourceLimit(format!(
                "intermediate set of TC size {} exceeds {}",
                v.tc_card(),
                self.max_tc
            )))
        } else {
            Ok(())
        }
    }

    fn in_d(&self, v: &HFSet) -> bool {
        match &self.d_universe {
            None => true,
            Some(d) => d.contains(v),
        }
    }
}

pub fn eval_term(t: &Term, val: &mut Valuation, ctx: &EvalCtx) -> Result<HFSet> {
    ctx.tick()?;
    match t {
        Term::Var(v) => val
            .get(&v.name)
            .cloned()
            .ok_or_else(|| Error::UnboundVariable(v.name.clone())),
        Term::Zero => Ok(HFSet::empty()),
        Term::App(s, ns, ss) => {
            let nv = ns
                .iter()
                .map(|a| eval_term(a, val, ctx))
                .collect::<Result<Vec<_>>>()?;
            let sv = ss
                .iter()
                .map(|a| eval_term(a, val, ctx))
                .collect::<Result<Vec<_>>>()?;
            let r = match s {
                Sym::Name(n) => ctx.reg.call(n, &nv, &sv, ctx)?,
                Sym::Def(d) => crate::eval::run_def(d, &nv, &sv, ctx)?,
            };
            ctx.check_size(&r)?;
            Ok(r)
        }
        Term::BUnion(y, b, e) => {
            let bound = eval_term(b, val, ctx)?;
            let mut acc: Vec<HFSet> = Vec::new();
            for m in bound.children() {
                val.push(y, m.clone());
                let r = eval_term(e, val, ctx);
                val.pop();
                acc.extend(r?.children().iter().cloned());
            }
            let r = hf::make_set(acc);
            ctx.check_size(&r)?;
            Ok(r)
        }
        Term::Image(y, b, e) => {
            let bound = eval_term(b, val, ctx)?;
            let mut acc = Vec::with_capacity(bound.len());
            for m in bound.children() {
                val.push(y, m.clone());
                let r = eval_term(e, val, ctx);
                val.pop();
                acc.push(r?);
            }
            let r = hf::make_set(acc);
            ctx.check_size(&r)?;
            Ok(r)
        }
        Term::Iota(y, b, e) => {
            let bound = eval_term(b, val, ctx)?;
            let mut found: Option<HFSet> = None;
            for m in bound.children() {
                val.push(y, m.clone());
                let r = eval_term(e, val, ctx);
                val.pop();
                let r = r?;
                match &found {
                    None => found = Some(r),
                    Some(f) if *f == r => {}
                    Some(_) => return Ok(HFSet::empty()),
                }
            }
            Ok(found.unwrap_or_else(HFSet::empty))
        }
        Term::Sep(y, b, f) => {
            let bound = eval_term(b, val, ctx)?;
            let mut acc = Vec::new();
            for m in bound.children() {
                val.push(y, m.clone());
                let r = eval(f, val, ctx);
                val.pop();
                if r? {
                    acc.push(m.clone());
                }
            }
            Ok(HFSet::from_canonical(acc))
        }
        Term::Cases(f, a, b) => {
            if eval(f, val, ctx)? {
                eval_term(a, val, ctx)
            } else {
                eval_term(b, val, ctx)
            }
        }
        Term::Rec(r) => {
            let arg = eval_term(&r.arg, val, ctx)?;
            let mut memo = HashMap::new();
            rec_at(r, &arg, val, ctx, &mut memo)
        }
    }
}

fn rec_at(
    r: &RecTerm,
    x: &HFSet,
    val: &mut Valuation,
    ctx: &EvalCtx,
    memo: &mut HashMap<HFSet, HFSet>,
) -> Result<HFSet> {
    if let Some(v) = memo.get(x) {
        return Ok(v.clone());
    }
    let mut prev = Vec::with_capacity(x.len());
    for z in x.children() {
        prev.push(rec_at(r, z, val, ctx, memo)?);
    }
    val.push(&r.x, x.clone());
    val.push(&r.prev, hf::make_set(prev));
    let out = eval_term(&r.step, val, ctx);
    val.pop();
    val.pop();
    let out = out?;
    ctx.check_size(&out)?;
    memo.insert(x.clone(), out.clone());
    Ok(out)
}

/// Members of a class in the current valuation.
pub fn class_members(c: &ClassRef, val: &mut Valuation, ctx: &EvalCtx) -> Result<Vec<HFSet>> {
    match c {
        ClassRef::Param => ctx
            .class_param
            .as_ref()
            .map(|v| v.as_ref().clone())
            .ok_or_else(|| Error::UnboundConditionVariable("X".into())),
        ClassRef::Cond(l) => {
            let mut out = Vec::new();
            condition_members(l, val, ctx, &mut out)?;
            out.sort();
            out.dedup();
            Ok(out)
        }
    }
}

pub fn condition_members(
    c: &Condition,
    val: &mut Valuation,
    ctx: &EvalCtx,
    out: &mut Vec<HFSet>,
) -> Result<()> {
    match c {
        Condition::Point(t) => {
            out.push(eval_term(t, val, ctx)?);
            Ok(())
        }
        Condition::Or(a, b) => {
            condition_members(a, val, ctx, out)?;
            condition_members(b, val, ctx, out)
        }
        Condition::BEx(v, t, l) => {
            let bound = eval_term(t, val, ctx)?;
            for m in bound.children() {
                val.push(v, m.clone());
                let r = condition_members(l, val, ctx, out);
                val.pop();
                r?;
            }
            Ok(())
        }
    }
}

/// Truth of `f`. Bounded quantifiers range over actual members, unbounded
/// ones over `ctx.universe`.
pub fn eval(f: &Formula, val: &mut Valuation, ctx: &EvalCtx) -> Result<bool> {
    use Formula::*;
    ctx.tick()?;
    match f {
        In(a, b) => {
            let a = eval_term(a, val, ctx)?;
            Ok(eval_term(b, val, ctx)?.contains(&a))
        }
        NotIn(a, b) => {
            let a = eval_term(a, val, ctx)?;
            Ok(!eval_term(b, val, ctx)?.contains(&a))
        }
        Eq(a, b) => Ok(eval_term(a, val, ctx)? == eval_term(b, val, ctx)?),
        Neq(a, b) => Ok(eval_term(a, val, ctx)? != eval_term(b, val, ctx)?),
        DPred(t) => Ok(ctx.in_d(&eval_term(t, val, ctx)?)),
        NotDPred(t) => Ok(!ctx.in_d(&eval_term(t, val, ctx)?)),
        Or(a, b) => Ok(eval(a, val, ctx)? || eval(b, val, ctx)?),
        And(a, b) => Ok(eval(a, val, ctx)? && eval(b, val, ctx)?),
        BEx(v, t, p) => {
            let bound = eval_term(t, val, ctx)?;
            for m in bound.children() {
                val.push(v, m.clone());
                let r = eval(p, val, ctx);
                val.pop();
                if r? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        BAll(v, t, p) => {
            let bound = eval_term(t, val, ctx)?;
            for m in bound.children() {
                val.push(v, m.clone());
                let r = eval(p, val, ctx);
                val.pop();
                if !r? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Ex(..) => {
            let (vars, m) = ex_block(f);
            exists_block(&vars, m, val, ctx)
        }
        All(..) => {
            let (vars, m) = all_block(f);
            Ok(!exists_block(&vars, &negate(m), val, ctx)?)
        }
        ExBang(v, p) => Ok(count_upto2(v, p, val, ctx)? == 1),
        AllBangNeg(v, p) => Ok(count_upto2(v, &negate(p), val, ctx)? != 1),
        ClassAll(v, c, p) => {
            for m in class_members(c, val, ctx)? {
                val.push(v, m);
                let r = eval(p, val, ctx);
                val.pop();
                if !r? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        ClassEx(v, c, p) => {
            for m in class_members(c, val, ctx)? {
                val.push(v, m);
                let r = eval(p, val, ctx);
                val.pop();
                if r? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

fn ex_block(f: &Formula) -> (Vec<String>, &Formula) {
    let mut vars = Vec::new();
    let mut cur = f;
    while let Formula::Ex(v, p) = cur {
        vars.push(v.clone());
        cur = p;
    }
    (vars, cur)
}

fn all_block(f: &Formula) -> (Vec<String>, &Formula) {
    let mut vars = Vec::new();
    let mut cur = f;
    while let Formula::All(v, p) = cur {
        vars.push(v.clone());
        cur = p;
    }
    (vars, cur)
}

/// A term that `v` must equal for the conjunction to hold.
fn forced_value<'f>(v: &str, conj: &[&'f Formula], blocked: &[String]) -> Option<&'f Term> {
    for c in conj {
        if let Formula::Eq(a, b) = c {
            for (x, t) in [(a, b), (b, a)] {
                if matches!(x, Term::Var(xv) if xv.name == v) {
                    let fv = fv_term(t);
                    if !fv.contains(v) && !blocked.iter().any(|u| fv.contains(u)) {
                        return Some(t);
                    }
                }
            }
        }
    }
    None
}

/// `∃vars m` over the universe. Variables pinned by an equation are
/// instantiated directly; conjuncts are checked as soon as they are closed.
/// Both are exact for the finite-universe semantics.
fn exists_block(vars: &[String], m: &Formula, val: &mut Valuation, ctx: &EvalCtx) -> Result<bool> {
    let conj = conjuncts(m);
    let fvs: Vec<Vec<usize>> = conj
        .iter()
        .map(|c| {
            let fv = fv_formula(c);
            (0..vars.len()).filter(|&i| fv.contains(&vars[i])).collect()
        })
        .collect();
    let mut assigned = vec![false; vars.len()];
    // conjuncts with no block variables first
    for (i, c) in conj.iter().enumerate() {
        if fvs[i].is_empty() && !eval(c, val, ctx)? {
            return Ok(false);
        }
    }
    search(vars, &conj, &fvs, &mut assigned, val, ctx)
}

fn search(
    vars: &[String],
    conj: &[&Formula],
    fvs: &[Vec<usize>],
    assigned: &mut Vec<bool>,
    val: &mut Valuation,
    ctx: &EvalCtx,
) -> Result<bool> {
    let open: Vec<usize> = (0..vars.len()).filter(|&i| !assigned[i]).collect();
    if open.is_empty() {
        return Ok(true);
    }
    let blocked: Vec<String> = open.iter().map(|&i| vars[i].clone()).collect();
    let mut pick = None;
    for &i in &open {
        let others: Vec<String> = blocked.iter().filter(|u| **u != vars[i]).cloned().collect();
        if let Some(t) = forced_value(&vars[i], conj, &others) {
            pick = Some((i, Some(t)));
            break;
        }
    }
    let mut graph = None;
    if pick.is_none() {
        for &i in &open {
            let others: Vec<String> = blocked.iter().filter(|u| **u != vars[i]).cloned().collect();
            if let Some(g) = course_of_values(&vars[i], conj, &others, val, ctx)? {
                pick = Some((i, None));
                graph = Some(g);
                break;
            }
        }
    }
    let (i, forced) = pick.unwrap_or((open[0], None));
    let candidates: Vec<HFSet> = match forced {
        _ if graph.is_some() => graph.into_iter().collect(),
        Some(t) => {
            let v = eval_term(t, val, ctx)?;
            if ctx.universe.contains(&v) {
                vec![v]
            } else {
                vec![]
            }
        }
        None => ctx.universe.elems.clone(),
    };
    assigned[i] = true;
    // conjuncts that become closed with this variable
    let ready: Vec<usize> = (0..conj.len())
        .filter(|&k| fvs[k].contains(&i) && fvs[k].iter().all(|&j| assigned[j]))
        .collect();
    let mut found = false;
    for c in candidates {
        val.push(&vars[i], c);
        let mut ok = true;
        for &k in &ready {
            match eval(conj[k], val, ctx) {
                Ok(true) => {}
                Ok(false) => {
                    ok = false;
                    break;
                }
                Err(e) => {
                    val.pop();
                    assigned[i] = false;
                    return Err(e);
                }
            }
        }
        let r = if ok {
            search(vars, conj, fvs, assigned, val, ctx)
        } else {
            Ok(false)
        };
        val.pop();
        match r {
            Ok(true) => {
                found = true;
                break;
            }
            Ok(false) => {}
            Err(e) => {
                assigned[i] = false;
                return Err(e);
            }
        }
    }
    assigned[i] = false;
    Ok(found)
}

/// The only `c` satisfying `fun_on(c, t) ∧ ∀z∈t (apply(c, z) = rhs ∧ ...)`,
/// built by ∈-recursion over `t`. The graph is usually not in the universe,
/// so it is offered as a candidate directly.
fn course_of_values(
    c: &str,
    conj: &[&Formula],
    blocked: &[String],
    val: &mut Valuation,
    ctx: &EvalCtx,
) -> Result<Option<HFSet>> {
    let is_var = |t: &Term, n: &str| matches!(t, Term::Var(v) if v.name == n);
    let is_apply = |t: &Term, z: &str| match t {
        Term::App(Sym::Name(n), ns, ss) => {
            n == "apply" && ns.is_empty() && ss.len() == 2 && is_var(&ss[0], c) && is_var(&ss[1], z)
        }
        _ => false,
    };
    for k in conj {
        let Formula::BAll(z, t, body) = k else { continue };
        let ft = fv_term(t);
        if ft.contains(c) || blocked.iter().any(|u| ft.contains(u)) {
            continue;
        }
        let mut rhs = None;
        for b in conjuncts(body) {
            if let Formula::Eq(l, r) = b {
                for (x, y) in [(l, r), (r, l)] {
                    let fy = fv_term(y);
                    if is_apply(x, z) && !blocked.iter().any(|u| fy.contains(u)) {
                        rhs = Some(y);
                    }
                }
            }
        }
        let Some(rhs) = rhs else { continue };
        let shape = super::witness::fun_on(&var(c), t);
        let total = conjuncts(&shape)
            .into_iter()
            .all(|p| conj.iter().any(|q| crate::calculus::alpha_eq(p, q)));
        if !total {
            continue;
        }
        let dom = eval_term(t, val, ctx)?;
        let mut order: Vec<HFSet> = dom.children().to_vec();
        order.sort_by_key(|x| x.rank());
        let mut pairs = Vec::with_capacity(order.len());
        for x in order {
            val.push(c, HFSet::make_set(pairs.clone()));
            val.push(z, x.clone());
            let r = eval_term(rhs, val, ctx);
            val.pop();
            val.pop();
            pairs.push(hf::kpair(&x, &r?));
        }
        return Ok(Some(HFSet::make_set(pairs)));
    }
    Ok(None)
}

/// Number of universe elements satisfying `p` at `v`, capped at 2.
fn count_upto2(v: &str, p: &Formula, val: &mut Valuation, ctx: &EvalCtx) -> Result<usize> {
    let conj = conjuncts(p);
    let candidates: Vec<HFSet> = match forced_value(v, &conj, &[]) {
        Some(t) => {
            let x = eval_term(t, val, ctx)?;
            if ctx.universe.contains(&x) {
                vec![x]
            } else {
                vec![]
            }
        }
        None => ctx.universe.elems.clone(),
    };
    let mut n = 0;
    for c in candidates {
        val.push(v, c);
        let r = eval(p, val, ctx);
        val.pop();
        if r? {
            n += 1;
            if n == 2 {
                break;
            }
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, ParseOpts};

    fn p(s: &str) -> Formula {
        parse_formula(s, ParseOpts::default()).unwrap()
    }

    fn ctx_with(reg: &Registry, rank: usize) -> EvalCtx<'_> {
        EvalCtx::new(reg, Arc::new(Universe::new(hf::universe(rank).unwrap())))
    }

    fn val(pairs: &[(&str, &str)]) -> Valuation {
        Valuation::from_pairs(
            pairs
                .iter()
                .map(|(n, s)| (n.to_string(), HFSet::parse(s).unwrap())),
        )
    }

    #[test]
    fn spec_examples() {
        let reg = Registry::standard();
        let ctx = ctx_with(&reg, 4);
        let mut v = val(&[("x", "{{}}")]);
        assert!(eval(&p("(ball y zero (in y y))"), &mut v, &ctx).unwrap());
        assert!(eval(&p("(bex y {{}} (eq y zero))"), &mut v, &ctx).unwrap());
        assert!(eval(&p("(exu b (eq b x))"), &mut v, &ctx).unwrap());
        assert!(!eval(&p("(exu b (in x b))"), &mut v, &ctx).unwrap());
        assert!(eval(&p("(allu b (neq b b))"), &mut v, &ctx).unwrap());
    }

    #[test]
    fn forced_and_enumerated_blocks_agree() {
        let reg = Registry::standard();
        let ctx = ctx_with(&reg, 3);
        let f = p("(ex a (ex b (and (eq b (pair a a)) (and (in a x) (in b b)))))");
        let g = p("(ex a (ex b (and (in b b) (and (in a x) (eq (pair a a) b)))))");
        for x in hf::universe(3).unwrap() {
            let mut v = Valuation::from_pairs([("x".to_string(), x)]);
            assert!(!eval(&f, &mut v, &ctx).unwrap());
            assert!(!eval(&g, &mut v, &ctx).unwrap());
        }
        let h = p("(ex a (ex b (and (eq b (pair a a)) (in a b))))");
        let mut v = Valuation::new();
        assert!(eval(&h, &mut v, &ctx).unwrap());
        // {a} for a ∈ V3 is outside V3 when rank(a) = 2
        let k = p("(all a (ex b (eq b (pair a a))))");
        assert!(!eval(&k, &mut v, &ctx).unwrap());
    }

    #[test]
    fn unbound_variable_and_class_param() {
        let reg = Registry::standard();
        let ctx = ctx_with(&reg, 2);
        let mut v = Valuation::new();
        assert_eq!(
            eval(&p("(in x x)"), &mut v, &ctx),
            Err(Error::UnboundVariable("x".into()))
        );
        assert_eq!(
            eval(&p("(cex d X (eq d d))"), &mut v, &ctx),
            Err(Error::UnboundConditionVariable("X".into()))
        );
        let f = p("(cex d (cbex u {{} {{}}} (point (pair u u))) (eq d {{{}}}))");
        assert!(eval(&f, &mut v, &ctx).unwrap());
    }

    #[test]
    fn comprehension_terms() {
        let reg = Registry::standard();
        let ctx = ctx_with(&reg, 2);
        let mut v = val(&[("x", "{{} {{}}}")]);
        let t = |s: &str| crate::formula::parse_term(s, ParseOpts::default()).unwrap();
        let r = |s: &str, v: &mut Valuation| eval_term(&t(s), v, &ctx).unwrap().to_string();
        assert_eq!(r("(bunion y x (pair y y))", &mut v), "{{} {{}}}");
        assert_eq!(r("(image y x (pair y y))", &mut v), "{{{}} {{{}}}}");
        assert_eq!(r("(sep y x (neq y zero))", &mut v), "{{{}}}");
        assert_eq!(r("(iota y x (pair x x))", &mut v), "{{{} {{}}}}");
        assert_eq!(r("(iota y x y)", &mut v), "{}");
        // rank by recursion: F(x) = ∪{F(z) ∪ {F(z)} : z ∈ x}
        assert_eq!(
            r("(rec u p (bunion w p (union2 w (pair w w))) x)", &mut v),
            "{{} {{}}}"
        );
    }
}
