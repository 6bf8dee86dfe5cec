//! Compiling terms to scheme definitions.

use std::fmt;
use std::sync::Arc;

use super::*;
use crate::formula::{
    self, app, fresh, fv_term, negate, singleton, var, Condition, RecTerm, Subst, Sym, Var,
};

/// A witness definition that may mention the class parameter `X` in its
/// guards. Parameters are listed normals first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassParamDef {
    pub name: String,
    pub normals: Vec<String>,
    pub safes: Vec<String>,
    pub body: Term,
}

impl ClassParamDef {
    pub fn mentions_param(&self) -> bool {
        formula::term_mentions_param(&self.body)
    }

    /// The body with `X := X_λ`, class quantifiers expanded.
    pub fn instantiate_term(&self, l: &Condition) -> Result<Term> {
        let params: BTreeSet<&String> = self.normals.iter().chain(&self.safes).collect();
        if let Some(v) = formula::fv_condition(l)
            .iter()
            .find(|v| !params.contains(v))
        {
            return Err(Error::UnboundConditionVariable(v.clone()));
        }
        Ok(formula::expand_classes_term(&formula::replace_param_term(
            &self.body, l,
        )))
    }

    /// `f_{X_λ}` as a definition of class `tag`.
    pub fn instantiate(&self, l: &Condition, tag: ClassTag, reg: &Registry) -> Result<FunctionDef> {
        let t = self.instantiate_term(l)?;
        Ok(compile_term(&t, &self.normals, &self.safes, tag, reg)?.named(&self.name))
    }
}

impl fmt::Display for ClassParamDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(classdef {} ({}) ({}) {})",
            self.name,
            self.normals.join(" "),
            self.safes.join(" "),
            self.body
        )
    }
}

/// Compiles `t` to a definition whose arguments are `normals` then `safes`,
/// using only schemes of `tag`. For unsorted classes the two lists are
/// merged.
pub fn compile_term(
    t: &Term,
    normals: &[String],
    safes: &[String],
    tag: ClassTag,
    reg: &Registry,
) -> Result<FunctionDef> {
    let c = Compiler { tag, reg };
    let d = if tag.sorted() {
        c.term(t, normals, safes)?
    } else {
        let all: Vec<String> = normals.iter().chain(safes).cloned().collect();
        c.term(t, &all, &[])?
    };
    Ok(d.with_tag(tag))
}

struct Compiler<'a> {
    tag: ClassTag,
    reg: &'a Registry,
}

fn cv(msg: impl Into<String>) -> Error {
    Error::ClassViolation(msg.into())
}

fn anon(n: usize, s: usize, body: SchemeNode) -> Arc<FunctionDef> {
    Arc::new(FunctionDef::anon(n, s, body))
}

impl<'a> Compiler<'a> {
    fn pcsf(&self) -> bool {
        matches!(self.tag, ClassTag::PcsfMinus | ClassTag::PcsfIota)
    }

    /// Projections onto all arguments, as inner functions of a composition.
    fn normal_projs(&self, n: usize) -> Vec<Arc<FunctionDef>> {
        (0..n).map(|i| anon(n, 0, SchemeNode::Proj(i))).collect()
    }

    fn safe_projs(&self, n: usize, s: usize) -> Vec<Arc<FunctionDef>> {
        (0..s)
            .map(|j| anon(n, s, SchemeNode::Proj(n + j)))
            .collect()
    }

    /// `h(normal inners / safe inners)` over a context of arity `(n, s)`.
    fn compose(
        &self,
        h: Arc<FunctionDef>,
        rs: Vec<Arc<FunctionDef>>,
        ts: Vec<Arc<FunctionDef>>,
        n: usize,
        s: usize,
    ) -> FunctionDef {
        if self.tag.sorted() {
            FunctionDef::anon(n, s, SchemeNode::SafeCompose { h, rs, ts })
        } else {
            let mut gs = rs;
            gs.extend(ts);
            FunctionDef::anon(n, 0, SchemeNode::Compose { h, gs })
        }
    }

    fn is_normal(&self, t: &Term, ns: &[String]) -> bool {
        fv_term(t).iter().all(|v| ns.contains(v))
    }

    fn term(&self, t: &Term, ns: &[String], ss: &[String]) -> Result<FunctionDef> {
        let (n, s) = (ns.len(), ss.len());
        let clash = |y: &str| ns.iter().chain(ss).any(|v| v == y);
        let renamed = |y: &str| {
            let ny = fresh(y.trim_start_matches(formula::RESERVED));
            (ny.clone(), var(&ny))
        };
        match t {
            Term::BUnion(y, b, e) | Term::Image(y, b, e) | Term::Iota(y, b, e) if clash(y) => {
                let (ny, v) = renamed(y);
                let e2 = Box::new(formula::subst_term(e, y, &v));
                let t2 = match t {
                    Term::BUnion(..) => Term::BUnion(ny, b.clone(), e2),
                    Term::Image(..) => Term::Image(ny, b.clone(), e2),
                    _ => Term::Iota(ny, b.clone(), e2),
                };
                return self.term(&t2, ns, ss);
            }
            Term::Sep(y, b, f) if clash(y) => {
                let (ny, v) = renamed(y);
                let f2 = formula::subst_formula(f, y, &v);
                return self.term(&Term::Sep(ny, b.clone(), Box::new(f2)), ns, ss);
            }
            Term::Rec(r) if clash(&r.x) || clash(&r.prev) => {
                let (nx, vx) = renamed(&r.x);
                let (np, vp) = renamed(&r.prev);
                let step = Subst::new(vec![(r.x.clone(), vx), (r.prev.clone(), vp)]).term(&r.step);
                let r2 = RecTerm {
                    x: nx,
                    prev: np,
                    step,
                    arg: r.arg.clone(),
                };
                return self.term(&Term::Rec(Box::new(r2)), ns, ss);
            }
            _ => {}
        }
        match t {
            Term::Var(v) => {
                if let Some(i) = ns.iter().position(|x| *x == v.name) {
                    Ok(FunctionDef::anon(n, s, SchemeNode::Proj(i)))
                } else if let Some(j) = ss.iter().position(|x| *x == v.name) {
                    Ok(FunctionDef::anon(n, s, SchemeNode::Proj(n + j)))
                } else {
                    Err(Error::UnboundVariable(v.name.clone()))
                }
            }
            Term::Zero => Ok(self.compose(
                anon(0, 0, SchemeNode::Lib(Builtin::Empty)),
                vec![],
                vec![],
                n,
                s,
            )),
            Term::App(sym, targs_n, targs_s) => self.app(sym, targs_n, targs_s, ns, ss),
            Term::BUnion(y, b, e) => {
                if self.pcsf() {
                    return Err(cv("bounded union is not available in the PCSF classes"));
                }
                self.bounded(y, b, ns, ss, |c, ns2, ss2, on| {
                    let g = Arc::new(c.term(e, ns2, ss2)?);
                    Ok(SchemeNode::BoundedUnion { g, on })
                })
            }
            Term::Image(y, b, e) => {
                if !self.pcsf() {
                    let body = singleton((**e).clone());
                    return self.term(&Term::BUnion(y.clone(), b.clone(), Box::new(body)), ns, ss);
                }
                if !self.is_normal(b, ns) {
                    return Err(cv("image over a safe bound is not available in PCSF"));
                }
                // {e(y) : y ∈ b} = firsts(second(F(b))) with F(w) = ⟨e(w), {F(z) : z ∈ w}⟩
                let w = fresh("w");
                let p = fresh("p");
                let step = app(
                    "kpair",
                    vec![
                        formula::subst_term(e, y, &formula::nvar(&w)),
                        formula::svar(&p),
                    ],
                );
                let r = Term::Rec(Box::new(RecTerm {
                    x: w,
                    prev: p,
                    step,
                    arg: (**b).clone(),
                }));
                self.term(&app("firsts", vec![app("second", vec![r])]), ns, ss)
            }
            Term::Iota(y, b, e) => {
                if self.tag != ClassTag::PcsfIota {
                    // ι as ∪{z ∈ range : ∀z'∈range z' = z}
                    let range = Term::Image(y.clone(), b.clone(), e.clone());
                    let z = fresh("z");
                    let z2 = fresh("z");
                    let sep = Term::Sep(
                        z.clone(),
                        Box::new(range.clone()),
                        Box::new(formula::ball(&z2, range, Formula::Eq(var(&z2), var(&z)))),
                    );
                    return self.term(&app("union", vec![sep]), ns, ss);
                }
                self.bounded(y, b, ns, ss, |c, ns2, ss2, on| {
                    let g = Arc::new(c.term(e, ns2, ss2)?);
                    Ok(SchemeNode::Iota { g, on })
                })
            }
            Term::Sep(y, b, f) => self.sep(y, b, f, ns, ss),
            Term::Cases(f, a, b) => {
                let z = fresh("z");
                let s1 = Term::Sep(z.clone(), Box::new(singleton((**a).clone())), f.clone());
                let s2 = Term::Sep(z, Box::new(singleton((**b).clone())), Box::new(negate(f)));
                self.term(&app("union", vec![app("union2", vec![s1, s2])]), ns, ss)
            }
            Term::Rec(r) => self.rec(r, ns, ss),
        }
    }

    fn app(
        &self,
        sym: &Sym,
        targs_n: &[Term],
        targs_s: &[Term],
        ns: &[String],
        ss: &[String],
    ) -> Result<FunctionDef> {
        let (n, s) = (ns.len(), ss.len());
        let all: Vec<&Term> = targs_n.iter().chain(targs_s).collect();
        let sorted = self.tag.sorted();
        let (head, hn): (Arc<FunctionDef>, usize) = match sym {
            Sym::Name(name) => {
                let entry = self
                    .reg
                    .get(name)
                    .ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
                match entry {
                    Entry::Builtin(b) => {
                        let k = b.normal_slots();
                        let (hn, hs) = if sorted {
                            (k, b.arity() - k)
                        } else {
                            (b.arity(), 0)
                        };
                        (anon(hn, hs, SchemeNode::Lib(*b)), hn)
                    }
                    Entry::Pair | Entry::Diff => {
                        let body = if matches!(entry, Entry::Pair) {
                            SchemeNode::Pair
                        } else {
                            SchemeNode::Diff
                        };
                        let (hn, hs) = if sorted { (0, 2) } else { (2, 0) };
                        (anon(hn, hs, body), hn)
                    }
                    Entry::Oracle(o) => {
                        let (hn, hs) = if sorted {
                            (o.normal_arity, o.safe_arity)
                        } else {
                            (o.arity(), 0)
                        };
                        (anon(hn, hs, SchemeNode::Oracle(name.clone())), hn)
                    }
                    Entry::Def { def, .. } => (def.clone(), def.normal_arity),
                }
            }
            Sym::Def(d) => (d.clone(), d.normal_arity),
        };
        if all.len() != head.arity() {
            return Err(Error::Arity(format!(
                "`{}` takes {} arguments, got {}",
                sym.label(),
                head.arity(),
                all.len()
            )));
        }
        if !sorted && head.safe_arity > 0 {
            return Err(cv(format!("`{}` has safe arguments", sym.label())));
        }
        let mut rs = Vec::new();
        let mut ts = Vec::new();
        for (i, a) in all.iter().enumerate() {
            if sorted && i < hn {
                if !self.is_normal(a, ns) {
                    return Err(cv(format!(
                        "safe variable in a normal argument of `{}`",
                        sym.label()
                    )));
                }
                rs.push(Arc::new(self.term(a, ns, &[])?));
            } else if sorted {
                ts.push(Arc::new(self.term(a, ns, ss)?));
            } else {
                rs.push(Arc::new(self.term(a, ns, ss)?));
            }
        }
        Ok(self.compose(head, rs, ts, n, s))
    }

    /// Shared shape of bounded schemes: the bound becomes the last argument
    /// of the inner definition. A safe element is tried first; a normal one
    /// is used when the body needs it and the bound is normal.
    fn bounded<F>(
        &self,
        y: &str,
        b: &Term,
        ns: &[String],
        ss: &[String],
        mk: F,
    ) -> Result<FunctionDef>
    where
        F: Fn(&Compiler, &[String], &[String], Sort) -> Result<SchemeNode>,
    {
        let (n, s) = (ns.len(), ss.len());
        let ns_wo: Vec<String> = ns.iter().filter(|v| *v != y).cloned().collect();
        let ss_wo: Vec<String> = ss.iter().filter(|v| *v != y).cloned().collect();
        // Shadowed context names would confuse positions; rename the binder.
        if ns_wo.len() != n || ss_wo.len() != s {
            return Err(cv(format!("binder `{}` shadows a parameter", y)));
        }
        if !self.tag.sorted() {
            let mut ns2 = ns.to_vec();
            ns2.push(y.to_string());
            let inner = anon(n + 1, 0, mk(self, &ns2, &[], Sort::Normal)?);
            let mut gs = self.normal_projs(n);
            gs.push(Arc::new(self.term(b, ns, &[])?));
            return Ok(FunctionDef::anon(
                n,
                0,
                SchemeNode::Compose { h: inner, gs },
            ));
        }
        let mut ss2 = ss.to_vec();
        ss2.push(y.to_string());
        let safe_try = mk(self, ns, &ss2, Sort::Safe);
        match safe_try {
            Ok(node) => {
                let inner = anon(n, s + 1, node);
                let mut ts = self.safe_projs(n, s);
                ts.push(Arc::new(self.term(b, ns, ss)?));
                Ok(FunctionDef::anon(
                    n,
                    s,
                    SchemeNode::SafeCompose {
                        h: inner,
                        rs: self.normal_projs(n),
                        ts,
                    },
                ))
            }
            Err(e) => {
                if !self.is_normal(b, ns) || self.tag == ClassTag::PcsfMinus {
                    return Err(e);
                }
                let mut ns2 = ns.to_vec();
                ns2.push(y.to_string());
                let inner = anon(n + 1, s, mk(self, &ns2, ss, Sort::Normal)?);
                let mut rs = self.normal_projs(n);
                rs.push(Arc::new(self.term(b, ns, &[])?));
                Ok(FunctionDef::anon(
                    n,
                    s,
                    SchemeNode::SafeCompose {
                        h: inner,
                        rs,
                        ts: self.safe_projs(n, s),
                    },
                ))
            }
        }
    }

    fn sep(
        &self,
        y: &str,
        b: &Term,
        f: &Formula,
        ns: &[String],
        ss: &[String],
    ) -> Result<FunctionDef> {
        let f = formula::expand_classes(f);
        if formula::mentions_param(&f) {
            return Err(Error::UnboundConditionVariable("X".into()));
        }
        let f = self.lift_quantifiers(&f, ns);
        let tag = self.tag;
        self.bounded(y, b, ns, ss, move |c, ns2, ss2, on| {
            if tag.sorted() && on == Sort::Safe && c.needs_normal(y, &f) {
                return Err(cv(format!("separation on `{}` needs a normal element", y)));
            }
            // positional renaming of the inner definition's arguments
            let mut pairs: Vec<(String, Term)> = Vec::new();
            let mut normals = BTreeSet::new();
            let mut safes = BTreeSet::new();
            for (i, v) in ns2.iter().chain(ss2).enumerate() {
                let is_normal = i < ns2.len();
                let sort = if is_normal { Sort::Normal } else { Sort::Safe };
                let name = if v == y {
                    ELEM.to_string()
                } else {
                    arg_name(i)
                };
                if is_normal || !tag.sorted() {
                    normals.insert(name.clone());
                } else {
                    safes.insert(name.clone());
                }
                pairs.push((v.clone(), Term::Var(Var { name, sort })));
            }
            let theta = Subst::new(pairs).formula(&f);
            if tag.sorted() {
                formula::check_stratified(&theta, &normals, &safes)
                    .map_err(|v| cv(v.to_string()))?;
            }
            Ok(SchemeNode::Delta0Separation { theta, on })
        })
    }

    /// Rewrites `∀y∈b φ` as `{y ∈ b : ¬φ} = 0` (and `∃y∈b φ` dually) when
    /// `b` is normal and `φ` uses `y` where a normal value is needed. The
    /// separation then binds `y` as a normal element.
    fn lift_quantifiers(&self, f: &Formula, ns: &[String]) -> Formula {
        use Formula::*;
        if !self.tag.sorted() {
            return f.clone();
        }
        match f {
            BAll(y, b, p) | BEx(y, b, p) => {
                if self.is_normal(b, ns) && self.needs_normal(y, p) {
                    let all = matches!(f, BAll(..));
                    let body = if all { negate(p) } else { (**p).clone() };
                    let sep = Term::Sep(y.clone(), Box::new(b.clone()), Box::new(body));
                    return if all {
                        Eq(sep, Term::Zero)
                    } else {
                        Neq(sep, Term::Zero)
                    };
                }
                let ns2: Vec<String> = ns.iter().filter(|v| *v != y).cloned().collect();
                let p2 = Box::new(self.lift_quantifiers(p, &ns2));
                if matches!(f, BAll(..)) {
                    BAll(y.clone(), b.clone(), p2)
                } else {
                    BEx(y.clone(), b.clone(), p2)
                }
            }
            And(a, b) => And(
                Box::new(self.lift_quantifiers(a, ns)),
                Box::new(self.lift_quantifiers(b, ns)),
            ),
            Or(a, b) => Or(
                Box::new(self.lift_quantifiers(a, ns)),
                Box::new(self.lift_quantifiers(b, ns)),
            ),
            _ => f.clone(),
        }
    }

    fn needs_normal(&self, y: &str, f: &Formula) -> bool {
        let mut terms = Vec::new();
        collect_terms(f, &mut terms);
        terms.iter().any(|t| self.term_needs_normal(y, t))
    }

    fn term_needs_normal(&self, y: &str, t: &Term) -> bool {
        let has = |t: &Term| fv_term(t).contains(y);
        match t {
            Term::Var(_) | Term::Zero => false,
            Term::App(sym, targs_n, targs_s) => {
                let hn = match sym {
                    Sym::Name(name) => self.reg.signature(name).map_or(0, |(n, _)| n),
                    Sym::Def(d) => d.normal_arity,
                };
                let all: Vec<&Term> = targs_n.iter().chain(targs_s).collect();
                all.iter().take(hn).any(|a| has(a))
                    || all.iter().any(|a| self.term_needs_normal(y, a))
            }
            Term::Rec(r) => {
                has(&r.arg) || (r.x != y && r.prev != y && self.term_needs_normal(y, &r.step))
            }
            Term::Image(z, b, e) => {
                has(b) || self.term_needs_normal(y, b) || (z != y && self.term_needs_normal(y, e))
            }
            Term::BUnion(z, b, e) | Term::Iota(z, b, e) => {
                self.term_needs_normal(y, b) || (z != y && self.term_needs_normal(y, e))
            }
            Term::Sep(z, b, p) => {
                self.term_needs_normal(y, b) || (z != y && self.needs_normal(y, p))
            }
            Term::Cases(p, a, b) => {
                self.needs_normal(y, p)
                    || self.term_needs_normal(y, a)
                    || self.term_needs_normal(y, b)
            }
        }
    }

    fn rec(&self, r: &RecTerm, ns: &[String], ss: &[String]) -> Result<FunctionDef> {
        let (n, s) = (ns.len(), ss.len());
        let mut params = fv_term(&r.step);
        params.remove(&r.x);
        params.remove(&r.prev);
        for p in &params {
            if !ns.contains(p) && !ss.contains(p) {
                return Err(Error::UnboundVariable(p.clone()));
            }
        }
        if params.contains(&r.x) || ns.contains(&r.x) || ss.contains(&r.x) {
            return Err(cv(format!(
                "recursion variable `{}` shadows a parameter",
                r.x
            )));
        }
        match self.tag {
            ClassTag::Rud | ClassTag::PcsfMinus => {
                Err(cv(format!("recursion is not available in {}", self.tag)))
            }
            ClassTag::PrimRec => {
                let pv: Vec<String> = ns.iter().filter(|v| params.contains(*v)).cloned().collect();
                let mut hctx = vec![r.x.clone()];
                hctx.extend(pv.iter().cloned());
                hctx.push(r.prev.clone());
                let h = Arc::new(self.term(&r.step, &hctx, &[])?);
                let recdef = anon(1 + pv.len(), 0, SchemeNode::SetRecursion { h });
                let mut gs = vec![Arc::new(self.term(&r.arg, ns, &[])?)];
                for p in &pv {
                    let i = ns.iter().position(|x| x == p).unwrap();
                    gs.push(anon(n, 0, SchemeNode::Proj(i)));
                }
                Ok(FunctionDef::anon(
                    n,
                    0,
                    SchemeNode::Compose { h: recdef, gs },
                ))
            }
            ClassTag::Srsf | ClassTag::PcsfIota => {
                if !self.is_normal(&r.arg, ns) {
                    return Err(cv("recursion argument must be normal"));
                }
                let pn: Vec<String> = ns.iter().filter(|v| params.contains(*v)).cloned().collect();
                let ps: Vec<String> = ss.iter().filter(|v| params.contains(*v)).cloned().collect();
                let mut hn = vec![r.x.clone()];
                hn.extend(pn.iter().cloned());
                let mut hs = ps.clone();
                hs.push(r.prev.clone());
                let h = Arc::new(self.term(&r.step, &hn, &hs)?);
                let recdef = anon(
                    1 + pn.len(),
                    ps.len(),
                    SchemeNode::PredicativeSetRecursion { h },
                );
                let mut rs = vec![Arc::new(self.term(&r.arg, ns, &[])?)];
                for p in &pn {
                    let i = ns.iter().position(|x| x == p).unwrap();
                    rs.push(anon(n, 0, SchemeNode::Proj(i)));
                }
                let ts = ps
                    .iter()
                    .map(|p| {
                        let j = ss.iter().position(|x| x == p).unwrap();
                        anon(n, s, SchemeNode::Proj(n + j))
                    })
                    .collect();
                Ok(FunctionDef::anon(
                    n,
                    s,
                    SchemeNode::SafeCompose { h: recdef, rs, ts },
                ))
            }
        }
    }
}
