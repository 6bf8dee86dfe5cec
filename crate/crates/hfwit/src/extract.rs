//! Witness extraction from cut-free derivations.
//!
//! For T0, T1 and T2 every Σ1 formula of a sequent gets a term for a
//! nonempty set of witnesses, and every negated Σ formula gets a witness
//! variable standing for an assumed witness set. For T3 a node carries a
//! condition `λ` and witness values that may test membership in the class
//! parameter `X`. Terms are built bottom-up, one rule at a time, and the
//! end result is checked on a grid of small sets.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{
    self, alpha_key, as_neg_unique, is_sigma, is_sigma_bang, is_sigma_d_bang, tc_succ, Derivation,
    Node, PhiEntry, RuleId, RuleInstance, Theory,
};
use crate::classes::{compile_term, validate_class, ClassTag, FunctionDef, Registry};
use crate::error::{Error, Result};
use crate::formula::*;
use crate::hf::{self, HFSet};

// ---------------------------------------------------------------- conditions

/// `λ ∨ (t = *)`.
pub fn weaken(l: &Condition, t: &Term) -> Condition {
    merge(l, &Condition::Point(t.clone()))
}

/// `a ∨ b`, with repeated disjuncts dropped.
pub fn merge(a: &Condition, b: &Condition) -> Condition {
    fn flat(c: &Condition, out: &mut Vec<Condition>) {
        match c {
            Condition::Or(x, y) => {
                flat(x, out);
                flat(y, out);
            }
            _ if out.contains(c) => {}
            _ => out.push(c.clone()),
        }
    }
    let mut ds = Vec::new();
    flat(a, &mut ds);
    flat(b, &mut ds);
    let last = ds.pop().expect("a condition has a disjunct");
    ds.into_iter()
        .rev()
        .fold(last, |acc, d| Condition::Or(Box::new(d), Box::new(acc)))
}

/// `∃d∈t λ`, allowed only when `d ∉ t` is in the sequent.
pub fn bind(l: &Condition, d: &str, t: &Term, seq: &[Formula]) -> Result<Condition> {
    let lit = alpha_key(&Formula::NotIn(var(d), t.clone()));
    if !seq.iter().any(|f| alpha_key(f) == lit) {
        return Err(Error::SideConditionViolated(format!(
            "{} ∉ {} is not in the sequent",
            d, t
        )));
    }
    Ok(Condition::BEx(
        d.to_string(),
        t.clone(),
        Box::new(l.clone()),
    ))
}

/// `f_{X_λ}`: the class parameter replaced by `X_λ`, class quantifiers
/// expanded to bounded ones.
pub fn instantiate_class(t: &Term, l: &Condition) -> Term {
    expand_classes_term(&replace_param_term(t, l))
}

// ---------------------------------------------------------------- bundles

/// Witness function for a Φ entry: a term over the entry's parameters.
/// Under T2 it denotes a nonempty set of witnesses, under T3 one witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiWitness {
    pub params: Vec<String>,
    pub term: Term,
}

impl PhiWitness {
    pub fn at(&self, args: &[Term]) -> Term {
        Subst::new(
            self.params
                .iter()
                .cloned()
                .zip(args.iter().cloned())
                .collect(),
        )
        .term(&self.term)
    }
}

#[derive(Clone, Debug)]
pub struct WitnessBundle {
    pub theory: Theory,
    pub end_sequent: Vec<Formula>,
    /// Free variables `x` with `¬D(x)` in the end-sequent.
    pub normals: Vec<String>,
    /// The remaining free variables.
    pub safes: Vec<String>,
    /// Negated Σ formulas and the variables naming their assumed witnesses.
    pub gamma: Vec<(Formula, String)>,
    /// Σ1 (or Σ1!) formulas and their witness terms.
    pub witnesses: Vec<(Formula, Term)>,
    /// The T3 condition `λ`.
    pub condition: Option<Condition>,
    pub phi: Vec<(PhiEntry, PhiWitness)>,
}

impl WitnessBundle {
    pub fn witness(&self, f: &Formula) -> Option<&Term> {
        let k = alpha_key(f);
        self.witnesses
            .iter()
            .find(|(g, _)| alpha_key(g) == k)
            .map(|(_, t)| t)
    }

    /// Parameters of compiled witnesses: normals, then safes and witness
    /// variables.
    pub fn params(&self) -> (Vec<String>, Vec<String>) {
        let mut safes = self.safes.clone();
        safes.extend(self.gamma.iter().map(|(_, b)| b.clone()));
        (self.normals.clone(), safes)
    }

    /// The class witnesses are compiled into.
    pub fn class(&self) -> ClassTag {
        match self.theory {
            Theory::T0 => ClassTag::Rud,
            Theory::T1 => ClassTag::PrimRec,
            Theory::T2 { .. } => ClassTag::Srsf,
            Theory::T3 { .. } => ClassTag::PcsfIota,
        }
    }

    /// A witness term with the class parameter instantiated by `λ`.
    pub fn closed_term(&self, t: &Term) -> Term {
        match &self.condition {
            Some(l) => instantiate_class(t, l),
            None => t.clone(),
        }
    }

    /// Compiles every witness to a definition of the theory's class and
    /// validates it against the class grammar.
    pub fn compile(&self, reg: &Registry) -> Result<Vec<FunctionDef>> {
        let (ns, ss) = self.params();
        let tag = self.class();
        let mut out = Vec::new();
        for (i, (_, t)) in self.witnesses.iter().enumerate() {
            let d =
                compile_term(&self.closed_term(t), &ns, &ss, tag, reg)?.named(&format!("w{}", i));
            validate_class(&d, tag, reg)?;
            out.push(d);
        }
        Ok(out)
    }
}

/// The function a witness for `∃b φ` defines when `b` is unique: the
/// union of the witness set, or the witness itself under T3.
pub fn definable_function(b: &WitnessBundle, f: &Formula) -> Result<Term> {
    let t = b
        .witness(f)
        .ok_or_else(|| Error::UnsupportedShape(format!("no witness for {}", f)))?;
    let t = b.closed_term(t);
    Ok(match b.theory {
        Theory::T3 { .. } => t,
        _ => app("union", vec![t]),
    })
}

// ---------------------------------------------------------------- roles

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Bounded,
    /// Σ1 in T0–T2: gets a witness set.
    Sigma,
    /// Negated Σ1 or Σ: gets a witness variable.
    Gamma,
    NegD,
    /// Σ1! in T3: gets a witness value.
    Bang,
    /// Negated Σ1! or Σ^D!: gets a witness variable.
    GammaBang,
    NegUnique,
    /// Other Σ1 formulas of T3.
    Psi,
}

fn role(f: &Formula, th: Theory) -> Result<Role> {
    if is_delta0(f) {
        return Ok(Role::Bounded);
    }
    if matches!(f, Formula::NotDPred(_)) && th.has_d() {
        return Ok(Role::NegD);
    }
    let neg = negate(f);
    if let Theory::T3 { .. } = th {
        if as_neg_unique(f).is_some() {
            return Ok(Role::NegUnique);
        }
        if is_sigma_bang(f) {
            return Ok(Role::Bang);
        }
        if is_sigma_bang(&neg) || is_sigma_d_bang(&neg) {
            return Ok(Role::GammaBang);
        }
        if sigma1_parts(f).is_some() {
            return Ok(Role::Psi);
        }
    } else {
        if sigma1_parts(f).is_some() {
            return Ok(Role::Sigma);
        }
        if sigma1_parts(&neg).is_some() || is_sigma(&neg) {
            return Ok(Role::Gamma);
        }
    }
    Err(Error::AuditFailed(format!(
        "{} has no place in the induction",
        f
    )))
}

// ---------------------------------------------------------------- extraction state

#[derive(Clone, Debug)]
struct Wit {
    lam: Condition,
    f: BTreeMap<Formula, Term>,
}

impl Wit {
    fn empty() -> Wit {
        Wit {
            lam: Condition::Point(Term::Zero),
            f: BTreeMap::new(),
        }
    }

    fn get(&self, f: &Formula) -> Option<&Term> {
        self.f.get(&alpha_key(f))
    }

    fn or_zero(&self, f: &Formula) -> Term {
        self.get(f).cloned().unwrap_or(Term::Zero)
    }

    fn subst(&self, s: &Subst) -> Wit {
        Wit {
            lam: s.condition(&self.lam),
            f: self.f.iter().map(|(k, t)| (k.clone(), s.term(t))).collect(),
        }
    }

    fn mentions(&self, v: &str) -> bool {
        fv_condition(&self.lam).contains(v) || self.f.values().any(|t| fv_term(t).contains(v))
    }
}

struct Extractor<'a> {
    reg: &'a Registry,
    theory: Theory,
    phi: Vec<PhiEntry>,
    phiw: Vec<PhiWitness>,
    names: BTreeMap<Formula, String>,
}

fn unsupported<T>(m: impl Into<String>) -> Result<T> {
    Err(Error::UnsupportedShape(m.into()))
}

/// `∃e∈t λ`, or `λ` itself when `e` is not free in it.
fn cond_bex(e: &str, t: &Term, l: &Condition) -> Condition {
    if fv_condition(l).contains(e) {
        Condition::BEx(e.to_string(), t.clone(), Box::new(l.clone()))
    } else {
        l.clone()
    }
}

fn cases(g: Formula, a: Term, b: Term) -> Term {
    if a == b {
        a
    } else {
        Term::Cases(Box::new(g), Box::new(a), Box::new(b))
    }
}

fn bunion(e: &str, a: Term, body: Term) -> Term {
    if body == Term::Zero {
        Term::Zero
    } else {
        Term::BUnion(e.to_string(), Box::new(a), Box::new(body))
    }
}

fn filtered(valid: Formula, t: Term) -> Term {
    cases(valid, t, Term::Zero)
}

impl<'a> Extractor<'a> {
    fn t3(&self) -> bool {
        matches!(self.theory, Theory::T3 { .. })
    }

    /// The witness variable of a negated Σ formula, shared by every
    /// occurrence of the formula up to bound names.
    fn gvar(&mut self, f: &Formula) -> String {
        let k = alpha_key(f);
        let n = self.names.len();
        self.names
            .entry(k)
            .or_insert_with(|| format!("%b{}", n))
            .clone()
    }

    fn valid(&self, f: &Formula, t: &Term) -> Result<Formula> {
        if self.t3() {
            witness_bang_predicate(f, t, &ClassRef::Param)
        } else {
            witness_predicate(f, t)
        }
    }

    /// Formulas of `n` that carry witness terms.
    fn targets(&self, n: &Node) -> Result<Vec<Formula>> {
        let mut out = Vec::new();
        for f in &n.seq {
            match role(f, self.theory)? {
                Role::Sigma | Role::Bang => out.push(f.clone()),
                _ => {}
            }
        }
        Ok(out)
    }

    /// Definition by cases over the premises: the first premise witness
    /// that is valid wins. Conditions are merged.
    fn combine(&self, n: &Node, kids: &[Wit]) -> Result<Wit> {
        let mut out = Wit::empty();
        if let Some((first, rest)) = kids.split_first() {
            out.lam = rest
                .iter()
                .fold(first.lam.clone(), |acc, k| merge(&acc, &k.lam));
        }
        for d in self.targets(n)? {
            let mut cur: Option<Term> = None;
            for k in kids.iter().rev() {
                if let Some(t) = k.get(&d) {
                    cur = Some(match cur {
                        None => t.clone(),
                        Some(later) => cases(self.valid(&d, t)?, t.clone(), later),
                    });
                }
            }
            if let Some(t) = cur {
                out.f.insert(alpha_key(&d), t);
            }
        }
        Ok(out)
    }

    fn kids(&mut self, n: &Node) -> Result<Vec<Wit>> {
        n.children.iter().map(|c| self.node(c)).collect()
    }

    fn node(&mut self, n: &Node) -> Result<Wit> {
        for f in &n.seq {
            if let Role::Gamma | Role::GammaBang = role(f, self.theory)? {
                self.gvar(f);
            }
        }
        let r = &n.rule;
        match r.id {
            RuleId::Cut => Err(Error::NotCutFree),
            RuleId::Init
            | RuleId::Or
            | RuleId::And
            | RuleId::OracleG
            | RuleId::EqD
            | RuleId::TrD
            | RuleId::Trcl
            | RuleId::DefF => {
                let k = self.kids(n)?;
                self.combine(n, &k)
            }
            RuleId::Pair | RuleId::Union | RuleId::Delta0Sep => {
                let e = &r.eigen[0];
                let g = match r.id {
                    RuleId::Pair => app("pair", vec![param(r, "t")?, param(r, "s")?]),
                    RuleId::Union => app("union", vec![param(r, "t")?]),
                    _ => Term::Sep(
                        r.arg.clone().unwrap_or_else(|| "x".into()),
                        Box::new(param(r, "t")?),
                        Box::new(r.principal[0].clone()),
                    ),
                };
                let k = self.node(&n.children[0])?.subst(&Subst::one(e, g));
                self.combine(n, &[k])
            }
            RuleId::BEx => self.bex(n),
            RuleId::BAll => self.ball(n),
            RuleId::Ex => self.ex(n),
            RuleId::All => self.all(n),
            RuleId::BExAll => self.bex_all(n),
            RuleId::BAllEx | RuleId::BAllDExBang => {
                unsupported("a positive Σ formula has no witness term of this form")
            }
            RuleId::Delta0Coll => self.coll(n),
            RuleId::Sigma1Fund | RuleId::Sigma1DFund => self.fund(n),
            RuleId::PhiRule => self.phi_rule(n),
            RuleId::SubmodelRule | RuleId::Sigma1BangSubmodel => {
                unsupported("Submodel rules must be stratified before extraction")
            }
            RuleId::ExBang => self.exbang(n),
            RuleId::AllBang => self.allbang(n),
            RuleId::BExDAllBang => self.bex_d_allbang(n),
            RuleId::Delta0DRepl => self.repl(n),
            RuleId::Sigma1DBangFund => self.fund_bang(n),
        }
    }

    fn bex(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (v, body) = match p {
            Formula::BEx(v, _, body) => (v, body),
            _ => unreachable!("checked"),
        };
        let t = param(r, v)?;
        let k0 = self.node(&n.children[0])?;
        let mut k1 = self.node(&n.children[1])?;
        match role(p, self.theory)? {
            Role::Gamma => {
                // Γ-side ∃x∈a∀c¬ψ: the premise's assumed witness is b'(t).
                let inner = subst_formula(body, v, &t);
                let b1 = self.gvar(&inner);
                let b = self.gvar(p);
                k1 = k1.subst(&Subst::one(&b1, apply(var(&b), t)));
            }
            Role::GammaBang => return unsupported("raw ∃x∈t on a Σ! negation"),
            _ => {}
        }
        self.combine(n, &[k0, k1])
    }

    fn ball(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (v, a, body) = match p {
            Formula::BAll(v, a, body) => (v, a, body),
            _ => unreachable!("checked"),
        };
        if !is_delta0(p) {
            return unsupported("∀x∈t over an unbounded formula");
        }
        let e = r.eigen[0].clone();
        let k = self.node(&n.children[0])?;
        let mut out = Wit::empty();
        if self.t3() {
            out.lam = cond_bex(&e, a, &k.lam);
            let neg = negate(&subst_formula(body, v, &var(&e)));
            for d in self.targets(n)? {
                let h = match k.get(&d) {
                    Some(h) => h.clone(),
                    None => continue,
                };
                if !fv_term(&h).contains(&e) {
                    out.f.insert(alpha_key(&d), h);
                    continue;
                }
                let set = Term::Sep(
                    e.clone(),
                    Box::new(a.clone()),
                    Box::new(and(neg.clone(), self.valid(&d, &h)?)),
                );
                out.f.insert(
                    alpha_key(&d),
                    Term::Iota(e.clone(), Box::new(set), Box::new(h)),
                );
            }
        } else {
            for d in self.targets(n)? {
                let h = k.or_zero(&d);
                let body = filtered(self.valid(&d, &h)?, h);
                out.f.insert(alpha_key(&d), bunion(&e, a.clone(), body));
            }
        }
        Ok(out)
    }

    fn ex(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let mut cur = p;
        let mut pairs = Vec::new();
        while let Formula::Ex(v, body) = cur {
            match r.param(v) {
                Some(t) => {
                    pairs.push((v.clone(), t.clone()));
                    cur = body;
                }
                None => break,
            }
        }
        let prem = Subst::new(pairs.clone()).formula(cur);
        let ts: Vec<Term> = pairs.iter().map(|(_, t)| t.clone()).collect();
        let k = self.node(&n.children[0])?;
        let mut out = self.combine(n, &[k.clone()])?;
        if self.t3() {
            if as_neg_unique(p).is_some() {
                if ts.len() != 2 {
                    return unsupported("¬Unique must be introduced in one step");
                }
                out.lam = weaken(&weaken(&out.lam, &ts[0]), &ts[1]);
            }
            return Ok(out);
        }
        let new = if is_delta0(&prem) {
            singleton(tuple(&ts))
        } else {
            let g = k.or_zero(&prem);
            let dv = fresh("d");
            let mut parts = ts.clone();
            parts.push(var(&dv));
            Term::Image(dv, Box::new(g), Box::new(tuple(&parts)))
        };
        let f = match k.get(p) {
            Some(old) => Term::Cases(
                Box::new(self.valid(p, old)?),
                Box::new(old.clone()),
                Box::new(new),
            ),
            None => new,
        };
        out.f.insert(alpha_key(p), f);
        Ok(out)
    }

    fn all(&mut self, n: &Node) -> Result<Wit> {
        if self.t3() {
            return unsupported("(∀) under T3");
        }
        let r = &n.rule;
        let p = &r.principal[0];
        let body = match p {
            Formula::All(_, body) => body,
            _ => unreachable!("checked"),
        };
        if !is_delta0(body) {
            return unsupported("(∀) over more than one unbounded quantifier");
        }
        let b = self.gvar(p);
        let e = r.eigen[0].clone();
        let k = self.node(&n.children[0])?;
        let mut out = Wit::empty();
        for d in self.targets(n)? {
            let h = k.or_zero(&d);
            let body = filtered(self.valid(&d, &h)?, h);
            out.f.insert(alpha_key(&d), bunion(&e, var(&b), body));
        }
        Ok(out)
    }

    fn bex_all(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (x, t) = match p {
            Formula::BEx(x, t, _) => (x, t),
            _ => unreachable!("checked"),
        };
        let _ = t;
        let s = param(r, x)?;
        let a = r.eigen[0].clone();
        let b = self.gvar(p);
        let k0 = self.node(&n.children[0])?;
        let k1 = self.node(&n.children[1])?;
        let mut out = Wit::empty();
        for d in self.targets(n)? {
            let h0 = k0.or_zero(&d);
            let h1 = k1.or_zero(&d);
            let later = bunion(
                &a,
                apply(var(&b), s.clone()),
                filtered(self.valid(&d, &h1)?, h1),
            );
            out.f.insert(
                alpha_key(&d),
                Term::Cases(
                    Box::new(self.valid(&d, &h0)?),
                    Box::new(h0),
                    Box::new(later),
                ),
            );
        }
        Ok(out)
    }

    fn coll(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (x, t, inner) = match p {
            Formula::BAll(x, t, inner) => (x, t, inner),
            _ => unreachable!("checked"),
        };
        let (xe, c) = (r.eigen[0].clone(), r.eigen[1].clone());
        let k0 = self.node(&n.children[0])?;
        let k1 = self.node(&n.children[1])?;
        let ex_here = subst_formula(inner, x, &var(&xe));
        let h = k0.or_zero(&ex_here);
        let c1 = bunion(&xe, t.clone(), filtered(self.valid(&ex_here, &h)?, h));
        let k1 = k1.subst(&Subst::one(&c, c1));
        let mut out = Wit::empty();
        for d in self.targets(n)? {
            let kd = k0.or_zero(&d);
            let vk = self.valid(&d, &kd)?;
            let guard = bex(&xe, t.clone(), vk.clone());
            let early = bunion(&xe, t.clone(), filtered(vk, kd));
            out.f.insert(
                alpha_key(&d),
                Term::Cases(Box::new(guard), Box::new(early), Box::new(k1.or_zero(&d))),
            );
        }
        Ok(out)
    }

    fn fund(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (x, inner) = match p {
            Formula::All(x, inner) => (x, inner),
            _ => unreachable!("checked"),
        };
        let t = param(r, x)?;
        let (y, ae) = (r.eigen[0].clone(), r.eigen[1].clone());
        let below = negate(&ball(x, var(&y), (**inner).clone()));
        let here = subst_formula(inner, x, &var(&y));
        let b = self.gvar(&below);
        let k0 = self.node(&n.children[0])?;
        let k1 = self.node(&n.children[1])?;
        let prev = fresh("p");
        let h = k0.or_zero(&here);
        // F(y) = ⟨y, h(y, {F(z) : z ∈ y})⟩, so {F(z) : z ∈ y} is g↾y.
        let step = app("kpair", vec![var(&y), Subst::one(&b, var(&prev)).term(&h)]);
        let big_f = |arg: Term| {
            Term::Rec(Box::new(RecTerm {
                x: y.clone(),
                prev: prev.clone(),
                step: step.clone(),
                arg,
            }))
        };
        let g = |arg: Term| app("second", vec![big_f(arg)]);
        let z = fresh("z");
        let restrict = |arg: Term| Term::Image(z.clone(), Box::new(arg), Box::new(big_f(var(&z))));
        let top = tc_succ(&t);
        let mut out = Wit::empty();
        for d in self.targets(n)? {
            let kd = k0.or_zero(&d).clone();
            let kd = Subst::one(&b, restrict(var(&y))).term(&kd);
            let vk = self.valid(&d, &kd)?;
            let guard = bex(&y, top.clone(), vk.clone());
            let early = bunion(&y, top.clone(), filtered(vk, kd));
            let pd = k1.or_zero(&d);
            let late = bunion(&ae, g(t.clone()), filtered(self.valid(&d, &pd)?, pd));
            out.f.insert(
                alpha_key(&d),
                Term::Cases(Box::new(guard), Box::new(early), Box::new(late)),
            );
        }
        Ok(out)
    }

    fn phi_rule(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let i: usize = r
            .arg
            .as_deref()
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::CheckFailed("`phi` needs an index".into()))?;
        let w = self
            .phiw
            .get(i)
            .cloned()
            .ok_or(Error::MissingPhiWitness(i))?;
        let entry = &self.phi[i];
        let ts: Vec<Term> = entry
            .params()
            .iter()
            .map(|v| param(r, v))
            .collect::<Result<_>>()?;
        let fi = w.at(&ts);
        let y = r.eigen[0].clone();
        let k = self.node(&n.children[0])?;
        if self.t3() {
            let k = k.subst(&Subst::one(&y, fi));
            return self.combine(n, &[k]);
        }
        let mut out = Wit::empty();
        for d in self.targets(n)? {
            let h = k.or_zero(&d);
            out.f.insert(
                alpha_key(&d),
                bunion(&y, fi.clone(), filtered(self.valid(&d, &h)?, h)),
            );
        }
        Ok(out)
    }

    fn exbang(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let a = match p {
            Formula::ExBang(a, _) => a,
            _ => unreachable!("checked"),
        };
        let s = param(r, a)?;
        let k0 = self.node(&n.children[0])?;
        let k1 = self.node(&n.children[1])?;
        for e in &r.eigen {
            if k1.mentions(e) {
                return unsupported("uniqueness premise witnesses depend on its eigenvariables");
            }
        }
        let mut out = self.combine(n, &[k0.clone(), k1.clone()])?;
        out.lam = weaken(&out.lam, &s);
        let f = match k0.get(p).or_else(|| k1.get(p)) {
            Some(old) => Term::Cases(
                Box::new(self.valid(p, old)?),
                Box::new(old.clone()),
                Box::new(s),
            ),
            None => s,
        };
        out.f.insert(alpha_key(p), f);
        Ok(out)
    }

    fn allbang(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let b = self.gvar(&r.principal[0]);
        let k = self
            .node(&n.children[0])?
            .subst(&Subst::one(&r.eigen[0], var(&b)));
        self.combine(n, &[k])
    }

    fn bex_d_allbang(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (x, t) = match p {
            Formula::BEx(x, t, _) => (x, t),
            _ => unreachable!("checked"),
        };
        let s = param(r, x)?;
        let b = self.gvar(p);
        let k0 = self.node(&n.children[0])?;
        let k1 = self
            .node(&n.children[1])?
            .subst(&Subst::one(&r.eigen[0], apply(var(&b), s.clone())));
        let mut out = Wit::empty();
        out.lam = merge(&k0.lam, &k1.lam);
        let out_t = Formula::NotIn(s.clone(), t.clone());
        for d in self.targets(n)? {
            out.f.insert(
                alpha_key(&d),
                Term::Cases(
                    Box::new(out_t.clone()),
                    Box::new(k0.or_zero(&d)),
                    Box::new(k1.or_zero(&d)),
                ),
            );
        }
        Ok(out)
    }

    fn repl(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (x, t, inner) = match p {
            Formula::BAll(x, t, inner) => (x, t, inner),
            _ => unreachable!("checked"),
        };
        let (xe, c) = (r.eigen[0].clone(), r.eigen[1].clone());
        let k0 = self.node(&n.children[0])?;
        let k1 = self.node(&n.children[1])?;
        let here = subst_formula(inner, x, &var(&xe));
        let h = k0.or_zero(&here);
        let c1 = Term::Image(
            xe.clone(),
            Box::new(t.clone()),
            Box::new(app("kpair", vec![var(&xe), h.clone()])),
        );
        let lam0 = cond_bex(&xe, t, &k0.lam);
        // Inside λ the class parameter of c1 is read as X of the first disjunct.
        let c1_closed = if term_mentions_param(&c1) {
            instantiate_class(&c1, &lam0)
        } else {
            c1.clone()
        };
        let lam1 = Subst::one(&c, c1_closed).condition(&k1.lam);
        let k1 = k1.subst(&Subst::one(&c, c1));
        let mut out = Wit::empty();
        out.lam = merge(&lam0, &lam1);
        let guard = ball(&xe, t.clone(), self.valid(&here, &h)?);
        for d in self.targets(n)? {
            let kd = k0.or_zero(&d);
            let sel = Term::Sep(
                xe.clone(),
                Box::new(t.clone()),
                Box::new(self.valid(&d, &kd)?),
            );
            out.f.insert(
                alpha_key(&d),
                Term::Cases(
                    Box::new(guard.clone()),
                    Box::new(k1.or_zero(&d)),
                    Box::new(Term::Iota(xe.clone(), Box::new(sel), Box::new(kd))),
                ),
            );
        }
        Ok(out)
    }

    fn fund_bang(&mut self, n: &Node) -> Result<Wit> {
        let r = &n.rule;
        let p = &r.principal[0];
        let (x, inner) = match p {
            Formula::All(x, inner) => (x, inner),
            _ => unreachable!("checked"),
        };
        let t = param(r, x)?;
        let y = r.eigen[0].clone();
        let below = negate(&ball(x, var(&y), (**inner).clone()));
        let here = subst_formula(inner, x, &var(&y));
        let at_t = negate(&subst_formula(inner, x, &t));
        let b = self.gvar(&below);
        let e = self.gvar(&at_t);
        let k0 = self.node(&n.children[0])?;
        let k1 = self.node(&n.children[1])?;
        let prev = fresh("p");
        let to_prev = Subst::one(&b, var(&prev));
        let h = to_prev.term(&k0.or_zero(&here));
        let lam_prev = to_prev.condition(&k0.lam);
        // g(y) = h at X := X_{λ0(y, g↾y)}.
        let step = app("kpair", vec![var(&y), instantiate_class(&h, &lam_prev)]);
        let big_f = |arg: Term| {
            Term::Rec(Box::new(RecTerm {
                x: y.clone(),
                prev: prev.clone(),
                step: step.clone(),
                arg,
            }))
        };
        let g = |arg: Term| app("second", vec![big_f(arg)]);
        let z = fresh("z");
        let restrict = |arg: Term| Term::Image(z.clone(), Box::new(arg), Box::new(big_f(var(&z))));
        let top = tc_succ(&t);
        let to_restrict = Subst::one(&b, restrict(var(&y)));
        let mut out = Wit::empty();
        out.lam = merge(
            &cond_bex(&y, &top, &to_restrict.condition(&k0.lam)),
            &Subst::one(&e, g(t.clone())).condition(&k1.lam),
        );
        let gy = g(var(&y));
        let guard = ball(&y, top.clone(), self.valid(&here, &gy)?);
        let k1 = k1.subst(&Subst::one(&e, g(t.clone())));
        for d in self.targets(n)? {
            let kd = to_restrict.term(&k0.or_zero(&d));
            let sel = Term::Sep(
                y.clone(),
                Box::new(top.clone()),
                Box::new(self.valid(&d, &kd)?),
            );
            out.f.insert(
                alpha_key(&d),
                Term::Cases(
                    Box::new(guard.clone()),
                    Box::new(k1.or_zero(&d)),
                    Box::new(Term::Iota(y.clone(), Box::new(sel), Box::new(kd))),
                ),
            );
        }
        Ok(out)
    }
}

fn param(r: &RuleInstance, v: &str) -> Result<Term> {
    r.param(v)
        .cloned()
        .ok_or_else(|| Error::CheckFailed(format!("rule {} lacks parameter `{}`", r.id, v)))
}

// ---------------------------------------------------------------- stratification

/// Replaces the lowest Submodel applications by Φ rules, extracting a
/// witness function for each from its closed premise. Returns the new
/// derivation and witnesses for the whole extended Φ list.
pub fn stratify_submodel(
    d: &Derivation,
    reg: &Registry,
    given: &[PhiWitness],
) -> Result<(Derivation, Vec<PhiWitness>)> {
    if given.len() < d.phi.len() {
        return Err(Error::MissingPhiWitness(given.len()));
    }
    let mut ex = Extractor {
        reg,
        theory: d.theory,
        phi: d.phi.clone(),
        phiw: given[..d.phi.len()].to_vec(),
        names: BTreeMap::new(),
    };
    let root = strat(&mut ex, &d.root)?;
    Ok((
        Derivation {
            theory: d.theory,
            phi: ex.phi.clone(),
            root,
        },
        ex.phiw,
    ))
}

fn strat(ex: &mut Extractor, n: &Node) -> Result<Node> {
    let r = &n.rule;
    if !matches!(r.id, RuleId::SubmodelRule | RuleId::Sigma1BangSubmodel) {
        let children = n
            .children
            .iter()
            .map(|c| strat(ex, c))
            .collect::<Result<_>>()?;
        return Ok(Node {
            seq: n.seq.clone(),
            rule: r.clone(),
            children,
        });
    }
    let p = &r.principal[0];
    let (a, body) = match p {
        Formula::Ex(a, b) | Formula::ExBang(a, b) => (a.clone(), (**b).clone()),
        _ => return Err(Error::CheckFailed(format!("bad submodel formula {}", p))),
    };
    let closed = strat(ex, &n.children[0])?;
    let w = ex.node(&closed)?;
    let f = w.or_zero(p);
    let term = if ex.t3() {
        instantiate_class(&f, &w.lam)
    } else {
        f
    };
    let entry = PhiEntry::new(&a, body);
    let params = entry.params();
    let idx = ex.phi.len();
    ex.phi.push(entry);
    ex.phiw.push(PhiWitness {
        params: params.clone(),
        term,
    });
    let mut rule = RuleInstance::new(RuleId::PhiRule).arg(&idx.to_string());
    rule.eigen = r.eigen.clone();
    rule.subst = r.subst.clone();
    Ok(Node {
        seq: n.seq.clone(),
        rule,
        children: vec![strat(ex, &n.children[1])?],
    })
}

// ---------------------------------------------------------------- entry points

/// Checks, audits and extracts. `given` supplies witnesses for the Φ
/// entries already listed in the derivation.
pub fn extract_with(d: &Derivation, reg: &Registry, given: &[PhiWitness]) -> Result<WitnessBundle> {
    calculus::check_derivation(d, reg).into_result()?;
    if !calculus::is_cut_free(d) {
        return Err(Error::NotCutFree);
    }
    let audit = calculus::audit_formula_occurrences(d);
    if let Some((path, f)) = audit.offending.first() {
        return Err(Error::AuditFailed(format!("{} at node {:?}", f, path)));
    }
    let (d2, phiw) = stratify_submodel(d, reg, given)?;
    let mut ex = Extractor {
        reg,
        theory: d.theory,
        phi: d2.phi.clone(),
        phiw: phiw.clone(),
        names: BTreeMap::new(),
    };
    let w = ex.node(&d2.root)?;
    let _ = ex.reg;
    let mut fv = BTreeSet::new();
    for f in &d.root.seq {
        add_fv_formula(f, &mut fv);
    }
    let normals: Vec<String> = fv
        .iter()
        .filter(|v| {
            d.root
                .seq
                .iter()
                .any(|f| matches!(f, Formula::NotDPred(Term::Var(x)) if x.name == **v))
        })
        .cloned()
        .collect();
    let safes: Vec<String> = fv
        .iter()
        .filter(|v| !normals.contains(v))
        .cloned()
        .collect();
    let mut gamma = Vec::new();
    let mut witnesses = Vec::new();
    for f in &d.root.seq {
        match role(f, d.theory)? {
            Role::Gamma | Role::GammaBang => gamma.push((f.clone(), ex.gvar(f))),
            Role::Sigma | Role::Bang => witnesses.push((f.clone(), w.or_zero(f))),
            _ => {}
        }
    }
    Ok(WitnessBundle {
        theory: d.theory,
        end_sequent: d.root.seq.clone(),
        normals,
        safes,
        gamma,
        witnesses,
        condition: if d.theory
            == (Theory::T3 {
                level: d.theory.level(),
                budget: d.theory.budget(),
            }) {
            Some(w.lam)
        } else {
            None
        },
        phi: d2.phi.into_iter().zip(phiw).collect(),
    })
}

pub fn extract(d: &Derivation, reg: &Registry) -> Result<WitnessBundle> {
    extract_with(d, reg, &[])
}

pub fn extract_t01(d: &Derivation, reg: &Registry) -> Result<WitnessBundle> {
    match d.theory {
        Theory::T0 | Theory::T1 => extract(d, reg),
        t => Err(Error::CheckFailed(format!(
            "expected T0 or T1, found {}",
            t
        ))),
    }
}

pub fn extract_t2(d: &Derivation, reg: &Registry, given: &[PhiWitness]) -> Result<WitnessBundle> {
    match d.theory {
        Theory::T2 { .. } => extract_with(d, reg, given),
        t => Err(Error::CheckFailed(format!("expected T2, found {}", t))),
    }
}

pub fn extract_t3(d: &Derivation, reg: &Registry, given: &[PhiWitness]) -> Result<WitnessBundle> {
    match d.theory {
        Theory::T3 { .. } => extract_with(d, reg, given),
        t => Err(Error::CheckFailed(format!("expected T3, found {}", t))),
    }
}

// ---------------------------------------------------------------- verification

#[derive(Clone, Debug)]
pub struct GridOpts {
    /// Free variables range over `V_rank`.
    pub rank: usize,
    /// Above this many assignments a seeded sample is used.
    pub max_points: usize,
    /// Witness-variable candidates tried per assignment.
    pub max_candidates: usize,
    pub seed: u64,
    pub max_steps: u64,
}

impl Default for GridOpts {
    fn default() -> Self {
        GridOpts {
            rank: 3,
            max_points: 4096,
            max_candidates: 48,
            seed: 7,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    /// Assignments of the free variables.
    pub points: usize,
    /// Cases where every hypothesis held and the conclusion was evaluated.
    pub checked: usize,
    pub failures: Vec<String>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn assignments(
    vars: &[String],
    pool: &[HFSet],
    opts: &GridOpts,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<HFSet>> {
    let total = (pool.len() as f64).powi(vars.len() as i32);
    if total <= opts.max_points as f64 {
        let mut out = vec![vec![]];
        for _ in vars {
            out = out
                .into_iter()
                .flat_map(|a| {
                    pool.iter().map(move |x| {
                        let mut b = a.clone();
                        b.push(x.clone());
                        b
                    })
                })
                .collect();
        }
        out
    } else {
        (0..opts.max_points)
            .map(|_| {
                vars.iter()
                    .map(|_| pool.choose(rng).unwrap().clone())
                    .collect()
            })
            .collect()
    }
}

/// Nonempty subsets of `good`: all of them when few, else singletons, the
/// full set and random picks.
fn subsets(good: &[HFSet], cap: usize, rng: &mut ChaCha8Rng) -> Vec<HFSet> {
    if good.is_empty() {
        return vec![];
    }
    if good.len() <= 5 {
        return (1u32..(1 << good.len()))
            .map(|m| {
                HFSet::make_set(
                    good.iter()
                        .enumerate()
                        .filter(|(i, _)| m & (1 << i) != 0)
                        .map(|(_, g)| g.clone()),
                )
            })
            .collect();
    }
    let mut out: Vec<HFSet> = good.iter().map(|g| HFSet::singleton(g.clone())).collect();
    out.push(HFSet::make_set(good.iter().cloned()));
    while out.len() < cap {
        let s = hf::random_subset(good, rng);
        if !s.is_empty() {
            out.push(s);
        }
    }
    out.truncate(cap.max(good.len() + 1));
    out
}

fn product(lists: &[Vec<HFSet>], cap: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<HFSet>> {
    if lists.iter().any(|l| l.is_empty()) {
        return vec![];
    }
    let total: f64 = lists.iter().map(|l| l.len() as f64).product();
    if total <= cap as f64 {
        let mut out = vec![vec![]];
        for l in lists {
            out = out
                .into_iter()
                .flat_map(|a| {
                    l.iter().map(move |x| {
                        let mut b = a.clone();
                        b.push(x.clone());
                        b
                    })
                })
                .collect();
        }
        out
    } else {
        let mut out: Vec<Vec<HFSet>> = (0..lists[0].len().min(cap))
            .map(|i| lists.iter().map(|l| l[i % l.len()].clone()).collect())
            .collect();
        while out.len() < cap {
            out.push(
                lists
                    .iter()
                    .map(|l| l.choose(rng).unwrap().clone())
                    .collect(),
            );
        }
        out
    }
}

/// Candidate values for one witness variable under the current valuation.
fn candidates(
    f: &Formula,
    t3: bool,
    val: &mut Valuation,
    ctx: &EvalCtx,
    pool: &[HFSet],
    small: &[HFSet],
    opts: &GridOpts,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<HFSet>> {
    let target = negate(f);
    let probe = fresh("q");
    let pv = var(&probe);
    // Elements e with a witness predicate true of {e} (or e itself in T3).
    let good = |inner: &Formula, val: &mut Valuation, elems: &[HFSet]| -> Result<Vec<HFSet>> {
        let test = if t3 {
            match inner {
                Formula::ExBang(c, psi) => subst_formula(psi, c, &pv),
                _ => return Ok(vec![]),
            }
        } else {
            witness_predicate(inner, &singleton(pv.clone()))?
        };
        let mut out = Vec::new();
        for e in elems {
            val.push(&probe, e.clone());
            let r = eval(&test, val, ctx);
            val.pop();
            if r? {
                out.push(e.clone());
            }
        }
        Ok(out)
    };
    let elems_for = |inner: &Formula| -> Vec<HFSet> {
        match sigma1_parts(inner) {
            Some((vs, _)) if vs.len() > 1 => {
                let mut tuples = vec![vec![]];
                for _ in 0..vs.len() {
                    tuples = tuples
                        .into_iter()
                        .flat_map(|a: Vec<HFSet>| {
                            small.iter().map(move |x| {
                                let mut b = a.clone();
                                b.push(x.clone());
                                b
                            })
                        })
                        .collect();
                }
                tuples
                    .into_iter()
                    .map(|ts| {
                        let mut it = ts.into_iter().rev();
                        let last = it.next().unwrap();
                        it.fold(last, |acc, x| hf::kpair(&x, &acc))
                    })
                    .collect()
            }
            _ => pool.to_vec(),
        }
    };
    if let Formula::BAll(x, y, inner) = &target {
        let dom = eval_term(y, val, ctx)?;
        let mut per = Vec::new();
        for xv in dom.children() {
            val.push(x, xv.clone());
            let g = good(inner, val, &elems_for(inner));
            val.pop();
            let g = g?;
            let choices = if t3 { g } else { subsets(&g, 8, rng) };
            per.push(choices);
        }
        let combos = product(&per, opts.max_candidates, rng);
        return Ok(combos
            .into_iter()
            .map(|vals| {
                HFSet::make_set(
                    dom.children()
                        .iter()
                        .zip(vals)
                        .map(|(a, b)| hf::kpair(a, &b)),
                )
            })
            .collect());
    }
    let g = good(&target, val, &elems_for(&target))?;
    Ok(if t3 {
        g
    } else {
        subsets(&g, opts.max_candidates, rng)
    })
}

/// The Lemma's statement for the end-sequent, checked on a grid: whenever
/// the assumed witnesses are valid, some Σ formula has a valid extracted
/// witness or some bounded formula is true. Under T3 this is repeated for
/// `X_λ`, `X_λ ∪ {0}` and each licensed binding of `λ`.
pub fn verify_bundle(b: &WitnessBundle, reg: &Registry, opts: &GridOpts) -> Result<VerifyReport> {
    let t3 = matches!(b.theory, Theory::T3 { .. });
    let pool = hf::universe(opts.rank)?;
    let small = hf::universe(2)?;
    let mut ctx = EvalCtx::new(reg, Arc::new(Universe::new(pool.clone())));
    ctx.max_steps = opts.max_steps;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let vars: Vec<String> = b.normals.iter().chain(&b.safes).cloned().collect();

    // Hypotheses and disjuncts, built once.
    let mut hyps = Vec::new();
    for (f, v) in &b.gamma {
        let h = if t3 {
            witness_bang_predicate(&negate(f), &var(v), &ClassRef::Param)?
        } else {
            witness_predicate(&negate(f), &var(v))?
        };
        hyps.push(h);
    }
    let mut disj = Vec::new();
    for f in &b.end_sequent {
        match role(f, b.theory)? {
            Role::Gamma | Role::GammaBang | Role::NegD => {}
            Role::Bounded | Role::Psi => disj.push(f.clone()),
            Role::NegUnique => {
                let (a, th) = as_neg_unique(f).unwrap();
                disj.push(not_unique_in(&ClassRef::Param, &a, &th));
            }
            Role::Sigma | Role::Bang => {
                let t = b.witness(f).cloned().unwrap_or(Term::Zero);
                disj.push(if t3 {
                    witness_bang_predicate(f, &t, &ClassRef::Param)?
                } else {
                    witness_predicate(f, &t)?
                });
            }
        }
    }
    let goal = or_all(disj);
    let mut conds = Vec::new();
    if let Some(l) = &b.condition {
        conds.push(l.clone());
        conds.push(weaken(l, &Term::Zero));
        for f in &b.end_sequent {
            if let Formula::NotIn(Term::Var(dv), t) = f {
                if let Ok(c) = bind(l, &dv.name, t, &b.end_sequent) {
                    conds.push(c);
                }
            }
        }
    }

    let mut rep = VerifyReport::default();
    for point in assignments(&vars, &pool, opts, &mut rng) {
        rep.points += 1;
        let mut val = Valuation::from_pairs(vars.iter().cloned().zip(point.iter().cloned()));
        ctx.reset_steps();
        let show = |val: &Valuation| -> String {
            val.pairs()
                .iter()
                .map(|(n, v)| format!("{}={}", n, v))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut lists = Vec::new();
        for (f, _) in &b.gamma {
            lists.push(candidates(
                f, t3, &mut val, &ctx, &pool, &small, opts, &mut rng,
            )?);
        }
        let combos = if b.gamma.is_empty() {
            vec![vec![]]
        } else {
            product(&lists, opts.max_candidates, &mut rng)
        };
        for combo in combos {
            for ((_, v), x) in b.gamma.iter().zip(&combo) {
                val.set(v, x.clone());
            }
            let mus: Vec<Option<&Condition>> = if t3 {
                conds.iter().map(Some).collect()
            } else {
                vec![None]
            };
            for mu in mus {
                ctx.reset_steps();
                if let Some(mu) = mu {
                    let mut members = Vec::new();
                    condition_members(mu, &mut val, &ctx, &mut members)?;
                    members.sort();
                    members.dedup();
                    ctx.class_param = Some(Arc::new(members));
                }
                let mut all_hold = true;
                for h in &hyps {
                    if !eval(h, &mut val, &ctx)? {
                        all_hold = false;
                        break;
                    }
                }
                if !all_hold {
                    continue;
                }
                rep.checked += 1;
                match eval(&goal, &mut val, &ctx) {
                    Ok(true) => {}
                    Ok(false) => rep
                        .failures
                        .push(format!("obligation false at {}", show(&val))),
                    Err(e) => rep.failures.push(format!("{} at {}", e, show(&val))),
                }
                if rep.failures.len() >= 5 {
                    return Ok(rep);
                }
            }
        }
    }
    Ok(rep)
}

/// Checks each Φ witness against its entry: under T2 `∅ ≠ f_i(x⃗) ⊂
/// {y : φ_i}`, under T3 `φ_i(x⃗, f_i(x⃗))`. Only meaningful on arguments
/// where the entry has a witness at all.
pub fn verify_phi(b: &WitnessBundle, reg: &Registry, opts: &GridOpts) -> Result<VerifyReport> {
    let pool = hf::universe(opts.rank.min(2))?;
    let ctx = EvalCtx::new(reg, Arc::new(Universe::new(pool.clone())));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut rep = VerifyReport::default();
    for (e, w) in &b.phi {
        let t3 = matches!(b.theory, Theory::T3 { .. });
        let target = e.formula();
        let ok = if t3 {
            subst_formula(&e.body, &e.var, &w.term)
        } else {
            witness_predicate(&target, &w.term)?
        };
        let has = ex(&e.var, e.body.clone());
        for point in assignments(&w.params, &pool, opts, &mut rng) {
            rep.points += 1;
            let mut val = Valuation::from_pairs(w.params.iter().cloned().zip(point));
            if !eval(&has, &mut val, &ctx)? {
                continue;
            }
            rep.checked += 1;
            if !eval(&ok, &mut val, &ctx)? {
                rep.failures.push(format!("Φ witness for {} fails", target));
            }
        }
    }
    let _ = rng.gen::<u8>();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{by, Builder, Tactic};
    use crate::formula::parse::parse_formula;

    fn p(s: &str) -> Formula {
        parse_formula(s, ParseOpts::default()).unwrap()
    }

    fn small() -> GridOpts {
        GridOpts {
            rank: 3,
            max_points: 300,
            max_candidates: 16,
            ..GridOpts::default()
        }
    }

    #[test]
    fn pair_witness_in_t0() {
        let reg = Registry::standard();
        let goal = p("(ex y (and (in a y) (in b y)))");
        let tac = by(
            RuleInstance::new(RuleId::Pair)
                .with("t", var("a"))
                .with("s", var("b"))
                .eigen("c"),
            vec![by(
                RuleInstance::new(RuleId::Ex)
                    .principal(goal.clone())
                    .with("y", var("c")),
                vec![Tactic::Auto],
            )],
        );
        let d = Builder::new(Theory::T0, &reg)
            .derive(vec![goal.clone()], &tac)
            .unwrap();
        let b = extract(&d, &reg).unwrap();
        assert_eq!(b.safes, vec!["a".to_string(), "b".to_string()]);
        let rep = verify_bundle(&b, &reg, &small()).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures);
        assert!(rep.checked > 0);
        let defs = b.compile(&reg).unwrap();
        assert_eq!(defs.len(), 1);
    }

    #[test]
    fn assumed_witness_is_passed_on() {
        let reg = Registry::standard();
        let hyp = p("(all y (notin y b))");
        let goal = p("(ex z (in z b))");
        let tac = by(
            RuleInstance::new(RuleId::All)
                .principal(hyp.clone())
                .eigen("e"),
            vec![by(
                RuleInstance::new(RuleId::Ex)
                    .principal(goal.clone())
                    .with("z", var("e")),
                vec![Tactic::Auto],
            )],
        );
        let d = Builder::new(Theory::T0, &reg)
            .derive(vec![hyp, goal], &tac)
            .unwrap();
        let b = extract(&d, &reg).unwrap();
        assert_eq!(b.gamma.len(), 1);
        let rep = verify_bundle(&b, &reg, &small()).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures);
        assert!(rep.checked > 0);
    }

    #[test]
    fn wrong_witness_is_caught() {
        let reg = Registry::standard();
        let goal = p("(ex y (and (in a y) (in b y)))");
        let b = WitnessBundle {
            theory: Theory::T0,
            end_sequent: vec![goal.clone()],
            normals: vec![],
            safes: vec!["a".into(), "b".into()],
            gamma: vec![],
            witnesses: vec![(goal, singleton(singleton(var("a"))))],
            condition: None,
            phi: vec![],
        };
        let rep = verify_bundle(&b, &reg, &small()).unwrap();
        assert!(!rep.ok());
    }

    #[test]
    fn cut_is_refused() {
        let reg = Registry::standard();
        let lit = p("(in a b)");
        let tac = by(
            RuleInstance::new(RuleId::Cut).principal(lit.clone()),
            vec![Tactic::Auto, Tactic::Auto],
        );
        let d = Builder::new(Theory::T0, &reg)
            .derive(vec![lit.clone(), negate(&lit)], &tac)
            .unwrap();
        assert!(matches!(extract(&d, &reg), Err(Error::NotCutFree)));
    }

    #[test]
    fn bind_needs_the_literal() {
        let l = Condition::Point(var("a"));
        let seq = vec![p("(notin d t)")];
        assert!(bind(&l, "d", &var("t"), &seq).is_ok());
        assert!(matches!(
            bind(&l, "e", &var("t"), &seq),
            Err(Error::SideConditionViolated(_))
        ));
    }

    fn neg_ext() -> Formula {
        let ext = calculus::builtin_sentences()
            .into_iter()
            .find(|(n, _)| *n == "Ext")
            .unwrap()
            .1;
        negate(&ext)
    }

    #[test]
    fn unique_copy_in_t3() {
        let reg = Registry::standard();
        let th = Theory::T3 {
            level: 0,
            budget: 0,
        };
        let goal = p("(exu a (and (ball c a (in c x)) (ball c x (in c a))))");
        let ne = neg_ext();
        let tac = by(
            RuleInstance::new(RuleId::ExBang)
                .principal(goal.clone())
                .with("a", var("x"))
                .eigen("a1")
                .eigen("b1"),
            vec![
                Tactic::Auto,
                by(
                    RuleInstance::new(RuleId::Ex)
                        .principal(ne.clone())
                        .with("a", var("a1"))
                        .with("b", var("b1")),
                    vec![Tactic::Auto],
                ),
            ],
        );
        let d = Builder::new(th, &reg)
            .derive(vec![ne, goal.clone()], &tac)
            .unwrap();
        let b = extract(&d, &reg).unwrap();
        assert!(b.condition.is_some());
        let rep = verify_bundle(&b, &reg, &small()).unwrap();
        assert!(rep.ok(), "{:?}", rep.failures);
        assert!(rep.checked > 0);
        let f = definable_function(&b, &goal).unwrap();
        assert_eq!(f, var("x"));
        b.compile(&reg).unwrap();
    }
}
