use std::collections::BTreeSet;
use std::fmt;

use super::*;
use crate::classes::Registry;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormulaClass {
    Delta0,
    Sigma1,
    Pi1,
    Sigma1Bang,
    /// `∀x∈t σ` with σ in Σ1.
    Sigma,
    /// `∀x∈t σ` with σ in Σ1!.
    SigmaDBang,
    Unclassified,
}

impl fmt::Display for FormulaClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormulaClass::Delta0 => "Delta0",
            FormulaClass::Sigma1 => "Sigma1",
            FormulaClass::Pi1 => "Pi1",
            FormulaClass::Sigma1Bang => "Sigma1!",
            FormulaClass::Sigma => "Sigma",
            FormulaClass::SigmaDBang => "SigmaD!",
            FormulaClass::Unclassified => "Unclassified",
        };
        write!(f, "{}", s)
    }
}

/// Bounded: no unbounded quantifier and no 𝒟. Class quantifiers count as
/// bounded, since they expand to bounded formulas.
pub fn is_delta0(f: &Formula) -> bool {
    use Formula::*;
    match f {
        In(..) | NotIn(..) | Eq(..) | Neq(..) => true,
        DPred(_) | NotDPred(_) => false,
        Or(a, b) | And(a, b) => is_delta0(a) && is_delta0(b),
        BEx(_, _, p) | BAll(_, _, p) | ClassAll(_, _, p) | ClassEx(_, _, p) => is_delta0(p),
        Ex(..) | All(..) | ExBang(..) | AllBangNeg(..) => false,
    }
}

/// Splits `∃c1…∃ck θ` (k ≥ 1, θ bounded) into its block and matrix.
pub fn sigma1_parts(f: &Formula) -> Option<(Vec<String>, &Formula)> {
    let mut vars = Vec::new();
    let mut cur = f;
    while let Formula::Ex(v, p) = cur {
        vars.push(v.clone());
        cur = p;
    }
    if vars.is_empty() || !is_delta0(cur) {
        None
    } else {
        Some((vars, cur))
    }
}

fn pi1_block(f: &Formula) -> bool {
    let mut cur = f;
    let mut n = 0;
    while let Formula::All(_, p) = cur {
        n += 1;
        cur = p;
    }
    n > 0 && is_delta0(cur)
}

fn sigma1_bang(f: &Formula) -> bool {
    matches!(f, Formula::ExBang(_, p) if is_delta0(p))
}

fn shape(f: &Formula) -> FormulaClass {
    if is_delta0(f) {
        FormulaClass::Delta0
    } else if sigma1_parts(f).is_some() {
        FormulaClass::Sigma1
    } else if pi1_block(f) {
        FormulaClass::Pi1
    } else if sigma1_bang(f) {
        FormulaClass::Sigma1Bang
    } else {
        match f {
            Formula::BAll(_, _, p) if sigma1_parts(p).is_some() => FormulaClass::Sigma,
            Formula::BAll(_, _, p) if sigma1_bang(p) => FormulaClass::SigmaDBang,
            _ => FormulaClass::Unclassified,
        }
    }
}

/// Most specific class of `f` in the language of level `level`.
pub fn classify(f: &Formula, level: usize, reg: &Registry) -> Result<FormulaClass> {
    let mut syms = BTreeSet::new();
    symbols_formula(f, &mut syms);
    for s in syms {
        match reg.level_of(&s) {
            Some(l) if l <= level => {}
            _ => return Err(Error::UnknownSymbol(s)),
        }
    }
    Ok(shape(f))
}

pub(crate) fn symbols_term(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(_) | Term::Zero => {}
        Term::App(s, ns, ss) => {
            if let Sym::Name(n) = s {
                out.insert(n.clone());
            }
            for a in ns.iter().chain(ss) {
                symbols_term(a, out);
            }
        }
        Term::BUnion(_, b, e) | Term::Image(_, b, e) | Term::Iota(_, b, e) => {
            symbols_term(b, out);
            symbols_term(e, out);
        }
        Term::Sep(_, b, f) => {
            symbols_term(b, out);
            symbols_formula(f, out);
        }
        Term::Cases(f, a, b) => {
            symbols_formula(f, out);
            symbols_term(a, out);
            symbols_term(b, out);
        }
        Term::Rec(r) => {
            symbols_term(&r.step, out);
            symbols_term(&r.arg, out);
        }
    }
}

pub(crate) fn symbols_formula(f: &Formula, out: &mut BTreeSet<String>) {
    use Formula::*;
    match f {
        In(a, b) | NotIn(a, b) | Eq(a, b) | Neq(a, b) => {
            symbols_term(a, out);
            symbols_term(b, out);
        }
        DPred(t) | NotDPred(t) => symbols_term(t, out),
        Or(a, b) | And(a, b) => {
            symbols_formula(a, out);
            symbols_formula(b, out);
        }
        BEx(_, t, p) | BAll(_, t, p) => {
            symbols_term(t, out);
            symbols_formula(p, out);
        }
        Ex(_, p) | All(_, p) | ExBang(_, p) | AllBangNeg(_, p) => symbols_formula(p, out),
        ClassAll(_, c, p) | ClassEx(_, c, p) => {
            if let ClassRef::Cond(l) = c {
                symbols_condition(l, out);
            }
            symbols_formula(p, out);
        }
    }
}

fn symbols_condition(c: &Condition, out: &mut BTreeSet<String>) {
    match c {
        Condition::Point(t) => symbols_term(t, out),
        Condition::Or(a, b) => {
            symbols_condition(a, out);
            symbols_condition(b, out);
        }
        Condition::BEx(_, t, l) => {
            symbols_term(t, out);
            symbols_condition(l, out);
        }
    }
}

// ---------------------------------------------------------------- stratification

/// The five generating clauses of stratified formulas; clause 1 has two parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clause {
    C1a,
    C1b,
    C2,
    C3,
    C4,
    C5,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratViolation {
    pub clause: Clause,
    pub detail: String,
}

impl fmt::Display for StratViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.clause {
            Clause::C1a => "1(a)",
            Clause::C1b => "1(b)",
            Clause::C2 => "2",
            Clause::C3 => "3",
            Clause::C4 => "4",
            Clause::C5 => "5",
        };
        write!(f, "clause {}: {}", c, self.detail)
    }
}

fn viol(clause: Clause, detail: String) -> StratViolation {
    StratViolation { clause, detail }
}

struct Scope<'a> {
    normals: &'a BTreeSet<String>,
    safes: &'a BTreeSet<String>,
}

/// Checks that `f` is stratified with respect to `normals` and `safes`.
///
/// Function arguments may be nested terms: a normal slot takes a term whose
/// variables are all normal, a safe slot any stratified term. Comprehension
/// terms are accepted when their free variables are in scope; their inner
/// sort discipline is checked when they are compiled.
pub fn check_stratified(
    f: &Formula,
    normals: &BTreeSet<String>,
    safes: &BTreeSet<String>,
) -> std::result::Result<(), StratViolation> {
    if let Some(v) = normals.intersection(safes).next() {
        return Err(viol(
            Clause::C1a,
            format!("`{}` is both normal and safe", v),
        ));
    }
    strat_formula(f, &Scope { normals, safes })
}

fn strat_term(t: &Term, sc: &Scope) -> std::result::Result<(), StratViolation> {
    match t {
        Term::Var(v) => {
            if sc.normals.contains(&v.name) || sc.safes.contains(&v.name) {
                Ok(())
            } else {
                Err(viol(
                    Clause::C1a,
                    format!("variable `{}` is not in scope", v.name),
                ))
            }
        }
        Term::Zero => Ok(()),
        Term::App(s, ns, ss) => {
            for a in ns {
                let bad: Vec<String> = fv_term(a)
                    .into_iter()
                    .filter(|v| !sc.normals.contains(v))
                    .collect();
                if let Some(b) = bad.first() {
                    return Err(viol(
                        Clause::C1b,
                        format!("`{}` in a normal argument of `{}`", b, s.label()),
                    ));
                }
                strat_term(a, sc)?;
            }
            for a in ss {
                strat_term(a, sc)?;
            }
            Ok(())
        }
        _ => {
            for v in fv_term(t) {
                if !sc.normals.contains(&v) && !sc.safes.contains(&v) {
                    return Err(viol(
                        Clause::C1a,
                        format!("variable `{}` is not in scope", v),
                    ));
                }
            }
            Ok(())
        }
    }
}

/// Sort annotation of the first occurrence of `v` in `f`, if any.
fn occurrence_sort(f: &Formula, v: &str) -> Option<Sort> {
    fn in_term(t: &Term, v: &str) -> Option<Sort> {
        match t {
            Term::Var(x) if x.name == v => Some(x.sort),
            Term::App(_, ns, ss) => ns.iter().chain(ss).find_map(|a| in_term(a, v)),
            _ => None,
        }
    }
    use Formula::*;
    match f {
        In(a, b) | NotIn(a, b) | Eq(a, b) | Neq(a, b) => in_term(a, v).or_else(|| in_term(b, v)),
        DPred(t) | NotDPred(t) => in_term(t, v),
        Or(a, b) | And(a, b) => occurrence_sort(a, v).or_else(|| occurrence_sort(b, v)),
        BEx(y, t, p) | BAll(y, t, p) => {
            in_term(t, v).or_else(|| if y == v { None } else { occurrence_sort(p, v) })
        }
        Ex(y, p)
        | All(y, p)
        | ExBang(y, p)
        | AllBangNeg(y, p)
        | ClassAll(y, _, p)
        | ClassEx(y, _, p) => {
            if y == v {
                None
            } else {
                occurrence_sort(p, v)
            }
        }
    }
}

fn strat_formula(f: &Formula, sc: &Scope) -> std::result::Result<(), StratViolation> {
    use Formula::*;
    let lit = |a: &Term, b: &Term| -> std::result::Result<(), StratViolation> {
        strat_term(a, sc)?;
        strat_term(b, sc)
    };
    match f {
        In(a, b) | NotIn(a, b) | Eq(a, b) | Neq(a, b) => lit(a, b),
        DPred(_) | NotDPred(_) => Err(viol(
            Clause::C2,
            "the predicate D is not a literal of the language".into(),
        )),
        Or(a, b) | And(a, b) => {
            strat_formula(a, sc)?;
            strat_formula(b, sc)
        }
        BEx(y, t, p) | BAll(y, t, p) => {
            let as_normal = |p: &Formula| {
                strat_term(t, sc).map_err(|e| viol(Clause::C4, e.to_string()))?;
                let mut n = sc.normals.clone();
                n.insert(y.clone());
                let mut s = sc.safes.clone();
                s.remove(y);
                strat_formula(
                    p,
                    &Scope {
                        normals: &n,
                        safes: &s,
                    },
                )
            };
            let as_safe = |p: &Formula| {
                strat_term(t, sc).map_err(|e| viol(Clause::C5, e.to_string()))?;
                let mut s = sc.safes.clone();
                s.insert(y.clone());
                let mut n = sc.normals.clone();
                n.remove(y);
                strat_formula(
                    p,
                    &Scope {
                        normals: &n,
                        safes: &s,
                    },
                )
            };
            match occurrence_sort(p, y) {
                Some(Sort::Normal) => as_normal(p),
                Some(Sort::Safe) => as_safe(p),
                _ => as_safe(p).or_else(|e| as_normal(p).map_err(|_| e)),
            }
        }
        Ex(y, _) | All(y, _) | ExBang(y, _) | AllBangNeg(y, _) => Err(viol(
            Clause::C4,
            format!("quantifier on `{}` is unbounded", y),
        )),
        ClassAll(y, _, _) | ClassEx(y, _, _) => Err(viol(
            Clause::C4,
            format!("class quantifier on `{}` must be expanded first", y),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_formula, ParseOpts};

    fn p(s: &str) -> Formula {
        parse_formula(s, ParseOpts::default()).unwrap()
    }

    fn set(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn classify_examples() {
        let reg = Registry::standard();
        let c = |s: &str| classify(&p(s), 0, &reg).unwrap();
        assert_eq!(c("(ball y x (eq y zero))"), FormulaClass::Delta0);
        assert_eq!(c("(ex a (ball y a (in y x)))"), FormulaClass::Sigma1);
        assert_eq!(c("(ball x t (ex a (in x a)))"), FormulaClass::Sigma);
        assert_eq!(c("(all a (in a x))"), FormulaClass::Pi1);
        assert_eq!(c("(exu a (eq a x))"), FormulaClass::Sigma1Bang);
        assert_eq!(c("(ball x t (exu a (eq a x)))"), FormulaClass::SigmaDBang);
        assert_eq!(c("(ex a (all b (in a b)))"), FormulaClass::Unclassified);
        assert_eq!(c("(dpred x)"), FormulaClass::Unclassified);
        assert_eq!(
            classify(&p("(eq x (frob x))"), 0, &reg),
            Err(Error::UnknownSymbol("frob".into()))
        );
    }

    #[test]
    fn stratification_examples() {
        assert!(check_stratified(&p("(bex b a (in b x))"), &set(&["x"]), &set(&["a"])).is_ok());
        let bad = p("(eq (app tc (a) ()) x)");
        let r = check_stratified(&bad, &set(&["x"]), &set(&["a"])).unwrap_err();
        assert_eq!(r.clause, Clause::C1b);
        let ok = p("(bex y x (in (var y normal) (app tc ((var y normal)) ())))");
        assert!(check_stratified(&ok, &set(&["x"]), &set(&["a"])).is_ok());
        let unb = p("(ex y (in y x))");
        assert_eq!(
            check_stratified(&unb, &set(&["x"]), &set(&[]))
                .unwrap_err()
                .clause,
            Clause::C4
        );
    }
}
