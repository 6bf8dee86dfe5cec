//! Set-function definitions built from schemes, the five class grammars,
//! the oracle registry, Σ1 synthesis and size polynomials.

mod compile;
mod size;
mod syntax;
mod synth;

pub use compile::{compile_term, ClassParamDef};
pub use size::{derive_size_poly, SizePolynomial};
pub use syntax::{def_of, parse_def, parse_defs, print_defs};
pub use synth::{synth_sigma1, synth_sigma1_at, synth_sigma1_bang, synth_sigma1_bang_at};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formula::{self, EvalCtx, Formula, Sort, Term};
use crate::hf::{self, HFSet};

/// Class tags, smallest first within each chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassTag {
    Rud,
    PrimRec,
    Srsf,
    PcsfMinus,
    PcsfIota,
}

impl ClassTag {
    pub fn name(self) -> &'static str {
        match self {
            ClassTag::Rud => "RUD",
            ClassTag::PrimRec => "PRIMREC",
            ClassTag::Srsf => "SRSF",
            ClassTag::PcsfMinus => "PCSF_MINUS",
            ClassTag::PcsfIota => "PCSF_IOTA",
        }
    }

    pub fn parse(s: &str) -> Option<ClassTag> {
        Some(match s.to_ascii_uppercase().as_str() {
            "RUD" => ClassTag::Rud,
            "PRIMREC" => ClassTag::PrimRec,
            "SRSF" => ClassTag::Srsf,
            "PCSF_MINUS" | "PCSF-" => ClassTag::PcsfMinus,
            "PCSF_IOTA" | "PCSF" => ClassTag::PcsfIota,
            _ => return None,
        })
    }

    /// Classes whose functions have safe arguments.
    pub fn sorted(self) -> bool {
        !matches!(self, ClassTag::Rud | ClassTag::PrimRec)
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Library primitives with kernel semantics. All are rudimentary except
/// `tc`, whose argument is normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Builtin {
    Empty,
    Union,
    Union2,
    Singleton,
    Inter,
    KPair,
    First,
    Second,
    Apply,
    Image,
    Firsts,
    Tc,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin::Empty,
    Builtin::Union,
    Builtin::Union2,
    Builtin::Singleton,
    Builtin::Inter,
    Builtin::KPair,
    Builtin::First,
    Builtin::Second,
    Builtin::Apply,
    Builtin::Image,
    Builtin::Firsts,
    Builtin::Tc,
];

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Empty => "empty",
            Builtin::Union => "union",
            Builtin::Union2 => "union2",
            Builtin::Singleton => "singleton",
            Builtin::Inter => "inter",
            Builtin::KPair => "kpair",
            Builtin::First => "first",
            Builtin::Second => "second",
            Builtin::Apply => "apply",
            Builtin::Image => "image",
            Builtin::Firsts => "firsts",
            Builtin::Tc => "tc",
        }
    }

    pub fn from_name(s: &str) -> Option<Builtin> {
        BUILTINS.iter().copied().find(|b| b.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Empty => 0,
            Builtin::Union
            | Builtin::Singleton
            | Builtin::First
            | Builtin::Second
            | Builtin::Firsts
            | Builtin::Tc => 1,
            _ => 2,
        }
    }

    /// Number of leading arguments that must be normal.
    pub fn normal_slots(self) -> usize {
        match self {
            Builtin::Tc => 1,
            _ => 0,
        }
    }

    pub fn rudimentary(self) -> bool {
        self != Builtin::Tc
    }

    pub fn call(self, a: &[HFSet]) -> Result<HFSet> {
        if a.len() != self.arity() {
            return Err(Error::Arity(format!(
                "`{}` takes {} arguments, got {}",
                self.name(),
                self.arity(),
                a.len()
            )));
        }
        Ok(match self {
            Builtin::Empty => HFSet::empty(),
            Builtin::Union => hf::big_union(&a[0]),
            Builtin::Union2 => hf::union2(&a[0], &a[1]),
            Builtin::Singleton => HFSet::singleton(a[0].clone()),
            Builtin::Inter => hf::intersect(&a[0], &a[1]),
            Builtin::KPair => hf::kpair(&a[0], &a[1]),
            Builtin::First => hf::first(&a[0]),
            Builtin::Second => hf::second(&a[0]),
            Builtin::Apply => hf::fn_apply(&a[0], &a[1])?,
            Builtin::Image => hf::fn_image(&a[0], &a[1])?,
            Builtin::Firsts => HFSet::make_set(a[0].children().iter().map(hf::first)),
            Builtin::Tc => hf::transitive_closure(&a[0]),
        })
    }
}

pub type OracleFn = Arc<dyn Fn(&[HFSet]) -> Result<HFSet> + Send + Sync>;

/// A function symbol of `G` with an operational evaluator.
#[derive(Clone)]
pub struct OracleEntry {
    pub symbol: String,
    pub normal_arity: usize,
    pub safe_arity: usize,
    pub eval: OracleFn,
    /// Declared `θ_g(x⃗, b) ≡ ∀c ψ_g(x⃗, b, c)` as (argument names, value
    /// name, bound name, ψ_g). Stored, never verified.
    pub theta: Option<OracleTheta>,
    /// Optional size bound: TC size of the value is at most this polynomial
    /// in the argument sizes.
    pub size: Option<SizePolynomial>,
}

#[derive(Clone, Debug)]
pub struct OracleTheta {
    pub args: Vec<String>,
    pub value: String,
    pub bound: String,
    pub psi: Formula,
}

impl fmt::Debug for OracleEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "OracleEntry({} {}/{})",
            self.symbol, self.normal_arity, self.safe_arity
        )
    }
}

impl OracleEntry {
    pub fn arity(&self) -> usize {
        self.normal_arity + self.safe_arity
    }

    /// The power set oracle with its Π1 definition
    /// `∀c[(c ⊄ x ∨ c ∈ b) ∧ ∀d∈b ∀e∈d e ∈ x]`.
    pub fn powerset() -> OracleEntry {
        let psi = formula::parse_formula(
            "(and (or (bex e c (notin e x)) (in c b)) (ball d b (ball e d (in e x))))",
            Default::default(),
        )
        .expect("powerset formula");
        OracleEntry {
            symbol: "powerset".into(),
            normal_arity: 0,
            safe_arity: 1,
            eval: Arc::new(|a: &[HFSet]| hf::powerset(&a[0])),
            theta: Some(OracleTheta {
                args: vec!["x".into()],
                value: "b".into(),
                bound: "c".into(),
                psi,
            }),
            size: None,
        }
    }
}

/// A function definition: arity split and a scheme body.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionDef {
    pub name: String,
    pub normal_arity: usize,
    pub safe_arity: usize,
    pub body: SchemeNode,
    pub tag: Option<ClassTag>,
}

impl FunctionDef {
    pub fn new(name: &str, n: usize, s: usize, body: SchemeNode) -> FunctionDef {
        FunctionDef {
            name: name.to_string(),
            normal_arity: n,
            safe_arity: s,
            body,
            tag: None,
        }
    }

    pub fn anon(n: usize, s: usize, body: SchemeNode) -> FunctionDef {
        FunctionDef::new("_", n, s, body)
    }

    pub fn arity(&self) -> usize {
        self.normal_arity + self.safe_arity
    }

    pub fn with_tag(mut self, t: ClassTag) -> FunctionDef {
        self.tag = Some(t);
        self
    }

    pub fn named(mut self, name: &str) -> FunctionDef {
        self.name = name.to_string();
        self
    }
}

/// Positional names of definition arguments inside separation formulas.
pub fn arg_name(i: usize) -> String {
    format!("%{}", i)
}

/// The separated element inside a separation formula.
pub const ELEM: &str = "%e";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeNode {
    Proj(usize),
    Pair,
    Diff,
    Lib(Builtin),
    Oracle(String),
    /// `f(x⃗, z) = ∪{g(x⃗, y) : y ∈ z}`; `z` is the last argument of sort `on`.
    BoundedUnion {
        g: Arc<FunctionDef>,
        on: Sort,
    },
    Compose {
        h: Arc<FunctionDef>,
        gs: Vec<Arc<FunctionDef>>,
    },
    /// `f(x, y⃗) = h(x, y⃗, {f(z, y⃗) : z ∈ x})`
    SetRecursion {
        h: Arc<FunctionDef>,
    },
    /// `f(x⃗/a⃗) = h(r⃗(x⃗/−) / t⃗(x⃗/a⃗))`
    SafeCompose {
        h: Arc<FunctionDef>,
        rs: Vec<Arc<FunctionDef>>,
        ts: Vec<Arc<FunctionDef>>,
    },
    /// `f(x, y⃗/a⃗) = h(x, y⃗/a⃗, {f(z, y⃗/a⃗) : z ∈ x})`
    PredicativeSetRecursion {
        h: Arc<FunctionDef>,
    },
    /// `f(x⃗/a⃗, c) = {b ∈ c : θ}`; θ names arguments positionally and the
    /// element `%e`.
    Delta0Separation {
        theta: Formula,
        on: Sort,
    },
    /// `f(x⃗/a⃗, c)` is the unique member of `{g(x⃗/a⃗, b) : b ∈ c}`, else ∅.
    Iota {
        g: Arc<FunctionDef>,
        on: Sort,
    },
    /// `{b ∈ c : g(x⃗/a⃗, b) ≠ ∅}`
    NormalSeparation {
        g: Arc<FunctionDef>,
        on: Sort,
    },
}

impl fmt::Display for FunctionDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", syntax::print_def(self))
    }
}

// ---------------------------------------------------------------- registry

#[derive(Clone, Debug)]
pub enum Entry {
    Builtin(Builtin),
    Pair,
    Diff,
    Oracle(Arc<OracleEntry>),
    Def { def: Arc<FunctionDef>, level: usize },
}

/// Function symbols by name: builtins, oracles and registered definitions.
#[derive(Clone, Debug)]
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

impl Registry {
    /// Builtins plus the `powerset` oracle.
    pub fn standard() -> Registry {
        let mut r = Registry::bare();
        r.register_oracle(OracleEntry::powerset()).expect("fresh");
        r
    }

    /// Builtins only.
    pub fn bare() -> Registry {
        let mut entries = BTreeMap::new();
        for b in BUILTINS {
            entries.insert(b.name().to_string(), Entry::Builtin(*b));
        }
        entries.insert("pair".into(), Entry::Pair);
        entries.insert("diff".into(), Entry::Diff);
        Registry { entries }
    }

    pub fn register_oracle(&mut self, o: OracleEntry) -> Result<()> {
        if self.entries.contains_key(&o.symbol) {
            return Err(Error::DuplicateSymbol(o.symbol));
        }
        self.entries
            .insert(o.symbol.clone(), Entry::Oracle(Arc::new(o)));
        Ok(())
    }

    pub fn register_def(&mut self, d: FunctionDef, level: usize) -> Result<Arc<FunctionDef>> {
        if self.entries.contains_key(&d.name) {
            return Err(Error::DuplicateSymbol(d.name));
        }
        let d = Arc::new(d);
        self.entries.insert(
            d.name.clone(),
            Entry::Def {
                def: d.clone(),
                level,
            },
        );
        Ok(d)
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(name)
    }

    pub fn oracle(&self, name: &str) -> Option<&Arc<OracleEntry>> {
        match self.entries.get(name) {
            Some(Entry::Oracle(o)) => Some(o),
            _ => None,
        }
    }

    pub fn def(&self, name: &str) -> Option<&Arc<FunctionDef>> {
        match self.entries.get(name) {
            Some(Entry::Def { def, .. }) => Some(def),
            _ => None,
        }
    }

    pub fn defs(&self) -> Vec<Arc<FunctionDef>> {
        self.entries
            .values()
            .filter_map(|e| match e {
                Entry::Def { def, .. } => Some(def.clone()),
                _ => None,
            })
            .collect()
    }

    /// Language level at which a symbol becomes available.
    pub fn level_of(&self, name: &str) -> Option<usize> {
        match self.entries.get(name)? {
            Entry::Def { level, .. } => Some(*level),
            _ => Some(0),
        }
    }

    /// Highest registered level; stands in for ω.
    pub fn max_level(&self) -> usize {
        self.entries
            .values()
            .filter_map(|e| match e {
                Entry::Def { level, .. } => Some(*level),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Arity split `(normal, safe)` of a symbol.
    pub fn signature(&self, name: &str) -> Option<(usize, usize)> {
        Some(match self.entries.get(name)? {
            Entry::Builtin(b) => (b.normal_slots(), b.arity() - b.normal_slots()),
            Entry::Pair | Entry::Diff => (0, 2),
            Entry::Oracle(o) => (o.normal_arity, o.safe_arity),
            Entry::Def { def, .. } => (def.normal_arity, def.safe_arity),
        })
    }

    pub fn call(
        &self,
        name: &str,
        normals: &[HFSet],
        safes: &[HFSet],
        ctx: &EvalCtx,
    ) -> Result<HFSet> {
        let entry = self
            .entries
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
        let all: Vec<HFSet> = normals.iter().chain(safes).cloned().collect();
        match entry {
            Entry::Builtin(b) => b.call(&all),
            Entry::Pair | Entry::Diff => {
                if all.len() != 2 {
                    return Err(Error::Arity(format!("`{}` takes 2 arguments", name)));
                }
                Ok(if matches!(entry, Entry::Pair) {
                    hf::pair(&all[0], &all[1])
                } else {
                    hf::diff(&all[0], &all[1])
                })
            }
            Entry::Oracle(o) => {
                if all.len() != o.arity() {
                    return Err(Error::Arity(format!(
                        "`{}` takes {} arguments",
                        name,
                        o.arity()
                    )));
                }
                (o.eval)(&all)
            }
            Entry::Def { def, .. } => {
                if all.len() != def.arity() {
                    return Err(Error::Arity(format!(
                        "`{}` takes {} arguments",
                        name,
                        def.arity()
                    )));
                }
                let (n, s) = all.split_at(def.normal_arity);
                crate::eval::run_def(def, n, s, ctx)
            }
        }
    }
}

// ---------------------------------------------------------------- validation

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidateOpts {
    /// Accept `NormalSeparation` in the PCSF classes.
    pub pcsf_plus: bool,
}

/// Checks that every node of `d` is in the grammar of `tag` and that the
/// normal/safe discipline holds. The error names the offending node.
pub fn validate_class(d: &FunctionDef, tag: ClassTag, reg: &Registry) -> Result<()> {
    validate_class_with(d, tag, reg, ValidateOpts::default())
}

pub fn validate_class_with(
    d: &FunctionDef,
    tag: ClassTag,
    reg: &Registry,
    opts: ValidateOpts,
) -> Result<()> {
    Validator { tag, reg, opts }.def(d, &d.name)
}

struct Validator<'a> {
    tag: ClassTag,
    reg: &'a Registry,
    opts: ValidateOpts,
}

fn bad(path: &str, msg: impl fmt::Display) -> Error {
    Error::ClassViolation(format!("{}: {}", path, msg))
}

impl<'a> Validator<'a> {
    fn expect_arity(&self, g: &FunctionDef, n: usize, s: usize, path: &str) -> Result<()> {
        if g.normal_arity != n || g.safe_arity != s {
            return Err(bad(
                path,
                format!(
                    "expected arity ({}/{}), found ({}/{})",
                    n, s, g.normal_arity, g.safe_arity
                ),
            ));
        }
        Ok(())
    }

    fn grammar(&self, ok: bool, node: &str, path: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(bad(
                path,
                format!("{} is not in the grammar of {}", node, self.tag),
            ))
        }
    }

    /// Last argument of the given sort, i.e. the bound of a bounded scheme.
    fn bound_slot(&self, d: &FunctionDef, on: Sort, path: &str) -> Result<()> {
        let ok = match on {
            Sort::Safe => d.safe_arity > 0,
            _ => d.normal_arity > 0,
        };
        if !ok {
            return Err(bad(path, "bounded scheme without a bound argument"));
        }
        if on == Sort::Normal && self.tag.sorted() && matches!(self.tag, ClassTag::PcsfMinus) {
            return Err(bad(path, "normal-bounded scheme is not in PCSF_MINUS"));
        }
        Ok(())
    }

    fn def(&self, d: &FunctionDef, path: &str) -> Result<()> {
        use SchemeNode::*;
        let (n, s) = (d.normal_arity, d.safe_arity);
        if !self.tag.sorted() && s > 0 {
            return Err(bad(
                path,
                format!("{} functions have no safe arguments", self.tag),
            ));
        }
        let sorted = self.tag.sorted();
        let pcsf = matches!(self.tag, ClassTag::PcsfMinus | ClassTag::PcsfIota);
        match &d.body {
            Proj(i) => {
                if *i >= n + s {
                    return Err(bad(path, format!("projection {} out of range", i)));
                }
                Ok(())
            }
            Pair | Diff => {
                if n + s != 2 {
                    return Err(bad(path, "pair/diff take two arguments"));
                }
                Ok(())
            }
            Lib(b) => {
                if n + s != b.arity() {
                    return Err(bad(
                        path,
                        format!("`{}` takes {} arguments", b.name(), b.arity()),
                    ));
                }
                if !b.rudimentary() {
                    self.grammar(
                        matches!(
                            self.tag,
                            ClassTag::PrimRec | ClassTag::Srsf | ClassTag::PcsfIota
                        ),
                        b.name(),
                        path,
                    )?;
                    if sorted && n < b.normal_slots() {
                        return Err(bad(path, format!("`{}` needs a normal argument", b.name())));
                    }
                }
                Ok(())
            }
            Oracle(g) => {
                let o = self
                    .reg
                    .oracle(g)
                    .ok_or_else(|| Error::UnknownSymbol(g.clone()))?;
                if n + s != o.arity() {
                    return Err(bad(
                        path,
                        format!("oracle `{}` takes {} arguments", g, o.arity()),
                    ));
                }
                if sorted && n < o.normal_arity {
                    return Err(bad(
                        path,
                        format!("oracle `{}` has {} normal slots", g, o.normal_arity),
                    ));
                }
                Ok(())
            }
            BoundedUnion { g, on } => {
                self.grammar(!pcsf, "BoundedUnion", path)?;
                self.bound_slot(d, *on, path)?;
                self.expect_arity(g, n, s, path)?;
                self.def(g, &format!("{}/bunion", path))
            }
            Compose { h, gs } => {
                self.grammar(!sorted, "Compose", path)?;
                self.expect_arity(h, gs.len(), 0, path)?;
                self.def(h, &format!("{}/comp.h", path))?;
                for (i, g) in gs.iter().enumerate() {
                    self.expect_arity(g, n, s, path)?;
                    self.def(g, &format!("{}/comp.{}", path, i))?;
                }
                Ok(())
            }
            SetRecursion { h } => {
                self.grammar(self.tag == ClassTag::PrimRec, "SetRecursion", path)?;
                if n == 0 {
                    return Err(bad(path, "recursion without an argument"));
                }
                self.expect_arity(h, n + 1, 0, path)?;
                self.def(h, &format!("{}/setrec", path))
            }
            SafeCompose { h, rs, ts } => {
                self.grammar(sorted, "SafeCompose", path)?;
                self.expect_arity(h, rs.len(), ts.len(), path)?;
                self.def(h, &format!("{}/safecomp.h", path))?;
                for (i, r) in rs.iter().enumerate() {
                    if r.safe_arity != 0 || r.normal_arity != n {
                        return Err(bad(
                            path,
                            format!("normal inner {} must have arity ({}/0) as in r(x/-)", i, n),
                        ));
                    }
                    self.def(r, &format!("{}/safecomp.r{}", path, i))?;
                }
                for (i, t) in ts.iter().enumerate() {
                    self.expect_arity(t, n, s, path)?;
                    self.def(t, &format!("{}/safecomp.t{}", path, i))?;
                }
                Ok(())
            }
            PredicativeSetRecursion { h } => {
                self.grammar(
                    matches!(self.tag, ClassTag::Srsf | ClassTag::PcsfIota),
                    "PredicativeSetRecursion",
                    path,
                )?;
                if n == 0 {
                    return Err(bad(path, "recursion without a normal argument"));
                }
                self.expect_arity(h, n, s + 1, path)?;
                self.def(h, &format!("{}/predrec", path))
            }
            Delta0Separation { theta, on } => {
                self.bound_slot(d, *on, path)?;
                self.theta(theta, d, *on, path)
            }
            Iota { g, on } => {
                self.grammar(self.tag == ClassTag::PcsfIota, "Iota", path)?;
                self.bound_slot(d, *on, path)?;
                self.expect_arity(g, n, s, path)?;
                self.def(g, &format!("{}/iota", path))
            }
            NormalSeparation { g, on } => {
                self.grammar(pcsf && self.opts.pcsf_plus, "NormalSeparation", path)?;
                self.bound_slot(d, *on, path)?;
                self.expect_arity(g, n, s, path)?;
                self.def(g, &format!("{}/nsep", path))
            }
        }
    }

    /// Δ0-Separation formula: bounded, and stratified with respect to the
    /// normal arguments and the safe arguments plus the element.
    fn theta(&self, theta: &Formula, d: &FunctionDef, on: Sort, path: &str) -> Result<()> {
        if !formula::is_delta0(theta) || formula::mentions_param(theta) {
            return Err(bad(path, "separation formula is not bounded"));
        }
        let (n, s) = (d.normal_arity, d.safe_arity);
        let mut normals: BTreeSet<String> = (0..n).map(arg_name).collect();
        let mut safes: BTreeSet<String> = (n..n + s).map(arg_name).collect();
        if on == Sort::Normal || !self.tag.sorted() {
            normals.insert(ELEM.into());
        } else {
            safes.insert(ELEM.into());
        }
        if !self.tag.sorted() {
            normals.extend(safes.iter().cloned());
            safes.clear();
        }
        formula::check_stratified(theta, &normals, &safes).map_err(|v| bad(path, v))?;
        // Symbols used inside θ must themselves be in the class.
        self.theta_symbols(theta, &normals, &safes, path)
    }

    fn theta_symbols(
        &self,
        theta: &Formula,
        normals: &BTreeSet<String>,
        safes: &BTreeSet<String>,
        path: &str,
    ) -> Result<()> {
        let mut terms = Vec::new();
        collect_terms(theta, &mut terms);
        for t in terms {
            self.term(&t, normals, safes, path)?;
        }
        Ok(())
    }

    fn term(
        &self,
        t: &Term,
        normals: &BTreeSet<String>,
        safes: &BTreeSet<String>,
        path: &str,
    ) -> Result<()> {
        match t {
            Term::Var(_) | Term::Zero => Ok(()),
            Term::App(sym, ns, ss) => {
                let (sn, ssa) = match sym {
                    formula::Sym::Name(name) => {
                        match self
                            .reg
                            .get(name)
                            .ok_or_else(|| Error::UnknownSymbol(name.clone()))?
                        {
                            Entry::Builtin(b) if !b.rudimentary() => {
                                self.grammar(
                                    matches!(
                                        self.tag,
                                        ClassTag::PrimRec | ClassTag::Srsf | ClassTag::PcsfIota
                                    ),
                                    b.name(),
                                    path,
                                )?;
                            }
                            Entry::Def { def, .. } => {
                                self.def(def, &format!("{}/{}", path, name))?
                            }
                            _ => {}
                        }
                        self.reg.signature(name).unwrap()
                    }
                    formula::Sym::Def(def) => {
                        self.def(def, &format!("{}/{}", path, def.name))?;
                        (def.normal_arity, def.safe_arity)
                    }
                };
                let all: Vec<&Term> = ns.iter().chain(ss).collect();
                if all.len() != sn + ssa {
                    return Err(bad(
                        path,
                        format!("`{}` applied to {} arguments", sym.label(), all.len()),
                    ));
                }
                if self.tag.sorted() {
                    for a in &all[..sn] {
                        if let Some(v) = formula::fv_term(a)
                            .into_iter()
                            .find(|v| !normals.contains(v))
                        {
                            return Err(bad(
                                path,
                                format!("safe `{}` in a normal slot of `{}`", v, sym.label()),
                            ));
                        }
                    }
                }
                for a in all {
                    self.term(a, normals, safes, path)?;
                }
                Ok(())
            }
            _ => {
                // A comprehension term: compile it over its free variables.
                let fv = formula::fv_term(t);
                let ns: Vec<String> = fv
                    .iter()
                    .filter(|v| normals.contains(*v))
                    .cloned()
                    .collect();
                let ss: Vec<String> = fv
                    .iter()
                    .filter(|v| !normals.contains(*v))
                    .cloned()
                    .collect();
                let f = compile_term(t, &ns, &ss, self.tag, self.reg).map_err(|e| bad(path, e))?;
                self.def(&f, &format!("{}/term", path))
            }
        }
    }
}

/// Maximal terms occurring in literals and quantifier bounds of `f`.
fn collect_terms(f: &Formula, out: &mut Vec<Term>) {
    use Formula::*;
    match f {
        In(a, b) | NotIn(a, b) | Eq(a, b) | Neq(a, b) => {
            out.push(a.clone());
            out.push(b.clone());
        }
        DPred(t) | NotDPred(t) => out.push(t.clone()),
        Or(a, b) | And(a, b) => {
            collect_terms(a, out);
            collect_terms(b, out);
        }
        BEx(_, t, p) | BAll(_, t, p) => {
            out.push(t.clone());
            collect_terms(p, out);
        }
        Ex(_, p)
        | All(_, p)
        | ExBang(_, p)
        | AllBangNeg(_, p)
        | ClassAll(_, _, p)
        | ClassEx(_, _, p) => collect_terms(p, out),
    }
}

/// Whether any recursion scheme occurs in `d`.
pub fn has_recursion(d: &FunctionDef) -> bool {
    use SchemeNode::*;
    match &d.body {
        SetRecursion { .. } | PredicativeSetRecursion { .. } => true,
        Lib(Builtin::Tc) => true,
        Proj(_) | Pair | Diff | Lib(_) | Oracle(_) => false,
        BoundedUnion { g, .. } | Iota { g, .. } | NormalSeparation { g, .. } => has_recursion(g),
        Compose { h, gs } => has_recursion(h) || gs.iter().any(|g| has_recursion(g)),
        SafeCompose { h, rs, ts } => {
            has_recursion(h) || rs.iter().chain(ts).any(|g| has_recursion(g))
        }
        Delta0Separation { theta, .. } => {
            let mut terms = Vec::new();
            collect_terms(theta, &mut terms);
            terms.iter().any(term_has_recursion)
        }
    }
}

fn term_has_recursion(t: &Term) -> bool {
    match t {
        Term::Var(_) | Term::Zero => false,
        Term::App(s, ns, ss) => {
            let own = match s {
                formula::Sym::Name(n) => n == "tc",
                formula::Sym::Def(d) => has_recursion(d),
            };
            own || ns.iter().chain(ss).any(term_has_recursion)
        }
        Term::Rec(_) => true,
        Term::BUnion(_, b, e) | Term::Image(_, b, e) | Term::Iota(_, b, e) => {
            term_has_recursion(b) || term_has_recursion(e)
        }
        Term::Sep(_, b, f) => {
            let mut terms = Vec::new();
            collect_terms(f, &mut terms);
            term_has_recursion(b) || terms.iter().any(term_has_recursion)
        }
        Term::Cases(f, a, b) => {
            let mut terms = Vec::new();
            collect_terms(f, &mut terms);
            term_has_recursion(a) || term_has_recursion(b) || terms.iter().any(term_has_recursion)
        }
    }
}

#[cfg(test)]
mod tests;
