//! Interpreter for function definitions, and the size-bound monitor.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classes::{arg_name, FunctionDef, Registry, SchemeNode, SizePolynomial, ELEM};
use crate::error::{Error, Result};
use crate::formula::{self, EvalCtx, Sort, Universe, Valuation};
use crate::hf::{self, HFSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalReport {
    pub result: HFSet,
    pub steps: u64,
    pub max_tc_card_seen: usize,
    pub memo_hits: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOpts {
    pub memo: bool,
    pub max_steps: u64,
    pub max_tc: usize,
}

impl Default for EvalOpts {
    fn default() -> EvalOpts {
        EvalOpts {
            memo: true,
            max_steps: 10_000_000,
            max_tc: 10_000,
        }
    }
}

pub fn evaluate(
    d: &FunctionDef,
    normals: &[HFSet],
    safes: &[HFSet],
    reg: &Registry,
) -> Result<EvalReport> {
    evaluate_with(d, normals, safes, reg, EvalOpts::default())
}

pub fn evaluate_with(
    d: &FunctionDef,
    normals: &[HFSet],
    safes: &[HFSet],
    reg: &Registry,
    opts: EvalOpts,
) -> Result<EvalReport> {
    let mut ctx = EvalCtx::new(reg, Arc::new(Universe::new(Vec::new())));
    ctx.max_steps = opts.max_steps;
    ctx.max_tc = opts.max_tc;
    let mut it = Interp::new(&ctx, opts.memo);
    let result = it.run(d, normals, safes)?;
    Ok(EvalReport {
        steps: ctx.steps(),
        max_tc_card_seen: it.max_tc.max(result.tc_card()),
        memo_hits: it.hits,
        result,
    })
}

/// Entry point for definitions applied inside terms.
pub fn run_def(
    d: &FunctionDef,
    normals: &[HFSet],
    safes: &[HFSet],
    ctx: &EvalCtx,
) -> Result<HFSet> {
    Interp::new(ctx, true).run(d, normals, safes)
}

struct Interp<'c, 'r> {
    ctx: &'c EvalCtx<'r>,
    memo_on: bool,
    memo: HashMap<(usize, Vec<HFSet>), HFSet>,
    hits: u64,
    max_tc: usize,
}

fn bound_index(d: &FunctionDef, on: Sort) -> usize {
    if on == Sort::Safe {
        d.normal_arity + d.safe_arity - 1
    } else {
        d.normal_arity - 1
    }
}

fn with_slot(args: &[HFSet], i: usize, v: HFSet) -> Vec<HFSet> {
    let mut a = args.to_vec();
    a[i] = v;
    a
}

impl<'c, 'r> Interp<'c, 'r> {
    fn new(ctx: &'c EvalCtx<'r>, memo_on: bool) -> Self {
        Interp {
            ctx,
            memo_on,
            memo: HashMap::new(),
            hits: 0,
            max_tc: 0,
        }
    }

    fn run(&mut self, d: &FunctionDef, normals: &[HFSet], safes: &[HFSet]) -> Result<HFSet> {
        if normals.len() != d.normal_arity || safes.len() != d.safe_arity {
            return Err(Error::Arity(format!(
                "`{}` takes ({}/{}) arguments, got ({}/{})",
                d.name,
                d.normal_arity,
                d.safe_arity,
                normals.len(),
                safes.len()
            )));
        }
        let args: Vec<HFSet> = normals.iter().chain(safes).cloned().collect();
        self.call(d, &args)
    }

    fn call(&mut self, d: &FunctionDef, args: &[HFSet]) -> Result<HFSet> {
        use SchemeNode::*;
        self.ctx.tick()?;
        let v = match &d.body {
            Proj(i) => args
                .get(*i)
                .cloned()
                .ok_or_else(|| Error::Arity(format!("projection {} out of range", i)))?,
            Pair => hf::pair(&args[0], &args[1]),
            Diff => hf::diff(&args[0], &args[1]),
            Lib(b) => b.call(args)?,
            Oracle(g) => {
                let o = self
                    .ctx
                    .reg
                    .oracle(g)
                    .ok_or_else(|| Error::UnknownSymbol(g.clone()))?;
                if args.len() != o.arity() {
                    return Err(Error::Arity(format!(
                        "oracle `{}` takes {} arguments",
                        g,
                        o.arity()
                    )));
                }
                (o.eval)(args)?
            }
            BoundedUnion { g, on } => {
                let zi = bound_index(d, *on);
                let mut acc = HFSet::empty();
                for y in args[zi].children() {
                    let part = self.call(g, &with_slot(args, zi, y.clone()))?;
                    acc = hf::union2(&acc, &part);
                }
                acc
            }
            Compose { h, gs } => {
                let vals = gs
                    .iter()
                    .map(|g| self.call(g, args))
                    .collect::<Result<Vec<_>>>()?;
                self.call(h, &vals)?
            }
            SafeCompose { h, rs, ts } => {
                let normals = &args[..d.normal_arity];
                let mut vals = Vec::with_capacity(rs.len() + ts.len());
                for r in rs {
                    vals.push(self.call(r, normals)?);
                }
                for t in ts {
                    vals.push(self.call(t, args)?);
                }
                self.call(h, &vals)?
            }
            SetRecursion { h } | PredicativeSetRecursion { h } => self.recur(d, h, args)?,
            Delta0Separation { theta, on } => {
                let c = &args[bound_index(d, *on)];
                let mut val = Valuation::from_pairs(
                    args.iter()
                        .enumerate()
                        .map(|(i, a)| (arg_name(i), a.clone())),
                );
                let mut keep = Vec::new();
                for e in c.children() {
                    val.push(ELEM, e.clone());
                    let ok = formula::eval(theta, &mut val, self.ctx)?;
                    val.pop();
                    if ok {
                        keep.push(e.clone());
                    }
                }
                HFSet::make_set(keep)
            }
            Iota { g, on } => {
                let zi = bound_index(d, *on);
                let mut value: Option<HFSet> = None;
                let mut unique = true;
                for b in args[zi].children() {
                    let w = self.call(g, &with_slot(args, zi, b.clone()))?;
                    match &value {
                        None => value = Some(w),
                        Some(v) if *v == w => {}
                        Some(_) => {
                            unique = false;
                            break;
                        }
                    }
                }
                match value {
                    Some(v) if unique => v,
                    _ => HFSet::empty(),
                }
            }
            NormalSeparation { g, on } => {
                let zi = bound_index(d, *on);
                let mut keep = Vec::new();
                for e in args[zi].children() {
                    if !self.call(g, &with_slot(args, zi, e.clone()))?.is_empty() {
                        keep.push(e.clone());
                    }
                }
                HFSet::make_set(keep)
            }
        };
        self.ctx.check_size(&v)?;
        self.max_tc = self.max_tc.max(v.tc_card());
        Ok(v)
    }

    /// `f(x, rest) = h(x, rest, {f(z, rest) : z ∈ x})`, memoized on the
    /// whole argument tuple.
    fn recur(&mut self, d: &FunctionDef, h: &FunctionDef, args: &[HFSet]) -> Result<HFSet> {
        let key = (d as *const FunctionDef as usize, args.to_vec());
        if self.memo_on {
            if let Some(v) = self.memo.get(&key) {
                self.hits += 1;
                return Ok(v.clone());
            }
        }
        let mut prev = Vec::with_capacity(args[0].len());
        for z in args[0].children() {
            prev.push(self.call(d, &with_slot(args, 0, z.clone()))?);
        }
        let mut hargs = args.to_vec();
        hargs.push(HFSet::make_set(prev));
        let v = self.call(h, &hargs)?;
        if self.memo_on {
            self.memo.insert(key, v.clone());
        }
        Ok(v)
    }
}

/// Outcome of [`check_size_bound`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SizeCheck {
    Pass {
        checked: usize,
    },
    Counterexample {
        normals: Vec<HFSet>,
        safes: Vec<HFSet>,
        tc_card: usize,
        bound: u64,
    },
}

/// Tests `card TC(f(x⃗/a⃗)) ≤ p(card TC(x⃗)) + Σ card TC(a_i)`: first on all
/// argument tuples over V2 when there are at most 256, then on `samples`
/// seeded draws mixing members of V3 with random subsets of V3.
pub fn check_size_bound(
    d: &FunctionDef,
    p: &SizePolynomial,
    samples: usize,
    seed: u64,
    reg: &Registry,
) -> Result<SizeCheck> {
    let (n, s) = (d.normal_arity, d.safe_arity);
    if p.nvars() > n {
        return Err(Error::Arity(format!(
            "size polynomial over {} variables for {} normal arguments",
            p.nvars(),
            n
        )));
    }
    let p = p.widen(n);
    let k = n + s;
    let check = |args: &[HFSet]| -> Result<Option<SizeCheck>> {
        let r = evaluate(d, &args[..n], &args[n..], reg)?;
        let xs: Vec<u64> = args[..n].iter().map(|a| a.tc_card() as u64).collect();
        let extra: u64 = args[n..].iter().map(|a| a.tc_card() as u64).sum();
        let bound = p.eval(&xs).saturating_add(extra);
        Ok(if r.result.tc_card() as u64 > bound {
            Some(SizeCheck::Counterexample {
                normals: args[..n].to_vec(),
                safes: args[n..].to_vec(),
                tc_card: r.result.tc_card(),
                bound,
            })
        } else {
            None
        })
    };
    let mut checked = 0;
    let v2 = hf::universe(2)?;
    if k <= 4 {
        let total = v2.len().pow(k as u32);
        for mut idx in 0..total {
            let mut args = Vec::with_capacity(k);
            for _ in 0..k {
                args.push(v2[idx % v2.len()].clone());
                idx /= v2.len();
            }
            if let Some(c) = check(&args)? {
                return Ok(c);
            }
            checked += 1;
        }
    }
    let v3 = hf::universe(3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let args: Vec<HFSet> = (0..k)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    v3[rng.gen_range(0..v3.len())].clone()
                } else {
                    hf::random_subset(&v3, &mut rng)
                }
            })
            .collect();
        if let Some(c) = check(&args)? {
            return Ok(c);
        }
        checked += 1;
    }
    Ok(SizeCheck::Pass { checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{parse_def, Builtin};

    fn set(s: &str) -> HFSet {
        HFSet::parse(s).unwrap()
    }

    fn def(s: &str) -> FunctionDef {
        parse_def(s).unwrap()
    }

    #[test]
    fn bounded_union_of_singletons() {
        let reg = Registry::standard();
        let f = def("(def f ((x z) ()) (bunion (comp (lib singleton) (proj 1))))");
        let z = set("{{} {{}}}");
        assert_eq!(
            evaluate(&f, &[set("{}"), z.clone()], &[], &reg)
                .unwrap()
                .result,
            z
        );
    }

    #[test]
    fn recursion_computes_tc() {
        let reg = Registry::standard();
        // h(x, e) = x ∪ ∪e
        let f = def(
            "(def tcr ((x) ()) (setrec (comp (lib union2) (proj 0) (comp (lib union) (proj 1)))))",
        );
        let x = set("{{{}}}");
        let r = evaluate(&f, &[x.clone()], &[], &reg).unwrap();
        assert_eq!(r.result, set("{{{}} {}}"));
        for a in hf::universe(3).unwrap() {
            assert_eq!(
                evaluate(&f, &[a.clone()], &[], &reg).unwrap().result,
                hf::transitive_closure(&a)
            );
        }
    }

    #[test]
    fn iota_unique_or_empty() {
        let reg = Registry::standard();
        let f = def("(def f (() (c)) (iota (lib singleton)))");
        assert_eq!(
            evaluate(&f, &[], &[set("{{}}")], &reg).unwrap().result,
            set("{{}}")
        );
        assert_eq!(
            evaluate(&f, &[], &[set("{{} {{}}}")], &reg).unwrap().result,
            set("{}")
        );
        assert_eq!(
            evaluate(&f, &[], &[set("{}")], &reg).unwrap().result,
            set("{}")
        );
    }

    #[test]
    fn memo_is_transparent() {
        let reg = Registry::standard();
        let f = def(
            "(def tcr ((x) ()) (setrec (comp (lib union2) (proj 0) (comp (lib union) (proj 1)))))",
        );
        for a in hf::universe(3).unwrap() {
            let on = evaluate_with(&f, &[a.clone()], &[], &reg, EvalOpts::default()).unwrap();
            let off = evaluate_with(
                &f,
                &[a.clone()],
                &[],
                &reg,
                EvalOpts {
                    memo: false,
                    ..EvalOpts::default()
                },
            )
            .unwrap();
            assert_eq!(on.result, off.result);
            assert!(on.max_tc_card_seen >= on.result.tc_card());
        }
    }

    #[test]
    fn step_cap() {
        let reg = Registry::standard();
        let f = FunctionDef::new("u", 1, 0, SchemeNode::Lib(Builtin::Union));
        let err = evaluate_with(
            &f,
            &[set("{}")],
            &[],
            &reg,
            EvalOpts {
                max_steps: 0,
                ..EvalOpts::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }

    #[test]
    fn size_bounds() {
        let reg = Registry::standard();
        let pair = FunctionDef::new("p", 2, 0, SchemeNode::Pair);
        let good = SizePolynomial::parse("x1+x2+3").unwrap();
        assert_eq!(
            check_size_bound(&pair, &good, 1000, 7, &reg).unwrap(),
            SizeCheck::Pass { checked: 1016 }
        );
        let bad = SizePolynomial::parse("1").unwrap();
        match check_size_bound(&pair, &bad, 1000, 7, &reg).unwrap() {
            SizeCheck::Counterexample {
                normals, tc_card, ..
            } => {
                assert!(normals.iter().all(|a| a.rank() <= 1));
                assert_eq!(tc_card, 2);
            }
            other => panic!("expected a counterexample, got {:?}", other),
        }
        let proj = FunctionDef::new("p0", 1, 0, SchemeNode::Proj(0));
        let x = SizePolynomial::parse("x1").unwrap();
        assert!(matches!(
            check_size_bound(&proj, &x, 200, 1, &reg).unwrap(),
            SizeCheck::Pass { .. }
        ));
    }
}
