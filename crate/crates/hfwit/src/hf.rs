//! Canonical hereditarily finite sets.
//!
//! Canonical order: first by `tc_card`, then by number of members, then
//! lexicographically on the (ascending) member lists.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, OnceLock};

use rand::Rng;

use crate::error::{Error, Result};

/// Default cap on `tc_card` used by evaluators.
pub const DEFAULT_TC_CAP: usize = 10_000;

#[derive(Clone)]
pub struct HFSet(Arc<Node>);

struct Node {
    children: Vec<HFSet>,
    tc_card: usize,
    digest: u64,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl HFSet {
    pub fn empty() -> HFSet {
        static EMPTY: OnceLock<HFSet> = OnceLock::new();
        EMPTY
            .get_or_init(|| {
                HFSet(Arc::new(Node {
                    children: Vec::new(),
                    tc_card: 0,
                    digest: mix(0),
                }))
            })
            .clone()
    }

    /// Builds a set from members that are already strictly increasing.
    pub(crate) fn from_canonical(children: Vec<HFSet>) -> HFSet {
        if children.is_empty() {
            return HFSet::empty();
        }
        let mut digest = mix(children.len() as u64);
        for c in &children {
            digest = mix(digest ^ c.digest());
        }
        let tc_card = if children.len() == 1 {
            children[0].tc_card() + 1
        } else {
            let mut seen: HashSet<HFSet> = HashSet::new();
            let mut stack: Vec<HFSet> = children.clone();
            while let Some(s) = stack.pop() {
                if seen.contains(&s) {
                    continue;
                }
                stack.extend(s.children().iter().cloned());
                seen.insert(s);
            }
            seen.len()
        };
        HFSet(Arc::new(Node {
            children,
            tc_card,
            digest,
        }))
    }

    /// The set whose members are exactly the distinct inputs.
    pub fn make_set<I: IntoIterator<Item = HFSet>>(elements: I) -> HFSet {
        let mut v: Vec<HFSet> = elements.into_iter().collect();
        v.sort();
        v.dedup();
        HFSet::from_canonical(v)
    }

    pub fn singleton(a: HFSet) -> HFSet {
        HFSet::from_canonical(vec![a])
    }

    pub fn children(&self) -> &[HFSet] {
        &self.0.children
    }

    pub fn len(&self) -> usize {
        self.0.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.children.is_empty()
    }

    /// Cardinality of the transitive closure.
    pub fn tc_card(&self) -> usize {
        self.0.tc_card
    }

    pub fn digest(&self) -> u64 {
        self.0.digest
    }

    pub fn contains(&self, x: &HFSet) -> bool {
        if x.tc_card() >= self.tc_card() {
            return false;
        }
        self.children().binary_search(x).is_ok()
    }

    pub fn is_subset(&self, other: &HFSet) -> bool {
        self.children().iter().all(|c| other.contains(c))
    }

    pub fn rank(&self) -> usize {
        self.children()
            .iter()
            .map(|c| c.rank() + 1)
            .max()
            .unwrap_or(0)
    }

    /// Von Neumann natural number `n`.
    pub fn nat(n: usize) -> HFSet {
        let mut members: Vec<HFSet> = Vec::with_capacity(n);
        for _ in 0..n {
            let next = HFSet::from_canonical(members.clone());
            members.push(next);
        }
        HFSet::from_canonical(members)
    }

    pub fn parse(src: &str) -> Result<HFSet> {
        let chars: Vec<char> = src.chars().collect();
        let mut pos = 0;
        let v = parse_at(&chars, &mut pos)?;
        skip_ws(&chars, &mut pos);
        if pos != chars.len() {
            return Err(pos_error(&chars, pos, "trailing input after set literal"));
        }
        Ok(v)
    }
}

fn skip_ws(chars: &[char], pos: &mut usize) {
    while *pos < chars.len() && chars[*pos].is_whitespace() {
        *pos += 1;
    }
}

fn pos_error(chars: &[char], pos: usize, msg: &str) -> Error {
    let mut line = 1;
    let mut col = 1;
    for c in chars.iter().take(pos) {
        if *c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    Error::Parse {
        line,
        col,
        msg: msg.to_string(),
    }
}

fn parse_at(chars: &[char], pos: &mut usize) -> Result<HFSet> {
    skip_ws(chars, pos);
    if *pos >= chars.len() || chars[*pos] != '{' {
        return Err(pos_error(chars, *pos, "expected `{`"));
    }
    *pos += 1;
    let mut members = Vec::new();
    loop {
        skip_ws(chars, pos);
        if *pos >= chars.len() {
            return Err(pos_error(chars, *pos, "unterminated set literal"));
        }
        if chars[*pos] == '}' {
            *pos += 1;
            return Ok(HFSet::make_set(members));
        }
        members.push(parse_at(chars, pos)?);
    }
}

pub fn compare(a: &HFSet, b: &HFSet) -> Ordering {
    if Arc::ptr_eq(&a.0, &b.0) {
        return Ordering::Equal;
    }
    a.tc_card()
        .cmp(&b.tc_card())
        .then_with(|| a.len().cmp(&b.len()))
        .then_with(|| {
            for (x, y) in a.children().iter().zip(b.children()) {
                match compare(x, y) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
}

impl PartialEq for HFSet {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.digest() == other.digest() && compare(self, other) == Ordering::Equal)
    }
}

impl Eq for HFSet {}

impl PartialOrd for HFSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HFSet {
    fn cmp(&self, other: &Self) -> Ordering {
        compare(self, other)
    }
}

impl Hash for HFSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.digest());
    }
}

impl fmt::Display for HFSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.children().iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for HFSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Sorted merge of two canonical member lists.
fn merge(a: &[HFSet], b: &[HFSet]) -> Vec<HFSet> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match compare(&a[i], &b[j]) {
            Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                out.push(a[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub fn make_set(elements: Vec<HFSet>) -> HFSet {
    HFSet::make_set(elements)
}

pub fn pair(a: &HFSet, b: &HFSet) -> HFSet {
    HFSet::make_set([a.clone(), b.clone()])
}

pub fn diff(a: &HFSet, b: &HFSet) -> HFSet {
    HFSet::from_canonical(
        a.children()
            .iter()
            .filter(|c| !b.contains(c))
            .cloned()
            .collect(),
    )
}

pub fn union2(a: &HFSet, b: &HFSet) -> HFSet {
    HFSet::from_canonical(merge(a.children(), b.children()))
}

pub fn intersect(a: &HFSet, b: &HFSet) -> HFSet {
    HFSet::from_canonical(
        a.children()
            .iter()
            .filter(|c| b.contains(c))
            .cloned()
            .collect(),
    )
}

/// `∪a`, with `∪∅ = ∅`.
pub fn big_union(a: &HFSet) -> HFSet {
    let mut acc: Vec<HFSet> = Vec::new();
    for c in a.children() {
        acc = merge(&acc, c.children());
    }
    HFSet::from_canonical(acc)
}

pub fn transitive_closure(x: &HFSet) -> HFSet {
    let mut seen: HashSet<HFSet> = HashSet::new();
    let mut stack: Vec<HFSet> = x.children().to_vec();
    while let Some(s) = stack.pop() {
        if seen.contains(&s) {
            continue;
        }
        stack.extend(s.children().iter().cloned());
        seen.insert(s);
    }
    HFSet::make_set(seen)
}

/// Kuratowski pair `{{a},{a,b}}`.
pub fn kpair(a: &HFSet, b: &HFSet) -> HFSet {
    pair(&HFSet::singleton(a.clone()), &pair(a, b))
}

/// Decodes a Kuratowski pair.
pub fn unpair(d: &HFSet) -> Option<(HFSet, HFSet)> {
    match d.children() {
        [s] if s.len() == 1 => {
            let a = s.children()[0].clone();
            Some((a.clone(), a))
        }
        [x, y] => {
            let (s, p) = if x.len() == 1 { (x, y) } else { (y, x) };
            if s.len() != 1 || p.len() != 2 {
                return None;
            }
            let a = &s.children()[0];
            if !p.contains(a) {
                return None;
            }
            let b = p.children().iter().find(|c| *c != a)?.clone();
            Some((a.clone(), b))
        }
        _ => None,
    }
}

pub fn first(d: &HFSet) -> HFSet {
    unpair(d).map(|(a, _)| a).unwrap_or_else(HFSet::empty)
}

pub fn second(d: &HFSet) -> HFSet {
    unpair(d).map(|(_, b)| b).unwrap_or_else(HFSet::empty)
}

fn decode_function(c: &HFSet) -> Result<Vec<(HFSet, HFSet)>> {
    let mut out: Vec<(HFSet, HFSet)> = Vec::with_capacity(c.len());
    for d in c.children() {
        let p =
            unpair(d).ok_or_else(|| Error::MalformedFunction(format!("{} is not a pair", d)))?;
        out.push(p);
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    for w in out.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(Error::MalformedFunction(format!(
                "two values for argument {}",
                w[0].0
            )));
        }
    }
    Ok(out)
}

/// `c'x`: the unique `b` with `⟨x,b⟩ ∈ c`, or `∅` when `x` is not in the domain.
pub fn fn_apply(c: &HFSet, x: &HFSet) -> Result<HFSet> {
    let graph = decode_function(c)?;
    Ok(graph
        .binary_search_by(|p| p.0.cmp(x))
        .map(|i| graph[i].1.clone())
        .unwrap_or_else(|_| HFSet::empty()))
}

/// `c''x = {c'z : z ∈ x, z ∈ dom c}`.
pub fn fn_image(c: &HFSet, x: &HFSet) -> Result<HFSet> {
    let graph = decode_function(c)?;
    Ok(HFSet::make_set(x.children().iter().filter_map(|z| {
        graph
            .binary_search_by(|p| p.0.cmp(z))
            .ok()
            .map(|i| graph[i].1.clone())
    })))
}

/// Whether `c` is a function (set of pairs, single-valued) with domain `y`.
pub fn is_function_on(c: &HFSet, y: &HFSet) -> bool {
    match decode_function(c) {
        Ok(g) => g.len() == y.len() && g.iter().all(|(a, _)| y.contains(a)),
        Err(_) => false,
    }
}

pub fn powerset(a: &HFSet) -> Result<HFSet> {
    if a.len() > 16 {
        return Err(Error::ResourceLimit(format!(
            "powerset of a {}-element set",
            a.len()
        )));
    }
    let n = a.len();
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        out.push(HFSet::make_set(
            (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| a.children()[i].clone()),
        ));
    }
    Ok(HFSet::make_set(out))
}

/// All sets of rank at most `rank`: sizes 1, 2, 4, 16, 65536.
pub fn universe(rank: usize) -> Result<Vec<HFSet>> {
    if rank > 4 {
        return Err(Error::ResourceLimit(format!(
            "universe of rank {} is too large to enumerate",
            rank
        )));
    }
    let mut level = vec![HFSet::empty()];
    for _ in 0..rank {
        level = powerset(&HFSet::make_set(level.clone()))?
            .children()
            .to_vec();
    }
    Ok(level)
}

/// `universe(rank)` restricted to sets whose `tc_card` is at most `cap`.
pub fn universe_capped(rank: usize, cap: Option<usize>) -> Result<Vec<HFSet>> {
    let all = universe(rank)?;
    Ok(match cap {
        Some(c) => all.into_iter().filter(|s| s.tc_card() <= c).collect(),
        None => all,
    })
}

/// A uniformly random subset of `pool`.
pub fn random_subset<R: Rng>(pool: &[HFSet], rng: &mut R) -> HFSet {
    HFSet::make_set(pool.iter().filter(|_| rng.gen_bool(0.5)).cloned())
}

/// The naive fixpoint `u ← u ∪ ∪u` starting from `x`; used as a test oracle.
pub fn tc_fixpoint(x: &HFSet) -> HFSet {
    let mut u = x.clone();
    loop {
        let next = union2(&u, &big_union(&u));
        if next == u {
            return u;
        }
        u = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn e() -> HFSet {
        HFSet::empty()
    }
    fn s(v: Vec<HFSet>) -> HFSet {
        HFSet::make_set(v)
    }
    fn lit(x: &str) -> HFSet {
        HFSet::parse(x).unwrap()
    }

    #[test]
    fn make_set_collapses_and_orders() {
        assert_eq!(s(vec![e(), e()]), s(vec![e()]));
        assert_eq!(s(vec![]), e());
        let one = s(vec![e()]);
        let v = s(vec![one.clone(), e(), one.clone()]);
        assert_eq!(v.len(), 2);
        assert_eq!(v.children()[0], e());
        assert_eq!(v.children()[1], one);
    }

    #[test]
    fn compare_examples() {
        assert_eq!(compare(&e(), &e()), Ordering::Equal);
        assert_eq!(compare(&e(), &lit("{{}}")), Ordering::Less);
        assert_eq!(compare(&lit("{{{}}}"), &lit("{{} {{}}}")), Ordering::Less);
    }

    #[test]
    fn rudimentary_examples() {
        assert_eq!(pair(&e(), &e()), lit("{{}}"));
        assert_eq!(big_union(&e()), e());
        assert_eq!(diff(&lit("{{} {{}}}"), &lit("{{}}")), lit("{{{}}}"));
    }

    #[test]
    fn tc_examples() {
        assert_eq!(transitive_closure(&e()), e());
        assert_eq!(transitive_closure(&lit("{{{}}}")), lit("{{{}} {}}"));
        let three = HFSet::nat(3);
        assert_eq!(transitive_closure(&three), three);
        assert_eq!(three.tc_card(), 3);
    }

    #[test]
    fn function_examples() {
        let one = lit("{{}}");
        let c = s(vec![kpair(&e(), &one)]);
        assert_eq!(fn_apply(&c, &e()).unwrap(), one);
        assert_eq!(fn_apply(&c, &one).unwrap(), e());
        let c2 = s(vec![kpair(&e(), &e()), kpair(&one, &one)]);
        assert_eq!(fn_image(&c2, &lit("{{} {{}}}")).unwrap(), lit("{{} {{}}}"));
    }

    #[test]
    fn malformed_functions_rejected() {
        let one = lit("{{}}");
        assert!(matches!(
            fn_apply(&s(vec![lit("{{} {{}} {{{}}}}")]), &e()),
            Err(Error::MalformedFunction(_))
        ));
        let c = s(vec![kpair(&e(), &e()), kpair(&e(), &one)]);
        assert!(matches!(
            fn_apply(&c, &e()),
            Err(Error::MalformedFunction(_))
        ));
    }

    #[test]
    fn first_second_examples() {
        let p = kpair(&e(), &lit("{{}}"));
        assert_eq!(first(&p), e());
        assert_eq!(second(&p), lit("{{}}"));
        assert_eq!(first(&e()), e());
    }

    /// The displayed rudimentary definition `1st(d) = ∪{b ∈ ∪d : ∃c ∈ ∪d ⟨b,c⟩ = d}`.
    fn first_literal(d: &HFSet) -> HFSet {
        let u = big_union(d);
        big_union(&HFSet::make_set(
            u.children()
                .iter()
                .filter(|b| u.children().iter().any(|c| kpair(b, c) == *d))
                .cloned(),
        ))
    }

    fn second_literal(d: &HFSet) -> HFSet {
        let u = big_union(d);
        big_union(&HFSet::make_set(
            u.children()
                .iter()
                .filter(|c| u.children().iter().any(|b| kpair(b, c) == *d))
                .cloned(),
        ))
    }

    #[test]
    fn first_second_match_literal_definition() {
        for d in universe(4).unwrap().iter().step_by(97) {
            assert_eq!(first(d), first_literal(d), "first {}", d);
            assert_eq!(second(d), second_literal(d), "second {}", d);
        }
        for a in universe(2).unwrap() {
            for b in universe(2).unwrap() {
                let d = kpair(&a, &b);
                assert_eq!(first(&d), first_literal(&d));
                assert_eq!(second(&d), second_literal(&d));
            }
        }
    }

    #[test]
    fn universe_sizes() {
        let sizes: Vec<usize> = (0..=3).map(|r| universe(r).unwrap().len()).collect();
        assert_eq!(sizes, vec![1, 2, 4, 16]);
        assert!(universe(5).is_err());
    }

    #[test]
    fn literal_round_trip_and_errors() {
        let x = lit("{ {{}} {} {} }");
        assert_eq!(x.to_string(), "{{} {{}}}");
        assert!(matches!(HFSet::parse("{{}"), Err(Error::Parse { .. })));
        assert!(matches!(HFSet::parse("{} x"), Err(Error::Parse { .. })));
    }

    fn arb_hf() -> impl Strategy<Value = HFSet> {
        let leaf = Just(HFSet::empty());
        leaf.prop_recursive(4, 24, 4, |inner| {
            prop::collection::vec(inner, 0..4).prop_map(HFSet::make_set)
        })
    }

    proptest! {
        #[test]
        fn extensionality(a in arb_hf(), b in arb_hf()) {
            let eq = compare(&a, &b) == Ordering::Equal;
            prop_assert_eq!(eq, HFSet::make_set(a.children().to_vec()) == HFSet::make_set(b.children().to_vec()));
            prop_assert_eq!(eq, a.to_string() == b.to_string());
        }

        #[test]
        fn children_strictly_increasing(a in arb_hf()) {
            for w in a.children().windows(2) {
                prop_assert_eq!(compare(&w[0], &w[1]), Ordering::Less);
            }
        }

        #[test]
        fn tc_is_transitive_and_matches_oracle(a in arb_hf()) {
            let t = transitive_closure(&a);
            for y in t.children() {
                for z in y.children() {
                    prop_assert!(t.contains(z));
                }
            }
            prop_assert_eq!(&t, &tc_fixpoint(&a));
            prop_assert_eq!(t.len(), a.tc_card());
            prop_assert_eq!(transitive_closure(&union2(&t, &a)), t);
        }

        #[test]
        fn pairs_decode(a in arb_hf(), b in arb_hf()) {
            let d = kpair(&a, &b);
            prop_assert_eq!(first(&d), a.clone());
            prop_assert_eq!(second(&d), b);
            prop_assert_eq!(big_union(&pair(&a, &a)), a);
        }

        #[test]
        fn order_is_total(a in arb_hf(), b in arb_hf(), c in arb_hf()) {
            prop_assert_eq!(compare(&a, &b), compare(&b, &a).reverse());
            if compare(&a, &b) != Ordering::Greater && compare(&b, &c) != Ordering::Greater {
                prop_assert_ne!(compare(&a, &c), Ordering::Greater);
            }
        }
    }

    #[test]
    fn random_subsets_are_rank_bounded() {
        let v3 = universe(3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert!(random_subset(&v3, &mut rng).rank() <= 4);
        }
    }
}
