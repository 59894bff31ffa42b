//! Randomized property checks. Each returns a description of the first
//! failure, so they can be driven both by `#[test]`s and by the acceptance run.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num::{One, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use miniform::bracket::{BracketSet, Brackets};
use miniform::sort::Sorter;
use miniform::sums;
use miniform::symbols::FuncClass;
use miniform::term::{cmp_identity, normalize, rat, rat_frac, FuncApp};
use miniform::topology::{shortest_cycle, Adjacency};
use miniform::{FunId, Poly, Rat, SubTerm, SymId, Symmetry, SymbolTable, Term};

pub const CASES: u32 = 256;

pub type Check = fn() -> Result<(), String>;

/// Every property suite, by name.
pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("sort matches naive accumulation", sort_vs_oracle as Check),
        ("compare is a total order", compare_total_order),
        ("normalize is idempotent", normalize_idempotent),
        ("antisymmetric sign is permutation parity", antisymmetric_sign),
        ("stuffle numeric identity", stuffle_identity),
        ("shuffle series identity", shuffle_identity),
        ("notation round trip", notation_round_trip),
        ("brackets reassemble the expression", bracket_union),
        ("Hide/Unhide round trip", hide_unhide),
        ("ReplaceLoop girth", girth),
    ]
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

fn drive<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    runner().run(&strategy, test).map_err(|e| e.to_string())
}

struct World {
    syms: Vec<SymId>,
    plain: FunId,
    symmetric: FunId,
    antisymmetric: FunId,
    cyclic: FunId,
}

fn world() -> World {
    let mut t = SymbolTable::new();
    let syms = (0..4).map(|i| t.add_symbol(&format!("s{i}")).unwrap()).collect();
    World {
        syms,
        plain: t.add_function("f", FuncClass::Commuting, Symmetry::None).unwrap(),
        symmetric: t.add_function("g", FuncClass::Commuting, Symmetry::Symmetric).unwrap(),
        antisymmetric: t.add_function("h", FuncClass::Commuting, Symmetry::Antisymmetric).unwrap(),
        cyclic: t.add_function("c", FuncClass::Commuting, Symmetry::Cyclic).unwrap(),
    }
}

fn coeff() -> impl Strategy<Value = Rat> {
    (prop_oneof![-5i64..=-1, 1i64..=5], 1i64..=4).prop_map(|(n, d)| rat_frac(n, d))
}

/// A symbol-only term as (coefficient, exponents of s0..s3).
fn monomial() -> impl Strategy<Value = (Rat, Vec<i64>)> {
    (coeff(), prop::collection::vec(-1i64..=2, 4))
}

fn term_of(w: &World, c: &Rat, exps: &[i64]) -> Term {
    let mut t = Term::number(c.clone());
    for (s, e) in w.syms.iter().zip(exps) {
        if *e != 0 {
            t = t.mul(&Term::sym(*s, *e)).unwrap();
        }
    }
    t
}

/// Raw factor descriptions; functions carry small symbolic arguments.
#[derive(Clone, Debug)]
enum RawFactor {
    Sym(usize, i64),
    Func(u8, Vec<Vec<(i64, Vec<i64>)>>),
}

fn raw_factor() -> impl Strategy<Value = RawFactor> {
    let arg = prop::collection::vec((-3i64..=3, prop::collection::vec(0i64..=2, 4)), 1..=2);
    prop_oneof![
        (0usize..4, prop_oneof![-2i64..=-1, 1i64..=3]).prop_map(|(s, e)| RawFactor::Sym(s, e)),
        (0u8..4, prop::collection::vec(arg, 0..=3)).prop_map(|(k, a)| RawFactor::Func(k, a)),
    ]
}

fn raw_term() -> impl Strategy<Value = (Rat, Vec<RawFactor>)> {
    (coeff(), prop::collection::vec(raw_factor(), 0..=4))
}

fn build_raw(w: &World, c: &Rat, fs: &[RawFactor]) -> Term {
    let factors = fs
        .iter()
        .map(|f| match f {
            RawFactor::Sym(s, e) => SubTerm::Sym(w.syms[*s], *e),
            RawFactor::Func(k, args) => {
                let (id, sym) = match k {
                    0 => (w.plain, Symmetry::None),
                    1 => (w.symmetric, Symmetry::Symmetric),
                    2 => (w.antisymmetric, Symmetry::Antisymmetric),
                    _ => (w.cyclic, Symmetry::Cyclic),
                };
                let args = args
                    .iter()
                    .map(|terms| Poly::from_terms(terms.iter().filter(|(c, _)| *c != 0).map(|(c, e)| term_of(w, &rat(*c), e)).collect()))
                    .collect();
                SubTerm::Func(FuncApp::with_props(id, args, true, sym))
            }
        })
        .collect();
    Term { coeff: c.clone(), factors }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn sorted_with(terms: &[Term], capacity: Option<usize>) -> Poly {
    let mut s = match capacity {
        Some(c) => Sorter::new(c, None),
        None => Sorter::unbounded(),
    };
    s.add_all(terms.iter().cloned()).unwrap();
    s.finish().unwrap().0
}

/// Sorter output equals a map-accumulate oracle, for every buffer capacity
/// and independently of input order.
pub fn sort_vs_oracle() -> Result<(), String> {
    let w = world();
    let strategy = (prop::collection::vec(monomial(), 0..400), any::<u64>());
    drive(strategy, |(stream, seed)| {
        let terms: Vec<Term> = stream.iter().map(|(c, e)| term_of(&w, c, e)).collect();
        let mut oracle: BTreeMap<Vec<i64>, Rat> = BTreeMap::new();
        for (c, e) in &stream {
            *oracle.entry(e.clone()).or_insert_with(Rat::zero) += c;
        }
        oracle.retain(|_, c| !c.is_zero());
        let reference = sorted_with(&terms, None);
        let got: BTreeMap<Vec<i64>, Rat> =
            reference.terms().iter().map(|t| (w.syms.iter().map(|s| t.power_of(*s)).collect(), t.coeff.clone())).collect();
        check(got == oracle, || "sorted result differs from oracle".into())?;
        check(reference.len() == oracle.len(), || "duplicate identities in output".into())?;
        check(reference.terms().windows(2).all(|p| cmp_identity(&p[0], &p[1]) == Ordering::Less), || "output not strictly increasing".into())?;
        for cap in [1, 10] {
            check(sorted_with(&terms, Some(cap)) == reference, || format!("capacity {cap} changes the result"))?;
        }
        let mut shuffled = terms.clone();
        let n = shuffled.len();
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        check(sorted_with(&shuffled, None) == reference, || "input order changes the result".into())
    })
}

pub fn compare_total_order() -> Result<(), String> {
    let w = world();
    drive((raw_term(), raw_term(), raw_term()), |(a, b, c)| {
        let norm = |(c, fs): &(Rat, Vec<RawFactor>)| normalize(build_raw(&w, c, fs));
        let (Some(a), Some(b), Some(c)) = (norm(&a), norm(&b), norm(&c)) else {
            return Ok(());
        };
        check(cmp_identity(&a, &b) == cmp_identity(&b, &a).reverse(), || "not antisymmetric".into())?;
        check(cmp_identity(&a, &a) == Ordering::Equal, || "not reflexive".into())?;
        check((cmp_identity(&a, &b) == Ordering::Equal) == (a.factors == b.factors), || "equal order but different identity".into())?;
        let v = [a, b, c];
        for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
            let le = |x: usize, y: usize| cmp_identity(&v[x], &v[y]) != Ordering::Greater;
            check(!(le(i, j) && le(j, k)) || le(i, k), || "not transitive".into())?;
        }
        Ok(())
    })
}

pub fn normalize_idempotent() -> Result<(), String> {
    let w = world();
    drive((raw_term(), any::<prop::sample::Index>()), |((c, fs), rot)| {
        let raw = build_raw(&w, &c, &fs);
        let once = normalize(raw.clone());
        check(once.clone().and_then(normalize) == once, || "normalize changes a normalized term".into())?;
        let mut rotated = raw;
        if !rotated.factors.is_empty() {
            let k = rot.index(rotated.factors.len());
            rotated.factors.rotate_left(k);
        }
        let again = normalize(rotated);
        check(again.as_ref().map(|t| (&t.coeff, &t.factors)) == once.as_ref().map(|t| (&t.coeff, &t.factors)), || {
            "factor order changes the canonical form".into()
        })
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn inversion_parity(p: &[usize]) -> i64 {
    let inv = (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Exhaustive over all permutations of up to five distinct arguments, then
/// randomized with a repeated argument.
pub fn antisymmetric_sign() -> Result<(), String> {
    let w = world();
    let args: Vec<Poly> = w.syms.iter().map(|s| Poly::from_term(Term::sym(*s, 1))).chain([Poly::from_int(7)]).collect();
    let canonical = |n: usize| normalize(Term::func(FuncApp::with_props(w.antisymmetric, args[..n].to_vec(), true, Symmetry::Antisymmetric)));
    for n in 0..=5 {
        let base = canonical(n).ok_or("distinct arguments vanished")?;
        for p in permutations(n) {
            let permuted = p.iter().map(|&i| args[i].clone()).collect();
            let t = normalize(Term::func(FuncApp::with_props(w.antisymmetric, permuted, true, Symmetry::Antisymmetric)))
                .ok_or("distinct arguments vanished")?;
            if t.factors != base.factors || t.coeff != base.coeff.clone() * rat(inversion_parity(&p)) {
                return Err(format!("wrong sign for permutation {p:?}"));
            }
        }
    }
    drive((2usize..=5, any::<prop::sample::Index>(), any::<prop::sample::Index>()), |(n, a, b)| {
        let mut v: Vec<Poly> = args[..n].to_vec();
        let (i, j) = (a.index(n), b.index(n));
        if i == j {
            return Ok(());
        }
        v[j] = v[i].clone();
        let t = normalize(Term::func(FuncApp::with_props(w.antisymmetric, v, true, Symmetry::Antisymmetric)));
        check(t.is_none(), || "repeated argument did not vanish".into())
    })
}

/// Nested sum straight from the definition.
fn nested_sum(v: &[i64], n: i64) -> Rat {
    let Some((&m, rest)) = v.split_first() else {
        return Rat::one();
    };
    (1..=n)
        .map(|i| {
            let sign = if m < 0 && i % 2 == 1 { -1 } else { 1 };
            rat(sign) / rat(i).pow(m.abs() as i32) * nested_sum(rest, i)
        })
        .fold(Rat::zero(), |a, b| a + b)
}

fn integer_vector(max_weight: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(prop_oneof![-2i64..=-1, 1i64..=2], 0..=4).prop_map(move |v| {
        let mut out = Vec::new();
        let mut w = 0;
        for m in v {
            if w + m.abs() <= max_weight {
                w += m.abs();
                out.push(m);
            }
        }
        out
    })
}

pub fn stuffle_identity() -> Result<(), String> {
    drive((integer_vector(4), integer_vector(4), 1i64..=12), |(a, b, n)| {
        let product = sums::stuffle(&a, &b).map_err(TestCaseError::fail)?;
        let weight = sums::weight(&a) + sums::weight(&b);
        check(product.keys().all(|k| sums::weight(k) == weight), || "weight not preserved".into())?;
        let lhs = nested_sum(&a, n) * nested_sum(&b, n);
        let rhs = product.iter().map(|(k, c)| rat(*c) * nested_sum(k, n)).fold(Rat::zero(), |x, y| x + y);
        check(lhs == rhs, || format!("S{a:?}*S{b:?} at n={n}: {lhs} vs {rhs}"))
    })
}

const ORDER: usize = 25;

/// Taylor coefficients of the iterated integral, integrating outwards.
fn hpl_oracle(v: &[i64]) -> Vec<Rat> {
    let mut s = vec![Rat::zero(); ORDER + 1];
    s[0] = Rat::one();
    for &m in v.iter().rev() {
        let mut next = vec![Rat::zero(); ORDER + 1];
        for k in 1..=ORDER {
            // coefficient of t^(k-1) in kernel(t) * s(t), integrated to x^k / k
            let c = match m {
                0 => s[k].clone(),
                _ => (0..k).map(|j| if m < 0 && (k - 1 - j) % 2 == 1 { -s[j].clone() } else { s[j].clone() }).fold(Rat::zero(), |a, b| a + b),
            };
            next[k] = c / rat(k as i64);
        }
        s = next;
    }
    s
}

fn times(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    (0..=ORDER).map(|k| (0..=k).map(|i| &a[i] * &b[k - i]).fold(Rat::zero(), |x, y| x + y)).collect()
}

fn binary_vector() -> impl Strategy<Value = Vec<i64>> {
    (prop::collection::vec(-1i64..=1, 0..=3), prop_oneof![Just(-1i64), Just(1i64)]).prop_map(|(mut v, last)| {
        v.push(last);
        v
    })
}

pub fn shuffle_identity() -> Result<(), String> {
    drive((binary_vector(), binary_vector()), |(a, b)| {
        let product = sums::shuffle(&a, &b);
        let total: i64 = product.values().sum();
        check(total == choose(a.len() + b.len(), a.len()), || "interleaving count wrong".into())?;
        let lhs = times(&hpl_oracle(&a), &hpl_oracle(&b));
        let mut rhs = vec![Rat::zero(); ORDER + 1];
        for (k, c) in &product {
            for (r, x) in rhs.iter_mut().zip(hpl_oracle(k)) {
                *r += rat(*c) * x;
            }
        }
        check(lhs == rhs, || format!("H{a:?}*H{b:?} series mismatch"))?;
        let lib = sums::hpl_series(&a, ORDER).map_err(TestCaseError::fail)?;
        check(lib == hpl_oracle(&a), || format!("series of H{a:?} differs from oracle"))
    })
}

fn choose(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

pub fn notation_round_trip() -> Result<(), String> {
    drive((integer_vector(8), binary_vector()), |(v, b)| {
        let bin = sums::to_binary_notation(&v).map_err(TestCaseError::fail)?;
        check(bin.len() as i64 == sums::weight(&v), || "binary length is not the weight".into())?;
        check(sums::to_integer_notation(&bin).ok() == Some(v.clone()), || format!("{v:?} does not round trip"))?;
        let int = sums::to_integer_notation(&b).map_err(TestCaseError::fail)?;
        check(sums::to_binary_notation(&int).ok() == Some(b.clone()), || format!("{b:?} does not round trip"))
    })
}

pub fn bracket_union() -> Result<(), String> {
    let w = world();
    let strategy = (prop::collection::vec(monomial(), 0..60), 1usize..=3, prop::option::of(1usize..=4));
    drive(strategy, |(stream, nsyms, cap)| {
        let expr = Poly::from_terms(stream.iter().map(|(c, e)| term_of(&w, c, e)).collect());
        let set = BracketSet { symbols: w.syms[..nsyms].to_vec(), functions: Vec::new() };
        let b = Brackets::build(&expr, set.clone(), cap);
        let mut sum = Poly::zero();
        for k in 0..b.len() {
            let key = b.key(k).clone();
            let contents = Poly::from_terms(b.contents(k));
            check(contents.terms().iter().all(|t| set.split(t).0.factors.is_empty()), || "contents contain bracket symbols".into())?;
            check(key.factors.iter().all(|f| matches!(f, SubTerm::Sym(s, _) if set.symbols.contains(s))), || "key has foreign factors".into())?;
            let (found, stats) = b.lookup(&key);
            check(found == contents, || "lookup disagrees with stored contents".into())?;
            if let Some(index) = b.index() {
                let bound = (usize::BITS - index.len().leading_zeros()) as u64 + 1;
                check(stats.comparisons <= bound, || format!("{} comparisons for {} entries", stats.comparisons, index.len()))?;
            }
            sum = sum.add(&contents.mul_term(&key));
        }
        check(sum == expr, || "brackets do not reassemble the expression".into())?;
        for k in 1..b.len() {
            check(cmp_identity(b.key(k - 1), b.key(k)) == Ordering::Less, || "keys not strictly increasing".into())?;
        }
        let absent = Term::sym(w.syms[0], 50);
        check(b.lookup(&absent).0.is_zero(), || "absent key found".into())
    })
}

fn poly_text() -> impl Strategy<Value = String> {
    prop::collection::vec((-9i64..=9, 0u32..=3, 0u32..=2, 0u32..=2), 1..8).prop_map(|terms| {
        terms.iter().map(|(c, a, b, d)| format!("+({c})*x^{a}*y^{b}*z^{d}")).collect::<String>()
    })
}

pub fn hide_unhide() -> Result<(), String> {
    drive(poly_text(), |p| {
        let src = format!(
            "Symbols x,y,z;\nOff Statistics;\nLocal F = {p};\n.sort\nHide F;\nLocal G = F;\n.sort\nUnhide F;\nid x = x;\n.sort\n.end\n"
        );
        let r = super::run(&src);
        check(r.status == 0, || format!("run failed: {}", r.stderr))?;
        check(r.session.expression_status("F") == Some(miniform::Status::Active), || "F not active".into())?;
        super::equals(&r, "F", &p).map_err(TestCaseError::fail)?;
        super::equals(&r, "G", &p).map_err(TestCaseError::fail)
    })
}

/// Random loopless cubic multigraph as edge list, via random pairing of half-edges.
fn cubic_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=5).prop_flat_map(|half| {
        let n = 2 * half;
        Just((0..3 * n).map(|h| h / 3).collect::<Vec<usize>>()).prop_shuffle().prop_filter_map("self loop", move |stubs| {
            let edges: Vec<(usize, usize)> = stubs.chunks(2).map(|p| (p[0], p[1])).collect();
            edges.iter().all(|(a, b)| a != b).then_some((n, edges))
        })
    })
}

/// Length of the shortest cycle found by enumerating every simple cycle.
fn girth_oracle(n: usize, edges: &[(usize, usize)]) -> Option<usize> {
    fn dfs(start: usize, u: usize, used: &mut Vec<bool>, on_path: &mut Vec<bool>, len: usize, edges: &[(usize, usize)], best: &mut Option<usize>) {
        for (e, &(a, b)) in edges.iter().enumerate() {
            if used[e] {
                continue;
            }
            let w = if a == u {
                b
            } else if b == u {
                a
            } else {
                continue;
            };
            if w == start {
                if len + 1 >= 2 {
                    *best = Some(best.map_or(len + 1, |x: usize| x.min(len + 1)));
                }
                continue;
            }
            if on_path[w] || w < start {
                continue;
            }
            used[e] = true;
            on_path[w] = true;
            dfs(start, w, used, on_path, len + 1, edges, best);
            on_path[w] = false;
            used[e] = false;
        }
    }
    let mut best = None;
    for s in 0..n {
        let mut on_path = vec![false; n];
        on_path[s] = true;
        dfs(s, s, &mut vec![false; edges.len()], &mut on_path, 0, edges, &mut best);
    }
    best
}

/// Girth from the topology module and from a ReplaceLoop run both equal the oracle.
pub fn girth() -> Result<(), String> {
    drive(cubic_graph(), |(n, edges)| {
        let expected = girth_oracle(n, &edges);
        let mut adj: Adjacency = vec![Vec::new(); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adj[a].push((e, b));
            adj[b].push((e, a));
        }
        let cycle = shortest_cycle(&adj);
        check(cycle.as_ref().map(|c| c.len()) == expected, || format!("girth {:?} vs oracle {expected:?}", cycle.as_ref().map(|c| c.len())))?;
        if let Some(c) = &cycle {
            let mut distinct = c.vertices.clone();
            distinct.sort();
            distinct.dedup();
            check(distinct.len() == c.vertices.len(), || "cycle repeats a vertex".into())?;
            for (i, &e) in c.edges.iter().enumerate() {
                let (a, b) = edges[e];
                let (u, v) = (c.vertices[i], c.vertices[(i + 1) % c.len()]);
                check((a, b) == (u, v) || (a, b) == (v, u), || "cycle edge does not join its vertices".into())?;
            }
        }
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            incident[a].push(e + 1);
            incident[b].push(e + 1);
        }
        let product: Vec<String> =
            incident.iter().map(|es| format!("f({})", es.iter().map(|e| format!("i{e}")).collect::<Vec<_>>().join(","))).collect();
        let src = format!(
            "Indices i1,...,i{};\nCF f(antisymmetric),ff;\nOff Statistics;\nLocal F = {};\nReplaceLoop,f,arguments=3,loopsize=all,outfun=ff;\n.end\n",
            edges.len(),
            product.join("*")
        );
        let r = super::run(&src);
        check(r.status == 0, || format!("run failed: {}", r.stderr))?;
        let f = r.session.expression("F").unwrap();
        if f.is_zero() {
            return Ok(());
        }
        let ff = r.session.table.lookup("ff");
        let arity = f.terms()[0].factors.iter().find_map(|s| match s {
            SubTerm::Func(fa) if Some(fa.id) == ff.as_ref().and_then(fun_id) => Some(fa.args.len()),
            _ => None,
        });
        check(arity == expected, || format!("outfun arity {arity:?} vs girth {expected:?}"))?;
        let remaining = f.terms()[0].factors.len() - 1;
        check(remaining == n - expected.unwrap_or(0), || "wrong number of vertices removed".into())
    })
}

fn fun_id(e: &miniform::symbols::Entry) -> Option<FunId> {
    match e {
        miniform::symbols::Entry::Function(id) => Some(*id),
        _ => None,
    }
}
