//! Term-shaped patterns with wildcards and the backtracking matcher.

use crate::compiler::ast::{BuiltinSet, Restriction, SetItem, WildKey, Wildcard};
use crate::term::{permutation_sign, FuncApp, FunId, IdxId, Poly, SubTerm, SymId, Symmetry, Term};

#[derive(Clone, Debug, PartialEq)]
pub enum ArgPat {
    Literal(Poly),
    Wild(Wildcard),
    Field(String),
    Func(FuncPat),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuncPat {
    pub id: FunId,
    pub symmetry: Symmetry,
    pub args: Vec<ArgPat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FactorPat {
    SymPow(SymId, i64),
    SymWild(Wildcard),
    Index(IdxId),
    IndexWild(Wildcard),
    Func(FuncPat),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Pattern {
    pub factors: Vec<FactorPat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Bound {
    Arg(Poly),
    Args(Vec<Poly>),
}

/// Wildcard assignments of one match, plus the sign picked up by matching
/// a permuted antisymmetric argument list.
#[derive(Clone, Debug, PartialEq)]
pub struct Bindings {
    pub map: Vec<(WildKey, Bound)>,
    pub sign: i8,
}

impl Default for Bindings {
    fn default() -> Self {
        Bindings { map: Vec::new(), sign: 1 }
    }
}

impl Bindings {
    pub fn get(&self, key: &WildKey) -> Option<&Bound> {
        self.map.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_arg(&self, key: &WildKey) -> Option<&Poly> {
        match self.get(key) {
            Some(Bound::Arg(p)) => Some(p),
            _ => None,
        }
    }

    fn with(&self, key: WildKey, value: Bound) -> Bindings {
        let mut b = self.clone();
        b.map.push((key, value));
        b
    }
}

/// Consumption state of the term being matched: which factors are used
/// and how much of each symbol power remains.
#[derive(Clone, Debug)]
pub struct MatchState {
    used: Vec<bool>,
    powers: Vec<i64>,
}

impl MatchState {
    pub fn new(factors: &[SubTerm]) -> Self {
        MatchState {
            used: vec![false; factors.len()],
            powers: factors.iter().map(|f| if let SubTerm::Sym(_, p) = f { *p } else { 0 }).collect(),
        }
    }

    /// The factors left over after all consumption.
    pub fn remainder(&self, factors: &[SubTerm]) -> Vec<SubTerm> {
        let mut out = Vec::new();
        for (i, f) in factors.iter().enumerate() {
            match f {
                SubTerm::Sym(s, _) => {
                    if self.powers[i] != 0 {
                        out.push(SubTerm::Sym(*s, self.powers[i]));
                    }
                }
                other if !self.used[i] => out.push(other.clone()),
                _ => {}
            }
        }
        out
    }
}

fn single_sym(p: &Poly) -> Option<SymId> {
    match p.as_single_term() {
        Some(t) if t.coeff == num::One::one() => match t.factors.as_slice() {
            [SubTerm::Sym(s, 1)] => Some(*s),
            _ => None,
        },
        _ => None,
    }
}

fn single_index(p: &Poly) -> Option<IdxId> {
    match p.as_single_term() {
        Some(t) if t.coeff == num::One::one() => match t.factors.as_slice() {
            [SubTerm::Index(i)] => Some(*i),
            _ => None,
        },
        _ => None,
    }
}

fn single_func(p: &Poly) -> Option<&FuncApp> {
    match p.as_single_term() {
        Some(t) if t.coeff == num::One::one() => match t.factors.as_slice() {
            [SubTerm::Func(f)] => Some(f),
            _ => None,
        },
        _ => None,
    }
}

fn item_equals(item: &SetItem, value: &Poly, b: &Bindings) -> Option<bool> {
    Some(match item {
        SetItem::Number(r) => value.as_number().as_ref() == Some(r),
        SetItem::Symbol(s) => single_sym(value) == Some(*s),
        SetItem::Index(i) => single_index(value) == Some(*i),
        SetItem::Function(f) => single_func(value).is_some_and(|fa| fa.id == *f && fa.args.is_empty()),
        SetItem::Wild(k) => match b.get(k)? {
            Bound::Arg(p) => p == value,
            Bound::Args(_) => false,
        },
    })
}

fn builtin_member(set: BuiltinSet, value: &Poly) -> bool {
    use num::{Integer, Signed, Zero};
    let n = value.as_number();
    match set {
        BuiltinSet::Number => n.is_some(),
        BuiltinSet::Integer => n.is_some_and(|r| r.is_integer()),
        BuiltinSet::Pos => n.is_some_and(|r| r.is_integer() && r.is_positive()),
        BuiltinSet::Pos0 => n.is_some_and(|r| r.is_integer() && !r.is_negative()),
        BuiltinSet::Neg => n.is_some_and(|r| r.is_integer() && r.is_negative()),
        BuiltinSet::Neg0 => n.is_some_and(|r| r.is_integer() && !r.is_positive()),
        BuiltinSet::Even => n.is_some_and(|r| r.is_integer() && r.numer().is_even()),
        BuiltinSet::Odd => n.is_some_and(|r| r.is_integer() && r.numer().is_odd() && !r.is_zero()),
        BuiltinSet::Symbol => single_sym(value).is_some(),
        BuiltinSet::Index => single_index(value).is_some(),
    }
}

/// Comparisons against wildcards that are still unbound pass unless
/// `complete` is set.
fn restriction_ok(r: &Restriction, value: &Poly, b: &Bindings, complete: bool) -> bool {
    match r {
        Restriction::None => true,
        Restriction::Builtin(set, negate) => builtin_member(*set, value) != *negate,
        Restriction::In(items) => {
            let mut pending = false;
            for it in items {
                match item_equals(it, value, b) {
                    Some(true) => return true,
                    Some(false) => {}
                    None => pending = true,
                }
            }
            pending && !complete
        }
        Restriction::NotIn(items) => items.iter().all(|it| item_equals(it, value, b) != Some(true)),
    }
}

impl Pattern {
    fn wildcards(&self) -> Vec<&Wildcard> {
        fn from_func<'a>(f: &'a FuncPat, out: &mut Vec<&'a Wildcard>) {
            for a in &f.args {
                match a {
                    ArgPat::Wild(w) => out.push(w),
                    ArgPat::Func(g) => from_func(g, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        for f in &self.factors {
            match f {
                FactorPat::SymWild(w) | FactorPat::IndexWild(w) => out.push(w),
                FactorPat::Func(fp) => from_func(fp, &mut out),
                _ => {}
            }
        }
        out
    }

    /// First match of the pattern among the unconsumed factors, returning
    /// the bindings and the consumption state after the match.
    pub fn find(&self, factors: &[SubTerm], state: &MatchState) -> Option<(Bindings, MatchState)> {
        let wilds = self.wildcards();
        let mut st = state.clone();
        let mut found = None;
        let mut cont = |b: &Bindings, s: &MatchState| {
            let ok = wilds.iter().all(|w| match b.get(&w.key) {
                Some(Bound::Arg(v)) => restriction_ok(&w.restriction, v, b, true),
                _ => true,
            });
            if ok {
                found = Some((b.clone(), s.clone()));
            }
            ok
        };
        match_factors(&self.factors, factors, &mut st, &Bindings::default(), &mut cont);
        found
    }

    pub fn matches(&self, term: &Term) -> Option<Bindings> {
        self.find(&term.factors, &MatchState::new(&term.factors)).map(|(b, _)| b)
    }
}

type Cont<'c> = dyn FnMut(&Bindings, &MatchState) -> bool + 'c;

fn match_factors(pats: &[FactorPat], factors: &[SubTerm], st: &mut MatchState, b: &Bindings, cont: &mut Cont) -> bool {
    let Some((first, rest)) = pats.split_first() else {
        return cont(b, st);
    };
    match first {
        FactorPat::SymPow(s, n) => {
            for i in 0..factors.len() {
                if let SubTerm::Sym(fs, _) = &factors[i] {
                    if fs == s {
                        let left = st.powers[i];
                        let enough = if *n > 0 { left >= *n } else { left <= *n };
                        if !enough {
                            return false;
                        }
                        st.powers[i] -= n;
                        let r = match_factors(rest, factors, st, b, cont);
                        st.powers[i] += n;
                        return r;
                    }
                }
            }
            false
        }
        FactorPat::SymWild(w) => {
            for i in 0..factors.len() {
                if let SubTerm::Sym(s, _) = &factors[i] {
                    if st.powers[i] < 1 {
                        continue;
                    }
                    let Some(b2) = bind(w, Poly::from_term(Term::sym(*s, 1)), b) else { continue };
                    st.powers[i] -= 1;
                    let r = match_factors(rest, factors, st, &b2, cont);
                    st.powers[i] += 1;
                    if r {
                        return true;
                    }
                }
            }
            false
        }
        FactorPat::Index(id) => {
            for i in 0..factors.len() {
                if !st.used[i] && factors[i] == SubTerm::Index(*id) {
                    st.used[i] = true;
                    let r = match_factors(rest, factors, st, b, cont);
                    st.used[i] = false;
                    return r;
                }
            }
            false
        }
        FactorPat::IndexWild(w) => {
            for i in 0..factors.len() {
                if let SubTerm::Index(id) = &factors[i] {
                    if st.used[i] {
                        continue;
                    }
                    let Some(b2) = bind(w, Poly::from_term(Term::index(*id)), b) else { continue };
                    st.used[i] = true;
                    let r = match_factors(rest, factors, st, &b2, cont);
                    st.used[i] = false;
                    if r {
                        return true;
                    }
                }
            }
            false
        }
        FactorPat::Func(fp) => {
            for i in 0..factors.len() {
                let SubTerm::Func(fa) = &factors[i] else { continue };
                if st.used[i] || fa.id != fp.id {
                    continue;
                }
                st.used[i] = true;
                let mut inner = |b2: &Bindings| match_factors(rest, factors, st, b2, cont);
                let r = match_func(fp, fa, b, &mut inner);
                st.used[i] = false;
                if r {
                    return true;
                }
            }
            false
        }
    }
}

type ArgCont<'c> = dyn FnMut(&Bindings) -> bool + 'c;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    fn rec(k: usize, perm: &mut Vec<usize>, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == perm.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..perm.len() {
            if !used[i] {
                used[i] = true;
                cur.push(perm[i]);
                rec(k + 1, perm, used, cur, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut used = vec![false; n];
    rec(0, &mut perm, &mut used, &mut Vec::new(), &mut out);
    out
}

/// Largest argument count for which symmetric patterns are tried against
/// every permutation.
const MAX_PERMUTED_ARGS: usize = 8;

fn match_func(fp: &FuncPat, fa: &FuncApp, b: &Bindings, cont: &mut ArgCont) -> bool {
    let n = fa.args.len();
    match fp.symmetry {
        Symmetry::Symmetric | Symmetry::Antisymmetric if n > 1 && n <= MAX_PERMUTED_ARGS && fp.args.len() == n => {
            for perm in permutations(n) {
                let args: Vec<Poly> = perm.iter().map(|&i| fa.args[i].clone()).collect();
                let mut b2 = b.clone();
                if fp.symmetry == Symmetry::Antisymmetric {
                    b2.sign *= permutation_sign(&perm);
                }
                if match_args(&fp.args, &args, &b2, cont) {
                    return true;
                }
            }
            false
        }
        Symmetry::Cyclic | Symmetry::ReverseCyclic if n > 1 && fp.args.len() == n => {
            let mut orders: Vec<Vec<Poly>> =
                (0..n).map(|r| (0..n).map(|k| fa.args[(r + k) % n].clone()).collect()).collect();
            if fp.symmetry == Symmetry::ReverseCyclic {
                let rev: Vec<Poly> = fa.args.iter().rev().cloned().collect();
                orders.extend((0..n).map(|r| (0..n).map(|k| rev[(r + k) % n].clone()).collect::<Vec<_>>()));
            }
            orders.iter().any(|args| match_args(&fp.args, args, b, cont))
        }
        _ => match_args(&fp.args, &fa.args, b, cont),
    }
}

fn match_args(pats: &[ArgPat], args: &[Poly], b: &Bindings, cont: &mut ArgCont) -> bool {
    let Some((first, rest)) = pats.split_first() else {
        return args.is_empty() && cont(b);
    };
    match first {
        ArgPat::Field(name) => {
            let key = WildKey::Field(name.clone());
            if let Some(bound) = b.get(&key) {
                let Bound::Args(list) = bound else { return false };
                let k = list.len();
                return args.len() >= k && args[..k] == list[..] && match_args(rest, &args[k..], b, cont);
            }
            for k in 0..=args.len() {
                let b2 = b.with(key.clone(), Bound::Args(args[..k].to_vec()));
                if match_args(rest, &args[k..], &b2, cont) {
                    return true;
                }
            }
            false
        }
        ArgPat::Wild(w) => {
            let Some((a, tail)) = args.split_first() else { return false };
            match bind(w, a.clone(), b) {
                Some(b2) => match_args(rest, tail, &b2, cont),
                None => false,
            }
        }
        ArgPat::Literal(p) => {
            let Some((a, tail)) = args.split_first() else { return false };
            a == p && match_args(rest, tail, b, cont)
        }
        ArgPat::Func(fp) => {
            let Some((a, tail)) = args.split_first() else { return false };
            let Some(fa) = single_func(a) else { return false };
            if fa.id != fp.id {
                return false;
            }
            let mut inner = |b2: &Bindings| match_args(rest, tail, b2, cont);
            match_func(fp, fa, b, &mut inner)
        }
    }
}

fn bind(w: &Wildcard, value: Poly, b: &Bindings) -> Option<Bindings> {
    if let WildKey::Idx(_) = w.key {
        let ok = single_index(&value).is_some() || value.as_number().is_some_and(|r| r.is_integer());
        if !ok {
            return None;
        }
    }
    if let Some(bound) = b.get(&w.key) {
        return match bound {
            Bound::Arg(p) if *p == value => Some(b.clone()),
            _ => None,
        };
    }
    if !restriction_ok(&w.restriction, &value, b, false) {
        return None;
    }
    Some(b.with(w.key.clone(), Bound::Arg(value)))
}
