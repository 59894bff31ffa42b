//! Canonical terms: rational coefficient times an ordered product of subterms.
//!
//! A [`Term`] is normalized when symbol powers are merged, commuting factors
//! are sorted, function arguments are symmetry-normalized and the
//! coefficient is nonzero. A [`Poly`] is a sorted, merged list of such terms
//! and doubles as the representation of function arguments.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IdxId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunId(pub u32);

/// Symmetry property of a function or tensor, applied to its full argument list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Symmetry {
    #[default]
    None,
    Symmetric,
    Antisymmetric,
    Cyclic,
    ReverseCyclic,
}

#[derive(Clone, Debug)]
pub struct FuncApp {
    pub id: FunId,
    pub args: Vec<Poly>,
    pub commuting: bool,
    pub symmetry: Symmetry,
}

impl FuncApp {
    pub fn new(id: FunId, args: Vec<Poly>) -> Self {
        FuncApp { id, args, commuting: true, symmetry: Symmetry::None }
    }

    pub fn with_props(id: FunId, args: Vec<Poly>, commuting: bool, symmetry: Symmetry) -> Self {
        FuncApp { id, args, commuting, symmetry }
    }
}

impl PartialEq for FuncApp {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.args == other.args
    }
}
impl Eq for FuncApp {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubTerm {
    Sym(SymId, i64),
    Index(IdxId),
    Func(FuncApp),
}

impl SubTerm {
    fn rank(&self) -> u8 {
        match self {
            SubTerm::Sym(..) => 0,
            SubTerm::Index(_) => 1,
            SubTerm::Func(_) => 2,
        }
    }

    pub fn is_commuting(&self) -> bool {
        match self {
            SubTerm::Func(f) => f.commuting,
            _ => true,
        }
    }

    /// Size in subterm-words, the unit MaxTermSize is expressed in.
    pub fn size(&self) -> usize {
        match self {
            SubTerm::Sym(..) | SubTerm::Index(_) => 1,
            SubTerm::Func(f) => 1 + f.args.iter().map(Poly::size).sum::<usize>(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: Rat,
    pub factors: Vec<SubTerm>,
}

/// A normal-ordered sum of terms. Empty means zero.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    terms: Vec<Term>,
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Integer value of a rational, if it is one and fits in an i64.
pub fn rat_to_i64(r: &Rat) -> Option<i64> {
    if r.is_integer() {
        r.numer().to_i64()
    } else {
        None
    }
}

impl Term {
    pub fn one() -> Self {
        Term { coeff: Rat::one(), factors: Vec::new() }
    }

    pub fn number(c: Rat) -> Self {
        Term { coeff: c, factors: Vec::new() }
    }

    pub fn sym(id: SymId, pow: i64) -> Self {
        Term { coeff: Rat::one(), factors: vec![SubTerm::Sym(id, pow)] }
    }

    pub fn index(id: IdxId) -> Self {
        Term { coeff: Rat::one(), factors: vec![SubTerm::Index(id)] }
    }

    pub fn func(f: FuncApp) -> Self {
        Term { coeff: Rat::one(), factors: vec![SubTerm::Func(f)] }
    }

    pub fn is_number(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn size(&self) -> usize {
        1 + self.factors.iter().map(SubTerm::size).sum::<usize>()
    }

    /// Exponent of a symbol (0 when absent).
    pub fn power_of(&self, id: SymId) -> i64 {
        self.factors
            .iter()
            .find_map(|f| match f {
                SubTerm::Sym(s, p) if *s == id => Some(*p),
                _ => None,
            })
            .unwrap_or(0)
    }

    /// Raw product; call [`normalize`] on the result.
    pub fn mul_raw(&self, other: &Term) -> Term {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Term { coeff: &self.coeff * &other.coeff, factors }
    }

    pub fn mul(&self, other: &Term) -> Option<Term> {
        let symbolic = |t: &Term| t.factors.iter().all(|f| matches!(f, SubTerm::Sym(..)));
        if symbolic(self) && symbolic(other) {
            return Some(self.mul_symbols(other)).filter(|t| !t.coeff.is_zero());
        }
        normalize(self.mul_raw(other))
    }

    /// Product of two normalized symbol-only terms by merging their factor lists.
    fn mul_symbols(&self, other: &Term) -> Term {
        let (a, b) = (&self.factors, &other.factors);
        let mut factors = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let (SubTerm::Sym(sa, pa), SubTerm::Sym(sb, pb)) = (&a[i], &b[j]) else { unreachable!() };
            match sa.cmp(sb) {
                Ordering::Less => {
                    factors.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    factors.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    if pa + pb != 0 {
                        factors.push(SubTerm::Sym(*sa, pa + pb));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        factors.extend_from_slice(&a[i..]);
        factors.extend_from_slice(&b[j..]);
        Term { coeff: &self.coeff * &other.coeff, factors }
    }

    /// The same term with coefficient one.
    pub fn identity(&self) -> Term {
        Term { coeff: Rat::one(), factors: self.factors.clone() }
    }

    /// Multiplicative inverse when the term contains only symbols.
    pub fn inverse(&self) -> Option<Term> {
        if self.coeff.is_zero() {
            return None;
        }
        let mut factors = Vec::with_capacity(self.factors.len());
        for f in &self.factors {
            match f {
                SubTerm::Sym(s, p) => factors.push(SubTerm::Sym(*s, -*p)),
                _ => return None,
            }
        }
        Some(Term { coeff: self.coeff.recip(), factors })
    }
}

/// Brings a raw term into canonical form. Returns `None` when it vanishes.
pub fn normalize(mut t: Term) -> Option<Term> {
    if t.coeff.is_zero() {
        return None;
    }
    let mut syms: Vec<(SymId, i64)> = Vec::new();
    let mut commuting: Vec<SubTerm> = Vec::new();
    let mut noncommuting: Vec<SubTerm> = Vec::new();
    for f in t.factors.drain(..) {
        match f {
            SubTerm::Sym(s, p) => match syms.iter_mut().find(|(id, _)| *id == s) {
                Some(e) => e.1 += p,
                None => syms.push((s, p)),
            },
            SubTerm::Func(mut fa) => {
                let (args, sign) = symmetrize(std::mem::take(&mut fa.args), fa.symmetry);
                if sign == 0 {
                    return None;
                }
                if sign < 0 {
                    t.coeff = -t.coeff;
                }
                fa.args = args;
                if fa.commuting {
                    commuting.push(SubTerm::Func(fa));
                } else {
                    noncommuting.push(SubTerm::Func(fa));
                }
            }
            other => commuting.push(other),
        }
    }
    commuting.extend(syms.into_iter().filter(|(_, p)| *p != 0).map(|(s, p)| SubTerm::Sym(s, p)));
    commuting.sort_by(cmp_subterm);
    commuting.extend(noncommuting);
    t.factors = commuting;
    Some(t)
}

/// Canonical argument order and the sign the reordering contributes.
/// A sign of 0 means the function vanishes (antisymmetric with a repeat).
pub fn symmetrize(args: Vec<Poly>, kind: Symmetry) -> (Vec<Poly>, i8) {
    match kind {
        Symmetry::None => (args, 1),
        Symmetry::Symmetric => {
            let mut a = args;
            a.sort_by(cmp_arg);
            (a, 1)
        }
        Symmetry::Antisymmetric => {
            let mut order: Vec<usize> = (0..args.len()).collect();
            order.sort_by(|&i, &j| cmp_arg(&args[i], &args[j]));
            if order.windows(2).any(|w| args[w[0]] == args[w[1]]) {
                return (args, 0);
            }
            let sign = permutation_sign(&order);
            let mut slots: Vec<Option<Poly>> = args.into_iter().map(Some).collect();
            let sorted = order.iter().map(|&i| slots[i].take().expect("each slot used once")).collect();
            (sorted, sign)
        }
        Symmetry::Cyclic => (least_rotation(&args), 1),
        Symmetry::ReverseCyclic => {
            let fwd = least_rotation(&args);
            let mut rev = args;
            rev.reverse();
            let bwd = least_rotation(&rev);
            if cmp_args(&bwd, &fwd) == Ordering::Less {
                (bwd, 1)
            } else {
                (fwd, 1)
            }
        }
    }
}

/// Parity of a permutation given as the image list; +1 even, -1 odd.
pub fn permutation_sign(perm: &[usize]) -> i8 {
    let mut seen = vec![false; perm.len()];
    let mut sign = 1i8;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

fn least_rotation(args: &[Poly]) -> Vec<Poly> {
    let n = args.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best = 0;
    for start in 1..n {
        for k in 0..n {
            match cmp_arg(&args[(start + k) % n], &args[(best + k) % n]) {
                Ordering::Less => {
                    best = start;
                    break;
                }
                Ordering::Greater => break,
                Ordering::Equal => {}
            }
        }
    }
    (0..n).map(|k| args[(best + k) % n].clone()).collect()
}

pub fn cmp_subterm(a: &SubTerm, b: &SubTerm) -> Ordering {
    match (a, b) {
        (SubTerm::Sym(x, p), SubTerm::Sym(y, q)) => x.cmp(y).then_with(|| q.cmp(p)),
        (SubTerm::Index(x), SubTerm::Index(y)) => x.cmp(y),
        (SubTerm::Func(f), SubTerm::Func(g)) => f.id.cmp(&g.id).then_with(|| cmp_args(&f.args, &g.args)),
        _ => a.rank().cmp(&b.rank()),
    }
}

/// Order on identity parts; the coefficient is ignored.
pub fn cmp_identity(a: &Term, b: &Term) -> Ordering {
    cmp_factor_lists(&a.factors, &b.factors)
}

pub fn cmp_factor_lists(a: &[SubTerm], b: &[SubTerm]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = cmp_subterm(x, y);
        if c != Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

/// Lexicographic order on argument lists, shorter lists first on prefix ties.
pub fn cmp_args(a: &[Poly], b: &[Poly]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let c = cmp_arg(x, y);
        if c != Ordering::Equal {
            return c;
        }
    }
    a.len().cmp(&b.len())
}

enum ArgClass<'a> {
    Int(&'a BigInt),
    Zero,
    Sym(SymId),
    Index(IdxId),
    BareFunc(FunId),
    General,
}

impl ArgClass<'_> {
    fn rank(&self) -> u8 {
        match self {
            ArgClass::Zero | ArgClass::Int(_) => 0,
            ArgClass::Sym(_) => 1,
            ArgClass::Index(_) => 2,
            ArgClass::BareFunc(_) => 3,
            ArgClass::General => 4,
        }
    }
}

fn classify(p: &Poly) -> ArgClass<'_> {
    match p.terms.as_slice() {
        [] => ArgClass::Zero,
        [t] => {
            if t.factors.is_empty() {
                if t.coeff.is_integer() {
                    return ArgClass::Int(t.coeff.numer());
                }
                return ArgClass::General;
            }
            if !t.coeff.is_one() || t.factors.len() != 1 {
                return ArgClass::General;
            }
            match &t.factors[0] {
                SubTerm::Sym(s, 1) => ArgClass::Sym(*s),
                SubTerm::Index(i) => ArgClass::Index(*i),
                SubTerm::Func(f) if f.args.is_empty() => ArgClass::BareFunc(f.id),
                _ => ArgClass::General,
            }
        }
        _ => ArgClass::General,
    }
}

/// Order on single function arguments. Short arguments (an integer, a bare
/// symbol, index or argumentless function) precede composite ones.
pub fn cmp_arg(a: &Poly, b: &Poly) -> Ordering {
    let (ca, cb) = (classify(a), classify(b));
    match (&ca, &cb) {
        (ArgClass::Zero, ArgClass::Zero) => Ordering::Equal,
        (ArgClass::Zero, ArgClass::Int(y)) => BigInt::zero().cmp(y),
        (ArgClass::Int(x), ArgClass::Zero) => (*x).cmp(&BigInt::zero()),
        (ArgClass::Int(x), ArgClass::Int(y)) => x.cmp(y),
        (ArgClass::Sym(x), ArgClass::Sym(y)) => x.cmp(y),
        (ArgClass::Index(x), ArgClass::Index(y)) => x.cmp(y),
        (ArgClass::BareFunc(x), ArgClass::BareFunc(y)) => x.cmp(y),
        (ArgClass::General, ArgClass::General) => {
            for (x, y) in a.terms.iter().zip(&b.terms) {
                let c = cmp_identity(x, y).then_with(|| x.coeff.cmp(&y.coeff));
                if c != Ordering::Equal {
                    return c;
                }
            }
            a.terms.len().cmp(&b.terms.len())
        }
        _ => ca.rank().cmp(&cb.rank()),
    }
}

/// Sorts by identity, merges equal identities by adding coefficients and
/// drops zeros.
pub fn sort_merge(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(cmp_identity);
    merge_sorted(terms)
}

/// Merge pass over terms already sorted by [`cmp_identity`].
pub fn merge_sorted(terms: Vec<Term>) -> Vec<Term> {
    let mut out: Vec<Term> = Vec::with_capacity(terms.len());
    for t in terms {
        if let Some(last) = out.last_mut() {
            if cmp_identity(last, &t) == Ordering::Equal {
                last.coeff += t.coeff;
                if last.coeff.is_zero() {
                    out.pop();
                }
                continue;
            }
        }
        if !t.coeff.is_zero() {
            out.push(t);
        }
    }
    out
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Poly { terms: vec![Term::one()] }
    }

    pub fn number(c: Rat) -> Self {
        Poly::from_term(Term::number(c))
    }

    pub fn from_int(n: i64) -> Self {
        Poly::number(rat(n))
    }

    pub fn from_term(t: Term) -> Self {
        match normalize(t) {
            Some(t) => Poly { terms: vec![t] },
            None => Poly::zero(),
        }
    }

    /// Normalizes every term, then sorts and merges.
    pub fn from_terms(terms: Vec<Term>) -> Self {
        Poly { terms: sort_merge(terms.into_iter().filter_map(normalize).collect()) }
    }

    /// Wraps terms that are already normalized, sorted and merged.
    pub fn from_sorted(terms: Vec<Term>) -> Self {
        Poly { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Term> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn size(&self) -> usize {
        self.terms.iter().map(Term::size).sum()
    }

    /// The rational value when the polynomial is a pure number.
    pub fn as_number(&self) -> Option<Rat> {
        match self.terms.as_slice() {
            [] => Some(Rat::zero()),
            [t] if t.factors.is_empty() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        self.as_number().as_ref().and_then(rat_to_i64)
    }

    pub fn as_single_term(&self) -> Option<&Term> {
        match self.terms.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut v = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            if cmp_identity(&self.terms[i], &other.terms[j]) == Ordering::Greater {
                v.push(other.terms[j].clone());
                j += 1;
            } else {
                v.push(self.terms[i].clone());
                i += 1;
            }
        }
        v.extend_from_slice(&self.terms[i..]);
        v.extend_from_slice(&other.terms[j..]);
        Poly { terms: merge_sorted(v) }
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Rat::one())
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|t| Term { coeff: &t.coeff * c, factors: t.factors.clone() }).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for a in &self.terms {
            for b in &other.terms {
                if let Some(t) = a.mul(b) {
                    out.push(t);
                }
            }
        }
        Poly { terms: sort_merge(out) }
    }

    pub fn mul_term(&self, t: &Term) -> Poly {
        Poly { terms: sort_merge(self.terms.iter().filter_map(|a| a.mul(t)).collect()) }
    }

    /// Integer power; negative exponents need a single invertible term.
    pub fn pow(&self, n: i64) -> Option<Poly> {
        if n < 0 {
            let inv = self.as_single_term()?.inverse()?;
            return Poly::from_term(inv).pow(-n);
        }
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Some(result)
    }
}

impl From<Term> for Poly {
    fn from(t: Term) -> Self {
        Poly::from_term(t)
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Symmetry::None => "none",
            Symmetry::Symmetric => "symmetric",
            Symmetry::Antisymmetric => "antisymmetric",
            Symmetry::Cyclic => "cyclesymmetric",
            Symmetry::ReverseCyclic => "reversecyclesymmetric",
        };
        f.write_str(s)
    }
}

/// Sign of a rational as -1, 0 or 1.
pub fn rat_sign(r: &Rat) -> i64 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}
