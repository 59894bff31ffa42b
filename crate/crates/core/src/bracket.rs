//! Bracketed storage of an expression and the optional bracket index.

use std::cmp::Ordering;

use crate::term::{cmp_identity, FunId, Poly, SubTerm, SymId, Term};

/// Default maximum number of index entries.
pub const DEFAULT_INDEX_CAP: usize = 1 << 20;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BracketSet {
    pub symbols: Vec<SymId>,
    pub functions: Vec<FunId>,
}

impl BracketSet {
    fn contains(&self, f: &SubTerm) -> bool {
        match f {
            SubTerm::Sym(s, _) => self.symbols.contains(s),
            SubTerm::Func(fa) => self.functions.contains(&fa.id),
            SubTerm::Index(_) => false,
        }
    }

    /// Splits a term into its bracket key (coefficient one) and contents.
    pub fn split(&self, t: &Term) -> (Term, Term) {
        let (inside, outside): (Vec<SubTerm>, Vec<SubTerm>) = t.factors.iter().cloned().partition(|f| self.contains(f));
        (Term { coeff: num::One::one(), factors: inside }, Term { coeff: t.coeff.clone(), factors: outside })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LookupStats {
    pub comparisons: u64,
    pub reads: u64,
}

/// Every `stride`-th bracket, as bracket numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BracketIndex {
    entries: Vec<usize>,
    stride: usize,
}

impl BracketIndex {
    /// The smallest power of two `s` with `brackets / s <= cap`.
    pub fn stride_for(brackets: usize, cap: usize) -> usize {
        let cap = cap.max(1);
        let mut s = 1;
        while brackets / s > cap {
            s *= 2;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stride(&self) -> usize {
        self.stride
    }
}

#[derive(Clone, Debug)]
pub struct Brackets {
    set: BracketSet,
    /// (key, contents) ordered by key, then contents.
    terms: Vec<(Term, Term)>,
    /// Offset of the first term of each bracket.
    starts: Vec<usize>,
    index: Option<BracketIndex>,
}

impl Brackets {
    /// Groups `expr` by `set`; `index_cap` requests an index of at most that many entries.
    pub fn build(expr: &Poly, set: BracketSet, index_cap: Option<usize>) -> Self {
        let mut terms: Vec<(Term, Term)> = expr.terms().iter().map(|t| set.split(t)).collect();
        terms.sort_by(|a, b| cmp_identity(&a.0, &b.0).then_with(|| cmp_identity(&a.1, &b.1)));
        let mut starts = Vec::new();
        for (i, (k, _)) in terms.iter().enumerate() {
            if i == 0 || cmp_identity(&terms[i - 1].0, k) != Ordering::Equal {
                starts.push(i);
            }
        }
        let index = index_cap.map(|cap| {
            let stride = BracketIndex::stride_for(starts.len(), cap);
            BracketIndex { entries: (0..starts.len()).step_by(stride).collect(), stride }
        });
        Brackets { set, terms, starts, index }
    }

    pub fn set(&self) -> &BracketSet {
        &self.set
    }

    pub fn index(&self) -> Option<&BracketIndex> {
        self.index.as_ref()
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    fn extent(&self, b: usize) -> std::ops::Range<usize> {
        self.starts[b]..self.starts.get(b + 1).copied().unwrap_or(self.terms.len())
    }

    pub fn key(&self, b: usize) -> &Term {
        &self.terms[self.starts[b]].0
    }

    /// Contents of bracket `b` in stored order.
    pub fn contents(&self, b: usize) -> Vec<Term> {
        self.terms[self.extent(b)].iter().map(|(_, c)| c.clone()).collect()
    }

    /// Contents of the bracket with the given key; zero when absent.
    pub fn lookup(&self, key: &Term) -> (Poly, LookupStats) {
        let mut stats = LookupStats::default();
        let Some(index) = &self.index else {
            return (self.scan(0, key, &mut stats), stats);
        };
        let (mut lo, mut hi) = (0, index.entries.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            stats.comparisons += 1;
            match cmp_identity(self.key(index.entries[mid]), key) {
                Ordering::Equal => {
                    let b = index.entries[mid];
                    return (Poly::from_sorted(sorted_contents(self.contents(b))), stats);
                }
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
            }
        }
        if lo == 0 {
            return (Poly::zero(), stats);
        }
        let from = self.starts[index.entries[lo - 1]];
        (self.scan(from, key, &mut stats), stats)
    }

    /// Forward scan from term offset `from`.
    fn scan(&self, from: usize, key: &Term, stats: &mut LookupStats) -> Poly {
        let mut found = Vec::new();
        for (k, c) in &self.terms[from..] {
            stats.reads += 1;
            match cmp_identity(k, key) {
                Ordering::Less => {}
                Ordering::Equal => found.push(c.clone()),
                Ordering::Greater => break,
            }
        }
        Poly::from_sorted(sorted_contents(found))
    }
}

fn sorted_contents(mut terms: Vec<Term>) -> Vec<Term> {
    terms.sort_by(cmp_identity);
    terms
}
