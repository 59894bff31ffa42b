//! Module execution: terms of the active expressions are streamed through
//! the compiled statements and sorted into their new versions.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::time::Instant;

use num::Signed;

use crate::bracket::{BracketSet, Brackets, LookupStats, DEFAULT_INDEX_CAP};
use crate::compiler::ast::{parse_algebra, CmpOp, Cond, CondValue, CountItem};
use crate::compiler::{FmtPiece, MergeMode, Module, ModuleCompiler, Op, SplitMode, Stmt};
use crate::diag::{Diagnostic, Location};
use crate::eval::{eval, EvalCtx, ExprSource};
use crate::pattern::MatchState;
use crate::preprocess::DollarSource;
use crate::print::{compact_text, expression_text, statistics_text, term_line, PrintOptions};
use crate::sort::{SortStats, Sorter};
use crate::symbols::{ExprId, FuncClass, SymbolTable};
use crate::term::{cmp_identity, normalize, FuncApp, Poly, Rat, SubTerm, Term};
use crate::topology::replace_loop;

pub const DEFAULT_MAX_TERM_SIZE: usize = 10_000;
pub const DEFAULT_REPEAT_CAP: usize = 100_000;

/// Limits and buffer sizes of a run.
#[derive(Clone, Debug)]
pub struct Config {
    /// Largest term, in subterm-words.
    pub max_term_size: usize,
    /// Terms held in memory before the sorter spills a run; `None` never spills.
    pub sort_capacity: Option<usize>,
    /// Maximum number of bracket index entries.
    pub index_cap: usize,
    pub spill_dir: Option<PathBuf>,
    /// Passes through one repeat block before the run is aborted.
    pub repeat_cap: usize,
    /// Number of chunks the input of a module is split into when every
    /// `$`-variable it assigns has a merge mode.
    pub chunks: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_term_size: DEFAULT_MAX_TERM_SIZE,
            sort_capacity: None,
            index_cap: DEFAULT_INDEX_CAP,
            spill_dir: None,
            repeat_cap: DEFAULT_REPEAT_CAP,
            chunks: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Active,
    Hidden,
}

#[derive(Clone, Debug)]
pub struct Expression {
    pub terms: Poly,
    pub status: Status,
    /// Bracket structure from the module that last sorted the expression.
    pub brackets: Option<Brackets>,
}

/// Statistics of one expression at the end of a module.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprStats {
    pub name: String,
    pub sort: SortStats,
}

#[derive(Default)]
struct Store {
    exprs: BTreeMap<ExprId, Expression>,
    lookups: RefCell<Vec<LookupStats>>,
}

impl ExprSource for Store {
    fn expression(&self, e: ExprId) -> Option<Poly> {
        self.exprs.get(&e).map(|x| x.terms.clone())
    }

    fn bracket(&self, e: ExprId, key: &Term) -> Result<Poly, String> {
        let x = self.exprs.get(&e).ok_or_else(|| "Expression is not available".to_string())?;
        if let Some(b) = &x.brackets {
            let (p, stats) = b.lookup(key);
            self.lookups.borrow_mut().push(stats);
            return Ok(p);
        }
        let mut set = BracketSet::default();
        for f in &key.factors {
            match f {
                SubTerm::Sym(s, _) => set.symbols.push(*s),
                SubTerm::Func(fa) => set.functions.push(fa.id),
                SubTerm::Index(_) => return Err("Illegal bracket key".to_string()),
            }
        }
        let mut stats = LookupStats::default();
        let mut found = Vec::new();
        for t in x.terms.terms() {
            stats.reads += 1;
            let (k, c) = set.split(t);
            if cmp_identity(&k, key).is_eq() {
                found.push(c);
            }
        }
        self.lookups.borrow_mut().push(stats);
        Ok(Poly::from_terms(found))
    }
}

/// State carried between modules: declarations, expressions, `$`-variables.
pub struct Session {
    pub table: SymbolTable,
    pub config: Config,
    store: Store,
    dollars: HashMap<String, Poly>,
    statistics: bool,
    output: String,
    last_stats: Vec<ExprStats>,
}

impl Default for Session {
    fn default() -> Self {
        Session::new(Config::default())
    }
}

impl Session {
    pub fn new(config: Config) -> Self {
        Session {
            table: SymbolTable::new(),
            config,
            store: Store::default(),
            dollars: HashMap::new(),
            statistics: true,
            output: String::new(),
            last_stats: Vec::new(),
        }
    }

    /// Current contents of an expression by name.
    pub fn expression(&self, name: &str) -> Option<&Poly> {
        match self.table.lookup(name) {
            Some(crate::symbols::Entry::Expression(e)) => self.store.exprs.get(&e).map(|x| &x.terms),
            _ => None,
        }
    }

    pub fn expression_status(&self, name: &str) -> Option<Status> {
        match self.table.lookup(name) {
            Some(crate::symbols::Entry::Expression(e)) => self.store.exprs.get(&e).map(|x| x.status),
            _ => None,
        }
    }

    /// Names of the stored expressions in definition order.
    pub fn expression_names(&self) -> Vec<String> {
        self.store.exprs.keys().map(|e| self.table.expression_name(*e).to_string()).collect()
    }

    pub fn brackets(&self, name: &str) -> Option<&Brackets> {
        match self.table.lookup(name) {
            Some(crate::symbols::Entry::Expression(e)) => self.store.exprs.get(&e).and_then(|x| x.brackets.as_ref()),
            _ => None,
        }
    }

    pub fn dollar(&self, name: &str) -> Option<&Poly> {
        self.dollars.get(name)
    }

    pub fn dollars(&self) -> &HashMap<String, Poly> {
        &self.dollars
    }

    pub fn set_dollar(&mut self, name: &str, value: Poly) {
        self.table.note_dollar(name);
        self.dollars.insert(name.to_string(), value);
    }

    /// Output produced since the last call.
    pub fn take_output(&mut self) -> String {
        std::mem::take(&mut self.output)
    }

    /// Counters of the bracket lookups done since the last call.
    pub fn take_lookup_stats(&mut self) -> Vec<LookupStats> {
        std::mem::take(&mut *self.store.lookups.borrow_mut())
    }

    /// Sort statistics of the expressions processed by the last module.
    pub fn last_stats(&self) -> &[ExprStats] {
        &self.last_stats
    }

    pub fn statistics_enabled(&self) -> bool {
        self.statistics
    }

    /// Compiles one statement into the module being built.
    pub fn compile_statement(&mut self, c: &mut ModuleCompiler, text: &str, loc: &Location) -> Result<(), String> {
        c.statement(text, loc, &mut self.table, &self.dollars)
    }

    /// `#$name = text;`: evaluated once, at preprocessing time.
    pub fn init_dollar(&mut self, name: &str, text: &str, loc: &Location) -> Result<(), Diagnostic> {
        let ast = parse_algebra(text, &self.table).map_err(|e| Diagnostic::new(loc.clone(), e))?;
        let mut ctx = EvalCtx::new(&self.table);
        ctx.dollars = Some(&self.dollars);
        ctx.exprs = Some(&self.store);
        let v = eval(&ast, &ctx).map_err(|e| Diagnostic::new(loc.clone(), e))?;
        self.set_dollar(name, v);
        Ok(())
    }

    fn ids(&self, list: &[ExprId], status: Status) -> Vec<ExprId> {
        if list.is_empty() {
            self.store.exprs.iter().filter(|(_, x)| x.status == status).map(|(e, _)| *e).collect()
        } else {
            list.to_vec()
        }
    }

    /// Executes one compiled module.
    pub fn run_module(&mut self, m: &Module) -> Result<(), Diagnostic> {
        if let Some(s) = m.statistics {
            self.statistics = s;
        }
        if let Some(list) = &m.hide {
            for e in self.ids(list, Status::Active) {
                if let Some(x) = self.store.exprs.get_mut(&e) {
                    x.status = Status::Hidden;
                }
            }
        }
        if let Some(list) = &m.unhide {
            for e in self.ids(list, Status::Hidden) {
                if let Some(x) = self.store.exprs.get_mut(&e) {
                    x.status = Status::Active;
                }
            }
        }
        let mut defined = Vec::new();
        for d in &m.definitions {
            let mut ctx = EvalCtx::new(&self.table);
            ctx.dollars = Some(&self.dollars);
            ctx.exprs = Some(&self.store);
            let v = eval(&d.rhs, &ctx).map_err(|e| Diagnostic::new(d.loc.clone(), e))?;
            check_terms(v.terms(), self.config.max_term_size, &d.loc)?;
            defined.push((d.expr, v));
        }
        for (e, v) in defined {
            self.store.exprs.insert(e, Expression { terms: v, status: Status::Active, brackets: None });
        }
        let ids: Vec<ExprId> = self
            .store
            .exprs
            .iter()
            .filter(|(e, x)| x.status == Status::Active && !m.skip.contains(e) && !m.drop.contains(e))
            .map(|(e, _)| *e)
            .collect();
        let assigned = assigned_dollars(&m.program);
        let modes: Option<Vec<(String, MergeMode)>> = assigned
            .iter()
            .map(|name| m.merge_modes.iter().find(|(n, _)| n == name).cloned())
            .collect();
        let chunked = self.config.chunks > 1 && !assigned.is_empty() && modes.is_some();
        let mut results = Vec::new();
        self.last_stats.clear();
        for id in ids {
            let started = Instant::now();
            let x = &self.store.exprs[&id];
            let input = match &m.collect {
                Some((f, loc)) => collect(&x.terms, x.brackets.as_ref().map(Brackets::set), *f, &self.table, self.config.max_term_size, loc)?,
                None => x.terms.clone(),
            };
            let mut sorter = match self.config.sort_capacity {
                Some(c) => Sorter::new(c, self.config.spill_dir.clone()),
                None => Sorter::unbounded(),
            };
            let io_err = |e: std::io::Error| Diagnostic::new(Location::default(), format!("Sort failure: {e}"));
            let mut runner = Runner {
                table: &self.table,
                store: &self.store,
                config: &self.config,
                output: &mut self.output,
                current: id,
                dollars: &mut self.dollars,
            };
            let mut sink = |t: Term| sorter.add(t).map_err(io_err);
            if chunked {
                let start = runner.dollars.clone();
                let size = input.len().div_ceil(self.config.chunks).max(1);
                let mut finals = Vec::new();
                for chunk in input.terms().chunks(size) {
                    *runner.dollars = start.clone();
                    for t in chunk {
                        runner.run(&m.program, t.clone(), &mut sink)?;
                    }
                    finals.push(runner.dollars.clone());
                }
                *runner.dollars = start.clone();
                for (name, mode) in modes.as_deref().unwrap_or_default() {
                    let merged = merge_values(start.get(name), finals.iter().map(|d| d.get(name)), *mode)
                        .map_err(|e| Diagnostic::new(Location::default(), format!("{name}: {e}")))?;
                    match merged {
                        Some(v) => runner.dollars.insert(name.clone(), v),
                        None => runner.dollars.remove(name),
                    };
                }
            } else {
                for t in input.terms() {
                    runner.run(&m.program, t.clone(), &mut sink)?;
                }
            }
            let (poly, stats) = sorter.finish().map_err(io_err)?;
            let brackets = m.bracket.as_ref().map(|spec| {
                let set = BracketSet { symbols: spec.symbols.clone(), functions: spec.functions.clone() };
                Brackets::build(&poly, set, spec.indexed.then_some(self.config.index_cap))
            });
            let name = self.table.expression_name(id).to_string();
            if self.statistics {
                let secs = started.elapsed().as_secs_f64();
                self.output.push('\n');
                self.output.push_str(&statistics_text(&name, secs, stats.generated, stats.output, stats.bytes));
            }
            self.last_stats.push(ExprStats { name, sort: stats });
            results.push((id, poly, brackets));
        }
        for (id, poly, brackets) in results {
            let x = self.store.exprs.get_mut(&id).expect("processed expression exists");
            x.terms = poly;
            x.brackets = brackets;
        }
        for e in &m.drop {
            self.store.exprs.remove(e);
        }
        for spec in &m.prints {
            for id in self.ids(&spec.names, Status::Active) {
                if let Some(x) = self.store.exprs.get(&id) {
                    let opts = PrintOptions { one_term_per_line: spec.one_term_per_line };
                    self.output.push('\n');
                    let name = self.table.expression_name(id);
                    self.output.push_str(&expression_text(name, &x.terms, &self.table, opts, x.brackets.as_ref()));
                }
            }
        }
        if m.list_names {
            self.output.push_str(&self.table.listing());
        }
        Ok(())
    }
}

impl DollarSource for Session {
    fn dollar_text(&self, name: &str) -> Option<String> {
        self.dollars.get(name).map(|p| compact_text(p, &self.table))
    }

    fn dollar_increment(&mut self, name: &str, delta: i64) -> Option<String> {
        let v = self.dollars.get(name)?;
        let before = compact_text(v, &self.table);
        let next = v.add(&Poly::from_int(delta));
        self.dollars.insert(name.to_string(), next);
        Some(before)
    }
}

fn assigned_dollars(stmts: &[Stmt]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in stmts {
        match &s.op {
            Op::DollarAssign { name, .. } if !out.contains(name) => out.push(name.clone()),
            Op::TermBlock(segs) => {
                for n in segs.iter().flat_map(|seg| assigned_dollars(seg)) {
                    if !out.contains(&n) {
                        out.push(n);
                    }
                }
            }
            _ => {}
        }
    }
    out
}

/// Combines the values a `$`-variable reached in separate chunks.
pub fn merge_values<'a>(
    start: Option<&Poly>,
    values: impl Iterator<Item = Option<&'a Poly>>,
    mode: MergeMode,
) -> Result<Option<Poly>, String> {
    let values: Vec<Option<&Poly>> = values.collect();
    match mode {
        MergeMode::Local => Ok(start.cloned()),
        MergeMode::Sum => {
            let base = start.cloned().unwrap_or_default();
            let mut acc = base.clone();
            for v in values.into_iter().flatten() {
                acc = acc.add(&v.add(&base.neg()));
            }
            Ok(Some(acc))
        }
        MergeMode::Maximum | MergeMode::Minimum => {
            let mut best: Option<Rat> = None;
            for v in values.into_iter().flatten().chain(start) {
                let r = v.as_number().ok_or_else(|| "maximum and minimum need numeric values".to_string())?;
                let better = match &best {
                    None => true,
                    Some(b) if mode == MergeMode::Maximum => r > *b,
                    Some(b) => r < *b,
                };
                if better {
                    best = Some(r);
                }
            }
            Ok(best.map(Poly::number))
        }
    }
}

fn check_terms(terms: &[Term], max: usize, loc: &Location) -> Result<(), Diagnostic> {
    match terms.iter().find(|t| t.size() > max) {
        Some(_) => Err(Diagnostic::new(loc.clone(), format!("Term too large. MaxTermSize = {max}"))),
        None => Ok(()),
    }
}

/// Each bracket's contents become the argument of `fun`, multiplied by the key.
fn collect(
    expr: &Poly,
    set: Option<&BracketSet>,
    fun: crate::term::FunId,
    table: &SymbolTable,
    max: usize,
    loc: &Location,
) -> Result<Poly, Diagnostic> {
    let empty = BracketSet::default();
    let set = set.unwrap_or(&empty);
    let mut groups: Vec<(Term, Vec<Term>)> = Vec::new();
    for t in expr.terms() {
        let (k, c) = set.split(t);
        match groups.iter_mut().find(|(g, _)| cmp_identity(g, &k).is_eq()) {
            Some((_, v)) => v.push(c),
            None => groups.push((k, vec![c])),
        }
    }
    let info = table.function(fun);
    let mut out = Vec::new();
    for (key, contents) in groups {
        let arg = Poly::from_terms(contents);
        if arg.size() > max {
            return Err(Diagnostic::new(loc.clone(), format!("Collected bracket exceeds MaxTermSize = {max}")));
        }
        let app = Term::func(FuncApp::with_props(fun, vec![arg], info.commuting(), info.symmetry));
        if let Some(t) = key.mul(&app) {
            out.push(t);
        }
    }
    Ok(Poly::from_terms(out))
}

/// Whether `t` contains every factor of `marker`.
fn contains_marker(t: &Term, marker: &Term) -> bool {
    marker.factors.iter().all(|m| match m {
        SubTerm::Sym(s, p) => {
            let have = t.power_of(*s);
            (have.signum() == p.signum()) && have.abs() >= p.abs()
        }
        other => t.factors.contains(other),
    })
}

fn split_argument(arg: &Poly, mode: &SplitMode) -> Option<Vec<Poly>> {
    if arg.len() < 2 {
        return None;
    }
    match mode {
        SplitMode::Plain => Some(arg.terms().iter().map(|t| Poly::from_term(t.clone())).collect()),
        SplitMode::Partition(marker) => {
            let (with, without): (Vec<Term>, Vec<Term>) = arg.terms().iter().cloned().partition(|t| contains_marker(t, marker));
            if with.is_empty() || without.is_empty() {
                return None;
            }
            Some(vec![Poly::from_sorted(without), Poly::from_sorted(with)])
        }
        SplitMode::Exact(marker) => {
            let (hits, rest): (Vec<Term>, Vec<Term>) =
                arg.terms().iter().cloned().partition(|t| cmp_identity(&t.identity(), marker).is_eq());
            if hits.is_empty() || rest.is_empty() {
                return None;
            }
            let mut out = vec![Poly::from_sorted(rest)];
            out.extend(hits.into_iter().map(Poly::from_term));
            Some(out)
        }
    }
}

fn split_args(term: &Term, funcs: &[crate::term::FunId], mode: &SplitMode, table: &SymbolTable) -> Option<Term> {
    let mut changed = false;
    let mut factors = Vec::with_capacity(term.factors.len());
    for f in &term.factors {
        match f {
            SubTerm::Func(fa)
                if (funcs.is_empty() && !matches!(table.function(fa.id).class, FuncClass::Builtin(_))) || funcs.contains(&fa.id) =>
            {
                let mut args = Vec::new();
                let mut here = false;
                for a in &fa.args {
                    match split_argument(a, mode) {
                        Some(parts) => {
                            here = true;
                            args.extend(parts);
                        }
                        None => args.push(a.clone()),
                    }
                }
                if here {
                    changed = true;
                    factors.push(SubTerm::Func(FuncApp::with_props(fa.id, args, fa.commuting, table.function(fa.id).symmetry)));
                } else {
                    factors.push(f.clone());
                }
            }
            _ => factors.push(f.clone()),
        }
    }
    changed.then(|| Term { coeff: term.coeff.clone(), factors })
}

struct Rep {
    changed: bool,
    passes: usize,
}

struct Work {
    term: Term,
    pc: usize,
    reps: Vec<Rep>,
}

enum Outcome {
    Same,
    /// New terms; `true` when the statement counts as a change for repeat.
    New(Vec<Term>, bool),
}

struct Runner<'s> {
    table: &'s SymbolTable,
    store: &'s Store,
    config: &'s Config,
    output: &'s mut String,
    current: ExprId,
    dollars: &'s mut HashMap<String, Poly>,
}

fn rt(loc: &Location, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(loc.clone(), msg)
}

impl Runner<'_> {
    /// Runs one input term through `stmts` depth first.
    fn run(&mut self, stmts: &[Stmt], input: Term, sink: &mut dyn FnMut(Term) -> Result<(), Diagnostic>) -> Result<(), Diagnostic> {
        let mut stack = vec![Work { term: input, pc: 0, reps: Vec::new() }];
        while let Some(mut w) = stack.pop() {
            loop {
                let Some(stmt) = stmts.get(w.pc) else {
                    sink(w.term)?;
                    break;
                };
                match &stmt.op {
                    Op::RepeatStart => {
                        w.reps.push(Rep { changed: false, passes: 0 });
                        w.pc += 1;
                    }
                    Op::RepeatEnd { start } => {
                        let rep = w.reps.pop().expect("repeat blocks are balanced");
                        if rep.changed {
                            if rep.passes + 1 >= self.config.repeat_cap {
                                return Err(rt(&stmt.loc, format!("Repeat loop exceeded {} passes", self.config.repeat_cap)));
                            }
                            w.reps.push(Rep { changed: false, passes: rep.passes + 1 });
                            w.pc = start + 1;
                        } else {
                            w.pc += 1;
                        }
                    }
                    Op::If { cond, else_target } => {
                        w.pc = if self.condition(cond, &w.term).map_err(|e| rt(&stmt.loc, e))? { w.pc + 1 } else { *else_target };
                    }
                    Op::Jump(t) => w.pc = *t,
                    _ => match self.apply(stmt, &w.term)? {
                        Outcome::Same => w.pc += 1,
                        Outcome::New(mut terms, changed) => {
                            if changed {
                                for r in &mut w.reps {
                                    r.changed = true;
                                }
                            }
                            w.pc += 1;
                            if terms.len() == 1 {
                                w.term = terms.pop().expect("one term");
                                continue;
                            }
                            for t in terms.into_iter().rev() {
                                let reps = w.reps.iter().map(|r| Rep { changed: r.changed, passes: r.passes }).collect();
                                stack.push(Work { term: t, pc: w.pc, reps });
                            }
                            break;
                        }
                    },
                }
            }
        }
        Ok(())
    }

    fn ctx<'c>(&'c self, term: &'c Term) -> EvalCtx<'c> {
        EvalCtx { table: self.table, bindings: None, dollars: Some(&*self.dollars), exprs: Some(self.store), term: Some(term) }
    }

    fn apply(&mut self, stmt: &Stmt, term: &Term) -> Result<Outcome, Diagnostic> {
        let loc = &stmt.loc;
        let out = match &stmt.op {
            Op::Id { pattern, rhs, once } => {
                let mut state = MatchState::new(&term.factors);
                let mut product = Poly::one();
                let mut matched = false;
                while let Some((b, next)) = pattern.find(&term.factors, &state) {
                    matched = true;
                    state = next;
                    let mut ctx = self.ctx(term);
                    ctx.bindings = Some(&b);
                    let mut v = eval(rhs, &ctx).map_err(|e| rt(loc, e))?;
                    if b.sign < 0 {
                        v = v.neg();
                    }
                    product = product.mul(&v);
                    if *once || product.is_zero() {
                        break;
                    }
                }
                if !matched {
                    return Ok(Outcome::Same);
                }
                let rest = normalize(Term { coeff: term.coeff.clone(), factors: state.remainder(&term.factors) });
                let result = match rest {
                    Some(r) => product.mul_term(&r),
                    None => Poly::zero(),
                };
                Outcome::New(result.into_terms(), true)
            }
            Op::Multiply(ast) => {
                let v = eval(ast, &self.ctx(term)).map_err(|e| rt(loc, e))?;
                Outcome::New(Poly::from_term(term.clone()).mul(&v).into_terms(), false)
            }
            Op::SplitArg { funcs, mode } => match split_args(term, funcs, mode, self.table) {
                Some(t) => Outcome::New(normalize(t).into_iter().collect(), true),
                None => Outcome::Same,
            },
            Op::ReplaceLoop(spec) => match replace_loop(term, spec, self.table) {
                Some(p) => Outcome::New(p.into_terms(), true),
                None => Outcome::Same,
            },
            Op::TermBlock(segments) => {
                let mut current = vec![term.clone()];
                for seg in segments {
                    let mut produced = Vec::new();
                    for t in current {
                        self.run(seg, t, &mut |t| {
                            produced.push(t);
                            Ok(())
                        })?;
                    }
                    current = Poly::from_terms(produced).into_terms();
                }
                return Ok(Outcome::New(current, false));
            }
            Op::DollarAssign { name, rhs } => {
                let v = eval(rhs, &self.ctx(term)).map_err(|e| rt(loc, e))?;
                if v.size() > self.config.max_term_size {
                    return Err(rt(loc, format!("Value of {name} exceeds MaxTermSize = {}", self.config.max_term_size)));
                }
                self.dollars.insert(name.clone(), v);
                Outcome::Same
            }
            Op::PrintTerm(pieces) => {
                let mut line = String::new();
                for p in pieces {
                    match p {
                        FmtPiece::Text(s) => line.push_str(s),
                        FmtPiece::Term => line.push_str(&term_line(term, self.table)),
                        FmtPiece::Dollar(d) => {
                            let v = self.dollars.get(d).ok_or_else(|| rt(loc, format!("Undefined $-variable {d}")))?;
                            line.push_str(&compact_text(v, self.table));
                        }
                    }
                }
                self.output.push_str(&line);
                self.output.push('\n');
                Outcome::Same
            }
            Op::RepeatStart | Op::RepeatEnd { .. } | Op::If { .. } | Op::Jump(_) => unreachable!("control handled by run"),
        };
        if let Outcome::New(terms, _) = &out {
            check_terms(terms, self.config.max_term_size, loc)?;
        }
        Ok(out)
    }

    fn value(&self, v: &CondValue, term: &Term) -> Result<Poly, String> {
        Ok(match v {
            CondValue::Count(items) => {
                let mut total = 0i64;
                for (item, w) in items {
                    total += w * match item {
                        CountItem::Sym(s) => term.power_of(*s),
                        CountItem::Fun(f) => term.factors.iter().filter(|x| matches!(x, SubTerm::Func(g) if g.id == *f)).count() as i64,
                    };
                }
                Poly::from_int(total)
            }
            CondValue::InExpression(list) => Poly::from_int(list.contains(&self.current) as i64),
            CondValue::Alg(ast) => eval(ast, &self.ctx(term))?,
        })
    }

    fn condition(&self, c: &Cond, term: &Term) -> Result<bool, String> {
        Ok(match c {
            Cond::And(a, b) => self.condition(a, term)? && self.condition(b, term)?,
            Cond::Or(a, b) => self.condition(a, term)? || self.condition(b, term)?,
            Cond::Not(a) => !self.condition(a, term)?,
            Cond::Truth(v) => !self.value(v, term)?.is_zero(),
            Cond::Cmp(a, op, b) => {
                let (x, y) = (self.value(a, term)?, self.value(b, term)?);
                match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => {
                        let d = x.add(&y.neg());
                        let d = d.as_number().ok_or_else(|| "Comparison of non-numeric values".to_string())?;
                        match op {
                            CmpOp::Lt => d.is_negative(),
                            CmpOp::Gt => d.is_positive(),
                            CmpOp::Le => !d.is_positive(),
                            _ => !d.is_negative(),
                        }
                    }
                }
            }
        })
    }
}
