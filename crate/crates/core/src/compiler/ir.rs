//! Compiled form of a module.

use std::fmt;

use super::ast::{Ast, Cond};
use crate::diag::Location;
use crate::pattern::Pattern;
use crate::symbols::ExprId;
use crate::term::{FunId, SymId, Term};

#[derive(Clone, Debug, PartialEq)]
pub enum SplitMode {
    /// Every multiterm argument becomes one argument per term.
    Plain,
    /// `((expr))`: terms without a match of the marker, then terms with it.
    Partition(Term),
    /// `(expr)`: the terms equal to the marker split off, the rest kept together.
    Exact(Term),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoopSpec {
    pub fun: FunId,
    pub arguments: usize,
    /// `None` means any length (`loopsize=all`).
    pub loopsize: Option<usize>,
    pub outfun: FunId,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FmtPiece {
    Text(String),
    Term,
    Dollar(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Id { pattern: Pattern, rhs: Ast, once: bool },
    Multiply(Ast),
    RepeatStart,
    RepeatEnd { start: usize },
    If { cond: Cond, else_target: usize },
    Jump(usize),
    SplitArg { funcs: Vec<FunId>, mode: SplitMode },
    ReplaceLoop(LoopSpec),
    /// Segments separated by `sort;`; each is sorted before the next runs.
    TermBlock(Vec<Vec<Stmt>>),
    DollarAssign { name: String, rhs: Ast },
    PrintTerm(Vec<FmtPiece>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub op: Op,
    pub loc: Location,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MergeMode {
    Sum,
    Maximum,
    Minimum,
    Local,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub expr: ExprId,
    pub rhs: Ast,
    pub loc: Location,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrintSpec {
    /// Empty prints every active expression.
    pub names: Vec<ExprId>,
    pub one_term_per_line: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BracketSpec {
    pub symbols: Vec<SymId>,
    pub functions: Vec<FunId>,
    pub indexed: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Module {
    pub program: Vec<Stmt>,
    pub definitions: Vec<Definition>,
    pub prints: Vec<PrintSpec>,
    pub bracket: Option<BracketSpec>,
    pub hide: Option<Vec<ExprId>>,
    pub unhide: Option<Vec<ExprId>>,
    pub skip: Vec<ExprId>,
    pub drop: Vec<ExprId>,
    pub collect: Option<(FunId, Location)>,
    pub merge_modes: Vec<(String, MergeMode)>,
    pub statistics: Option<bool>,
    pub list_names: bool,
}

impl Module {
    /// True when some statement assigns a `$`-variable per term.
    pub fn assigns_dollars(&self) -> bool {
        fn any(stmts: &[Stmt]) -> bool {
            stmts.iter().any(|s| match &s.op {
                Op::DollarAssign { .. } => true,
                Op::TermBlock(segs) => segs.iter().any(|seg| any(seg)),
                _ => false,
            })
        }
        any(&self.program)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Id { once, .. } => write!(f, "id{}", if *once { ",once" } else { "" }),
            Op::Multiply(_) => write!(f, "multiply"),
            Op::RepeatStart => write!(f, "repeat"),
            Op::RepeatEnd { start } => write!(f, "endrepeat -> {start}"),
            Op::If { else_target, .. } => write!(f, "if else -> {else_target}"),
            Op::Jump(t) => write!(f, "jump -> {t}"),
            Op::SplitArg { funcs, mode } => write!(f, "splitarg {mode:?} on {} functions", funcs.len()),
            Op::ReplaceLoop(spec) => write!(f, "replaceloop arguments={} loopsize={:?}", spec.arguments, spec.loopsize),
            Op::TermBlock(segs) => write!(f, "term block with {} segments", segs.len()),
            Op::DollarAssign { name, .. } => write!(f, "{name} ="),
            Op::PrintTerm(p) => write!(f, "print {} pieces", p.len()),
        }
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} Line {}: {}", self.loc.file, self.loc.line, self.op)
    }
}
