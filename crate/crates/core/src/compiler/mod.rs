//! Statement compiler: turns statement texts of one module into a [`Module`],
//! updating the declaration tables as declarations are met.

pub mod ast;
pub mod ir;
pub mod lexer;

use std::collections::HashMap;

use ast::{parse_algebra, parse_condition_text, parse_pattern_text, Ast, WildKey};
pub use ir::*;

use crate::diag::Location;
use crate::eval::{eval, EvalCtx};
use crate::pattern::{ArgPat, FactorPat, FuncPat, Pattern};
use crate::symbols::{Entry, ExprId, FuncClass, SetElement, SymbolTable};
use crate::term::{FunId, Poly, Symmetry, Term};

/// Splits at `sep` outside brackets and strings.
pub fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '(' | '[' | '{' if !in_str => depth += 1,
            ')' | ']' | '}' if !in_str => depth -= 1,
            c if c == sep && depth == 0 && !in_str => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Comma or whitespace separated list, ignoring empty items.
fn name_list(s: &str) -> Vec<String> {
    split_top(s, ',')
        .into_iter()
        .flat_map(|part| {
            let mut items = Vec::new();
            let mut depth = 0i32;
            let mut cur = String::new();
            for c in part.chars() {
                match c {
                    '(' | '[' | '{' => depth += 1,
                    ')' | ']' | '}' => depth -= 1,
                    _ => {}
                }
                if c.is_whitespace() && depth == 0 {
                    if !cur.is_empty() {
                        items.push(std::mem::take(&mut cur));
                    }
                } else {
                    cur.push(c);
                }
            }
            if !cur.is_empty() {
                items.push(cur);
            }
            items
        })
        .collect()
}

/// Position of the close bracket matching the open one at `open`.
fn matching_close(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s[open..].char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

/// The top-level assignment `=`, skipping comparison operators.
fn find_assign(s: &str) -> Option<usize> {
    let b = s.as_bytes();
    let mut depth = 0i32;
    for i in 0..b.len() {
        match b[i] {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth -= 1,
            b'=' if depth == 0 => {
                let prev = if i > 0 { b[i - 1] } else { b' ' };
                let next = b.get(i + 1).copied().unwrap_or(b' ');
                if !matches!(prev, b'<' | b'>' | b'!' | b'=') && next != b'=' {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn split_head(text: &str) -> (String, &str) {
    let end = text.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(text.len());
    (text[..end].to_ascii_lowercase(), &text[end..])
}

fn strip_sep(s: &str) -> &str {
    let s = s.trim_start();
    s.strip_prefix(',').unwrap_or(s).trim()
}

fn symmetry_from(prop: &str) -> Result<Symmetry, String> {
    let p = prop.trim().to_ascii_lowercase();
    if p.starts_with("sym") {
        Ok(Symmetry::Symmetric)
    } else if p.starts_with("anti") {
        Ok(Symmetry::Antisymmetric)
    } else if p.starts_with("cycl") {
        Ok(Symmetry::Cyclic)
    } else if p.starts_with("rcycl") || p.starts_with("reversecycl") {
        Ok(Symmetry::ReverseCyclic)
    } else {
        Err(format!("Unknown property {prop}"))
    }
}

/// `name(props)` split into name and bracket contents.
fn name_and_args(item: &str) -> Result<(&str, Option<&str>), String> {
    match item.find('(') {
        None => Ok((item, None)),
        Some(open) => {
            let close = matching_close(item, open).ok_or_else(|| format!("Unmatched ( in {item}"))?;
            if !item[close + 1..].trim().is_empty() {
                return Err(format!("Illegal declaration {item}"));
            }
            Ok((&item[..open], Some(&item[open + 1..close])))
        }
    }
}

fn lookup_function(table: &SymbolTable, name: &str) -> Result<FunId, String> {
    match table.lookup(name) {
        Some(Entry::Function(f)) => Ok(f),
        Some(_) => Err(format!("{name} is not a function")),
        None => Err(format!("Undeclared variable {name}")),
    }
}

fn lookup_expression(table: &SymbolTable, name: &str) -> Result<ExprId, String> {
    match table.lookup(name) {
        Some(Entry::Expression(e)) => Ok(e),
        Some(_) => Err(format!("{name} is not an expression")),
        None => Err(format!("Undeclared variable {name}")),
    }
}

/// Evaluates wildcard-free algebra at compile time.
fn const_eval(ast: &Ast, table: &SymbolTable, dollars: &HashMap<String, Poly>) -> Result<Poly, String> {
    let mut ctx = EvalCtx::new(table);
    ctx.dollars = Some(dollars);
    eval(ast, &ctx)
}

/// Builds a matcher pattern from a parsed left-hand side.
pub fn compile_pattern(ast: &Ast, table: &SymbolTable) -> Result<Pattern, String> {
    let mut factors = Vec::new();
    let items: Vec<&Ast> = match ast {
        Ast::Mul(items) => items.iter().collect(),
        other => vec![other],
    };
    for item in items {
        match item {
            Ast::Num(r) if *r == num::One::one() => {}
            Ast::Sym(s) => factors.push(FactorPat::SymPow(*s, 1)),
            Ast::Pow(base, exp) => {
                let Ast::Sym(s) = base.as_ref() else {
                    return Err("Illegal power in pattern".to_string());
                };
                let n = const_eval(exp, table, &HashMap::new())
                    .ok()
                    .and_then(|p| p.as_i64())
                    .filter(|n| *n != 0)
                    .ok_or_else(|| "Exponent in pattern must be a nonzero integer".to_string())?;
                factors.push(FactorPat::SymPow(*s, n));
            }
            Ast::Index(i) => factors.push(FactorPat::Index(*i)),
            Ast::Wild(w) => match w.key {
                WildKey::Sym(_) => factors.push(FactorPat::SymWild(w.clone())),
                WildKey::Idx(_) => factors.push(FactorPat::IndexWild(w.clone())),
                WildKey::Field(_) => return Err("Argument field outside of a function".to_string()),
            },
            Ast::Func(f, args) => factors.push(FactorPat::Func(func_pattern(*f, args, table)?)),
            Ast::Mul(_) => return Err("Illegal pattern".to_string()),
            _ => return Err("Illegal left hand side".to_string()),
        }
    }
    if factors.is_empty() {
        return Err("Empty pattern".to_string());
    }
    Ok(Pattern { factors })
}

fn func_pattern(f: FunId, args: &[Ast], table: &SymbolTable) -> Result<FuncPat, String> {
    let info = table.function(f);
    if matches!(info.class, FuncClass::Builtin(_)) {
        return Err(format!("Illegal use of {} in a pattern", info.name));
    }
    let symmetric = matches!(info.symmetry, Symmetry::Symmetric | Symmetry::Antisymmetric);
    let mut out = Vec::with_capacity(args.len());
    for a in args {
        out.push(match a {
            Ast::Field(name) => {
                if symmetric {
                    return Err(format!("Argument field wildcard ?{name} inside symmetric function {}", info.name));
                }
                ArgPat::Field(name.clone())
            }
            Ast::Wild(w) => ArgPat::Wild(w.clone()),
            Ast::Func(g, inner) if a.has_wildcards() => ArgPat::Func(func_pattern(*g, inner, table)?),
            other if other.has_wildcards() => return Err("Illegal wildcard in function argument".to_string()),
            other => ArgPat::Literal(const_eval(other, table, &HashMap::new())?),
        });
    }
    Ok(FuncPat { id: f, symmetry: info.symmetry, args: out })
}

enum Block {
    Repeat { start: usize, scope: usize },
    If { pending: Option<usize>, ends: Vec<usize>, scope: usize },
}

/// Incremental compiler for one module.
#[derive(Default)]
pub struct ModuleCompiler {
    module: Module,
    blocks: Vec<Block>,
    /// Finished segments and the current one of an open Term block.
    term: Option<(Vec<Vec<Stmt>>, Vec<Stmt>)>,
    /// Bumped at every `sort;` so blocks cannot straddle segments.
    scope: usize,
}

impl ModuleCompiler {
    pub fn new() -> Self {
        Self::default()
    }

    fn current(&mut self) -> &mut Vec<Stmt> {
        match &mut self.term {
            Some((_, cur)) => cur,
            None => &mut self.module.program,
        }
    }

    fn push(&mut self, op: Op, loc: &Location) -> usize {
        let cur = self.current();
        cur.push(Stmt { op, loc: loc.clone() });
        cur.len() - 1
    }

    /// Compiles one statement (without its terminating `;`).
    pub fn statement(
        &mut self,
        text: &str,
        loc: &Location,
        table: &mut SymbolTable,
        dollars: &HashMap<String, Poly>,
    ) -> Result<(), String> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix('$') {
            return self.dollar_assign(rest, loc, table);
        }
        let (head, rest) = split_head(text);
        match head.as_str() {
            "s" | "symbol" | "symbols" => {
                for item in name_list(rest) {
                    let (name, _) = name_and_args(&item)?;
                    table.add_symbol(name.trim()).map_err(|e| e.to_string())?;
                }
            }
            "i" | "index" | "indices" => {
                for item in name_list(rest) {
                    let name = item.split('=').next().unwrap_or_default().trim();
                    table.add_index(name).map_err(|e| e.to_string())?;
                }
            }
            "cf" | "cfunction" | "cfunctions" => self.declare_functions(rest, FuncClass::Commuting, table)?,
            "f" | "function" | "functions" | "nf" | "nfunction" | "nfunctions" => {
                self.declare_functions(rest, FuncClass::NonCommuting, table)?
            }
            "t" | "tensor" | "tensors" | "ct" | "ctensor" | "ctensors" => {
                self.declare_functions(rest, FuncClass::Tensor, table)?
            }
            "nt" | "ntensor" | "ntensors" => self.declare_functions(rest, FuncClass::NonCommuting, table)?,
            "table" | "ctable" => declare_table(rest, table)?,
            "set" => declare_set(rest, table)?,
            "l" | "local" | "g" | "global" => self.definition(rest, loc, table)?,
            "id" | "identify" => self.identify(rest, loc, table)?,
            "multiply" => {
                let ast = parse_algebra(strip_sep(rest), table)?;
                self.push(Op::Multiply(ast), loc);
            }
            "repeat" => {
                let start = self.push(Op::RepeatStart, loc);
                let inner = rest.trim();
                if inner.is_empty() {
                    self.blocks.push(Block::Repeat { start, scope: self.scope });
                } else {
                    self.statement(inner, loc, table, dollars)?;
                    self.push(Op::RepeatEnd { start }, loc);
                }
            }
            "endrepeat" => match self.blocks.pop() {
                Some(Block::Repeat { start, scope }) if scope == self.scope => {
                    self.push(Op::RepeatEnd { start }, loc);
                }
                _ => return Err("endrepeat without repeat".to_string()),
            },
            "if" => self.if_statement(rest, loc, table, dollars)?,
            "elseif" => {
                let (cond, tail) = condition_part(rest, table)?;
                if !tail.is_empty() {
                    return Err("Illegal statement after elseif".to_string());
                }
                let Some(Block::If { pending, ends, scope }) = self.blocks.last_mut() else {
                    return Err("elseif without if".to_string());
                };
                if *scope != self.scope {
                    return Err("elseif without if".to_string());
                }
                let Some(p) = pending.take() else { return Err("elseif after else".to_string()) };
                let cur = match &mut self.term {
                    Some((_, cur)) => cur,
                    None => &mut self.module.program,
                };
                cur.push(Stmt { op: Op::Jump(usize::MAX), loc: loc.clone() });
                ends.push(cur.len() - 1);
                let end = cur.len();
                set_else_target(cur, p, end);
                cur.push(Stmt { op: Op::If { cond, else_target: usize::MAX }, loc: loc.clone() });
                *pending = Some(cur.len() - 1);
            }
            "else" => {
                let Some(Block::If { pending, ends, scope }) = self.blocks.last_mut() else {
                    return Err("else without if".to_string());
                };
                if *scope != self.scope || pending.is_none() || !rest.trim().is_empty() {
                    return Err("Illegal else".to_string());
                }
                let cur = match &mut self.term {
                    Some((_, cur)) => cur,
                    None => &mut self.module.program,
                };
                cur.push(Stmt { op: Op::Jump(usize::MAX), loc: loc.clone() });
                ends.push(cur.len() - 1);
                let end = cur.len();
                set_else_target(cur, pending.take().expect("checked"), end);
            }
            "endif" => match self.blocks.pop() {
                Some(Block::If { pending, ends, scope }) if scope == self.scope => {
                    let cur = self.current();
                    let end = cur.len();
                    if let Some(p) = pending {
                        set_else_target(cur, p, end);
                    }
                    for j in ends {
                        cur[j].op = Op::Jump(end);
                    }
                }
                _ => return Err("endif without if".to_string()),
            },
            "splitarg" => {
                let op = split_arg(rest, table)?;
                self.push(op, loc);
            }
            "replaceloop" => {
                let op = replace_loop(rest, table)?;
                self.push(op, loc);
            }
            "term" => {
                if self.term.is_some() {
                    return Err("Nested Term environments are not allowed".to_string());
                }
                self.term = Some((Vec::new(), Vec::new()));
                self.scope += 1;
            }
            "sort" => {
                if self.open_block_in_scope() {
                    return Err("sort inside an unfinished repeat or if".to_string());
                }
                let Some((segs, cur)) = &mut self.term else {
                    return Err("sort outside of a Term environment".to_string());
                };
                segs.push(std::mem::take(cur));
                self.scope += 1;
            }
            "endterm" => {
                if self.open_block_in_scope() {
                    return Err("EndTerm inside an unfinished repeat or if".to_string());
                }
                let Some((mut segs, cur)) = self.term.take() else {
                    return Err("EndTerm without Term".to_string());
                };
                segs.push(cur);
                self.scope += 1;
                self.push(Op::TermBlock(segs), loc);
            }
            "collect" => {
                let name = strip_sep(rest);
                self.module.collect = Some((lookup_function(table, name)?, loc.clone()));
            }
            "b" | "bracket" => {
                let (indexed, names) = match rest.trim_start().strip_prefix('+') {
                    Some(r) => (true, r),
                    None => (false, rest),
                };
                let mut spec = BracketSpec { indexed, ..Default::default() };
                for n in name_list(strip_sep(names)) {
                    match table.lookup(&n) {
                        Some(Entry::Symbol(s)) => spec.symbols.push(s),
                        Some(Entry::Function(f)) => spec.functions.push(f),
                        Some(_) => return Err(format!("Illegal object {n} in bracket statement")),
                        None => return Err(format!("Undeclared variable {n}")),
                    }
                }
                self.module.bracket = Some(spec);
            }
            "print" => self.print(rest, loc, table)?,
            "hide" => self.module.hide = Some(expression_list(rest, table)?),
            "unhide" => self.module.unhide = Some(expression_list(rest, table)?),
            "skip" => self.module.skip.extend(expression_list(rest, table)?),
            "drop" => self.module.drop.extend(expression_list(rest, table)?),
            "fill" => fill(rest, table, dollars)?,
            "moduleoption" => self.module_option(rest, table)?,
            "on" | "off" => {
                let on = head == "on";
                for opt in name_list(rest) {
                    match opt.to_ascii_lowercase().as_str() {
                        "statistics" | "stats" => self.module.statistics = Some(on),
                        "names" | "allnames" => self.module.list_names = on,
                        _ => {}
                    }
                }
            }
            "format" | "parallel" | "noparallel" => {}
            _ => return Err(format!("Unrecognized statement: {text}")),
        }
        Ok(())
    }

    fn open_block_in_scope(&self) -> bool {
        self.blocks.iter().any(|b| match b {
            Block::Repeat { scope, .. } | Block::If { scope, .. } => *scope == self.scope,
        })
    }

    /// Closes the module; unfinished blocks are errors.
    pub fn finish(mut self) -> Result<Module, String> {
        if self.term.is_some() {
            return Err("Missing EndTerm".to_string());
        }
        match self.blocks.pop() {
            Some(Block::Repeat { .. }) => Err("Missing endrepeat".to_string()),
            Some(Block::If { .. }) => Err("Missing endif".to_string()),
            None => {
                self.module.merge_modes.dedup();
                Ok(self.module)
            }
        }
    }

    fn declare_functions(&mut self, rest: &str, class: FuncClass, table: &mut SymbolTable) -> Result<(), String> {
        for item in name_list(rest) {
            let (name, props) = name_and_args(&item)?;
            let sym = match props {
                Some(p) => symmetry_from(p)?,
                None => Symmetry::None,
            };
            table.add_function(name.trim(), class, sym).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    fn definition(&mut self, rest: &str, loc: &Location, table: &mut SymbolTable) -> Result<(), String> {
        let rest = strip_sep(rest);
        let eq = find_assign(rest).ok_or_else(|| "Missing = in expression definition".to_string())?;
        let name = rest[..eq].trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("Illegal expression name {name}"));
        }
        let expr = match table.lookup(name) {
            Some(Entry::Expression(e)) => e,
            Some(_) => return Err(format!("{name} has already been declared")),
            None => table.add_expression(name).map_err(|e| e.to_string())?,
        };
        let rhs = parse_algebra(rest[eq + 1..].trim(), table)?;
        self.module.definitions.retain(|d| d.expr != expr);
        self.module.definitions.push(Definition { expr, rhs, loc: loc.clone() });
        Ok(())
    }

    fn identify(&mut self, rest: &str, loc: &Location, table: &SymbolTable) -> Result<(), String> {
        let mut rest = rest.trim_start();
        let mut once = false;
        while let Some(r) = rest.strip_prefix(',') {
            let r = r.trim_start();
            let (opt, tail) = split_head(r);
            match opt.as_str() {
                "once" => once = true,
                "all" | "many" | "multi" => {}
                _ => break,
            }
            rest = tail.trim_start();
        }
        let eq = find_assign(rest).ok_or_else(|| "Missing = in substitution".to_string())?;
        let lhs = parse_pattern_text(rest[..eq].trim(), table)?;
        let pattern = compile_pattern(&lhs, table)?;
        let rhs = parse_pattern_text(rest[eq + 1..].trim(), table)?;
        self.push(Op::Id { pattern, rhs, once }, loc);
        Ok(())
    }

    fn if_statement(
        &mut self,
        rest: &str,
        loc: &Location,
        table: &mut SymbolTable,
        dollars: &HashMap<String, Poly>,
    ) -> Result<(), String> {
        let (cond, tail) = condition_part(rest, table)?;
        let at = self.push(Op::If { cond, else_target: usize::MAX }, loc);
        if tail.is_empty() {
            self.blocks.push(Block::If { pending: Some(at), ends: Vec::new(), scope: self.scope });
            return Ok(());
        }
        self.statement(tail, loc, table, dollars)?;
        let cur = self.current();
        let end = cur.len();
        set_else_target(cur, at, end);
        Ok(())
    }

    fn dollar_assign(&mut self, rest: &str, loc: &Location, table: &mut SymbolTable) -> Result<(), String> {
        let eq = find_assign(rest).ok_or_else(|| "Missing = in $-variable assignment".to_string())?;
        let name = format!("${}", rest[..eq].trim());
        table.note_dollar(&name);
        let rhs = parse_algebra(rest[eq + 1..].trim(), table)?;
        self.push(Op::DollarAssign { name, rhs }, loc);
        Ok(())
    }

    fn print(&mut self, rest: &str, loc: &Location, table: &SymbolTable) -> Result<(), String> {
        let mut rest = rest.trim_start();
        let mut one_per_line = false;
        loop {
            rest = rest.trim_start();
            let flag = rest.strip_prefix('+').or_else(|| rest.strip_prefix('-'));
            match flag {
                Some(r) if r.starts_with(|c: char| c.is_ascii_alphabetic()) => {
                    let (f, tail) = split_head(r);
                    if f == "s" && rest.starts_with('+') {
                        one_per_line = true;
                    }
                    rest = tail;
                }
                _ => break,
            }
        }
        let rest = strip_sep(rest);
        if let Some(body) = rest.strip_prefix('"') {
            let close = body.find('"').ok_or_else(|| "Unterminated string in Print".to_string())?;
            let args: Vec<String> = name_list(strip_sep(&body[close + 1..]));
            let pieces = parse_format(&body[..close], &args)?;
            self.push(Op::PrintTerm(pieces), loc);
            return Ok(());
        }
        let names = expression_list(rest, table)?;
        self.module.prints.push(PrintSpec { names, one_term_per_line: one_per_line });
        Ok(())
    }

    fn module_option(&mut self, rest: &str, table: &mut SymbolTable) -> Result<(), String> {
        let mut mode = None;
        for item in name_list(rest) {
            if let Some(name) = item.strip_prefix('$') {
                let name = format!("${name}");
                if let Some(m) = mode {
                    table.note_dollar(&name);
                    self.module.merge_modes.push((name, m));
                }
                continue;
            }
            mode = match item.to_ascii_lowercase().as_str() {
                "sum" => Some(MergeMode::Sum),
                "maximum" => Some(MergeMode::Maximum),
                "minimum" => Some(MergeMode::Minimum),
                "local" => Some(MergeMode::Local),
                _ => None,
            };
        }
        Ok(())
    }
}

fn set_else_target(cur: &mut [Stmt], at: usize, target: usize) {
    if let Op::If { else_target, .. } = &mut cur[at].op {
        *else_target = target;
    }
}

/// Parses `( cond ) [statement]`.
fn condition_part<'s>(rest: &'s str, table: &SymbolTable) -> Result<(ast::Cond, &'s str), String> {
    let rest = rest.trim_start();
    if !rest.starts_with('(') {
        return Err("Missing ( in condition".to_string());
    }
    let close = matching_close(rest, 0).ok_or_else(|| "Unmatched ( in condition".to_string())?;
    let cond = parse_condition_text(&rest[1..close], table)?;
    Ok((cond, rest[close + 1..].trim()))
}

fn expression_list(rest: &str, table: &SymbolTable) -> Result<Vec<ExprId>, String> {
    name_list(strip_sep(rest)).iter().map(|n| lookup_expression(table, n)).collect()
}

fn parse_format(fmt: &str, args: &[String]) -> Result<Vec<FmtPiece>, String> {
    let mut pieces = Vec::new();
    let mut text = String::new();
    let mut args = args.iter();
    let mut chars = fmt.chars();
    while let Some(c) = chars.next() {
        match c {
            '%' => {
                let d = chars.next().ok_or_else(|| "Incomplete format directive %".to_string())?;
                match d {
                    '%' => text.push('%'),
                    't' | '$' => {
                        if !text.is_empty() {
                            pieces.push(FmtPiece::Text(std::mem::take(&mut text)));
                        }
                        if d == 't' {
                            pieces.push(FmtPiece::Term);
                        } else {
                            let name = args.next().ok_or_else(|| "Missing $-variable for %$".to_string())?;
                            if !name.starts_with('$') {
                                return Err(format!("Expected a $-variable instead of {name}"));
                            }
                            pieces.push(FmtPiece::Dollar(name.clone()));
                        }
                    }
                    other => return Err(format!("Unknown format directive %{other}")),
                }
            }
            '\\' => match chars.next() {
                Some('n') => text.push('\n'),
                Some(o) => text.push(o),
                None => text.push('\\'),
            },
            _ => text.push(c),
        }
    }
    if !text.is_empty() {
        pieces.push(FmtPiece::Text(text));
    }
    if args.next().is_some() {
        return Err("Too many arguments in Print".to_string());
    }
    Ok(pieces)
}

fn marker_term(text: &str, table: &SymbolTable) -> Result<Term, String> {
    let p = const_eval(&parse_algebra(text, table)?, table, &HashMap::new())?;
    p.as_single_term().cloned().ok_or_else(|| "SplitArg marker must be a single term".to_string())
}

fn split_arg(rest: &str, table: &SymbolTable) -> Result<Op, String> {
    let mut rest = strip_sep(rest);
    let mut mode = SplitMode::Plain;
    if rest.starts_with('(') {
        let close = matching_close(rest, 0).ok_or_else(|| "Unmatched ( in SplitArg".to_string())?;
        let inner = rest[1..close].trim();
        mode = match inner.strip_prefix('(') {
            Some(_) if matching_close(inner, 0) == Some(inner.len() - 1) => {
                SplitMode::Partition(marker_term(&inner[1..inner.len() - 1], table)?)
            }
            _ => SplitMode::Exact(marker_term(inner, table)?),
        };
        rest = strip_sep(&rest[close + 1..]);
    }
    let funcs = name_list(rest).iter().map(|n| lookup_function(table, n)).collect::<Result<Vec<_>, _>>()?;
    Ok(Op::SplitArg { funcs, mode })
}

fn replace_loop(rest: &str, table: &SymbolTable) -> Result<Op, String> {
    let mut fun = None;
    let mut arguments = None;
    let mut loopsize = None;
    let mut outfun = None;
    for item in name_list(strip_sep(rest)) {
        match item.split_once('=') {
            None => fun = Some(lookup_function(table, &item)?),
            Some((k, v)) => {
                let (k, v) = (k.trim().to_ascii_lowercase(), v.trim());
                match k.chars().next() {
                    Some('a') => {
                        arguments = Some(v.parse::<usize>().map_err(|_| format!("Illegal number of arguments {v}"))?)
                    }
                    Some('l') => {
                        loopsize = Some(if v.eq_ignore_ascii_case("all") {
                            None
                        } else {
                            let n = v.parse::<i64>().map_err(|_| format!("Illegal loopsize {v}"))?;
                            if n < 2 {
                                return Err("loopsize must be at least 2".to_string());
                            }
                            Some(n as usize)
                        })
                    }
                    Some('o') => outfun = Some(lookup_function(table, v)?),
                    _ => return Err(format!("Illegal option {item} in ReplaceLoop")),
                }
            }
        }
    }
    Ok(Op::ReplaceLoop(LoopSpec {
        fun: fun.ok_or_else(|| "ReplaceLoop needs a vertex function".to_string())?,
        arguments: arguments.ok_or_else(|| "ReplaceLoop needs arguments=".to_string())?,
        loopsize: loopsize.unwrap_or(None),
        outfun: outfun.ok_or_else(|| "ReplaceLoop needs outfun=".to_string())?,
    }))
}

fn declare_table(rest: &str, table: &mut SymbolTable) -> Result<(), String> {
    let mut sparse = false;
    let mut decl = None;
    for item in split_top(strip_sep(rest), ',') {
        let item = item.trim();
        match item.to_ascii_lowercase().as_str() {
            "sparse" => sparse = true,
            "strict" | "relax" | "zero" => {}
            _ => decl = Some(item),
        }
    }
    let decl = decl.ok_or_else(|| "Table needs a name".to_string())?;
    let (name, args) = name_and_args(decl)?;
    let args = args.ok_or_else(|| format!("Table {name} needs dimensions"))?;
    let mut symmetry = Symmetry::None;
    let mut dims = Vec::new();
    for a in split_top(args, ',') {
        let a = a.trim();
        if a.starts_with(|c: char| c.is_ascii_alphabetic()) {
            symmetry = symmetry_from(a)?;
        } else {
            dims.push(a);
        }
    }
    let d = if sparse {
        match dims.as_slice() {
            [n] => n.parse::<usize>().map_err(|_| format!("Illegal table dimension {n}"))?,
            _ => return Err("Sparse table needs the number of dimensions".to_string()),
        }
    } else {
        dims.len()
    };
    if d == 0 {
        return Err(format!("Table {name} needs dimensions"));
    }
    table.add_table(name.trim(), d, symmetry).map_err(|e| e.to_string())?;
    Ok(())
}

fn declare_set(rest: &str, table: &mut SymbolTable) -> Result<(), String> {
    let (name, items) = strip_sep(rest).split_once(':').ok_or_else(|| "Missing : in set declaration".to_string())?;
    let mut elements = Vec::new();
    for it in name_list(items) {
        elements.push(if let Ok(n) = it.parse::<i64>() {
            SetElement::Number(n)
        } else {
            match table.lookup(&it) {
                Some(Entry::Symbol(s)) => SetElement::Symbol(s),
                Some(Entry::Index(i)) => SetElement::Index(i),
                Some(Entry::Function(f)) => SetElement::Function(f),
                Some(_) => return Err(format!("Illegal set element {it}")),
                None => return Err(format!("Undeclared variable {it}")),
            }
        });
    }
    table.add_set(name.trim(), elements).map_err(|e| e.to_string())?;
    Ok(())
}

/// `Fill tab(i,j) = v1, v2, ...;` stores consecutive entries along the last index.
fn fill(rest: &str, table: &mut SymbolTable, dollars: &HashMap<String, Poly>) -> Result<(), String> {
    let rest = strip_sep(rest);
    let eq = find_assign(rest).ok_or_else(|| "Missing = in Fill".to_string())?;
    let (name, args) = name_and_args(rest[..eq].trim())?;
    let f = lookup_function(table, name.trim())?;
    let dims = match &table.function(f).table {
        Some(t) => t.dims,
        None => return Err(format!("{name} is not a table")),
    };
    let mut key = Vec::new();
    for a in split_top(args.unwrap_or(""), ',') {
        let v = const_eval(&parse_algebra(a.trim(), table)?, table, dollars)?;
        key.push(v.as_i64().ok_or_else(|| format!("Table index {} is not an integer", a.trim()))?);
    }
    if key.len() != dims {
        return Err(format!("Table {name} needs {dims} indices"));
    }
    let mut values = Vec::new();
    for v in split_top(&rest[eq + 1..], ',') {
        values.push(const_eval(&parse_algebra(v.trim(), table)?, table, dollars)?);
    }
    let def = table.function_mut(f).table.as_mut().expect("checked table");
    for v in values {
        def.fill.insert(key.clone(), v);
        *key.last_mut().expect("dims > 0") += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compile(src: &[&str]) -> Result<(Module, SymbolTable), String> {
        let mut table = SymbolTable::new();
        let mut c = ModuleCompiler::new();
        let loc = Location::new("t.frm", 1);
        for s in src {
            c.statement(s, &loc, &mut table, &HashMap::new())?;
        }
        Ok((c.finish()?, table))
    }

    #[test]
    fn id_statement_compiles_to_substitution() {
        let (m, _) = compile(&["S x,y", "L F = x^2", "id x = y+1"]).unwrap();
        assert_eq!(m.definitions.len(), 1);
        assert!(matches!(&m.program[0].op, Op::Id { once: false, .. }));
    }

    #[test]
    fn empty_module_is_valid() {
        let (m, _) = compile(&[]).unwrap();
        assert!(m.program.is_empty());
    }

    #[test]
    fn illegal_operator_message() {
        let err = compile(&["Symbols x1,x2", "Local F = (x1+x2)^^10"]).unwrap_err();
        assert_eq!(err, "Illegal position for operator: ^10");
    }

    #[test]
    fn if_else_jumps() {
        let (m, _) = compile(&["S x", "if (count(x,1) > 1)", "id x = 1", "else", "id x = 2", "endif"]).unwrap();
        let ops: Vec<String> = m.program.iter().map(|s| s.op.to_string()).collect();
        assert_eq!(ops, ["if else -> 3", "id", "jump -> 4", "id"]);
    }

    #[test]
    fn single_statement_forms() {
        let (m, _) = compile(&["S x", "repeat id x = 1", "if (count(x,1) > 1) id x = 1"]).unwrap();
        let ops: Vec<String> = m.program.iter().map(|s| s.op.to_string()).collect();
        assert_eq!(ops, ["repeat", "id", "endrepeat -> 0", "if else -> 5", "id"]);
    }

    #[test]
    fn term_blocks_split_at_sort() {
        let (m, _) = compile(&["S x", "Term", "id x = 1", "sort", "id x = 2", "EndTerm"]).unwrap();
        assert!(matches!(&m.program[0].op, Op::TermBlock(segs) if segs.len() == 2));
        assert!(compile(&["Term", "Term"]).is_err());
        assert!(compile(&["S x", "Term", "repeat", "sort"]).is_err());
    }

    #[test]
    fn field_in_symmetric_function_rejected() {
        let err = compile(&["CF f(symmetric)", "S x", "id f(?a,x) = 1"]).unwrap_err();
        assert!(err.contains("symmetric"));
    }

    #[test]
    fn fill_and_tables() {
        let (_, t) = compile(&["Table tab(1:2,1:2)", "Fill tab(1,1) = 3, 4"]).unwrap();
        let Some(Entry::Function(f)) = t.lookup("tab") else { panic!() };
        let def = t.function(f).table.as_ref().unwrap();
        assert_eq!(def.fill[&vec![1, 2]], Poly::from_int(4));
    }

    #[test]
    fn print_formats() {
        let (m, _) = compile(&["Print +f \"<1> %t\"", "Print +f +s"]).unwrap();
        assert_eq!(m.program[0].op, Op::PrintTerm(vec![FmtPiece::Text("<1> ".into()), FmtPiece::Term]));
        assert!(m.prints[0].one_term_per_line);
        assert!(compile(&["Print \"%q\""]).unwrap_err().contains("Unknown format directive"));
    }

    #[test]
    fn replaceloop_options() {
        let (m, _) = compile(&["I i1", "CF f(antisymmetric),ff", "ReplaceLoop,f,arguments=3,loopsize=all,outfun=ff"]).unwrap();
        assert!(matches!(&m.program[0].op, Op::ReplaceLoop(s) if s.arguments == 3 && s.loopsize.is_none()));
        assert!(compile(&["CF f,ff", "ReplaceLoop,f,arguments=3,loopsize=1,outfun=ff"]).is_err());
    }

    #[test]
    fn module_options_and_switches() {
        let (m, _) = compile(&["ModuleOption maximum,$max", "Off Statistics"]).unwrap();
        assert_eq!(m.merge_modes, vec![("$max".to_string(), MergeMode::Maximum)]);
        assert_eq!(m.statistics, Some(false));
    }

    #[test]
    fn splitarg_modes() {
        let (m, _) = compile(&["S j1", "CF den", "SplitArg,((j1)),den"]).unwrap();
        assert!(matches!(&m.program[0].op, Op::SplitArg { mode: SplitMode::Partition(_), funcs } if funcs.len() == 1));
        let (m, _) = compile(&["S j1", "CF den", "SplitArg den"]).unwrap();
        assert!(matches!(&m.program[0].op, Op::SplitArg { mode: SplitMode::Plain, .. }));
    }
}
