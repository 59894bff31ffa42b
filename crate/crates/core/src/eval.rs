//! Evaluation of expression trees to canonical polynomials.

use std::collections::HashMap;

use num::{One, Signed, Zero};

use crate::compiler::ast::{Ast, WildKey};
use crate::pattern::{Bindings, Bound};
use crate::symbols::{Builtin, ExprId, FuncClass, SymbolTable};
use crate::term::{rat, FuncApp, Poly, SubTerm, Term};

/// Read access to stored expressions for right-hand sides.
pub trait ExprSource {
    fn expression(&self, e: ExprId) -> Option<Poly>;
    fn bracket(&self, e: ExprId, key: &Term) -> Result<Poly, String>;
}

pub struct EvalCtx<'a> {
    pub table: &'a SymbolTable,
    pub bindings: Option<&'a Bindings>,
    pub dollars: Option<&'a HashMap<String, Poly>>,
    pub exprs: Option<&'a dyn ExprSource>,
    /// The term being processed, for `count_`.
    pub term: Option<&'a Term>,
}

impl<'a> EvalCtx<'a> {
    pub fn new(table: &'a SymbolTable) -> Self {
        EvalCtx { table, bindings: None, dollars: None, exprs: None, term: None }
    }
}

pub fn eval(ast: &Ast, ctx: &EvalCtx) -> Result<Poly, String> {
    Evaluator { ctx, locals: Vec::new() }.eval(ast)
}

/// Evaluates function arguments, expanding bound argument fields.
pub fn eval_args(args: &[Ast], ctx: &EvalCtx) -> Result<Vec<Poly>, String> {
    Evaluator { ctx, locals: Vec::new() }.args(args)
}

struct Evaluator<'c, 'a> {
    ctx: &'c EvalCtx<'a>,
    locals: Vec<(WildKey, Poly)>,
}

impl Evaluator<'_, '_> {
    fn lookup(&self, key: &WildKey) -> Option<Poly> {
        if let Some((_, v)) = self.locals.iter().rev().find(|(k, _)| k == key) {
            return Some(v.clone());
        }
        self.ctx.bindings.and_then(|b| b.get_arg(key)).cloned()
    }

    fn eval(&mut self, ast: &Ast) -> Result<Poly, String> {
        Ok(match ast {
            Ast::Num(r) => Poly::number(r.clone()),
            Ast::Sym(s) => self.lookup(&WildKey::Sym(*s)).unwrap_or_else(|| Poly::from_term(Term::sym(*s, 1))),
            Ast::Index(i) => self.lookup(&WildKey::Idx(*i)).unwrap_or_else(|| Poly::from_term(Term::index(*i))),
            Ast::Wild(w) => match &w.key {
                WildKey::Sym(s) => self.eval(&Ast::Sym(*s))?,
                WildKey::Idx(i) => self.eval(&Ast::Index(*i))?,
                WildKey::Field(f) => return Err(format!("Illegal use of argument field {f}")),
            },
            Ast::Field(f) => return Err(format!("Illegal use of argument field {f}")),
            Ast::Dollar(d) => self
                .ctx
                .dollars
                .and_then(|m| m.get(d))
                .cloned()
                .ok_or_else(|| format!("Undefined $-variable {d}"))?,
            Ast::Expr(e) => self
                .ctx
                .exprs
                .and_then(|s| s.expression(*e))
                .ok_or_else(|| format!("Expression {} is not available", self.ctx.table.expression_name(*e)))?,
            Ast::Bracket(e, key) => {
                let k = self.eval(key)?;
                let key_term = match k.as_single_term() {
                    Some(t) if t.coeff.is_one() => t.clone(),
                    _ => return Err("Illegal bracket key".to_string()),
                };
                let src = self.ctx.exprs.ok_or_else(|| "Bracket lookup outside of expression context".to_string())?;
                src.bracket(*e, &key_term)?
            }
            Ast::Add(items) => {
                let mut acc = Poly::zero();
                for it in items {
                    acc = acc.add(&self.eval(it)?);
                }
                acc
            }
            Ast::Neg(a) => self.eval(a)?.neg(),
            Ast::Mul(items) => {
                let mut acc = Poly::one();
                for it in items {
                    let v = self.eval(it)?;
                    acc = acc.mul(&v);
                    if acc.is_zero() {
                        break;
                    }
                }
                acc
            }
            Ast::Div(a, b) => {
                let num = self.eval(a)?;
                let den = self.eval(b)?;
                divide(&num, &den)?
            }
            Ast::Pow(a, e) => {
                let base = self.eval(a)?;
                let exp = self.eval(e)?;
                let n = exp.as_i64().ok_or_else(|| "Exponent must be an integer".to_string())?;
                if n.unsigned_abs() > i32::MAX as u64 {
                    return Err("Exponent too large".to_string());
                }
                if n < 0 && base.is_zero() {
                    return Err("Division by zero".to_string());
                }
                base.pow(n).ok_or_else(|| "Illegal negative power of a composite expression".to_string())?
            }
            Ast::Func(f, args) => self.func(*f, args)?,
        })
    }

    fn args(&mut self, args: &[Ast]) -> Result<Vec<Poly>, String> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            if let Ast::Field(name) = a {
                match self.ctx.bindings.and_then(|b| b.get(&WildKey::Field(name.clone()))) {
                    Some(Bound::Args(list)) => out.extend(list.iter().cloned()),
                    _ => return Err(format!("Unbound argument field {name}")),
                }
                continue;
            }
            out.push(self.eval(a)?);
        }
        Ok(out)
    }

    fn func(&mut self, f: crate::term::FunId, args: &[Ast]) -> Result<Poly, String> {
        let info = self.ctx.table.function(f);
        match info.class {
            FuncClass::Builtin(Builtin::Sum) => return self.sum(args),
            FuncClass::Builtin(Builtin::Count) => return self.count(args),
            FuncClass::Builtin(b @ (Builtin::Sig | Builtin::Abs)) => {
                let vals = self.args(args)?;
                if let [v] = vals.as_slice() {
                    if let Some(r) = v.as_number() {
                        return Ok(match b {
                            Builtin::Sig => Poly::from_int(crate::term::rat_sign(&r)),
                            _ => Poly::number(r.abs()),
                        });
                    }
                }
                return Ok(Poly::from_term(Term::func(FuncApp::with_props(f, vals, true, info.symmetry))));
            }
            _ => {}
        }
        let vals = self.args(args)?;
        if let Some(table) = &info.table {
            if vals.len() != table.dims {
                return Err(format!("Table {} needs {} indices", info.name, table.dims));
            }
            let key: Option<Vec<i64>> = vals.iter().map(Poly::as_i64).collect();
            if let Some(v) = key.and_then(|k| table.fill.get(&k)) {
                return Ok(v.clone());
            }
        }
        Ok(Poly::from_term(Term::func(FuncApp::with_props(f, vals, info.commuting(), info.symmetry))))
    }

    fn sum(&mut self, args: &[Ast]) -> Result<Poly, String> {
        let [var, lo, hi, body] = args else {
            return Err("sum_ needs four arguments".to_string());
        };
        let key = match var {
            Ast::Sym(s) => WildKey::Sym(*s),
            Ast::Index(i) => WildKey::Idx(*i),
            _ => return Err("Illegal summation variable in sum_".to_string()),
        };
        let bound = |me: &mut Self, a: &Ast| -> Result<i64, String> {
            me.eval(a)?.as_i64().ok_or_else(|| "sum_ bounds must be integers".to_string())
        };
        let (lo, hi) = (bound(self, lo)?, bound(self, hi)?);
        let mut acc = Poly::zero();
        for i in lo..=hi {
            self.locals.push((key.clone(), Poly::from_int(i)));
            let r = self.eval(body);
            self.locals.pop();
            acc = acc.add(&r?);
        }
        Ok(acc)
    }

    fn count(&mut self, args: &[Ast]) -> Result<Poly, String> {
        if !args.len().is_multiple_of(2) || args.is_empty() {
            return Err("count_ needs pairs of name and weight".to_string());
        }
        let term = self.ctx.term.ok_or_else(|| "count_ used outside of a term".to_string())?;
        let mut total = 0i64;
        for pair in args.chunks(2) {
            let w = self.eval(&pair[1])?.as_i64().ok_or_else(|| "count_ weights must be integers".to_string())?;
            total += w * match &pair[0] {
                Ast::Sym(s) => term.power_of(*s),
                Ast::Func(f, a) if a.is_empty() => {
                    term.factors.iter().filter(|x| matches!(x, SubTerm::Func(g) if g.id == *f)).count() as i64
                }
                _ => return Err("Illegal object in count_".to_string()),
            };
        }
        Ok(Poly::from_int(total))
    }
}

/// Division by a number or by a single term made of symbols only.
pub fn divide(num: &Poly, den: &Poly) -> Result<Poly, String> {
    if let Some(r) = den.as_number() {
        if r.is_zero() {
            return Err("Division by zero".to_string());
        }
        return Ok(num.scale(&(rat(1) / r)));
    }
    match den.as_single_term().and_then(Term::inverse) {
        Some(inv) => Ok(num.mul_term(&inv)),
        None => Err("Illegal division by a composite expression".to_string()),
    }
}
