//! Expression trees for right-hand sides, patterns and conditions, and the
//! recursive-descent parser that builds them.

use num::{BigInt, One};

use super::lexer::{tokenize, Tok, Token};
use crate::symbols::{Entry, ExprId, FuncClass, SetElement, SymbolTable};
use crate::term::{FunId, IdxId, Rat, SymId};

/// Name of a wildcard: symbols and indices use their declaration, argument
/// fields (`?a`) their own spelling.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum WildKey {
    Sym(SymId),
    Idx(IdxId),
    Field(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinSet {
    Number,
    Integer,
    Pos,
    Pos0,
    Neg,
    Neg0,
    Even,
    Odd,
    Symbol,
    Index,
}

impl BuiltinSet {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "number_" => BuiltinSet::Number,
            "integer_" => BuiltinSet::Integer,
            "int_" => BuiltinSet::Integer,
            "pos_" => BuiltinSet::Pos,
            "pos0_" => BuiltinSet::Pos0,
            "neg_" => BuiltinSet::Neg,
            "neg0_" => BuiltinSet::Neg0,
            "even_" => BuiltinSet::Even,
            "odd_" => BuiltinSet::Odd,
            "symbol_" => BuiltinSet::Symbol,
            "index_" => BuiltinSet::Index,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetItem {
    Number(Rat),
    Symbol(SymId),
    Index(IdxId),
    Function(FunId),
    Wild(WildKey),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Restriction {
    None,
    In(Vec<SetItem>),
    NotIn(Vec<SetItem>),
    Builtin(BuiltinSet, bool),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Wildcard {
    pub key: WildKey,
    pub restriction: Restriction,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(Rat),
    Sym(SymId),
    Index(IdxId),
    Func(FunId, Vec<Ast>),
    /// `?a` argument field.
    Field(String),
    Wild(Wildcard),
    Dollar(String),
    Expr(ExprId),
    /// `F[key]` bracket contents.
    Bracket(ExprId, Box<Ast>),
    Add(Vec<Ast>),
    Neg(Box<Ast>),
    Mul(Vec<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
}

impl Ast {
    pub fn has_wildcards(&self) -> bool {
        match self {
            Ast::Wild(_) | Ast::Field(_) => true,
            Ast::Func(_, a) | Ast::Add(a) | Ast::Mul(a) => a.iter().any(Ast::has_wildcards),
            Ast::Neg(a) => a.has_wildcards(),
            Ast::Div(a, b) | Ast::Pow(a, b) => a.has_wildcards() || b.has_wildcards(),
            Ast::Bracket(_, k) => k.has_wildcards(),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CountItem {
    Sym(SymId),
    Fun(FunId),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CondValue {
    Count(Vec<(CountItem, i64)>),
    InExpression(Vec<ExprId>),
    Alg(Ast),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cond {
    Cmp(CondValue, CmpOp, CondValue),
    Truth(CondValue),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
}

pub struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    at: usize,
    table: &'a SymbolTable,
    wild: bool,
}

fn rat_int(n: BigInt) -> Rat {
    Rat::from_integer(n)
}

impl<'a> Parser<'a> {
    pub fn new(src: &'a str, table: &'a SymbolTable, allow_wildcards: bool) -> Result<Self, String> {
        Ok(Parser { src, toks: tokenize(src)?, at: 0, table, wild: allow_wildcards })
    }

    pub fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.at + k).map(|t| &t.tok)
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(Tok::Op(o)) if *o == op)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), String> {
        if self.eat_op(op) {
            Ok(())
        } else if self.at_end() {
            Err(format!("Missing {op}"))
        } else {
            Err(self.illegal_here())
        }
    }

    fn rest_from(&self, pos: usize) -> String {
        self.src[pos..].trim().to_string()
    }

    fn illegal_here(&self) -> String {
        match self.toks.get(self.at) {
            Some(t) => match &t.tok {
                Tok::Op(_) => format!("Illegal position for operator: {}", self.rest_from(t.pos)),
                _ => format!("Unexpected object in expression: {}", self.rest_from(t.pos)),
            },
            None => "Unexpected end of expression".to_string(),
        }
    }

    /// Token position of the current token in the source text.
    pub fn position(&self) -> usize {
        self.toks.get(self.at).map_or(self.src.len(), |t| t.pos)
    }

    pub fn finish(&self) -> Result<(), String> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.illegal_here())
        }
    }

    pub fn parse_sum(&mut self) -> Result<Ast, String> {
        let mut terms = Vec::new();
        let first_neg = if self.eat_op("-") {
            true
        } else {
            self.eat_op("+");
            false
        };
        let t = self.parse_product()?;
        terms.push(if first_neg { Ast::Neg(Box::new(t)) } else { t });
        loop {
            if self.eat_op("+") {
                terms.push(self.parse_product()?);
            } else if self.eat_op("-") {
                terms.push(Ast::Neg(Box::new(self.parse_product()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().expect("one") } else { Ast::Add(terms) })
    }

    fn parse_product(&mut self) -> Result<Ast, String> {
        let mut acc = self.parse_unary()?;
        loop {
            if self.eat_op("*") {
                let rhs = self.parse_unary()?;
                acc = match acc {
                    Ast::Mul(mut v) => {
                        v.push(rhs);
                        Ast::Mul(v)
                    }
                    other => Ast::Mul(vec![other, rhs]),
                };
            } else if self.eat_op("/") {
                let rhs = self.parse_unary()?;
                acc = Ast::Div(Box::new(acc), Box::new(rhs));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn parse_unary(&mut self) -> Result<Ast, String> {
        if self.eat_op("-") {
            return Ok(Ast::Neg(Box::new(self.parse_unary()?)));
        }
        if self.eat_op("+") {
            return self.parse_unary();
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Ast, String> {
        let base = self.parse_primary()?;
        if self.eat_op("^") {
            let exp = self.parse_exponent()?;
            return Ok(Ast::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_exponent(&mut self) -> Result<Ast, String> {
        if self.eat_op("-") {
            return Ok(Ast::Neg(Box::new(self.parse_exponent()?)));
        }
        if self.eat_op("+") {
            return self.parse_exponent();
        }
        self.parse_power()
    }

    fn parse_primary(&mut self) -> Result<Ast, String> {
        let Some(tok) = self.peek().cloned() else {
            return Err("Unexpected end of expression".to_string());
        };
        match tok {
            Tok::Num(n) => {
                self.at += 1;
                Ok(Ast::Num(rat_int(n)))
            }
            Tok::Op("(") => {
                self.at += 1;
                let inner = self.parse_sum()?;
                self.expect_op(")")?;
                Ok(inner)
            }
            Tok::Op("?") if self.wild => {
                self.at += 1;
                match self.peek().cloned() {
                    Some(Tok::Name(n)) => {
                        self.at += 1;
                        Ok(Ast::Field(format!("?{n}")))
                    }
                    _ => Err(self.illegal_here()),
                }
            }
            Tok::Dollar(d) => {
                self.at += 1;
                Ok(Ast::Dollar(d))
            }
            Tok::Name(name) | Tok::BName(name) => {
                self.at += 1;
                self.parse_name(&name)
            }
            Tok::Op(_) => Err(self.illegal_here()),
            Tok::Str(_) => Err("Illegal string in expression".to_string()),
        }
    }

    fn parse_name(&mut self, name: &str) -> Result<Ast, String> {
        let Some(entry) = self.table.lookup(name) else {
            return Err(format!("Undeclared variable {name}"));
        };
        match entry {
            Entry::Symbol(s) => {
                if self.wild && self.is_op("?") {
                    self.at += 1;
                    let restriction = self.parse_restriction()?;
                    return Ok(Ast::Wild(Wildcard { key: WildKey::Sym(s), restriction }));
                }
                Ok(Ast::Sym(s))
            }
            Entry::Index(i) => {
                if self.wild && self.is_op("?") {
                    self.at += 1;
                    let restriction = self.parse_restriction()?;
                    return Ok(Ast::Wild(Wildcard { key: WildKey::Idx(i), restriction }));
                }
                Ok(Ast::Index(i))
            }
            Entry::Function(f) => {
                if self.eat_op("(") {
                    let mut args = Vec::new();
                    if !self.eat_op(")") {
                        loop {
                            args.push(self.parse_argument()?);
                            if self.eat_op(",") {
                                continue;
                            }
                            self.expect_op(")")?;
                            break;
                        }
                    }
                    Ok(Ast::Func(f, args))
                } else {
                    if matches!(self.table.function(f).class, FuncClass::Builtin(_)) {
                        return Err(format!("Function {name} needs arguments"));
                    }
                    Ok(Ast::Func(f, Vec::new()))
                }
            }
            Entry::Expression(e) => {
                if self.eat_op("[") {
                    let key = if self.is_op("]") { Ast::Num(Rat::one()) } else { self.parse_sum()? };
                    self.expect_op("]")?;
                    return Ok(Ast::Bracket(e, Box::new(key)));
                }
                Ok(Ast::Expr(e))
            }
            Entry::Set(_) => Err(format!("Illegal use of set {name}")),
        }
    }

    fn parse_argument(&mut self) -> Result<Ast, String> {
        if self.wild && self.is_op("?") {
            if let Some(Tok::Name(n)) = self.peek_at(1).cloned() {
                self.at += 2;
                return Ok(Ast::Field(format!("?{n}")));
            }
        }
        self.parse_sum()
    }

    fn parse_restriction(&mut self) -> Result<Restriction, String> {
        let negate = self.eat_op("!");
        if self.is_op("{") {
            let items = self.parse_set_items()?;
            return Ok(if negate { Restriction::NotIn(items) } else { Restriction::In(items) });
        }
        if let Some(Tok::Name(n)) = self.peek().cloned() {
            if let Some(b) = BuiltinSet::from_name(&n) {
                self.at += 1;
                return Ok(Restriction::Builtin(b, negate));
            }
            if let Some(Entry::Set(s)) = self.table.lookup(&n) {
                self.at += 1;
                let items = self.table.set(s).iter().map(set_element_item).collect();
                return Ok(if negate { Restriction::NotIn(items) } else { Restriction::In(items) });
            }
        }
        if negate {
            return Err(self.illegal_here());
        }
        Ok(Restriction::None)
    }

    fn parse_set_items(&mut self) -> Result<Vec<SetItem>, String> {
        self.expect_op("{")?;
        let mut items = Vec::new();
        if self.eat_op("}") {
            return Ok(items);
        }
        loop {
            let neg = self.eat_op("-");
            match self.peek().cloned() {
                Some(Tok::Num(n)) => {
                    self.at += 1;
                    let mut v = rat_int(n);
                    if self.eat_op("/") {
                        match self.peek().cloned() {
                            Some(Tok::Num(d)) => {
                                self.at += 1;
                                v /= rat_int(d);
                            }
                            _ => return Err(self.illegal_here()),
                        }
                    }
                    items.push(SetItem::Number(if neg { -v } else { v }));
                }
                Some(Tok::Name(name)) | Some(Tok::BName(name)) if !neg => {
                    self.at += 1;
                    let wild = self.eat_op("?");
                    let item = match self.table.lookup(&name) {
                        Some(Entry::Symbol(s)) if wild => SetItem::Wild(WildKey::Sym(s)),
                        Some(Entry::Index(i)) if wild => SetItem::Wild(WildKey::Idx(i)),
                        Some(Entry::Symbol(s)) => SetItem::Symbol(s),
                        Some(Entry::Index(i)) => SetItem::Index(i),
                        Some(Entry::Function(f)) => SetItem::Function(f),
                        Some(_) => return Err(format!("Illegal set element {name}")),
                        None => return Err(format!("Undeclared variable {name}")),
                    };
                    items.push(item);
                }
                _ => return Err(self.illegal_here()),
            }
            if self.eat_op(",") {
                continue;
            }
            self.expect_op("}")?;
            return Ok(items);
        }
    }

    pub fn parse_condition(&mut self) -> Result<Cond, String> {
        let mut lhs = self.parse_cond_and()?;
        while self.eat_op("||") {
            let rhs = self.parse_cond_and()?;
            lhs = Cond::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_cond_and(&mut self) -> Result<Cond, String> {
        let mut lhs = self.parse_cond_not()?;
        while self.eat_op("&&") {
            let rhs = self.parse_cond_not()?;
            lhs = Cond::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_cond_not(&mut self) -> Result<Cond, String> {
        if self.eat_op("!") {
            return Ok(Cond::Not(Box::new(self.parse_cond_not()?)));
        }
        if self.is_op("(") {
            let save = self.at;
            self.at += 1;
            if let Ok(c) = self.parse_condition() {
                if self.eat_op(")") && !self.next_is_value_operator() {
                    return Ok(c);
                }
            }
            self.at = save;
        }
        let lhs = self.parse_cond_value()?;
        let op = match self.peek() {
            Some(Tok::Op("==")) | Some(Tok::Op("=")) => CmpOp::Eq,
            Some(Tok::Op("!=")) => CmpOp::Ne,
            Some(Tok::Op("<=")) => CmpOp::Le,
            Some(Tok::Op(">=")) => CmpOp::Ge,
            Some(Tok::Op("<")) => CmpOp::Lt,
            Some(Tok::Op(">")) => CmpOp::Gt,
            _ => return Ok(Cond::Truth(lhs)),
        };
        self.at += 1;
        let rhs = self.parse_cond_value()?;
        Ok(Cond::Cmp(lhs, op, rhs))
    }

    fn next_is_value_operator(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Op("==" | "=" | "!=" | "<=" | ">=" | "<" | ">" | "+" | "-" | "*" | "/" | "^"))
        )
    }

    fn parse_cond_value(&mut self) -> Result<CondValue, String> {
        if let (Some(Tok::Name(n)), Some(Tok::Op("("))) = (self.peek().cloned(), self.peek_at(1).cloned()) {
            if (n == "count" || n == "expression") && self.table.lookup(&n).is_none() {
                self.at += 2;
                let mut names = Vec::new();
                loop {
                    let neg = self.eat_op("-");
                    match self.peek().cloned() {
                        Some(Tok::Name(a)) | Some(Tok::BName(a)) if !neg => {
                            self.at += 1;
                            names.push(Err(a));
                        }
                        Some(Tok::Num(v)) => {
                            self.at += 1;
                            let v: i64 = v.try_into().map_err(|_| "Number too large in count".to_string())?;
                            names.push(Ok(if neg { -v } else { v }));
                        }
                        _ => return Err(self.illegal_here()),
                    }
                    if self.eat_op(",") {
                        continue;
                    }
                    self.expect_op(")")?;
                    break;
                }
                return if n == "count" { self.count_items(names) } else { self.expression_items(names) };
            }
        }
        Ok(CondValue::Alg(self.parse_sum()?))
    }

    fn count_items(&self, raw: Vec<Result<i64, String>>) -> Result<CondValue, String> {
        if !raw.len().is_multiple_of(2) {
            return Err("count needs pairs of name and weight".to_string());
        }
        let mut items = Vec::new();
        for pair in raw.chunks(2) {
            let (Err(name), Ok(w)) = (&pair[0], &pair[1]) else {
                return Err("count needs pairs of name and weight".to_string());
            };
            let item = match self.table.lookup(name) {
                Some(Entry::Symbol(s)) => CountItem::Sym(s),
                Some(Entry::Function(f)) => CountItem::Fun(f),
                Some(_) => return Err(format!("Illegal object in count: {name}")),
                None => return Err(format!("Undeclared variable {name}")),
            };
            items.push((item, *w));
        }
        Ok(CondValue::Count(items))
    }

    fn expression_items(&self, raw: Vec<Result<i64, String>>) -> Result<CondValue, String> {
        let mut ids = Vec::new();
        for r in raw {
            let Err(name) = r else { return Err("expression() needs expression names".to_string()) };
            match self.table.lookup(&name) {
                Some(Entry::Expression(e)) => ids.push(e),
                Some(_) => return Err(format!("{name} is not an expression")),
                None => return Err(format!("Undeclared variable {name}")),
            }
        }
        Ok(CondValue::InExpression(ids))
    }
}

fn set_element_item(e: &SetElement) -> SetItem {
    match e {
        SetElement::Number(n) => SetItem::Number(Rat::from_integer(BigInt::from(*n))),
        SetElement::Symbol(s) => SetItem::Symbol(*s),
        SetElement::Index(i) => SetItem::Index(*i),
        SetElement::Function(f) => SetItem::Function(*f),
    }
}

/// Parses a complete algebraic expression.
pub fn parse_algebra(text: &str, table: &SymbolTable) -> Result<Ast, String> {
    let mut p = Parser::new(text, table, false)?;
    let ast = p.parse_sum()?;
    p.finish()?;
    Ok(ast)
}

/// Parses a pattern (left-hand side), where wildcards are allowed.
pub fn parse_pattern_text(text: &str, table: &SymbolTable) -> Result<Ast, String> {
    let mut p = Parser::new(text, table, true)?;
    let ast = p.parse_sum()?;
    p.finish()?;
    Ok(ast)
}

pub fn parse_condition_text(text: &str, table: &SymbolTable) -> Result<Cond, String> {
    let mut p = Parser::new(text, table, false)?;
    let c = p.parse_condition()?;
    p.finish()?;
    Ok(c)
}
