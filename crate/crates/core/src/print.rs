//! Text rendering of terms, expressions and `$`-variables.

use num::{One, Signed};

use crate::bracket::Brackets;
use crate::symbols::SymbolTable;
use crate::term::{Poly, Rat, SubTerm, Term};

/// Maximum line width of expression output.
pub const LINE_WIDTH: usize = 78;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Style {
    /// Spaced signs, as in printed output.
    Output,
    /// No spaces, for `$`-variable text.
    Compact,
}

fn factor_text(f: &SubTerm, table: &SymbolTable, style: Style, out: &mut String) {
    match f {
        SubTerm::Sym(s, p) => {
            out.push_str(table.symbol_name(*s));
            if *p != 1 {
                out.push_str(&format!("^{p}"));
            }
        }
        SubTerm::Index(i) => out.push_str(table.index_name(*i)),
        SubTerm::Func(fa) => {
            out.push_str(&table.function(fa.id).name);
            if !fa.args.is_empty() {
                out.push('(');
                for (k, a) in fa.args.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    out.push_str(&arg_text(a, table, style));
                }
                out.push(')');
            }
        }
    }
}

fn rat_text(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// The term without its sign.
fn magnitude(t: &Term, table: &SymbolTable, style: Style) -> String {
    let c = t.coeff.abs();
    let mut out = String::new();
    if !c.is_one() || t.factors.is_empty() {
        out.push_str(&rat_text(&c));
    }
    for f in &t.factors {
        if !out.is_empty() {
            out.push('*');
        }
        factor_text(f, table, style, &mut out);
    }
    out
}

fn sum_text(p: &Poly, table: &SymbolTable, style: Style) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, t) in p.terms().iter().enumerate() {
        let neg = t.coeff.is_negative();
        match (style, k, neg) {
            (Style::Output, 0, true) => out.push_str(" - "),
            (Style::Output, 0, false) => {}
            (Style::Output, _, true) => out.push_str(" - "),
            (Style::Output, _, false) => out.push_str(" + "),
            (Style::Compact, 0, false) => {}
            (Style::Compact, _, true) => out.push('-'),
            (Style::Compact, _, false) => out.push('+'),
        }
        out.push_str(&magnitude(t, table, style));
    }
    out
}

fn arg_text(p: &Poly, table: &SymbolTable, style: Style) -> String {
    sum_text(p, table, style)
}

/// `+ term` or `- term` with a leading space, as produced by `%t`.
pub fn term_line(t: &Term, table: &SymbolTable) -> String {
    let sign = if t.coeff.is_negative() { " - " } else { " + " };
    format!("{sign}{}", magnitude(t, table, Style::Output))
}

/// A term with its sign, without surrounding spaces.
pub fn term_text(t: &Term, table: &SymbolTable) -> String {
    let m = magnitude(t, table, Style::Output);
    if t.coeff.is_negative() {
        format!("-{m}")
    } else {
        m
    }
}

/// Compact text of a polynomial, used when a `$`-variable is interpolated.
pub fn compact_text(p: &Poly, table: &SymbolTable) -> String {
    sum_text(p, table, Style::Compact)
}

/// Output-style text of a polynomial on one line.
pub fn poly_text(p: &Poly, table: &SymbolTable) -> String {
    sum_text(p, table, Style::Output).trim_start().to_string()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PrintOptions {
    pub one_term_per_line: bool,
}

fn wrap(pieces: &[String], out: &mut String) {
    let mut line = String::from("     ");
    for p in pieces {
        if line.len() + p.len() > LINE_WIDTH && !line.trim().is_empty() {
            out.push_str(&line);
            out.push('\n');
            line = String::from("     ");
        }
        line.push_str(p);
    }
    out.push_str(&line);
}

/// An expression as printed by `Print` in its normal layout.
pub fn expression_text(name: &str, p: &Poly, table: &SymbolTable, opts: PrintOptions, brackets: Option<&Brackets>) -> String {
    if p.is_zero() {
        return format!("   {name} = 0;\n");
    }
    let mut out = format!("   {name} =\n");
    if let Some(b) = brackets.filter(|b| !b.set().symbols.is_empty() || !b.set().functions.is_empty()) {
        for k in 0..b.len() {
            let key = b.key(k);
            let key_text = if key.factors.is_empty() { "1".to_string() } else { magnitude(key, table, Style::Output) };
            let contents = Poly::from_sorted(b.contents(k));
            out.push_str(&format!("       + {key_text} * ( {} )", poly_text(&contents, table)));
            out.push_str(if k + 1 == b.len() { ";\n" } else { "\n" });
        }
        return out;
    }
    if opts.one_term_per_line {
        let n = p.len();
        for (k, t) in p.terms().iter().enumerate() {
            out.push_str("      ");
            out.push_str(&term_line(t, table));
            out.push_str(if k + 1 == n { ";\n" } else { "\n" });
        }
        return out;
    }
    let pieces: Vec<String> = p
        .terms()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            if k == 0 && !t.coeff.is_negative() {
                format!(" {}", magnitude(t, table, Style::Output))
            } else {
                term_line(t, table)
            }
        })
        .collect();
    wrap(&pieces, &mut out);
    out.push_str(";\n");
    out
}

/// The statistics block printed after an expression is sorted.
pub fn statistics_text(name: &str, seconds: f64, generated: u64, output: u64, bytes: u64) -> String {
    format!(
        "Time = {seconds:>10.2} sec    Generated terms = {generated:>10}\n{name:>17}        Terms in output = {output:>10}\n{:25}Bytes used      = {bytes:>10}\n",
        ""
    )
}
