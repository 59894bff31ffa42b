#![allow(dead_code)]

pub mod props;

use std::path::Path;

use miniform::compiler::ast::parse_algebra;
use miniform::eval::{eval, EvalCtx};
use miniform::{run_source, Poly, Report, RunOptions};

pub fn run(src: &str) -> Report {
    run_with(src, "test.frm", &RunOptions::default())
}

pub fn run_with(src: &str, file: &str, opts: &RunOptions) -> Report {
    run_source(src, file, Path::new("."), opts)
}

/// Parses expected text against the symbol table of a finished run.
pub fn parse(report: &Report, text: &str) -> Result<Poly, String> {
    let table = &report.session.table;
    let ast = parse_algebra(text, table)?;
    eval(&ast, &EvalCtx::new(table))
}

/// Whether expression `name` equals `expected`, by exact subtraction.
pub fn equals(report: &Report, name: &str, expected: &str) -> Result<(), String> {
    let got = report.session.expression(name).ok_or_else(|| format!("no expression {name}"))?;
    let want = parse(report, expected)?;
    let diff = got.add(&want.neg());
    if diff.is_zero() {
        Ok(())
    } else {
        Err(format!("{name} differs from expected by {} terms", diff.len()))
    }
}

pub fn dollar_i64(report: &Report, name: &str) -> Option<i64> {
    report.session.dollar(name).or_else(|| report.session.dollar(&format!("${name}"))).and_then(Poly::as_i64)
}

/// Exact signed determinant by cofactor expansion along the first row.
pub fn cofactor_det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return m[0][0] as i128;
    }
    let mut total = 0i128;
    for col in 0..n {
        if m[0][col] == 0 {
            continue;
        }
        let minor: Vec<Vec<i64>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, v)| *v).collect()).collect();
        let sign = if col % 2 == 0 { 1 } else { -1 };
        total += sign * m[0][col] as i128 * cofactor_det(&minor);
    }
    total
}

/// Levi-Civita determinant program over a Fill-ed table.
pub fn determinant_script(m: &[Vec<i64>]) -> String {
    let n = m.len();
    let mut s = String::new();
    s.push_str(&format!("#define MAX \"{n}\"\nSymbols i1,...,i5,k;\nCF f;\nOff Statistics;\nTable tab(1:{n},1:{n});\n"));
    for (r, row) in m.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            s.push_str(&format!("Fill tab({},{}) = {v};\n", r + 1, c + 1));
        }
    }
    s.push_str(
        "Local F = sum_(k,1,`MAX',e_(k)*f(1,k));\n\
         #do j = 1,`MAX'-1\n\
         \x20   id  e_(i1?,...,i`j'?) =\n\
         \x20           sum_(k,1,`MAX',e_(i1,...,i`j',k)*f(`j'+1,k));\n\
         \x20   id  f(`j',k?) = tab(`j',k);\n\
         \x20   .sort:step `j';\n\
         #enddo\n\
         id  f(`MAX',k?) = tab(`MAX',k);\n\
         id  e_(1,...,`MAX') = 1;\n\
         .end\n",
    );
    s
}

/// Maximum power of `x` program, optionally declaring the merge mode.
pub fn max_power_script(poly: &str, module_option: bool) -> String {
    let option = if module_option { "ModuleOption maximum,$max;\n" } else { "" };
    format!(
        "Symbols x,y;\nOff Statistics;\nLocal F = {poly};\n#$max = -100;\nif ( count(x,1) > $max ) $max = count_(x,1);\n{option}.sort\n.end\n"
    )
}

/// Binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
