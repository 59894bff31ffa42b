//! Workload programs shared by the kernel benchmarks.

use std::path::Path;

use miniform::{run_source, Report, RunOptions};

/// `(x1+...+xn)^p`, sorted once.
pub fn expansion(n: usize, p: u32) -> String {
    format!("Symbols x1,...,x{n};\nOff Statistics;\nLocal F = (x1+...+x{n})^{p};\n.end\n")
}

/// Levi-Civita determinant of an `n x n` table with entries `i + 2*j mod 7`.
pub fn determinant(n: usize) -> String {
    let mut s = format!("#define MAX \"{n}\"\nSymbols i1,...,i{n},k;\nCF f;\nOff Statistics;\nTable tab(1:{n},1:{n});\n");
    for i in 1..=n {
        for j in 1..=n {
            s.push_str(&format!("Fill tab({i},{j}) = {};\n", (i + 2 * j) % 7));
        }
    }
    s.push_str(
        "Local F = sum_(k,1,`MAX',e_(k)*f(1,k));\n\
         #do j = 1,`MAX'-1\n\
         id e_(i1?,...,i`j'?) = sum_(k,1,`MAX',e_(i1,...,i`j',k)*f(`j'+1,k));\n\
         id f(`j',k?) = tab(`j',k);\n\
         .sort\n\
         #enddo\n\
         id f(`MAX',k?) = tab(`MAX',k);\n\
         id e_(1,...,`MAX') = 1;\n\
         .end\n",
    );
    s
}

/// Product of two harmonic sums reduced by the `basis` procedure.
pub fn stuffle(a: &[i64], b: &[i64]) -> String {
    let list = |v: &[i64]| v.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
    format!(
        "#include summer6.h\nOff Statistics;\n.global\nLocal F = S(R({}),N)*S(R({}),N);\n#call basis(S)\n.end\n",
        list(a),
        list(b)
    )
}

/// Lookup of every bracket of `(x1+...+x6)^p`, indexed or by linear scan.
pub fn bracket_lookups(p: u32, indexed: bool) -> String {
    let plus = if indexed { "+" } else { "" };
    format!(
        "Symbols x1,...,x6;\nOff Statistics;\nLocal F = (x1+...+x6)^{p};\nBracket{plus} x1;\n.sort\nDrop F;\n#do i = 0,{p}\nLocal F`i' = F[x1^`i'];\n#enddo\n.end\n"
    )
}

pub fn run(src: &str, opts: &RunOptions) -> Report {
    let r = run_source(src, "bench.frm", Path::new("."), opts);
    assert_eq!(r.status, 0, "{}", r.stderr);
    r
}
