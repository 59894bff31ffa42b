//! Acceptance run: one PASS/FAIL line per criterion; exits nonzero on any failure.

mod common;

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{binomial, cofactor_det, determinant_script, dollar_i64, equals, max_power_script, parse, props, run, run_with};
use miniform::{Config, RunOptions};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SPLITARG: &str = include_str!("programs/splitarg.frm");
const TERM_ENV: &str = include_str!("programs/term.frm");
const REPLACE_LOOP: &str = include_str!("programs/loop.frm");
const BASIS: &str = include_str!("programs/basis.frm");
const HBASIS: &str = include_str!("programs/hbasis.frm");
const ERRORS: &str = include_str!("programs/ex1.frm");
const BRACKETS: &str = include_str!("programs/bracket.frm");

const TRACE: [(&str, &str); 19] = [
    ("<1>", "den(j1)*den(2 + j1)*den(3 - 2*j1)"),
    ("<2>", "den(2,j1)*den(3, - 2*j1)*den(j1)"),
    ("<3>", "den(2,j1)*den(3, - 2*j1)*den1(0,j1)"),
    ("<4>", "- 1/2*den1(0,j1)*den1(2,j1)*den1( - 3/2,j1)"),
    ("<5>", "- 1/2*den1(0,j1)*den1(2,j1)*den1( - 3/2,j1)"),
    ("<6>", "- 1/2*den(2)*den1(0,j1)*den1( - 3/2,j1)"),
    ("<6>", "- 1/2*den(2)*den( - 3/2)*den1(0,j1)"),
    ("<6>", "- 1/2*den(2)*den( - 3/2)*den1(0,j1)"),
    ("<7>", "1/6*den1(0,j1)"),
    ("<6>", "1/2*den(2)*den( - 3/2)*den1( - 3/2,j1)"),
    ("<6>", "1/2*den(2)*den( - 3/2)*den1( - 3/2,j1)"),
    ("<7>", "- 1/6*den1( - 3/2,j1)"),
    ("<6>", "1/2*den(2)*den1(2,j1)*den1( - 3/2,j1)"),
    ("<6>", "1/2*den(2)*den( - 7/2)*den1(2,j1)"),
    ("<6>", "1/2*den(2)*den( - 7/2)*den1(2,j1)"),
    ("<7>", "- 1/14*den1(2,j1)"),
    ("<6>", "- 1/2*den(2)*den( - 7/2)*den1( - 3/2,j1)"),
    ("<6>", "- 1/2*den(2)*den( - 7/2)*den1( - 3/2,j1)"),
    ("<7>", "1/14*den1( - 3/2,j1)"),
];

const BASIS_RESULT: &str = "- S(R(-3,2,3),N) - S(R(-3,3,2),N) + S(R(-3,5),N)
    + 2*S(R(-1,2,2,3),N) + S(R(-1,2,3,2),N) - S(R(-1,2,5),N)
    - S(R(-1,4,3),N) - S(R(2,-4,2),N) + S(R(2,-1,2,3),N)
    + S(R(2,-1,3,2),N) - S(R(2,-1,5),N) + S(R(2,3,-1,2),N)";

const HBASIS_RESULT: &str = "H(R(-1,1,-1,1,0,1),x) + H(R(-1,1,0,1,-1,1),x) + 2*H(R(-1,1,0,1,1,-1),x)
    + 2*H(R(-1,1,1,-1,0,1),x) + 2*H(R(-1,1,1,0,-1,1),x) + 2*H(R(-1,1,1,0,1,-1),x)
    + H(R(1,-1,0,1,-1,1),x) + 2*H(R(1,-1,0,1,1,-1),x) + H(R(1,-1,1,-1,0,1),x)
    + H(R(1,-1,1,0,-1,1),x) + H(R(1,-1,1,0,1,-1),x) + H(R(1,0,-1,1,-1,1),x)
    + 2*H(R(1,0,-1,1,1,-1),x) + H(R(1,0,1,-1,1,-1),x)";

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn splitarg() -> Outcome {
    let start = Instant::now();
    let r = run(SPLITARG);
    ensure(r.status == 0, || r.stderr.clone())?;
    equals(&r, "F", "-2/21*den1(-3/2,j1) + 1/6*den1(0,j1) - 1/14*den1(2,j1)")?;
    let lines: Vec<&str> = r.stdout.lines().filter(|l| l.starts_with('<')).collect();
    ensure(lines.len() == TRACE.len(), || format!("{} trace lines, expected {}", lines.len(), TRACE.len()))?;
    for (k, (line, (label, expected))) in lines.iter().zip(TRACE).enumerate() {
        let (got_label, body) = line.split_at(3);
        ensure(got_label == label, || format!("trace line {}: label {got_label}, expected {label}", k + 1))?;
        let diff = parse(&r, body)?.add(&parse(&r, expected)?.neg());
        ensure(diff.is_zero(), || format!("trace line {} differs: {line}", k + 1))?;
    }
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!("final expression and {} trace lines match, {t:.2?}", lines.len()))
}

fn term_environment() -> Outcome {
    let start = Instant::now();
    let r = run(TERM_ENV);
    ensure(r.status == 0, || r.stderr.clone())?;
    equals(&r, "F", "x*y^2*[x+1] + x*y^3*[x+2] + x^2*y^4 + y*[x+1]^2*[x+2]")?;
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!("factorized result matches, {t:.2?}"))
}

fn replace_loop() -> Outcome {
    let single = REPLACE_LOOP.split_once(".sort").map(|(head, _)| format!("{head}.end\n")).ok_or("no .sort")?;
    let r = run(&single);
    ensure(r.status == 0, || r.stderr.clone())?;
    equals(&r, "F", "f(i1,i8,i9)*f(i4,i7,i8)*f(i6,i7,i9)*ff(i1,i6,i4)")?;
    let r = run(REPLACE_LOOP);
    ensure(r.status == 0, || r.stderr.clone())?;
    equals(&r, "F", "-ff(i1,i4,i6)*ff(i1,i6,i4)")?;
    Ok("single application and repeat both match".into())
}

fn basis() -> Outcome {
    let r = run(BASIS);
    ensure(r.status == 0, || r.stderr.clone())?;
    equals(&r, "F", BASIS_RESULT)?;
    let n = r.session.expression("F").map(|p| p.len()).unwrap_or(0);
    ensure(n == 12, || format!("{n} terms"))?;
    Ok("12-term stuffle product matches".into())
}

fn hbasis() -> Outcome {
    let r = run(HBASIS);
    ensure(r.status == 0, || r.stderr.clone())?;
    equals(&r, "F", HBASIS_RESULT)?;
    ensure(r.stdout.contains("Terms in output =         14"), || "statistics do not report 14 terms".into())?;
    Ok("14-term shuffle product matches".into())
}

fn error_program() -> Outcome {
    let r = run_with(ERRORS, "ex1.frm", &RunOptions::default());
    let lines = r.stderr_lines();
    let want = ["ex1.frm Line 3 --> Illegal position for operator: ^10", "ex1.frm Line 8 --> Undeclared variable FF"];
    ensure(lines.len() >= 2 && lines[..2] == want, || format!("diagnostics were {lines:?}"))?;
    ensure(r.status != 0, || "run reported success".into())?;
    Ok("both diagnostics byte-exact".into())
}

fn factorial() -> Outcome {
    let r = run("Symbols x1,...,x100;\nLocal Fac10 = 1*...*10;\n.end\n");
    ensure(r.status == 0, || r.stderr.clone())?;
    let expected: i64 = (1..=10).product();
    let got = r.session.expression("Fac10").and_then(|p| p.as_i64());
    ensure(got == Some(expected), || format!("Fac10 = {got:?}"))?;
    Ok(format!("Fac10 = {expected}"))
}

fn determinants() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x05ee_dde7);
    let start = Instant::now();
    for case in 0..20 {
        let n = rng.gen_range(1..=5);
        let m: Vec<Vec<i64>> =
            (0..n).map(|_| (0..n).map(|_| if rng.gen_bool(0.4) { 0 } else { rng.gen_range(-9..=9) }).collect()).collect();
        let r = run(&determinant_script(&m));
        ensure(r.status == 0, || format!("case {case}: {}", r.stderr))?;
        let got = r.session.expression("F").ok_or("no F")?;
        let want = cofactor_det(&m);
        let ok = if want == 0 { got.is_zero() } else { got.as_i64().map(i128::from) == Some(want) };
        ensure(ok, || format!("case {case} {m:?}: got {:?}, expected {want}", got.as_i64()))?;
    }
    let t = within(start, Duration::from_secs(5))?;
    Ok(format!("20 sparse matrices up to 5x5 agree with cofactor expansion, {t:.2?}"))
}

fn expansion_scale() -> Outcome {
    let start = Instant::now();
    let src = "Symbols x1,...,x10;\nOff Statistics;\nLocal F = (x1+...+x10)^10;\n.end\n";
    let expected = binomial(19, 9) as usize;
    for cap in [Some(1), Some(64), None] {
        let opts = RunOptions { engine: Config { sort_capacity: cap, ..Config::default() }, ..RunOptions::default() };
        let r = run_with(src, "scale.frm", &opts);
        ensure(r.status == 0, || r.stderr.clone())?;
        let n = r.session.expression("F").map(|p| p.len()).unwrap_or(0);
        ensure(n == expected, || format!("capacity {cap:?}: {n} terms"))?;
    }
    let mut indexed = run(BRACKETS);
    ensure(indexed.status == 0, || indexed.stderr.clone())?;
    for i in 0..=10u64 {
        let n = indexed.session.expression(&format!("F{i}")).map(|p| p.len()).unwrap_or(0);
        ensure(n as u64 == binomial(18 - i, 8), || format!("F{i} has {n} terms"))?;
        equals(&indexed, &format!("F{i}"), &format!("{}*(x2+x3+x4+x5+x6+x7+x8+x9+x10)^{}", binomial(10, i), 10 - i))?;
    }
    let fast = indexed.session.take_lookup_stats();
    let mut linear = run(&BRACKETS.replace("Bracket+", "Bracket"));
    ensure(linear.status == 0, || linear.stderr.clone())?;
    let slow = linear.session.take_lookup_stats();
    ensure(fast.len() == 11 && slow.len() == 11, || format!("{} and {} lookups recorded", fast.len(), slow.len()))?;
    let max_cmp = fast.iter().map(|s| s.comparisons).max().unwrap_or(0);
    ensure(max_cmp <= 6, || format!("indexed lookup used {max_cmp} comparisons"))?;
    for (f, s) in fast.iter().zip(&slow) {
        ensure(s.reads >= f.comparisons + f.reads && s.reads > 6, || format!("linear scan read {} terms, index {} comparisons", s.reads, f.comparisons))?;
    }
    let t = within(start, Duration::from_secs(60))?;
    let min_reads = slow.iter().map(|s| s.reads).min().unwrap_or(0);
    Ok(format!("{expected} terms for capacities 1/64/unbounded; index <= {max_cmp} comparisons vs >= {min_reads} linear reads, {t:.2?}"))
}

fn property_suites() -> Outcome {
    let mut failures = Vec::new();
    let suites = props::all();
    for (name, check) in &suites {
        if let Err(e) = check() {
            failures.push(format!("{name}: {e}"));
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} suites x {} cases", suites.len(), props::CASES))
}

fn dollar_maximum() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0xd011a5);
    for case in 0..50 {
        let nterms = rng.gen_range(1..=12);
        let mut terms = Vec::new();
        let mut degree = i64::MIN;
        for k in 0..nterms {
            let px: i64 = rng.gen_range(0..=15);
            let c: i64 = if rng.gen_bool(0.5) { rng.gen_range(1..=20) } else { -rng.gen_range(1..=20) };
            // distinct powers of y keep the terms from cancelling
            terms.push(format!("+({c})*x^{px}*y^{k}"));
            degree = degree.max(px);
        }
        let poly: String = terms.concat();
        let plain = run(&max_power_script(&poly, false));
        ensure(plain.status == 0, || plain.stderr.clone())?;
        let got = dollar_i64(&plain, "max");
        ensure(got == Some(degree), || format!("case {case}: $max = {got:?}, expected {degree}"))?;
        for chunks in [2, 5] {
            let opts = RunOptions { engine: Config { chunks, ..Config::default() }, ..RunOptions::default() };
            let r = run_with(&max_power_script(&poly, true), "max.frm", &opts);
            ensure(r.status == 0, || r.stderr.clone())?;
            let merged = dollar_i64(&r, "max");
            ensure(merged == got, || format!("case {case}: {chunks} chunks gave {merged:?}, unchunked {got:?}"))?;
        }
    }
    Ok("50 random polynomials: $max is the true degree, chunked merge agrees".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1a SplitArg trace", splitarg),
        ("1b term environment", term_environment),
        ("1c ReplaceLoop", replace_loop),
        ("1d basis stuffle", basis),
        ("1e hbasis shuffle", hbasis),
        ("1f error diagnostics", error_program),
        ("1g Fac10", factorial),
        ("2  determinants", determinants),
        ("3  expansion scale and bracket index", expansion_scale),
        ("4  property suites", property_suites),
        ("5  $max with merge mode", dollar_maximum),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
