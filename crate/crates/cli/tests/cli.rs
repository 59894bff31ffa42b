use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn miniform(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miniform")).current_dir(dir).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn successful_run_prints_expression() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.frm"), "#-\nSymbols x;\nOff Statistics;\nLocal F = (1+x)^2;\nPrint;\n.end\n").unwrap();
    let out = miniform(dir.path(), &["a.frm"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("    #-\n"), "{stdout}");
    assert!(stdout.contains("   F =\n"), "{stdout}");
    assert!(out.stderr.is_empty());
}

#[test]
fn compile_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ex1.frm"), "#-\nSymbols x1,...,x10;\nLocal F = (x1+...+x10)^^10;\n.end\n").unwrap();
    let out = miniform(dir.path(), &["ex1.frm"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("ex1.frm Line 3 --> Illegal position for operator: ^10"), "{stderr}");
    assert!(stderr.ends_with("++++Errors\n"), "{stderr}");
}

#[test]
fn empty_program_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.frm"), "").unwrap();
    let out = miniform(dir.path(), &["empty.frm"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(text(&out.stderr).contains("no .end"));
}

#[test]
fn missing_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = miniform(dir.path(), &["nothing.frm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn defines_reach_the_preprocessor() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.frm"), "#-\n#message N=`N' FLAG=`FLAG'\n.end\n").unwrap();
    let out = miniform(dir.path(), &["-D", "N=7", "-D", "FLAG", "d.frm"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("N=7 FLAG=1"), "{}", text(&out.stdout));
}

#[test]
fn setup_file_sets_limits() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.frm"), "#-\nSymbols x;\nLocal F = (1+x)^30;\n.end\n").unwrap();
    fs::write(dir.path().join("tiny.setup"), "* limits\nmaxtermsize 1\n").unwrap();
    let out = miniform(dir.path(), &["--setup", "tiny.setup", "s.frm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("MaxTermSize"), "{}", text(&out.stderr));
    fs::write(dir.path().join("bad.setup"), "frobnicate 3\n").unwrap();
    let out = miniform(dir.path(), &["--setup", "bad.setup", "s.frm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn log_mirrors_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("l.frm"), "#-\nSymbols x;\nLocal F = x;\nPrint;\n.end\n").unwrap();
    let out = miniform(dir.path(), &["--log", "l.frm"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(dir.path().join("l.log")).unwrap(), text(&out.stdout));
}

#[test]
fn include_directories_are_searched() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("lib");
    fs::create_dir(&lib).unwrap();
    fs::write(lib.join("decl.h"), "Symbols a,b;\n").unwrap();
    fs::write(dir.path().join("i.frm"), "#-\n#include decl.h\nOff Statistics;\nLocal F = (a+b)^2;\nPrint;\n.end\n").unwrap();
    let out = miniform(dir.path(), &["-I", "lib", "i.frm"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("2*a*b"), "{}", text(&out.stdout));
}
