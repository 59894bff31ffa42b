//! Batch driver: preprocess, compile and execute a program module by module.

use std::path::{Path, PathBuf};

use crate::compiler::ModuleCompiler;
use crate::diag::{Diagnostic, Location};
use crate::engine::{Config, Session};
use crate::preprocess::{PpEnv, PpItem, Preprocessor, Terminator};

/// Everything a run needs besides the program text.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub engine: Config,
    pub include_path: Vec<PathBuf>,
    /// Predefined preprocessor variables.
    pub defines: Vec<(String, String)>,
}

impl RunOptions {
    /// Applies a setup file of `<key> <value>` lines; `*` and `#` start comments.
    pub fn apply_setup(&mut self, text: &str) -> Result<(), String> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('*') || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(char::is_whitespace)
                .map(|(k, v)| (k, v.trim()))
                .ok_or_else(|| format!("setup line {}: missing value", n + 1))?;
            let number = || -> Result<usize, String> {
                match value.parse::<usize>() {
                    Ok(v) if v > 0 => Ok(v),
                    _ => Err(format!("setup line {}: {key} needs a positive integer", n + 1)),
                }
            };
            match key.to_ascii_lowercase().as_str() {
                "maxtermsize" => self.engine.max_term_size = number()?,
                "sortbuffer" | "sortcapacity" => self.engine.sort_capacity = Some(number()?),
                "bracketindexcap" | "indexcap" => self.engine.index_cap = number()?,
                "repeatcap" => self.engine.repeat_cap = number()?,
                "chunks" => self.engine.chunks = number()?,
                "spilldir" | "tempdir" => self.engine.spill_dir = Some(PathBuf::from(value)),
                "includepath" | "path" => self.include_path.extend(std::env::split_paths(value)),
                _ => return Err(format!("setup line {}: unknown key {key}", n + 1)),
            }
        }
        Ok(())
    }
}

/// Outcome of a run.
pub struct Report {
    pub stdout: String,
    pub stderr: String,
    /// 0 after a clean `.end`.
    pub status: i32,
    pub session: Session,
}

impl Report {
    /// Diagnostics and summary lines, one per entry.
    pub fn stderr_lines(&self) -> Vec<&str> {
        self.stderr.lines().collect()
    }
}

/// Input lines echoed before the listing is switched off by `#-`.
fn listing(source: &str) -> String {
    let mut out = String::new();
    for line in source.lines() {
        out.push_str("    ");
        out.push_str(line.trim_end());
        out.push('\n');
        if line.trim() == "#-" {
            break;
        }
    }
    out
}

/// Runs program text; `file` names it in diagnostics, `base_dir` resolves includes.
pub fn run_source(source: &str, file: &str, base_dir: &Path, opts: &RunOptions) -> Report {
    let mut env = PpEnv::new();
    env.include_path = opts.include_path.clone();
    for (k, v) in &opts.defines {
        env.define(k, v);
    }
    let mut pp = Preprocessor::new(source, file, env).with_base_dir(base_dir);
    let mut session = Session::new(opts.engine.clone());
    let mut stdout = listing(source);
    let mut errors: Vec<Diagnostic> = Vec::new();
    let mut loop_error = false;
    let mut runtime_error = None;
    let mut ended = false;
    let mut compiler = ModuleCompiler::new();
    loop {
        let item = match pp.next_item(&mut session) {
            Ok(Some(item)) => item,
            Ok(None) => break,
            Err(d) => {
                errors.push(d);
                break;
            }
        };
        match item {
            PpItem::Statement { text, loc, in_loop } => {
                if let Err(e) = session.compile_statement(&mut compiler, &text, &loc) {
                    errors.push(Diagnostic::new(loc, e));
                    if in_loop {
                        loop_error = true;
                        break;
                    }
                }
            }
            PpItem::DollarInit { name, text, loc, in_loop } => {
                if let Err(d) = session.init_dollar(&name, &text, &loc) {
                    errors.push(d);
                    if in_loop {
                        loop_error = true;
                        break;
                    }
                }
            }
            PpItem::Output(s) => {
                stdout.push_str(&s);
                stdout.push('\n');
            }
            PpItem::Terminator { kind, loc } => {
                let module = std::mem::take(&mut compiler).finish();
                let module = match module {
                    Ok(m) => m,
                    Err(e) => {
                        errors.push(Diagnostic::new(loc.clone(), e));
                        Default::default()
                    }
                };
                if matches!(kind, Terminator::Store | Terminator::Clear) {
                    let word = if kind == Terminator::Store { "store" } else { "clear" };
                    errors.push(Diagnostic::new(loc.clone(), format!("Module terminator .{word} is not supported")));
                }
                if errors.is_empty() {
                    if let Err(d) = session.run_module(&module) {
                        stdout.push_str(&session.take_output());
                        runtime_error = Some(d);
                        break;
                    }
                }
                stdout.push_str(&session.take_output());
                if kind == Terminator::End {
                    ended = true;
                    break;
                }
            }
        }
    }
    let mut stderr = String::new();
    for d in &errors {
        stderr.push_str(&d.to_string());
        stderr.push('\n');
    }
    let status = if !errors.is_empty() {
        stderr.push_str(if loop_error { "++++Errors in Loop\n" } else { "++++Errors\n" });
        1
    } else if let Some(d) = runtime_error {
        stderr.push_str(&d.to_string());
        stderr.push('\n');
        1
    } else if !ended {
        stderr.push_str(&Diagnostic::new(Location::new(file, source.lines().count()), "no .end").to_string());
        stderr.push('\n');
        1
    } else {
        0
    };
    Report { stdout, stderr, status, session }
}

/// Reads and runs a program file.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<Report, crate::diag::Error> {
    let source = std::fs::read_to_string(path).map_err(|e| crate::diag::Error::Io { path: path.to_path_buf(), source: e })?;
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok(run_source(&source, &file, &base, opts))
}
