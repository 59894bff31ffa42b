//! Character-level macro processor.
//!
//! Raw program text goes in, a stream of statement texts comes out. The
//! processor is pull-driven: the driver asks for one item at a time, so a
//! `$`-variable set by a module is visible to the text of the next one.

mod arith;
mod sequence;

use std::collections::{HashMap, VecDeque};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use num::{BigInt, One, Signed, Zero};

pub use arith::{pp_arith, ArithError};
pub use sequence::{expand_dots, expand_sequence, SequenceError};

use crate::diag::{Diagnostic, Location};
use crate::packages;

/// Nesting limit for backquote interpolation.
pub const MAX_INTERPOLATION_DEPTH: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PpError {
    #[error("Undefined preprocessor variable {0}")]
    Undefined(String),
    #[error("Preprocessor variable {0} is not numeric")]
    NotNumeric(String),
    #[error("Preprocessor variables nested deeper than {MAX_INTERPOLATION_DEPTH} levels")]
    TooDeep,
    #[error("{0}")]
    Arith(#[from] ArithError),
    #[error("{0}")]
    Sequence(#[from] SequenceError),
    #[error("{0}")]
    Syntax(String),
}

/// Access to `$`-variable text for `` `$name' `` interpolation.
pub trait DollarSource {
    fn dollar_text(&self, name: &str) -> Option<String>;
    /// Adds `delta` to a numeric `$`-variable, returning the text before.
    fn dollar_increment(&mut self, name: &str, delta: i64) -> Option<String>;
}

/// A dollar source with no variables.
pub struct NoDollars;

impl DollarSource for NoDollars {
    fn dollar_text(&self, _: &str) -> Option<String> {
        None
    }
    fn dollar_increment(&mut self, _: &str, _: i64) -> Option<String> {
        None
    }
}

#[derive(Clone, Debug)]
struct Procedure {
    params: Vec<String>,
    lines: Rc<Vec<(usize, String)>>,
    file: String,
}

/// Preprocessor state: definitions, procedures and the include path.
#[derive(Clone, Debug, Default)]
pub struct PpEnv {
    pub definitions: HashMap<String, String>,
    procedures: HashMap<String, Procedure>,
    pub include_path: Vec<PathBuf>,
}

impl PpEnv {
    pub fn new() -> Self {
        PpEnv::default()
    }

    pub fn define(&mut self, name: &str, value: &str) {
        self.definitions.insert(name.to_string(), value.to_string());
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.definitions.get(name).map(String::as_str)
    }
}

fn postfix_delta(name: &str) -> (&str, i64) {
    if let Some(n) = name.strip_suffix("++") {
        (n, 1)
    } else if let Some(n) = name.strip_suffix("--") {
        (n, -1)
    } else {
        (name, 0)
    }
}

fn lookup_var(name: &str, env: &mut PpEnv, dollars: &mut dyn DollarSource) -> Result<String, PpError> {
    let (base, delta) = postfix_delta(name);
    if base.starts_with('$') {
        if delta != 0 {
            return dollars.dollar_increment(base, delta).ok_or_else(|| PpError::Undefined(base.to_string()));
        }
        return dollars.dollar_text(base).ok_or_else(|| PpError::Undefined(base.to_string()));
    }
    let current = env.get(base).ok_or_else(|| PpError::Undefined(base.to_string()))?.to_string();
    if delta != 0 {
        let v: BigInt = current.trim().parse().map_err(|_| PpError::NotNumeric(base.to_string()))?;
        env.define(base, &(v + delta).to_string());
    }
    Ok(current)
}

/// Replaces `` `name' `` pairs, innermost first, until none remain.
pub fn interpolate(text: &str, env: &mut PpEnv, dollars: &mut dyn DollarSource) -> Result<String, PpError> {
    let mut s = text.to_string();
    for _ in 0..=MAX_INTERPOLATION_DEPTH {
        if !s.contains('`') {
            return Ok(s);
        }
        let mut out = String::with_capacity(s.len());
        let mut open: Option<usize> = None;
        let mut replaced = false;
        let mut copied_to = 0;
        for (i, c) in s.char_indices() {
            match c {
                '`' => open = Some(i),
                '\'' => {
                    if let Some(b) = open.take() {
                        out.push_str(&s[copied_to..b]);
                        out.push_str(&lookup_var(&s[b + 1..i], env, dollars)?);
                        copied_to = i + 1;
                        replaced = true;
                    }
                }
                _ => {}
            }
        }
        out.push_str(&s[copied_to..]);
        if !replaced {
            return Ok(out);
        }
        s = out;
    }
    Err(PpError::TooDeep)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminator {
    Sort,
    Global,
    Store,
    Clear,
    End,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PpItem {
    Statement { text: String, loc: Location, in_loop: bool },
    /// `#$name = value;`, evaluated once when reached.
    DollarInit { name: String, text: String, loc: Location, in_loop: bool },
    Terminator { kind: Terminator, loc: Location },
    /// Text for standard output (`#write` without a file, `#message`).
    Output(String),
}

enum LoopValues {
    Range { next: BigInt, hi: BigInt, step: BigInt },
    List { items: Vec<String>, next: usize },
}

enum FrameKind {
    File,
    Procedure { saved: Vec<(String, Option<String>)> },
    Loop { var: String, saved: Option<String>, values: LoopValues },
}

struct Frame {
    file: String,
    lines: Rc<Vec<(usize, String)>>,
    pos: usize,
    kind: FrameKind,
}

struct Cond {
    parent_active: bool,
    active: bool,
    taken: bool,
}

pub struct Preprocessor {
    env: PpEnv,
    frames: Vec<Frame>,
    conds: Vec<Cond>,
    inactive_do_depth: usize,
    pending: VecDeque<PpItem>,
    buffer: String,
    buffer_loc: Option<(Location, bool)>,
    last_loc: Location,
    base_dir: PathBuf,
}

fn number_lines(text: &str) -> Rc<Vec<(usize, String)>> {
    Rc::new(text.lines().enumerate().map(|(i, l)| (i + 1, l.to_string())).collect())
}

fn split_top_level(s: &str, sep: char) -> Vec<String> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut in_str = false;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '(' | '{' | '[' if !in_str => depth += 1,
            ')' | '}' | ']' if !in_str => depth -= 1,
            _ => {}
        }
        if c == sep && depth == 0 && !in_str {
            parts.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    parts.push(cur);
    parts
}

fn directive_word(line: &str) -> (&str, &str) {
    let body = &line[1..];
    if let Some(rest) = body.strip_prefix('$') {
        return ("$", rest);
    }
    let end = body
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(body.len());
    if end == 0 {
        return (&body[..body.len().min(1)], &body[body.len().min(1)..]);
    }
    (&body[..end], &body[end..])
}

fn unquote(s: &str) -> &str {
    let t = s.trim();
    if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') {
        &t[1..t.len() - 1]
    } else {
        t
    }
}

impl Preprocessor {
    /// A preprocessor for `source`, reported under the name `file`.
    pub fn new(source: &str, file: &str, env: PpEnv) -> Self {
        Preprocessor {
            env,
            frames: vec![Frame { file: file.to_string(), lines: number_lines(source), pos: 0, kind: FrameKind::File }],
            conds: Vec::new(),
            inactive_do_depth: 0,
            pending: VecDeque::new(),
            buffer: String::new(),
            buffer_loc: None,
            last_loc: Location::new(file, 0),
            base_dir: PathBuf::from("."),
        }
    }

    /// Directory searched first for relative includes and `.prc` files.
    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn env(&self) -> &PpEnv {
        &self.env
    }

    fn active(&self) -> bool {
        self.conds.last().is_none_or(|c| c.active)
    }

    fn in_loop(&self) -> bool {
        self.frames.iter().any(|f| matches!(f.kind, FrameKind::Loop { .. }))
    }

    fn err(&self, loc: &Location, e: impl ToString) -> Diagnostic {
        Diagnostic::new(loc.clone(), e.to_string())
    }

    /// Next item of the statement stream, `None` at end of input.
    pub fn next_item(&mut self, dollars: &mut dyn DollarSource) -> Result<Option<PpItem>, Diagnostic> {
        loop {
            if let Some(item) = self.pending.pop_front() {
                return Ok(Some(item));
            }
            match self.next_line()? {
                Some((loc, line)) => {
                    self.last_loc = loc.clone();
                    self.process_line(&loc, &line, dollars)?;
                }
                None => {
                    if !self.conds.is_empty() {
                        return Err(self.err(&self.last_loc, "Missing #endif"));
                    }
                    if !self.buffer.trim().is_empty() {
                        let (loc, in_loop) = self.buffer_loc.take().unwrap_or((self.last_loc.clone(), false));
                        let text = std::mem::take(&mut self.buffer);
                        self.emit_statement(text, loc, in_loop)?;
                        continue;
                    }
                    return Ok(None);
                }
            }
        }
    }

    fn next_line(&mut self) -> Result<Option<(Location, String)>, Diagnostic> {
        loop {
            let Some(frame) = self.frames.last_mut() else { return Ok(None) };
            if frame.pos < frame.lines.len() {
                let (n, l) = &frame.lines[frame.pos];
                frame.pos += 1;
                return Ok(Some((Location::new(frame.file.clone(), *n), l.clone())));
            }
            let mut frame = self.frames.pop().expect("nonempty");
            match &mut frame.kind {
                FrameKind::File => {}
                FrameKind::Procedure { saved } => {
                    for (name, old) in saved.drain(..) {
                        match old {
                            Some(v) => self.env.define(&name, &v),
                            None => {
                                self.env.definitions.remove(&name);
                            }
                        }
                    }
                }
                FrameKind::Loop { var, saved, values } => {
                    let next = match values {
                        LoopValues::Range { next, hi, step } => {
                            let go = if step.is_positive() { *next <= *hi } else { *next >= *hi };
                            if go {
                                let v = next.clone();
                                *next += &*step;
                                Some(v.to_string())
                            } else {
                                None
                            }
                        }
                        LoopValues::List { items, next } => {
                            let v = items.get(*next).cloned();
                            *next += 1;
                            v
                        }
                    };
                    match next {
                        Some(v) => {
                            self.env.define(var, &v);
                            frame.pos = 0;
                            self.frames.push(frame);
                        }
                        None => match saved.take() {
                            Some(old) => self.env.define(var, &old),
                            None => {
                                self.env.definitions.remove(var.as_str());
                            }
                        },
                    }
                }
            }
        }
    }

    fn process_line(&mut self, loc: &Location, line: &str, dollars: &mut dyn DollarSource) -> Result<(), Diagnostic> {
        let trimmed = line.trim_start();
        if trimmed.starts_with('#') {
            return self.directive(loc, trimmed.trim_end(), dollars);
        }
        if !self.active() {
            return Ok(());
        }
        if line.starts_with('*') || (trimmed.starts_with('*') && self.buffer.trim().is_empty()) {
            return Ok(());
        }
        let text = interpolate(line, &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
        let t = text.trim();
        if t.starts_with('.') && t[1..].starts_with(|c: char| c.is_ascii_alphabetic()) && self.buffer.trim().is_empty() {
            let word: String = t[1..].chars().take_while(|c| c.is_ascii_alphabetic()).collect();
            let kind = match word.to_ascii_lowercase().as_str() {
                "sort" => Terminator::Sort,
                "global" => Terminator::Global,
                "store" => Terminator::Store,
                "clear" => Terminator::Clear,
                "end" => Terminator::End,
                _ => return Err(self.err(loc, format!("Illegal module terminator .{word}"))),
            };
            self.buffer.clear();
            self.pending.push_back(PpItem::Terminator { kind, loc: loc.clone() });
            return Ok(());
        }
        self.append_text(loc, &text)
    }

    fn append_text(&mut self, loc: &Location, text: &str) -> Result<(), Diagnostic> {
        let mut in_str = false;
        let mut start = 0;
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'"' => in_str = !in_str,
                b';' if !in_str => {
                    let piece = &text[start..i];
                    if self.buffer_loc.is_none() && !piece.trim().is_empty() {
                        self.buffer_loc = Some((loc.clone(), self.in_loop()));
                    }
                    self.buffer.push_str(piece);
                    let stmt = std::mem::take(&mut self.buffer);
                    let (sloc, in_loop) = self.buffer_loc.take().unwrap_or((loc.clone(), self.in_loop()));
                    self.emit_statement(stmt, sloc, in_loop)?;
                    start = i + 1;
                    if text[start..].trim_start().starts_with('*') {
                        return Ok(());
                    }
                }
                _ => {}
            }
            i += 1;
        }
        let rest = &text[start..];
        if !rest.trim().is_empty() {
            if self.buffer_loc.is_none() {
                self.buffer_loc = Some((loc.clone(), self.in_loop()));
            }
            self.buffer.push_str(rest);
            self.buffer.push('\n');
        }
        Ok(())
    }

    fn emit_statement(&mut self, text: String, loc: Location, in_loop: bool) -> Result<(), Diagnostic> {
        let t = text.trim();
        if t.is_empty() {
            return Ok(());
        }
        let expanded = expand_dots(t).map_err(|e| self.err(&loc, e))?;
        self.pending.push_back(PpItem::Statement { text: expanded, loc, in_loop });
        Ok(())
    }

    fn directive(&mut self, loc: &Location, line: &str, dollars: &mut dyn DollarSource) -> Result<(), Diagnostic> {
        let (word, rest) = directive_word(line);
        let lower = word.to_ascii_lowercase();
        // Nesting bookkeeping happens in skipped regions too.
        match lower.as_str() {
            "if" | "ifdef" | "ifndef" => {
                let parent = self.active();
                let value = if parent {
                    match lower.as_str() {
                        "if" => self.eval_condition(loc, rest, dollars)?,
                        "ifdef" => self.is_defined(loc, rest, dollars)?,
                        _ => !self.is_defined(loc, rest, dollars)?,
                    }
                } else {
                    false
                };
                self.conds.push(Cond { parent_active: parent, active: parent && value, taken: value });
                return Ok(());
            }
            "elseif" => {
                let (parent, taken) = match self.conds.last() {
                    Some(c) => (c.parent_active, c.taken),
                    None => return Err(self.err(loc, "#elseif without #if")),
                };
                let value = parent && !taken && self.eval_condition(loc, rest, dollars)?;
                let c = self.conds.last_mut().expect("checked");
                c.active = value;
                c.taken |= value;
                return Ok(());
            }
            "else" => {
                let c = self.conds.last_mut().ok_or_else(|| Diagnostic::new(loc.clone(), "#else without #if"))?;
                c.active = c.parent_active && !c.taken;
                c.taken = true;
                return Ok(());
            }
            "endif" => {
                if self.conds.pop().is_none() {
                    return Err(self.err(loc, "#endif without #if"));
                }
                return Ok(());
            }
            _ => {}
        }
        if !self.active() {
            match lower.as_str() {
                "do" => self.inactive_do_depth += 1,
                "enddo" => self.inactive_do_depth = self.inactive_do_depth.saturating_sub(1),
                "procedure" => {
                    self.collect_block(loc, "procedure", "endprocedure")?;
                }
                _ => {}
            }
            return Ok(());
        }
        match lower.as_str() {
            "-" | "+" | ":" => Ok(()),
            "define" | "redefine" => {
                let rest = rest.trim();
                let (name, value) = match rest.find(char::is_whitespace) {
                    Some(p) => (&rest[..p], unquote(&rest[p..])),
                    None => (rest, ""),
                };
                let name = interpolate(name, &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
                if name.is_empty() {
                    return Err(self.err(loc, "#define without a name"));
                }
                self.env.define(&name, value);
                Ok(())
            }
            "undefine" => {
                let name = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
                self.env.definitions.remove(&name);
                Ok(())
            }
            "do" => self.start_loop(loc, rest, dollars),
            "enddo" => Err(self.err(loc, "#enddo without #do")),
            "procedure" => {
                let header = rest.trim().to_string();
                let body = self.collect_block(loc, "procedure", "endprocedure")?;
                let (name, params) = parse_call(&header);
                self.env.procedures.insert(name, Procedure { params, lines: Rc::new(body), file: loc.file.clone() });
                Ok(())
            }
            "endprocedure" => Err(self.err(loc, "#endprocedure without #procedure")),
            "call" => {
                let text = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
                self.call(loc, &text)
            }
            "include" => {
                let text = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
                self.include(loc, &text)
            }
            "$" => {
                let text = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
                let text = text.trim().trim_end_matches(';');
                let eq = text.find('=').ok_or_else(|| self.err(loc, "Illegal #$ assignment"))?;
                let name = format!("${}", text[..eq].trim());
                let value = expand_dots(text[eq + 1..].trim()).map_err(|e| self.err(loc, e))?;
                self.pending.push_back(PpItem::DollarInit { name, text: value, loc: loc.clone(), in_loop: self.in_loop() });
                Ok(())
            }
            "write" => {
                let text = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
                self.write(loc, &text, dollars)
            }
            "message" => {
                let text = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
                self.pending.push_back(PpItem::Output(format!("~~~{}", unquote(&text))));
                Ok(())
            }
            _ => Err(self.err(loc, format!("Unknown preprocessor instruction #{word}"))),
        }
    }

    fn is_defined(&mut self, loc: &Location, rest: &str, dollars: &mut dyn DollarSource) -> Result<bool, Diagnostic> {
        let arg = rest.trim();
        let inner = if arg.len() >= 2 && arg.starts_with('`') && arg.ends_with('\'') { &arg[1..arg.len() - 1] } else { arg };
        let name = interpolate(inner, &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
        let name = name.trim();
        Ok(if name.starts_with('$') { dollars.dollar_text(name).is_some() } else { self.env.get(name).is_some() })
    }

    fn eval_condition(&mut self, loc: &Location, rest: &str, dollars: &mut dyn DollarSource) -> Result<bool, Diagnostic> {
        let text = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
        let text = text.trim();
        let text = if text.starts_with('(') && text.ends_with(')') { &text[1..text.len() - 1] } else { text };
        eval_pp_condition(text).map_err(|e| self.err(loc, e))
    }

    /// Reads raw lines up to the matching end directive from the current frame.
    fn collect_block(&mut self, loc: &Location, open: &str, close: &str) -> Result<Vec<(usize, String)>, Diagnostic> {
        let frame = self.frames.last_mut().expect("directive comes from a frame");
        let mut depth = 0usize;
        let mut body = Vec::new();
        while frame.pos < frame.lines.len() {
            let (n, l) = frame.lines[frame.pos].clone();
            frame.pos += 1;
            let t = l.trim_start();
            if t.starts_with('#') {
                let (w, _) = directive_word(t.trim_end());
                let w = w.to_ascii_lowercase();
                if w == open {
                    depth += 1;
                } else if w == close {
                    if depth == 0 {
                        return Ok(body);
                    }
                    depth -= 1;
                }
            }
            body.push((n, l));
        }
        Err(Diagnostic::new(loc.clone(), format!("Missing #{close}")))
    }

    fn start_loop(&mut self, loc: &Location, rest: &str, dollars: &mut dyn DollarSource) -> Result<(), Diagnostic> {
        let header = interpolate(rest.trim(), &mut self.env, dollars).map_err(|e| self.err(loc, e))?;
        let body = self.collect_block(loc, "do", "enddo")?;
        let eq = header.find('=').ok_or_else(|| self.err(loc, "Illegal #do syntax"))?;
        let var = header[..eq].trim().to_string();
        let spec = header[eq + 1..].trim();
        let mut values = if spec.starts_with('{') && spec.ends_with('}') {
            let items = split_top_level(&spec[1..spec.len() - 1], ',').into_iter().map(|s| s.trim().to_string()).collect();
            LoopValues::List { items, next: 0 }
        } else {
            let parts = split_top_level(spec, ',');
            if parts.len() < 2 || parts.len() > 3 {
                return Err(self.err(loc, "Illegal #do bounds"));
            }
            let num = |s: &str| pp_arith(s.trim()).map_err(|e| Diagnostic::new(loc.clone(), e.to_string()));
            let lo = num(&parts[0])?;
            let hi = num(&parts[1])?;
            let step = if parts.len() == 3 { num(&parts[2])? } else { BigInt::one() };
            if step.is_zero() {
                return Err(self.err(loc, "Zero step in #do"));
            }
            LoopValues::Range { next: lo, hi, step }
        };
        let first = match &mut values {
            LoopValues::Range { next, hi, step } => {
                let go = if step.is_positive() { *next <= *hi } else { *next >= *hi };
                go.then(|| {
                    let v = next.clone();
                    *next += &*step;
                    v.to_string()
                })
            }
            LoopValues::List { items, next } => {
                *next = 1;
                items.first().cloned()
            }
        };
        let Some(first) = first else { return Ok(()) };
        let saved = self.env.get(&var).map(str::to_string);
        self.env.define(&var, &first);
        self.frames.push(Frame {
            file: loc.file.clone(),
            lines: Rc::new(body),
            pos: 0,
            kind: FrameKind::Loop { var, saved, values },
        });
        Ok(())
    }

    fn resolve_file(&self, name: &str) -> Option<(String, String)> {
        let candidates = std::iter::once(self.base_dir.clone()).chain(self.env.include_path.iter().cloned());
        for dir in candidates {
            let p = dir.join(name);
            if let Ok(text) = std::fs::read_to_string(&p) {
                let shown = Path::new(name).file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
                return Some((shown, text));
            }
        }
        packages::lookup(name).map(|text| (name.to_string(), text.to_string()))
    }

    fn include(&mut self, loc: &Location, arg: &str) -> Result<(), Diagnostic> {
        let name = arg.trim().trim_matches(|c| c == '<' || c == '>' || c == '"').trim();
        let name = name.split_whitespace().next().unwrap_or("");
        let (file, text) = self.resolve_file(name).ok_or_else(|| self.err(loc, format!("Could not open file {name}")))?;
        self.frames.push(Frame { file, lines: number_lines(&text), pos: 0, kind: FrameKind::File });
        Ok(())
    }

    fn call(&mut self, loc: &Location, text: &str) -> Result<(), Diagnostic> {
        let (name, args) = parse_call(text);
        if !self.env.procedures.contains_key(&name) {
            self.load_procedure_file(loc, &name)?;
        }
        let proc_ = self.env.procedures.get(&name).cloned().ok_or_else(|| self.err(loc, format!("Could not find procedure {name}")))?;
        if args.len() != proc_.params.len() && !(args.is_empty() && proc_.params.is_empty()) {
            return Err(self.err(loc, format!("Wrong number of arguments in call of {name}")));
        }
        let mut saved = Vec::new();
        for (p, a) in proc_.params.iter().zip(&args) {
            saved.push((p.clone(), self.env.get(p).map(str::to_string)));
            self.env.define(p, a);
        }
        self.frames.push(Frame { file: proc_.file.clone(), lines: proc_.lines.clone(), pos: 0, kind: FrameKind::Procedure { saved } });
        Ok(())
    }

    fn load_procedure_file(&mut self, loc: &Location, name: &str) -> Result<(), Diagnostic> {
        let file_name = format!("{name}.prc");
        let (file, text) =
            self.resolve_file(&file_name).ok_or_else(|| self.err(loc, format!("Could not open file {file_name}")))?;
        let lines = number_lines(&text);
        let mut i = 0;
        while i < lines.len() {
            let t = lines[i].1.trim();
            if t.starts_with('#') && directive_word(t).0.eq_ignore_ascii_case("procedure") {
                let (pname, params) = parse_call(directive_word(t).1.trim());
                let mut body = Vec::new();
                i += 1;
                while i < lines.len() && !directive_word(lines[i].1.trim()).0.eq_ignore_ascii_case("endprocedure") {
                    body.push(lines[i].clone());
                    i += 1;
                }
                self.env.procedures.insert(pname, Procedure { params, lines: Rc::new(body), file: file.clone() });
            }
            i += 1;
        }
        Ok(())
    }

    fn write(&mut self, loc: &Location, text: &str, dollars: &mut dyn DollarSource) -> Result<(), Diagnostic> {
        let mut t = text.trim();
        let mut target = None;
        if t.starts_with('<') {
            let close = t.find('>').ok_or_else(|| self.err(loc, "Illegal #write target"))?;
            target = Some(t[1..close].trim().to_string());
            t = t[close + 1..].trim();
        }
        let parts = split_top_level(t, ',');
        let fmt = parts.first().map(|s| unquote(s).to_string()).unwrap_or_default();
        let args: Vec<String> = parts.iter().skip(1).map(|s| s.trim().to_string()).collect();
        let line = format_write(&fmt, &args, dollars).map_err(|e| self.err(loc, e))?;
        match target {
            Some(path) => {
                let p = if Path::new(&path).is_absolute() { PathBuf::from(&path) } else { self.base_dir.join(&path) };
                let mut f = OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(&p)
                    .map_err(|e| self.err(loc, format!("Could not write to {path}: {e}")))?;
                writeln!(f, "{line}").map_err(|e| self.err(loc, format!("Could not write to {path}: {e}")))?;
            }
            None => self.pending.push_back(PpItem::Output(line)),
        }
        Ok(())
    }
}

/// `name(a,b)` or `name` into the name and its argument texts.
fn parse_call(text: &str) -> (String, Vec<String>) {
    let t = text.trim().trim_end_matches(';');
    match t.find('(') {
        Some(p) if t.ends_with(')') => {
            let inner = &t[p + 1..t.len() - 1];
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                split_top_level(inner, ',').into_iter().map(|s| s.trim().to_string()).collect()
            };
            (t[..p].trim().to_string(), args)
        }
        _ => (t.to_string(), Vec::new()),
    }
}

/// printf-like formatting for `#write`: `%s` text argument, `%$` the
/// contents of a `$`-variable, `%%` and `\n`.
pub fn format_write(fmt: &str, args: &[String], dollars: &dyn DollarSource) -> Result<String, PpError> {
    let mut out = String::new();
    let mut it = fmt.chars().peekable();
    let mut next_arg = args.iter();
    while let Some(c) = it.next() {
        match c {
            '%' => match it.next() {
                Some('s') => out.push_str(unquote(next_arg.next().map(String::as_str).unwrap_or(""))),
                Some('$') => {
                    let name = next_arg.next().ok_or_else(|| PpError::Syntax("Missing argument for %$".into()))?;
                    out.push_str(&dollars.dollar_text(name).ok_or_else(|| PpError::Undefined(name.clone()))?);
                }
                Some('%') => out.push('%'),
                Some(other) => return Err(PpError::Syntax(format!("Unknown format directive %{other}"))),
                None => out.push('%'),
            },
            '\\' if it.peek() == Some(&'n') => {
                it.next();
                out.push('\n');
            }
            _ => out.push(c),
        }
    }
    Ok(out)
}

fn eval_pp_condition(text: &str) -> Result<bool, PpError> {
    let ors = split_operator(text, "||");
    if ors.len() > 1 {
        for part in ors {
            if eval_pp_condition(part)? {
                return Ok(true);
            }
        }
        return Ok(false);
    }
    let ands = split_operator(text, "&&");
    if ands.len() > 1 {
        for part in ands {
            if !eval_pp_condition(part)? {
                return Ok(false);
            }
        }
        return Ok(true);
    }
    let t = text.trim();
    let t = if t.starts_with('(') && t.ends_with(')') { &t[1..t.len() - 1] } else { t };
    for op in ["==", "!=", "<=", ">=", "<", ">", "="] {
        if let Some(p) = t.find(op) {
            let (l, r) = (t[..p].trim(), t[p + op.len()..].trim());
            return match (pp_arith(l), pp_arith(r)) {
                (Ok(a), Ok(b)) => Ok(match op {
                    "==" | "=" => a == b,
                    "!=" => a != b,
                    "<=" => a <= b,
                    ">=" => a >= b,
                    "<" => a < b,
                    _ => a > b,
                }),
                _ => match op {
                    "==" | "=" => Ok(unquote(l) == unquote(r)),
                    "!=" => Ok(unquote(l) != unquote(r)),
                    _ => Err(PpError::Syntax(format!("Illegal comparison in #if: {t}"))),
                },
            };
        }
    }
    Ok(!pp_arith(t)?.is_zero())
}

fn split_operator<'a>(text: &'a str, op: &str) -> Vec<&'a str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let b = text.as_bytes();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            _ if depth == 0 && text[i..].starts_with(op) => {
                parts.push(&text[start..i]);
                i += op.len();
                start = i;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    parts.push(&text[start..]);
    parts
}

/// Runs the preprocessor to completion, collecting statement texts. Useful
/// for programs whose text does not depend on runtime `$`-values.
pub fn preprocess(source: &str, file: &str, env: PpEnv) -> Result<Vec<PpItem>, Diagnostic> {
    let mut pp = Preprocessor::new(source, file, env);
    let mut out = Vec::new();
    while let Some(item) = pp.next_item(&mut NoDollars)? {
        out.push(item);
    }
    Ok(out)
}
