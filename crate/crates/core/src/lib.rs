//! miniform: a batch symbolic-manipulation kernel for a subset of the FORM language.
//!
//! Programs are sequences of modules. Each module is compiled, then its
//! statements are applied term by term to the active expressions, and the
//! results are sorted into canonical order.

pub mod bracket;
pub mod compiler;
pub mod diag;
pub mod driver;
pub mod engine;
pub mod eval;
pub mod packages;
pub mod pattern;
pub mod preprocess;
pub mod print;
pub mod sort;
pub mod sums;
pub mod symbols;
pub mod term;
pub mod topology;

pub use bracket::{BracketIndex, BracketSet, Brackets, LookupStats};
pub use diag::{Diagnostic, Error, Location};
pub use driver::{run_file, run_source, Report, RunOptions};
pub use engine::{Config, Session, Status};
pub use symbols::{ExprId, SymbolTable};
pub use term::{FunId, IdxId, Poly, Rat, SubTerm, SymId, Symmetry, Term};
