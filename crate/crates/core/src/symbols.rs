//! Declaration tables. Every name used in algebra must be declared here;
//! registries are plain vectors and grow without a configured limit.

use std::collections::HashMap;

use crate::term::{FunId, IdxId, Poly, SymId, Symmetry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExprId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SetId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Sum,
    Count,
    Sig,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuncClass {
    Commuting,
    NonCommuting,
    Tensor,
    Table,
    Builtin(Builtin),
}

/// Sparse table contents keyed by integer index tuples.
#[derive(Clone, Debug, Default)]
pub struct TableDef {
    pub dims: usize,
    pub fill: HashMap<Vec<i64>, Poly>,
}

#[derive(Clone, Debug)]
pub struct FunctionInfo {
    pub name: String,
    pub class: FuncClass,
    pub symmetry: Symmetry,
    pub table: Option<TableDef>,
}

impl FunctionInfo {
    pub fn commuting(&self) -> bool {
        self.class != FuncClass::NonCommuting
    }
}

#[derive(Clone, Debug)]
pub enum SetElement {
    Number(i64),
    Symbol(SymId),
    Index(IdxId),
    Function(FunId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entry {
    Symbol(SymId),
    Index(IdxId),
    Function(FunId),
    Expression(ExprId),
    Set(SetId),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DeclError {
    #[error("{0} has already been declared")]
    Duplicate(String),
    #[error("Illegal name: {0}")]
    IllegalName(String),
}

#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    names: HashMap<String, Entry>,
    symbols: Vec<String>,
    indices: Vec<String>,
    functions: Vec<FunctionInfo>,
    expressions: Vec<String>,
    sets: Vec<(String, Vec<SetElement>)>,
    dollars: Vec<String>,
}

pub const LEVI_CIVITA: &str = "e_";

impl SymbolTable {
    /// A table holding the built-in objects.
    pub fn new() -> Self {
        let mut t = SymbolTable::default();
        let builtins = [
            ("sum_", FuncClass::Builtin(Builtin::Sum)),
            ("count_", FuncClass::Builtin(Builtin::Count)),
            ("sig_", FuncClass::Builtin(Builtin::Sig)),
            ("abs_", FuncClass::Builtin(Builtin::Abs)),
        ];
        for (name, class) in builtins {
            t.add_function(name, class, Symmetry::None).expect("fresh table");
        }
        t.add_function(LEVI_CIVITA, FuncClass::Tensor, Symmetry::Antisymmetric).expect("fresh table");
        t
    }

    fn claim(&mut self, name: &str, entry: Entry) -> Result<(), DeclError> {
        if name.is_empty() {
            return Err(DeclError::IllegalName(name.to_string()));
        }
        if self.names.contains_key(name) {
            return Err(DeclError::Duplicate(name.to_string()));
        }
        self.names.insert(name.to_string(), entry);
        Ok(())
    }

    pub fn add_symbol(&mut self, name: &str) -> Result<SymId, DeclError> {
        let id = SymId(self.symbols.len() as u32);
        self.claim(name, Entry::Symbol(id))?;
        self.symbols.push(name.to_string());
        Ok(id)
    }

    pub fn add_index(&mut self, name: &str) -> Result<IdxId, DeclError> {
        let id = IdxId(self.indices.len() as u32);
        self.claim(name, Entry::Index(id))?;
        self.indices.push(name.to_string());
        Ok(id)
    }

    pub fn add_function(&mut self, name: &str, class: FuncClass, symmetry: Symmetry) -> Result<FunId, DeclError> {
        let id = FunId(self.functions.len() as u32);
        self.claim(name, Entry::Function(id))?;
        let table = (class == FuncClass::Table).then(TableDef::default);
        self.functions.push(FunctionInfo { name: name.to_string(), class, symmetry, table });
        Ok(id)
    }

    pub fn add_table(&mut self, name: &str, dims: usize, symmetry: Symmetry) -> Result<FunId, DeclError> {
        let id = self.add_function(name, FuncClass::Table, symmetry)?;
        if let Some(t) = self.functions[id.0 as usize].table.as_mut() {
            t.dims = dims;
        }
        Ok(id)
    }

    pub fn add_expression(&mut self, name: &str) -> Result<ExprId, DeclError> {
        let id = ExprId(self.expressions.len() as u32);
        self.claim(name, Entry::Expression(id))?;
        self.expressions.push(name.to_string());
        Ok(id)
    }

    pub fn add_set(&mut self, name: &str, elements: Vec<SetElement>) -> Result<SetId, DeclError> {
        let id = SetId(self.sets.len() as u32);
        self.claim(name, Entry::Set(id))?;
        self.sets.push((name.to_string(), elements));
        Ok(id)
    }

    /// Registers a `$`-variable name; repeated registration is a no-op.
    pub fn note_dollar(&mut self, name: &str) {
        if !self.dollars.iter().any(|d| d == name) {
            self.dollars.push(name.to_string());
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Entry> {
        self.names.get(name).copied()
    }

    pub fn symbol_name(&self, id: SymId) -> &str {
        &self.symbols[id.0 as usize]
    }

    pub fn index_name(&self, id: IdxId) -> &str {
        &self.indices[id.0 as usize]
    }

    pub fn function(&self, id: FunId) -> &FunctionInfo {
        &self.functions[id.0 as usize]
    }

    pub fn function_mut(&mut self, id: FunId) -> &mut FunctionInfo {
        &mut self.functions[id.0 as usize]
    }

    pub fn expression_name(&self, id: ExprId) -> &str {
        &self.expressions[id.0 as usize]
    }

    pub fn set(&self, id: SetId) -> &[SetElement] {
        &self.sets[id.0 as usize].1
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn function_count(&self) -> usize {
        self.functions.len()
    }

    pub fn expression_count(&self) -> usize {
        self.expressions.len()
    }

    pub fn builtin_id(&self, name: &str) -> FunId {
        match self.lookup(name) {
            Some(Entry::Function(f)) => f,
            _ => unreachable!("builtin {name} is always declared"),
        }
    }

    /// Human-readable dump of the declared names, one class per line.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        let line = |out: &mut String, label: &str, names: Vec<&str>| {
            if !names.is_empty() {
                out.push_str(&format!(" {label}\n   {}\n", names.join(" ")));
            }
        };
        line(&mut out, "Symbols", self.symbols.iter().map(String::as_str).collect());
        line(&mut out, "Indices", self.indices.iter().map(String::as_str).collect());
        line(
            &mut out,
            "Functions",
            self.functions
                .iter()
                .filter(|f| !matches!(f.class, FuncClass::Builtin(_)) && f.name != LEVI_CIVITA)
                .map(|f| f.name.as_str())
                .collect(),
        );
        line(&mut out, "Expressions", self.expressions.iter().map(String::as_str).collect());
        line(&mut out, "Dollar variables", self.dollars.iter().map(String::as_str).collect());
        out
    }
}
