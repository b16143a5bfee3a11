use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{ExprError, Head, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Operator,
    Variable,
    Constant,
    /// Stand-in for an unsupported subtree.
    Placeholder,
}

/// A named symbol with a fixed arity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub name: String,
    pub arity: usize,
    pub kind: TokenKind,
    /// Infix symbol for binary operators (`+`, `^`, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infix: Option<String>,
}

impl Token {
    pub fn operator(name: impl Into<String>, arity: usize) -> Token {
        let name = name.into();
        let infix = Operator::from_name(&name).and_then(Operator::infix_symbol).map(str::to_owned);
        Token { name, arity, kind: TokenKind::Operator, infix }
    }

    pub fn variable(name: impl Into<String>) -> Token {
        Token { name: name.into(), arity: 0, kind: TokenKind::Variable, infix: None }
    }

    pub fn constant(name: impl Into<String>) -> Token {
        Token { name: name.into(), arity: 0, kind: TokenKind::Constant, infix: None }
    }

    pub fn placeholder(name: impl Into<String>) -> Token {
        Token { name: name.into(), arity: 0, kind: TokenKind::Placeholder, infix: None }
    }

    /// Infers a token from its name: known operators keep their arity, numeric
    /// literals become constants and everything else is a variable.
    pub fn infer(name: &str) -> Token {
        if let Some(op) = Operator::from_name(name) {
            Token::operator(name, op.arity())
        } else if name.parse::<f64>().is_ok() {
            Token::constant(name)
        } else {
            Token::variable(name)
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.arity == 0
    }

    /// Tree head carrying this token's name.
    pub fn head(&self) -> Head {
        match self.kind {
            TokenKind::Operator => Head::Op(self.name.clone()),
            TokenKind::Variable => Head::Var(self.name.clone()),
            TokenKind::Constant => Head::Const(self.name.clone()),
            TokenKind::Placeholder => Head::Placeholder(self.name.clone()),
        }
    }
}

/// Precomputed numeric meaning of each token, used by the fast evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Semantics {
    Op(Operator),
    /// Position among the library's variables.
    Var(usize),
    Const(f64),
    Opaque,
}

/// Ordered token vocabulary. Token index `i` is the logit index `i` in every
/// model that speaks this library.
#[derive(Debug, Clone)]
pub struct Library {
    name: String,
    tokens: Vec<Token>,
    index: HashMap<String, usize>,
    semantics: Vec<Semantics>,
    variables: Vec<usize>,
}

impl PartialEq for Library {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.tokens == other.tokens
    }
}

impl Library {
    pub fn new(name: impl Into<String>, tokens: Vec<Token>) -> Result<Library, ExprError> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            if token.name.is_empty() {
                return Err(ExprError::InvalidLibrary("empty token name".into()));
            }
            let terminal_kind = token.kind != TokenKind::Operator;
            if terminal_kind != (token.arity == 0) {
                return Err(ExprError::InvalidLibrary(format!(
                    "token {:?} has kind {:?} but arity {}",
                    token.name, token.kind, token.arity
                )));
            }
            if index.insert(token.name.clone(), i).is_some() {
                return Err(ExprError::InvalidLibrary(format!("duplicate token {:?}", token.name)));
            }
        }
        if !tokens.iter().any(Token::is_terminal) {
            return Err(ExprError::InvalidLibrary("library has no terminal token".into()));
        }
        let mut variables = Vec::new();
        let semantics = tokens
            .iter()
            .enumerate()
            .map(|(i, token)| match token.kind {
                TokenKind::Operator => Operator::from_name(&token.name)
                    .filter(|op| op.arity() == token.arity)
                    .map_or(Semantics::Opaque, Semantics::Op),
                TokenKind::Variable => {
                    variables.push(i);
                    Semantics::Var(variables.len() - 1)
                }
                TokenKind::Constant => token.name.parse::<f64>().map_or(Semantics::Opaque, Semantics::Const),
                TokenKind::Placeholder => Semantics::Opaque,
            })
            .collect();
        Ok(Library { name: name.into(), tokens, index, semantics, variables })
    }

    /// Builds a library from bare names using [`Token::infer`].
    pub fn from_names<S: AsRef<str>>(name: impl Into<String>, names: &[S]) -> Result<Library, ExprError> {
        Library::new(name, names.iter().map(|n| Token::infer(n.as_ref())).collect())
    }

    /// Named libraries shipped with the toolkit.
    ///
    /// `koza1`/`koza2` are the standard symbolic-regression sets over one or two
    /// variables; the `c` variants add the constant `1`; `nguyen1`/`nguyen2`
    /// are the benchmark search libraries over `x` and `x, y`; `full` is a
    /// broad vocabulary for general corpora.
    pub fn builtin(name: &str) -> Option<Library> {
        const KOZA: [&str; 8] = ["add", "sub", "mul", "div", "sin", "cos", "exp", "log"];
        let names: Vec<&str> = match name {
            "koza1" => KOZA.iter().copied().chain(["x1"]).collect(),
            "koza2" => KOZA.iter().copied().chain(["x1", "x2"]).collect(),
            "koza1c" => KOZA.iter().copied().chain(["x1", "1"]).collect(),
            "koza2c" => KOZA.iter().copied().chain(["x1", "x2", "1"]).collect(),
            "nguyen1" => KOZA.iter().copied().chain(["x"]).collect(),
            "nguyen2" => KOZA.iter().copied().chain(["x", "y"]).collect(),
            "full" => vec![
                "add", "sub", "mul", "div", "pow", "neg", "sin", "cos", "tan", "exp", "log", "sqrt", "x1",
                "x2", "x3", "0", "1", "2", "3",
            ],
            _ => return None,
        };
        Some(Library::from_names(name, &names).expect("builtin libraries are valid"))
    }

    pub const BUILTIN_NAMES: [&'static str; 7] =
        ["koza1", "koza2", "koza1c", "koza2c", "nguyen1", "nguyen2", "full"];

    /// A builtin name, or a comma-separated token list whose kinds are
    /// inferred from the names. A list library is named by the list itself,
    /// so writing the name out is enough to rebuild it.
    pub fn from_spec(spec: &str) -> Result<Library, ExprError> {
        if let Some(lib) = Library::builtin(spec) {
            return Ok(lib);
        }
        if !spec.contains(',') {
            return Err(ExprError::InvalidLibrary(format!(
                "{spec:?} is neither a builtin ({}) nor a comma-separated token list",
                Library::BUILTIN_NAMES.join(", ")
            )));
        }
        let tokens = spec.split(',').map(|n| Token::infer(n.trim())).collect();
        let names: Vec<&str> = spec.split(',').map(str::trim).collect();
        Library::new(names.join(","), tokens)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &Token {
        &self.tokens[i]
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn arity(&self, i: usize) -> usize {
        self.tokens[i].arity
    }

    pub fn arities(&self) -> Vec<usize> {
        self.tokens.iter().map(|t| t.arity).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.name.as_str()).collect()
    }

    /// Token indices of the variables, in library order.
    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    pub fn variable_names(&self) -> Vec<&str> {
        self.variables.iter().map(|&i| self.tokens[i].name.as_str()).collect()
    }

    pub fn operator(&self, i: usize) -> Option<Operator> {
        match self.semantics[i] {
            Semantics::Op(op) => Some(op),
            _ => None,
        }
    }

    pub(crate) fn semantics(&self, i: usize) -> Semantics {
        self.semantics[i]
    }

    /// Finds the library token a tree head refers to, checking arity.
    pub fn resolve(&self, head: &Head, n_children: usize) -> Result<usize, ExprError> {
        let name = match head {
            Head::Unsupported { construct, .. } => {
                return Err(ExprError::UnsupportedMarker(construct.clone()))
            }
            other => other.name(),
        };
        let i = self.get(name).ok_or_else(|| ExprError::UnknownToken(name.to_owned()))?;
        if self.tokens[i].arity != n_children {
            return Err(ExprError::ArityMismatch {
                token: name.to_owned(),
                expected: self.tokens[i].arity,
                found: n_children,
            });
        }
        Ok(i)
    }
}
