use std::collections::HashMap;
use std::fmt;

use super::{Eval, EvalError, Operator};
use crate::Scalar;

/// What a tree node is. Names are library-independent; a tree is checked
/// against a [`super::Library`] only when it is encoded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Head {
    Op(String),
    Var(String),
    /// Numeric literal, stored as its token name.
    Const(String),
    Placeholder(String),
    /// A construct outside the supported grammar, kept in place with its operands.
    Unsupported {
        construct: String,
        offset: usize,
    },
}

impl Head {
    pub fn name(&self) -> &str {
        match self {
            Head::Op(n) | Head::Var(n) | Head::Const(n) | Head::Placeholder(n) => n,
            Head::Unsupported { construct, .. } => construct,
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, Head::Unsupported { .. })
    }
}

/// Algebraic expression tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExprTree {
    pub head: Head,
    pub children: Vec<ExprTree>,
}

impl ExprTree {
    pub fn leaf(head: Head) -> ExprTree {
        ExprTree { head, children: Vec::new() }
    }

    pub fn var(name: impl Into<String>) -> ExprTree {
        ExprTree::leaf(Head::Var(name.into()))
    }

    pub fn constant(name: impl Into<String>) -> ExprTree {
        ExprTree::leaf(Head::Const(name.into()))
    }

    /// Constant with a canonical name derived from its value.
    pub fn number(value: f64) -> ExprTree {
        ExprTree::constant(format!("{value}"))
    }

    pub fn op(name: impl Into<String>, children: Vec<ExprTree>) -> ExprTree {
        ExprTree { head: Head::Op(name.into()), children }
    }

    pub fn unary(name: impl Into<String>, a: ExprTree) -> ExprTree {
        ExprTree::op(name, vec![a])
    }

    pub fn binary(name: impl Into<String>, a: ExprTree, b: ExprTree) -> ExprTree {
        ExprTree::op(name, vec![a, b])
    }

    pub fn unsupported(construct: impl Into<String>, offset: usize, children: Vec<ExprTree>) -> ExprTree {
        ExprTree { head: Head::Unsupported { construct: construct.into(), offset }, children }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ExprTree::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(ExprTree::depth).max().unwrap_or(0)
    }

    pub fn contains_unsupported(&self) -> bool {
        self.head.is_unsupported() || self.children.iter().any(ExprTree::contains_unsupported)
    }

    /// Nodes in pre-order.
    pub fn preorder(&self) -> Vec<&ExprTree> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node);
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Distinct variable names in first-appearance (pre-order) order.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for node in self.preorder() {
            if let Head::Var(name) = &node.head {
                if !seen.contains(&name.as_str()) {
                    seen.push(name.as_str());
                }
            }
        }
        seen
    }

    /// Renames variables through `map`; unmapped variables are kept.
    pub fn rename_variables(&self, map: &HashMap<String, String>) -> ExprTree {
        let head = match &self.head {
            Head::Var(name) => Head::Var(map.get(name).cloned().unwrap_or_else(|| name.clone())),
            other => other.clone(),
        };
        ExprTree { head, children: self.children.iter().map(|c| c.rename_variables(map)).collect() }
    }

    /// IEEE evaluation. Any domain error or non-finite intermediate yields
    /// [`Eval::Invalid`].
    pub fn evaluate<T: Scalar>(&self, bindings: &HashMap<String, T>) -> Result<Eval<T>, EvalError> {
        let mut args = Vec::with_capacity(self.children.len());
        for child in &self.children {
            match child.evaluate(bindings)? {
                Eval::Value(v) => args.push(v),
                Eval::Invalid => return Ok(Eval::Invalid),
            }
        }
        let value = match &self.head {
            Head::Var(name) => *bindings.get(name).ok_or_else(|| EvalError::UnboundVariable(name.clone()))?,
            Head::Const(name) => {
                T::of(name.parse::<f64>().map_err(|_| EvalError::Unevaluable(name.clone()))?)
            }
            Head::Op(name) => {
                let op = Operator::from_name(name)
                    .filter(|op| op.arity() == args.len())
                    .ok_or_else(|| EvalError::Unevaluable(name.clone()))?;
                match op.apply(&args) {
                    Some(v) => v,
                    None => return Ok(Eval::Invalid),
                }
            }
            Head::Placeholder(_) => return Ok(Eval::Invalid),
            Head::Unsupported { construct, .. } => return Err(EvalError::Unevaluable(construct.clone())),
        };
        Ok(if value.is_finite() { Eval::Value(value) } else { Eval::Invalid })
    }

    /// Fully parenthesized infix form, readable back by the plain-math parser.
    pub fn render_infix(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match &self.head {
            Head::Var(n) | Head::Const(n) | Head::Placeholder(n) => out.push_str(n),
            Head::Op(name) => {
                let op = Operator::from_name(name);
                match (op.and_then(Operator::infix_symbol), self.children.as_slice()) {
                    (Some(symbol), [a, b]) => {
                        out.push('(');
                        a.render_into(out);
                        out.push(' ');
                        out.push_str(symbol);
                        out.push(' ');
                        b.render_into(out);
                        out.push(')');
                    }
                    _ if op == Some(Operator::Neg) && self.children.len() == 1 => {
                        out.push_str("(-");
                        self.children[0].render_into(out);
                        out.push(')');
                    }
                    _ => self.render_call(name, out),
                }
            }
            Head::Unsupported { construct, .. } => {
                let name = format!("?{construct}");
                self.render_call(&name, out);
            }
        }
    }

    fn render_call(&self, name: &str, out: &mut String) {
        out.push_str(name);
        out.push('(');
        for (i, child) in self.children.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            child.render_into(out);
        }
        out.push(')');
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_infix())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ExprTree {
        ExprTree::var("x")
    }

    fn bind(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn evaluate_examples() {
        let t = ExprTree::binary("add", x(), ExprTree::constant("1"));
        assert_eq!(t.evaluate(&bind(&[("x", 2.0)])).unwrap(), Eval::Value(3.0));

        let t = ExprTree::unary("log", x());
        assert_eq!(t.evaluate(&bind(&[("x", -1.0)])).unwrap(), Eval::Invalid);

        let t = ExprTree::binary("div", ExprTree::constant("1"), ExprTree::binary("sub", x(), x()));
        assert_eq!(t.evaluate(&bind(&[("x", 0.7)])).unwrap(), Eval::Invalid);
    }

    #[test]
    fn unbound_variable() {
        let t = ExprTree::binary("add", x(), ExprTree::var("y"));
        assert_eq!(t.evaluate(&bind(&[("x", 1.0)])), Err(EvalError::UnboundVariable("y".into())));
    }

    #[test]
    fn overflow_is_invalid() {
        let t = ExprTree::unary("exp", ExprTree::unary("exp", x()));
        assert_eq!(t.evaluate(&bind(&[("x", 10.0)])).unwrap(), Eval::Invalid);
        let t32: HashMap<String, f32> = [("x".to_string(), 100.0f32)].into();
        assert_eq!(ExprTree::unary("exp", x()).evaluate(&t32).unwrap(), Eval::Invalid);
    }

    #[test]
    fn render_examples() {
        assert_eq!(ExprTree::binary("add", x(), ExprTree::constant("1")).render_infix(), "(x + 1)");
        assert_eq!(ExprTree::binary("pow", x(), ExprTree::var("y")).render_infix(), "(x ^ y)");
        assert_eq!(ExprTree::unary("sin", x()).render_infix(), "sin(x)");
        assert_eq!(ExprTree::unary("neg", x()).render_infix(), "(-x)");
    }

    #[test]
    fn variables_first_appearance() {
        let t = ExprTree::binary(
            "mul",
            ExprTree::var("m"),
            ExprTree::binary("pow", ExprTree::var("c"), ExprTree::var("m")),
        );
        assert_eq!(t.variables(), vec!["m", "c"]);
    }
}
