use crate::expr::{ExprTree, Head, Library};

/// Structural clean-up applied to every parsed tree.
///
/// Rules, applied bottom-up until nothing changes:
/// `neg(neg x) -> x`, `add`/`mul` chains are flattened and rebuilt
/// left-folded without `0` addends or `1` factors, `sub(x, 0) -> x`.
/// When the target library has no `neg`, unary minus becomes `sub(0, x)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Normalizer {
    lower_neg: bool,
}

/// Library-independent normalization; keeps `neg`.
pub fn normalize(tree: &ExprTree) -> ExprTree {
    Normalizer::default().apply(tree)
}

fn is_const(tree: &ExprTree, value: f64) -> bool {
    match &tree.head {
        Head::Const(name) => tree.is_leaf() && name.parse::<f64>() == Ok(value),
        _ => false,
    }
}

fn is_op(tree: &ExprTree, name: &str, arity: usize) -> bool {
    matches!(&tree.head, Head::Op(n) if n == name) && tree.children.len() == arity
}

impl Normalizer {
    pub fn for_library(lib: &Library) -> Normalizer {
        Normalizer { lower_neg: lib.get("neg").is_none() }
    }

    /// Whether unary minus is rewritten to `sub(0, x)`.
    pub fn lowers_neg(&self) -> bool {
        self.lower_neg
    }

    pub fn apply(&self, tree: &ExprTree) -> ExprTree {
        let mut current = self.pass(tree);
        loop {
            let next = self.pass(&current);
            if next == current {
                return current;
            }
            current = next;
        }
    }

    fn pass(&self, tree: &ExprTree) -> ExprTree {
        let children: Vec<ExprTree> = tree.children.iter().map(|c| self.pass(c)).collect();
        let node = ExprTree { head: tree.head.clone(), children };
        match &node.head {
            Head::Op(name) => match (name.as_str(), node.children.len()) {
                ("neg", 1) => self.negate(node.children.into_iter().next().expect("arity 1")),
                ("sub", 2) if self.lower_neg && is_const(&node.children[0], 0.0) => {
                    let inner = &node.children[1];
                    if is_op(inner, "sub", 2) && is_const(&inner.children[0], 0.0) {
                        inner.children[1].clone()
                    } else {
                        node
                    }
                }
                ("sub", 2) if is_const(&node.children[1], 0.0) => node.children[0].clone(),
                ("add", 2) => fold_chain(node, "add", 0.0),
                ("mul", 2) => fold_chain(node, "mul", 1.0),
                _ => node,
            },
            _ => node,
        }
    }

    fn negate(&self, x: ExprTree) -> ExprTree {
        if is_op(&x, "neg", 1) {
            return x.children.into_iter().next().expect("arity 1");
        }
        if self.lower_neg {
            if is_op(&x, "sub", 2) && is_const(&x.children[0], 0.0) {
                return x.children[1].clone();
            }
            return ExprTree::binary("sub", ExprTree::number(0.0), x);
        }
        ExprTree::unary("neg", x)
    }
}

fn flatten(tree: ExprTree, op: &str, out: &mut Vec<ExprTree>) {
    if is_op(&tree, op, 2) {
        for child in tree.children {
            flatten(child, op, out);
        }
    } else {
        out.push(tree);
    }
}

fn fold_chain(node: ExprTree, op: &str, identity: f64) -> ExprTree {
    let mut operands = Vec::new();
    flatten(node, op, &mut operands);
    let mut kept = operands.into_iter().filter(|t| !is_const(t, identity));
    let Some(first) = kept.next() else {
        return ExprTree::number(identity);
    };
    kept.fold(first, |acc, t| ExprTree::binary(op, acc, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ExprTree {
        ExprTree::var("x")
    }
    fn y() -> ExprTree {
        ExprTree::var("y")
    }
    fn z() -> ExprTree {
        ExprTree::var("z")
    }

    #[test]
    fn double_negation() {
        assert_eq!(normalize(&ExprTree::unary("neg", ExprTree::unary("neg", x()))), x());
    }

    #[test]
    fn identities() {
        assert_eq!(normalize(&ExprTree::binary("mul", ExprTree::number(1.0), x())), x());
        assert_eq!(normalize(&ExprTree::binary("add", x(), ExprTree::number(0.0))), x());
        assert_eq!(normalize(&ExprTree::binary("sub", x(), ExprTree::number(0.0))), x());
        assert_eq!(
            normalize(&ExprTree::binary("mul", ExprTree::number(1.0), ExprTree::number(1.0))),
            ExprTree::number(1.0)
        );
    }

    #[test]
    fn chains_fold_left() {
        let left = ExprTree::binary("add", ExprTree::binary("add", x(), y()), z());
        let right = ExprTree::binary("add", x(), ExprTree::binary("add", y(), z()));
        assert_eq!(normalize(&left), left);
        assert_eq!(normalize(&right), left);
    }

    #[test]
    fn lowering_without_neg() {
        let lib = Library::builtin("koza1").unwrap();
        let n = Normalizer::for_library(&lib);
        assert!(n.lowers_neg());
        let lowered = n.apply(&ExprTree::unary("neg", x()));
        assert_eq!(lowered, ExprTree::binary("sub", ExprTree::number(0.0), x()));
        assert_eq!(n.apply(&ExprTree::unary("neg", ExprTree::unary("neg", x()))), x());
        assert_eq!(n.apply(&ExprTree::unary("neg", lowered.clone())), x());
        assert_eq!(n.apply(&lowered), lowered);
    }
}
