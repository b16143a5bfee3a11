use serde::{Deserialize, Serialize};

use super::library::Semantics;
use super::{Eval, ExprError, ExprTree, Library};
use crate::Scalar;

/// Pre-order token-index sequence over a [`Library`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Traversal(pub Vec<usize>);

/// Running count of open slots: starts at 1 and moves by `arity - 1` per token.
pub fn dangling_after(arities: &[usize], seq: &[usize]) -> Vec<i64> {
    let mut d = 1i64;
    seq.iter()
        .map(|&t| {
            d += arities[t] as i64 - 1;
            d
        })
        .collect()
}

/// Complete iff the open-slot count first reaches zero exactly at the end.
pub fn is_complete(arities: &[usize], seq: &[usize]) -> bool {
    let d = dangling_after(arities, seq);
    match d.split_last() {
        Some((&last, rest)) => last == 0 && rest.iter().all(|&v| v > 0),
        None => false,
    }
}

/// A prefix that can still be extended: no slot count has reached zero.
pub fn is_valid_prefix(arities: &[usize], seq: &[usize]) -> bool {
    dangling_after(arities, seq).iter().all(|&v| v > 0)
}

impl Traversal {
    pub fn new(seq: Vec<usize>) -> Traversal {
        Traversal(seq)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_complete(&self, lib: &Library) -> bool {
        is_complete(&lib.arities(), &self.0)
    }

    pub fn is_valid_prefix(&self, lib: &Library) -> bool {
        is_valid_prefix(&lib.arities(), &self.0)
    }

    /// Looks up tokens by name.
    pub fn from_names<S: AsRef<str>>(names: &[S], lib: &Library) -> Result<Traversal, ExprError> {
        names
            .iter()
            .map(|n| lib.get(n.as_ref()).ok_or_else(|| ExprError::UnknownToken(n.as_ref().to_owned())))
            .collect::<Result<_, _>>()
            .map(Traversal)
    }

    pub fn names<'l>(&self, lib: &'l Library) -> Vec<&'l str> {
        self.0.iter().map(|&i| lib.token(i).name.as_str()).collect()
    }

    /// Space-separated token names.
    pub fn display(&self, lib: &Library) -> String {
        self.names(lib).join(" ")
    }

    pub fn to_tree(&self, lib: &Library) -> Result<ExprTree, ExprError> {
        traversal_to_tree(self, lib)
    }

    /// Stack evaluation over the library's precomputed semantics. `point`
    /// holds one value per library variable, in library order.
    pub fn evaluate<T: Scalar>(&self, lib: &Library, point: &[T]) -> Result<Eval<T>, ExprError> {
        evaluate_seq(lib, &self.0, point)
    }
}

pub(crate) fn evaluate_seq<T: Scalar>(
    lib: &Library,
    seq: &[usize],
    point: &[T],
) -> Result<Eval<T>, ExprError> {
    let mut stack: Vec<T> = Vec::with_capacity(seq.len());
    let mut args = [T::zero(); 2];
    for &t in seq.iter().rev() {
        let value = match lib.semantics(t) {
            Semantics::Var(v) => point[v],
            Semantics::Const(c) => T::of(c),
            Semantics::Op(op) => {
                let n = op.arity();
                if stack.len() < n {
                    return Err(ExprError::IncompleteTraversal);
                }
                for slot in args.iter_mut().take(n) {
                    *slot = stack.pop().expect("checked length");
                }
                match op.apply(&args[..n]) {
                    Some(v) => v,
                    None => return Ok(Eval::Invalid),
                }
            }
            Semantics::Opaque => return Err(ExprError::Unevaluable(lib.token(t).name.clone())),
        };
        if !value.is_finite() {
            return Ok(Eval::Invalid);
        }
        stack.push(value);
    }
    match stack.as_slice() {
        [v] => Ok(Eval::Value(*v)),
        _ => Err(ExprError::IncompleteTraversal),
    }
}

/// Pre-order encoding of `tree` over `lib`.
pub fn tree_to_traversal(tree: &ExprTree, lib: &Library) -> Result<Traversal, ExprError> {
    let mut seq = Vec::with_capacity(tree.node_count());
    for node in tree.preorder() {
        seq.push(lib.resolve(&node.head, node.children.len())?);
    }
    Ok(Traversal(seq))
}

/// Inverse of [`tree_to_traversal`] for complete traversals.
pub fn traversal_to_tree(t: &Traversal, lib: &Library) -> Result<ExprTree, ExprError> {
    let arities = lib.arities();
    for (k, &d) in dangling_after(&arities, &t.0).iter().enumerate() {
        if d <= 0 && k + 1 < t.len() {
            return Err(ExprError::InvalidPrefix { position: k });
        }
    }
    if !is_complete(&arities, &t.0) {
        return Err(ExprError::IncompleteTraversal);
    }
    // Rebuild bottom-up from the reversed sequence.
    let mut stack: Vec<ExprTree> = Vec::new();
    for &i in t.0.iter().rev() {
        let token = lib.token(i);
        let children: Vec<ExprTree> =
            (0..token.arity).map(|_| stack.pop().expect("completeness checked")).collect();
        stack.push(ExprTree { head: token.head(), children });
    }
    Ok(stack.pop().expect("complete traversal is non-empty"))
}
