use crate::expr::{ExprTree, Head, Library};

/// Turns every operator or constant that `lib` cannot encode into an
/// unsupported marker, keeping its operands. Variables are left alone; they
/// are renamed later.
pub fn mark_unsupported(tree: &ExprTree, lib: &Library) -> ExprTree {
    let children: Vec<ExprTree> = tree.children.iter().map(|c| mark_unsupported(c, lib)).collect();
    let encodable = match &tree.head {
        Head::Op(_) | Head::Const(_) | Head::Placeholder(_) => {
            lib.resolve(&tree.head, children.len()).is_ok()
        }
        Head::Var(_) | Head::Unsupported { .. } => true,
    };
    let head = if encodable {
        tree.head.clone()
    } else {
        Head::Unsupported { construct: tree.head.name().to_owned(), offset: 0 }
    };
    ExprTree { head, children }
}

/// Replaces every maximal marker subtree with the placeholder leaf.
pub fn augment_replace(tree: &ExprTree, placeholder: &Head) -> ExprTree {
    if tree.head.is_unsupported() {
        return ExprTree::leaf(placeholder.clone());
    }
    ExprTree {
        head: tree.head.clone(),
        children: tree.children.iter().map(|c| augment_replace(c, placeholder)).collect(),
    }
}

fn maximal_markers(tree: &ExprTree) -> Vec<&ExprTree> {
    if tree.head.is_unsupported() {
        return vec![tree];
    }
    tree.children.iter().flat_map(maximal_markers).collect()
}

/// The replaced tree followed by the operands of each marker, operands that
/// hold markers themselves being split recursively. No output holds a marker.
pub fn augment_split(tree: &ExprTree, placeholder: &Head) -> Vec<ExprTree> {
    let mut out = vec![augment_replace(tree, placeholder)];
    for marker in maximal_markers(tree) {
        for operand in &marker.children {
            if operand.contains_unsupported() {
                out.extend(augment_split(operand, placeholder));
            } else {
                out.push(operand.clone());
            }
        }
    }
    out
}

/// Removes markers from `tree`: a binary node that loses one operand
/// collapses to the other, any other node that loses an operand disappears.
pub fn prune_markers(tree: &ExprTree) -> Option<ExprTree> {
    if tree.head.is_unsupported() {
        return None;
    }
    let pruned: Vec<Option<ExprTree>> = tree.children.iter().map(prune_markers).collect();
    if pruned.iter().all(Option::is_some) {
        return Some(ExprTree { head: tree.head.clone(), children: pruned.into_iter().flatten().collect() });
    }
    if pruned.len() == 2 {
        return pruned.into_iter().flatten().next();
    }
    None
}

/// Split without placeholders: the pruned tree (when anything is left) and
/// the operands of every marker, recursively. No output holds a marker.
pub fn split_pieces(tree: &ExprTree) -> Vec<ExprTree> {
    let mut out: Vec<ExprTree> = prune_markers(tree).into_iter().collect();
    for marker in maximal_markers(tree) {
        for operand in &marker.children {
            if operand.contains_unsupported() {
                out.extend(split_pieces(operand));
            } else {
                out.push(operand.clone());
            }
        }
    }
    out
}
