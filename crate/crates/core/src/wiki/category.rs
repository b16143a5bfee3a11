use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{CategoryLink, LinkType, PageRow, RawExpression, WikiError};

const CATEGORY_NAMESPACE: i64 = 14;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryNode {
    pub depth: usize,
    /// Children one level deeper, sorted.
    pub subcategories: Vec<String>,
    /// Member pages, sorted.
    pub page_ids: Vec<u64>,
}

/// Depth-bounded category hierarchy below `root`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTree {
    pub root: String,
    pub max_depth: usize,
    pub nodes: BTreeMap<String, CategoryNode>,
}

impl CategoryTree {
    pub fn page_ids(&self) -> BTreeSet<u64> {
        self.nodes.values().flat_map(|n| n.page_ids.iter().copied()).collect()
    }

    pub fn contains_page(&self, page_id: u64) -> bool {
        self.nodes.values().any(|n| n.page_ids.binary_search(&page_id).is_ok())
    }
}

/// Category names use underscores for spaces.
fn canonical(name: &str) -> String {
    name.trim().replace(' ', "_")
}

/// Breadth-first expansion from `root` in sorted order.
///
/// Each category is expanded once, at its shallowest depth, and an edge is
/// kept only from depth `d` to depth `d + 1`, so depths strictly increase
/// along every path and no category repeats on one. Subcategory links are
/// resolved through `pages`, which must hold the namespace-14 rows.
pub fn build_category_tree(
    root: &str,
    links: &[CategoryLink],
    pages: &[PageRow],
    max_depth: usize,
) -> Result<CategoryTree, WikiError> {
    let root = canonical(root);
    let titles: HashMap<u64, &str> = pages
        .iter()
        .filter(|p| p.namespace == CATEGORY_NAMESPACE)
        .map(|p| (p.page_id, p.title.as_str()))
        .collect();

    let mut subcats: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut members: HashMap<String, BTreeSet<u64>> = HashMap::new();
    let mut known: BTreeSet<String> = titles.values().map(|t| canonical(t)).collect();
    for link in links {
        let parent = canonical(&link.to);
        known.insert(parent.clone());
        match link.link_type {
            LinkType::Subcat => {
                if let Some(title) = titles.get(&link.from) {
                    subcats.entry(parent).or_default().insert(canonical(title));
                }
            }
            LinkType::Page => {
                members.entry(parent).or_default().insert(link.from);
            }
            LinkType::File => {}
        }
    }
    if !known.contains(&root) {
        return Err(WikiError::RootNotFound(root));
    }

    let mut nodes: BTreeMap<String, CategoryNode> = BTreeMap::new();
    let mut queue = VecDeque::from([root.clone()]);
    nodes.insert(root.clone(), CategoryNode::default());
    while let Some(name) = queue.pop_front() {
        let depth = nodes[&name].depth;
        let page_ids: Vec<u64> = members.get(&name).map(|m| m.iter().copied().collect()).unwrap_or_default();
        let mut children = Vec::new();
        if depth < max_depth {
            for child in subcats.get(&name).into_iter().flatten() {
                match nodes.get(child) {
                    None => {
                        nodes.insert(child.clone(), CategoryNode { depth: depth + 1, ..Default::default() });
                        queue.push_back(child.clone());
                        children.push(child.clone());
                    }
                    Some(existing) if existing.depth == depth + 1 => children.push(child.clone()),
                    Some(_) => {}
                }
            }
        }
        let node = nodes.get_mut(&name).expect("inserted before queueing");
        node.page_ids = page_ids;
        node.subcategories = children;
    }
    Ok(CategoryTree { root, max_depth, nodes })
}

/// Keeps the expressions whose page belongs to `tree`, in input order.
pub fn filter_pages_by_category(tree: &CategoryTree, expressions: &[RawExpression]) -> Vec<RawExpression> {
    let ids = tree.page_ids();
    expressions.iter().filter(|e| ids.contains(&e.page_id)).cloned().collect()
}
