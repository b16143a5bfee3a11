use mathcorpus::latex::{parse_latex, parse_plain};
use mathcorpus::{ExprTree, Head, Library};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    latex: String,
    expected: Vec<String>,
    #[serde(default)]
    unsupported: Vec<String>,
    oracle: String,
    #[serde(default)]
    note: Option<String>,
}

fn shape(tree: &ExprTree) -> Vec<String> {
    tree.preorder()
        .into_iter()
        .map(|n| match &n.head {
            Head::Unsupported { construct, .. } => format!("?{construct}"),
            other => other.name().to_owned(),
        })
        .collect()
}

fn cases() -> Vec<Case> {
    let text = include_str!("fixtures/latex_cases.json");
    serde_json::from_str(text).unwrap()
}

#[test]
fn every_case_parses_to_its_expected_traversal() {
    let lib = Library::builtin("full").unwrap();
    let mut mismatches = Vec::new();
    for case in cases() {
        let out = parse_latex(&case.latex, &lib).unwrap();
        let got: Vec<_> = out.trees.iter().map(shape).collect();
        let want: Vec<_> = case.expected.iter().map(|e| shape(&parse_plain(e, &lib).unwrap())).collect();
        if got != want {
            mismatches.push(format!("{}: got {got:?}, want {want:?}", case.latex));
        }
        let flagged: Vec<_> = out.unsupported.iter().map(|(c, _)| c.clone()).collect();
        assert_eq!(flagged, case.unsupported, "{}", case.latex);
    }
    assert!(mismatches.is_empty(), "{mismatches:#?}");
}

#[test]
fn corpus_meets_coverage_and_oracle_budget() {
    let all = cases();
    assert!(all.len() >= 50);
    for needle in ["\\frac", "\\sqrt", "^", "\\int", "=", "\\le"] {
        assert!(all.iter().any(|c| c.latex.contains(needle)), "no case with {needle}");
    }
    assert!(all.iter().any(|c| c.latex == "2xy"), "implicit multiplication");
    let diverging: Vec<_> = all.iter().filter(|c| c.oracle.starts_with("diverge")).collect();
    assert!(diverging.len() <= 2);
    assert!(diverging.iter().all(|c| c.note.is_some()));
    let checked = all.iter().filter(|c| c.oracle.starts_with("agree")).count();
    assert!(
        checked + diverging.len() + all.iter().filter(|c| c.oracle.starts_with("skip")).count() == all.len()
    );
}
