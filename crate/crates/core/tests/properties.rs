use mathcorpus::corpus::{build_corpus, AugmentPolicy, CorpusConfig};
use mathcorpus::dsr::{ConstraintSet, SlotTracker};
use mathcorpus::expr::{dangling_after, is_complete, is_valid_prefix, tree_to_traversal};
use mathcorpus::latex::{normalize, parse_latex, parse_plain, Normalizer};
use mathcorpus::nn::{log_softmax, softmax};
use mathcorpus::wiki::{parse_sql_dump, write_insert, SqlTable, SqlValue};
use mathcorpus::{ExprTree, Library, Traversal};
use proptest::prelude::*;

fn full() -> Library {
    Library::builtin("full").unwrap()
}

/// Trees over the `full` library.
fn tree() -> impl Strategy<Value = ExprTree> {
    let lib = full();
    let leaves: Vec<ExprTree> =
        lib.tokens().iter().filter(|t| t.arity == 0).map(|t| ExprTree::leaf(t.head())).collect();
    let unary: Vec<String> = lib.tokens().iter().filter(|t| t.arity == 1).map(|t| t.name.clone()).collect();
    let binary: Vec<String> = lib.tokens().iter().filter(|t| t.arity == 2).map(|t| t.name.clone()).collect();
    prop::sample::select(leaves).prop_recursive(6, 64, 2, move |inner| {
        prop_oneof![
            (prop::sample::select(unary.clone()), inner.clone()).prop_map(|(op, a)| ExprTree::unary(op, a)),
            (prop::sample::select(binary.clone()), inner.clone(), inner)
                .prop_map(|(op, a, b)| ExprTree::binary(op, a, b)),
        ]
    })
}

fn sql_value() -> impl Strategy<Value = SqlValue> {
    prop_oneof![
        Just(SqlValue::Null),
        any::<i64>().prop_map(SqlValue::Int),
        (-1e12f64..1e12).prop_map(SqlValue::Float),
        "[ -~\\n\\t'\"\\\\éΩ]{0,12}".prop_map(SqlValue::Str),
    ]
}

proptest! {
    #[test]
    fn traversal_round_trip(t in tree()) {
        let lib = full();
        let enc = tree_to_traversal(&t, &lib).unwrap();
        prop_assert_eq!(enc.len(), t.node_count());
        prop_assert!(enc.is_complete(&lib));
        prop_assert_eq!(enc.to_tree(&lib).unwrap(), t);
    }

    #[test]
    fn render_parse_round_trip(t in tree()) {
        let lib = full();
        let t = Normalizer::for_library(&lib).apply(&t);
        let back = parse_plain(&t.render_infix(), &lib).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn normalize_is_idempotent(t in tree()) {
        let once = normalize(&t);
        prop_assert_eq!(normalize(&once), once);
    }

    #[test]
    fn normalize_keeps_values(t in tree(), x in -2.0f64..2.0) {
        let bind = [("x1", x), ("x2", 0.5), ("x3", -1.5)]
            .into_iter()
            .map(|(k, v)| (k.to_owned(), v))
            .collect();
        let (a, b) = (t.evaluate(&bind).unwrap(), normalize(&t).evaluate(&bind).unwrap());
        // Identity removal can drop an invalid subtree such as `0 * log(0)`, so
        // only pairs of values are compared.
        if let (Some(u), Some(v)) = (a.value(), b.value()) {
            prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn parse_latex_never_panics(s in "[ -~]{0,40}") {
        let _ = parse_latex(&s, &full());
    }

    #[test]
    fn parse_latex_never_panics_on_commands(
        parts in prop::collection::vec(
            prop::sample::select(vec![
                "\\frac", "\\sqrt", "{", "}", "^", "_", "x", "2", "+", "=", "\\le", "\\int", "\\sin", "(", ")",
                "\\left(", "\\right)", "\\\\", "&", "\\begin{matrix}", "\\end{matrix}", " ", "\\cdot", "-",
            ]),
            0..24,
        )
    ) {
        let _ = parse_latex(&parts.concat(), &full());
    }

    #[test]
    fn segments_are_bounded_by_relations(
        parts in prop::collection::vec(prop::sample::select(vec!["x", "+", "2", "=", "\\le", "y", "<", " "]), 1..20)
    ) {
        let s = parts.concat();
        if let Ok(out) = parse_latex(&s, &full()) {
            prop_assert!(out.trees.len() + out.failed_segments <= out.relation_split_count + 1);
            let relations = parts.iter().filter(|p| matches!(**p, "=" | "\\le" | "<")).count();
            prop_assert!(out.relation_split_count <= relations);
        }
    }

    #[test]
    fn sql_round_trip(rows in prop::collection::vec(prop::collection::vec(sql_value(), 5), 1..8)) {
        let text = write_insert(SqlTable::Category, &rows);
        let back: Vec<Vec<SqlValue>> = parse_sql_dump(text.as_bytes(), SqlTable::Category)
            .collect::<Result<_, _>>()
            .unwrap();
        prop_assert_eq!(back, rows);
    }

    #[test]
    fn dangling_counts_open_slots(seq in prop::collection::vec(0usize..19, 0..12)) {
        let lib = full();
        let ar = lib.arities();
        let d = dangling_after(&ar, &seq);
        let complete = is_complete(&ar, &seq);
        prop_assert_eq!(complete, Traversal(seq.clone()).to_tree(&lib).is_ok());
        prop_assert!(!(complete && is_valid_prefix(&ar, &seq)));
        if is_valid_prefix(&ar, &seq) {
            if let Some(&last) = d.last() {
                prop_assert!(last >= 1);
            }
        }
    }

    #[test]
    fn corpus_invariants(trees in prop::collection::vec(tree(), 1..12), policy in 0usize..4) {
        let lib = full();
        let policy = [AugmentPolicy::Drop, AugmentPolicy::Replace, AugmentPolicy::Split, AugmentPolicy::ReplaceAndSplit][policy];
        let outcomes: Vec<_> = trees
            .iter()
            .enumerate()
            .filter_map(|(k, t)| parse_latex(&t.render_infix(), &lib).ok().map(|o| (k as u64, o)))
            .collect();
        let cfg = CorpusConfig { policy, ..CorpusConfig::default() };
        let (samples, stats) = build_corpus(&outcomes, &lib, &cfg).unwrap();
        prop_assert_eq!(stats.n_samples, samples.len());
        prop_assert_eq!(stats.length_histogram.values().sum::<usize>(), samples.len());
        let tokens: usize = samples.iter().map(|s| s.traversal.len()).sum();
        prop_assert_eq!(stats.token_histogram.values().sum::<usize>(), tokens);
        let mut seen = std::collections::HashSet::new();
        for s in &samples {
            prop_assert!(s.traversal.is_complete(&lib));
            prop_assert!(seen.insert(s.traversal.clone()));
        }
    }

    #[test]
    fn softmax_is_a_distribution(
        logits in prop::collection::vec(-50.0f64..50.0, 1..30),
        masked in prop::collection::vec(any::<bool>(), 30)
    ) {
        let mut l = logits.clone();
        for (v, &m) in l.iter_mut().zip(&masked) {
            if m {
                *v = f64::NEG_INFINITY;
            }
        }
        let p = softmax(&l);
        let open = l.iter().filter(|v| v.is_finite()).count();
        let total: f64 = p.iter().sum();
        if open > 0 {
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        for ((pi, li), lp) in p.iter().zip(&l).zip(log_softmax(&l)) {
            prop_assert!(*pi >= 0.0);
            if li.is_finite() {
                prop_assert!((pi.ln() - lp).abs() < 1e-9);
            } else {
                prop_assert_eq!(*pi, 0.0);
            }
        }
    }

    #[test]
    fn constraints_never_dead_end(choices in prop::collection::vec(any::<prop::sample::Index>(), 30), min in 1usize..8, extra in 0usize..20) {
        let lib = Library::builtin("nguyen2").unwrap();
        let max = min + extra.max(2);
        let cs = ConstraintSet::standard(min, max);
        let mut slot = SlotTracker::new();
        let mut seq = Vec::new();
        for c in &choices {
            if slot.is_complete() {
                break;
            }
            let allowed = cs.allowed(&lib, &slot).unwrap();
            let open: Vec<usize> = (0..lib.len()).filter(|&i| allowed[i]).collect();
            let t = open[c.index(open.len())];
            slot.push(t, lib.arity(t));
            seq.push(t);
        }
        prop_assert!(slot.is_complete());
        prop_assert!((min..=max).contains(&seq.len()));
        prop_assert!(is_complete(&lib.arities(), &seq));
    }
}
