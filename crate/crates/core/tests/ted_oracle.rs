//! Tree edit distance against an exhaustive search over node mappings.

use proptest::prelude::*;
use vet_core::ted::tree_edit_distance;
use vet_core::testkit::oracle::{labelled, mapping_distance, shapes};
use vet_core::testkit::{random_tree, rng};
use vet_core::tree::Tree;

#[test]
fn all_shapes_up_to_six_nodes() {
    let all: Vec<Tree> = (1..=6).flat_map(shapes).collect();
    assert_eq!(all.len(), 1 + 1 + 2 + 5 + 14 + 42);
    for a in &all {
        for b in &all {
            assert_eq!(
                tree_edit_distance(a, b),
                mapping_distance(a, b),
                "{a} vs {b}"
            );
        }
    }
}

#[test]
fn all_labelled_trees_up_to_five_nodes() {
    let all = labelled(5, &['a', 'b']);
    assert_eq!(all.len(), 2 + 4 + 2 * 8 + 5 * 16 + 14 * 32);
    for a in &all {
        for b in &all {
            assert_eq!(
                tree_edit_distance(a, b),
                mapping_distance(a, b),
                "{a} vs {b}"
            );
        }
    }
}

#[test]
fn random_labelled_pairs_up_to_six_nodes() {
    let mut r = rng(5);
    for _ in 0..2000 {
        use vet_core::testkit::Rng;
        let (na, nb) = (r.gen_range(1..=6), r.gen_range(1..=6));
        let a = random_tree(&mut r, na, &["a", "b", "c"]);
        let b = random_tree(&mut r, nb, &["a", "b", "c"]);
        assert_eq!(
            tree_edit_distance(&a, &b),
            mapping_distance(&a, &b),
            "{a} vs {b}"
        );
    }
}

fn arb_tree() -> impl Strategy<Value = Tree> {
    let leaf = prop::sample::select(vec!["a", "b", "c"]).prop_map(|l| Tree {
        label: l.into(),
        children: Vec::new(),
    });
    leaf.prop_recursive(4, 24, 4, |inner| {
        (
            prop::sample::select(vec!["a", "b", "c"]),
            prop::collection::vec(inner, 0..4),
        )
            .prop_map(|(l, children)| Tree {
                label: l.into(),
                children,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metric_axioms(a in arb_tree(), b in arb_tree(), c in arb_tree()) {
        let ab = tree_edit_distance(&a, &b);
        prop_assert_eq!(tree_edit_distance(&a, &a), 0);
        prop_assert_eq!(ab == 0, a == b);
        prop_assert_eq!(ab, tree_edit_distance(&b, &a));
        prop_assert!(ab <= tree_edit_distance(&a, &c) + tree_edit_distance(&c, &b));
        prop_assert!(ab <= a.size() + b.size());
    }
}
