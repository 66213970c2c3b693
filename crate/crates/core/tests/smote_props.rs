use churnkit::data::{is_synthetic_id, FeatureTable};
use churnkit::sampling::{smote, SmoteConfig};
use proptest::prelude::*;

fn table() -> impl Strategy<Value = FeatureTable> {
    (1usize..5, 2usize..12, 12usize..40).prop_flat_map(|(d, minority, majority)| {
        let n = minority + majority;
        prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |vals| {
            let cols: Vec<Vec<f64>> = (0..d).map(|j| (0..n).map(|i| vals[i * d + j]).collect()).collect();
            let names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            // interleave minority rows among the majority
            let labels = (0..n).map(|i| u8::from(i % (n / minority) == 0 && i / (n / minority) < minority)).collect();
            FeatureTable::from_columns(&refs, &cols, "y", labels).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn smote_contract(t in table(), seed in 0u64..1_000_000, k in 1usize..8) {
        let (neg, pos) = t.class_counts();
        prop_assume!(pos >= 2 && neg > pos);
        let out = smote(&t, &SmoteConfig { k_neighbors: k, seed }).unwrap();
        let (a, b) = out.table.class_counts();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, neg);
        let n = t.n_rows();
        prop_assert_eq!(out.origins.len(), out.table.n_rows() - n);
        for (s, o) in out.origins.iter().enumerate() {
            prop_assert_eq!(t.labels()[o.parent], 1);
            prop_assert_eq!(t.labels()[o.neighbor], 1);
            prop_assert!(o.parent != o.neighbor);
            prop_assert!(is_synthetic_id(&out.table.row_ids()[n + s]));
            let x = out.table.row(n + s);
            for ((v, p), q) in x.iter().zip(t.row(o.parent)).zip(t.row(o.neighbor)) {
                prop_assert!(p.min(*q) <= *v && *v <= p.max(*q));
            }
        }
        for i in 0..n {
            prop_assert_eq!(out.table.row(i), t.row(i));
        }
    }
}
