use churnkit::data::FeatureTable;
use churnkit::explain::{global_importance, shapley_exact, shapley_mc, ShapleyMethod};
use churnkit::model::{Activation, FnScorer, Network, NetworkConfig, Scorer};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureTable {
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..n).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    FeatureTable::from_columns(&refs, &cols, "y", vec![0; n]).unwrap()
}

fn coalition_value<M: Scorer>(model: &M, x: &[f64], bg: &FeatureTable, inside: &[bool]) -> f64 {
    let mut z = vec![0.0; x.len()];
    let mut total = 0.0;
    for r in bg.rows() {
        for j in 0..x.len() {
            z[j] = if inside[j] { x[j] } else { r[j] };
        }
        total += model.score(&z);
    }
    total / bg.n_rows() as f64
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, d - 1);
            out.push(q);
        }
    }
    out
}

/// Average marginal contribution over all d! orderings.
fn shapley_by_orderings<M: Scorer>(model: &M, x: &[f64], bg: &FeatureTable) -> Vec<f64> {
    let d = x.len();
    let perms = permutations(d);
    let mut phi = vec![0.0; d];
    for p in &perms {
        let mut inside = vec![false; d];
        let mut prev = coalition_value(model, x, bg, &inside);
        for &j in p {
            inside[j] = true;
            let next = coalition_value(model, x, bg, &inside);
            phi[j] += next - prev;
            prev = next;
        }
    }
    phi.iter().map(|v| v / perms.len() as f64).collect()
}

fn small_network(d: usize, seed: u64) -> Network {
    Network::init(NetworkConfig::plain(vec![d, 6, 4, 1], vec![Activation::Tanh, Activation::Relu], seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exact_matches_ordering_oracle(d in 1usize..6, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bg = table(&mut rng, 7, d);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let net = small_network(d, seed);
        let a = shapley_exact(&net, &x, &bg).unwrap();
        let oracle = shapley_by_orderings(&net, &x, &bg);
        for (p, q) in a.values.iter().zip(&oracle) {
            prop_assert!((p - q).abs() < 1e-12);
        }
        prop_assert!(a.efficiency_gap().abs() < 1e-10);
    }
}

#[test]
fn monte_carlo_within_four_standard_errors() {
    let d = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let bg = table(&mut rng, 30, d);
    let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let net = small_network(d, 4);
    let exact = shapley_exact(&net, &x, &bg).unwrap();
    let mc = shapley_mc(&net, &x, &bg, 4000, 17).unwrap();
    let se = mc.std_errors.as_ref().unwrap();
    for j in 0..d {
        assert!(
            (mc.values[j] - exact.values[j]).abs() <= 4.0 * se[j] + 1e-12,
            "feature {j}: {} vs {} (se {})",
            mc.values[j],
            exact.values[j],
            se[j]
        );
    }
}

#[test]
fn null_player_is_exactly_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bg = table(&mut rng, 12, 5);
    let model = FnScorer {
        n_features: 5,
        f: |x: &[f64]| (x[0] * x[1]).tanh() + x[3].powi(3) - 0.2 * x[4],
    };
    let a = shapley_exact(&model, &[0.3, -1.0, 7.0, 0.5, 1.1], &bg).unwrap();
    assert_eq!(a.values[2], 0.0);
    assert!(a.efficiency_gap().abs() < 1e-10);
}

#[test]
fn global_ranking_lists_every_feature_once() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bg = table(&mut rng, 10, 4);
    let rows = table(&mut rng, 6, 4);
    let model = FnScorer {
        n_features: 4,
        f: |x: &[f64]| 3.0 * x[2] + 0.5 * x[0] + 0.01 * x[1],
    };
    let ranking = global_importance(&model, &rows, &bg, ShapleyMethod::Exact).unwrap();
    let names: Vec<&str> = ranking.iter().map(|r| r.feature.as_str()).collect();
    assert_eq!(names, vec!["x2", "x0", "x1", "x3"]);
    assert_eq!(ranking[3].mean_abs, 0.0);
}
