//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use churnkit::causal::{
    backdoor_sets, estimate_ate_ipw, estimate_ate_linear, naive_difference, refute_random_common_cause, CausalGraph,
    DEFAULT_CLIP,
};
use churnkit::data::{split, standardize, FeatureTable};
use churnkit::explain::{shapley_exact, shapley_mc};
use churnkit::metrics::{auc, scored, TiePolicy};
use churnkit::model::{fit_logistic, gradients, train, Activation, LogisticConfig, Network, NetworkConfig};
use churnkit::sampling::{smote, SmoteConfig};
use churnkit::synth::{default_spec, generate, label_probabilities, true_ate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn table_from(cols: &[Vec<f64>], labels: Vec<u8>) -> FeatureTable {
    let names: Vec<String> = (0..cols.len()).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    FeatureTable::from_columns(&refs, cols, "y", labels).unwrap()
}

// 1. gradient check

fn oracle_loss(widths: &[usize], acts: &[Activation], params: &[f64], t: &FeatureTable, signs: &mut Vec<bool>) -> f64 {
    signs.clear();
    let mut total = 0.0;
    for i in 0..t.n_rows() {
        let mut a = t.row(i).to_vec();
        let mut off = 0;
        for l in 0..widths.len() - 1 {
            let (ni, no) = (widths[l], widths[l + 1]);
            let mut z = params[off + ni * no..off + ni * no + no].to_vec();
            for (o, zo) in z.iter_mut().enumerate() {
                for k in 0..ni {
                    *zo += params[off + o * ni + k] * a[k];
                }
            }
            off += ni * no + no;
            if l + 2 < widths.len() {
                for v in z.iter_mut() {
                    if acts[l] == Activation::Relu {
                        signs.push(*v > 0.0);
                        *v = v.max(0.0);
                    } else {
                        *v = v.tanh();
                    }
                }
            }
            a = z;
        }
        let (logit, y) = (a[0], f64::from(t.labels()[i]));
        total += logit.max(0.0) + (-logit.abs()).exp().ln_1p() - y * logit;
    }
    total / t.n_rows() as f64
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let archs: [&[usize]; 10] = [
        &[8, 16, 8, 8, 4, 1],
        &[8, 16, 8, 4, 1],
        &[5, 8, 1],
        &[3, 4, 4, 1],
        &[8, 16, 8, 8, 4, 1],
        &[6, 12, 6, 1],
        &[2, 3, 3, 3, 3, 1],
        &[8, 8, 1],
        &[4, 16, 8, 8, 4, 1],
        &[7, 5, 5, 5, 1],
    ];
    let h = 1e-5;
    let (mut worst, mut excluded, mut total) = (0.0f64, 0usize, 0usize);
    for (seed, widths) in archs.iter().enumerate() {
        let depth = widths.len() - 2;
        let acts: Vec<Activation> = [Activation::Tanh, Activation::Relu, Activation::Relu, Activation::Relu]
            .iter()
            .cycle()
            .skip(seed % 2)
            .take(depth)
            .copied()
            .collect();
        let net = Network::init(NetworkConfig::plain(widths.to_vec(), acts.clone(), seed as u64)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed as u64);
        let n = 16;
        let cols: Vec<Vec<f64>> = (0..widths[0])
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let t = table_from(&cols, (0..n).map(|i| (i % 2) as u8).collect());
        let rows: Vec<usize> = (0..n).collect();
        let (g, _) = gradients(&net, &t, &rows).unwrap();
        let mut p = net.params().to_vec();
        let (mut s0, mut s1, mut s2) = (Vec::new(), Vec::new(), Vec::new());
        oracle_loss(widths, &acts, &p, &t, &mut s0);
        for j in 0..p.len() {
            let orig = p[j];
            p[j] = orig + h;
            let lp = oracle_loss(widths, &acts, &p, &t, &mut s1);
            p[j] = orig - h;
            let lm = oracle_loss(widths, &acts, &p, &t, &mut s2);
            p[j] = orig;
            total += 1;
            if s1 != s0 || s2 != s0 {
                excluded += 1;
                continue;
            }
            let fd = (lp - lm) / (2.0 * h);
            worst = worst.max((g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1e-6));
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst < 1e-4 && excluded * 100 < total && elapsed < Duration::from_secs(30),
        format!(
            "max rel err {worst:.2e} over {} coords ({excluded} straddling a ReLU kink skipped), {:.1}s",
            total - excluded,
            elapsed.as_secs_f64()
        ),
    )
}

// 2. AUC

fn brute_auc(s: &[f64], y: &[u8], half: bool) -> f64 {
    let (mut m, mut n) = (0u64, 0u64);
    let mut wins2 = 0u64;
    for i in 0..s.len() {
        if y[i] == 1 {
            m += 1;
        } else {
            n += 1;
        }
    }
    for i in 0..s.len() {
        if y[i] != 1 {
            continue;
        }
        for j in 0..s.len() {
            if y[j] == 0 {
                if s[i] > s[j] {
                    wins2 += 2;
                } else if half && s[i] == s[j] {
                    wins2 += 1;
                }
            }
        }
    }
    wins2 as f64 / 2.0 / (m * n) as f64
}

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut transform_breaks = 0;
    let mut largest = 0u64;
    for k in 0..200 {
        let m = rng.random_range(1..=1000usize);
        let n = rng.random_range(1..=1000usize);
        largest = largest.max((m * n) as u64);
        let levels = if k % 2 == 0 { 50 } else { 1_000_000 };
        let mut y: Vec<u8> = [vec![1; m], vec![0; n]].concat();
        y.shuffle(&mut rng);
        let s: Vec<f64> = (0..m + n)
            .map(|_| f64::from(rng.random_range(0..levels)) / f64::from(levels))
            .collect();
        let samples = scored(&s, &y);
        for (policy, half) in [(TiePolicy::Strict, false), (TiePolicy::Half, true)] {
            let fast = auc(&samples, policy).unwrap();
            if fast != brute_auc(&s, &y, half) {
                mismatches += 1;
            }
            for t in [
                s.iter().map(|v| (3.0 * v - 1.0).exp()).collect::<Vec<_>>(),
                s.iter().map(|v| v.powi(3) + 2.0 * v).collect(),
                s.iter().map(|v| v.atan() * 10.0 - 4.0).collect(),
            ] {
                if auc(&scored(&t, &y), policy).unwrap().to_bits() != fast.to_bits() {
                    transform_breaks += 1;
                }
            }
        }
    }
    verdict(
        mismatches == 0 && transform_breaks == 0,
        format!("200 instances (max m*n = {largest}), {mismatches} oracle mismatches, {transform_breaks} transform changes"),
    )
}

// 3. SMOTE

fn criterion_3() -> Verdict {
    let mut unequal = 0;
    let mut outside = 0;
    let mut synthetic = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + trial);
        let d = rng.random_range(1..6usize);
        let minority = rng.random_range(2..30usize);
        let majority = minority + rng.random_range(1..120usize);
        let n = minority + majority;
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| rng.random_range(-50.0..50.0)).collect())
            .collect();
        let mut labels: Vec<u8> = [vec![1; minority], vec![0; majority]].concat();
        labels.shuffle(&mut rng);
        let t = table_from(&cols, labels);
        let cfg = SmoteConfig {
            k_neighbors: rng.random_range(1..8usize),
            seed: trial,
        };
        let out = smote(&t, &cfg).unwrap();
        let (a, b) = out.table.class_counts();
        if a != b {
            unequal += 1;
        }
        for (s, o) in out.origins.iter().enumerate() {
            synthetic += 1;
            let x = out.table.row(n + s);
            let (p, q) = (t.row(o.parent), t.row(o.neighbor));
            let inside = (0..d).all(|j| p[j].min(q[j]) <= x[j] && x[j] <= p[j].max(q[j]));
            if !inside || t.labels()[o.parent] != 1 || t.labels()[o.neighbor] != 1 {
                outside += 1;
            }
        }
    }
    verdict(
        unequal == 0 && outside == 0,
        format!("100 trials, {synthetic} synthetic rows, {unequal} unbalanced outputs, {outside} outside their segment"),
    )
}

// 4. d-separation and backdoor sets

struct Dag {
    n: usize,
    adj: Vec<Vec<bool>>,
    names: Vec<String>,
}

impl Dag {
    fn desc(&self, u: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![u];
        seen[u] = true;
        while let Some(a) = stack.pop() {
            for b in 0..self.n {
                if self.adj[a][b] && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen
    }

    fn paths(&self, x: usize, y: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![vec![x]];
        while let Some(p) = stack.pop() {
            let u = *p.last().unwrap();
            if u == y {
                out.push(p);
                continue;
            }
            for v in 0..self.n {
                if (self.adj[u][v] || self.adj[v][u]) && !p.contains(&v) {
                    let mut q = p.clone();
                    q.push(v);
                    stack.push(q);
                }
            }
        }
        out
    }

    fn blocked(&self, p: &[usize], z: &[bool]) -> bool {
        (1..p.len() - 1).any(|k| {
            let (a, b, c) = (p[k - 1], p[k], p[k + 1]);
            if self.adj[a][b] && self.adj[c][b] {
                !self.desc(b).iter().zip(z).any(|(d, zi)| *d && *zi)
            } else {
                z[b]
            }
        })
    }

    fn separated(&self, x: usize, y: usize, z: &[bool]) -> bool {
        self.paths(x, y).iter().all(|p| self.blocked(p, z))
    }

    fn backdoor_valid(&self, t: usize, y: usize, z: &[bool]) -> bool {
        let d = self.desc(t);
        !z[t] && !z[y] && !(0..self.n).any(|i| z[i] && d[i])
            && self.paths(t, y).iter().filter(|p| self.adj[p[1]][t]).all(|p| self.blocked(p, z))
    }
}

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut queries, mut wrong, mut sets, mut bad_sets) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let n = rng.random_range(2..=6usize);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let density = rng.random_range(0.2..0.7);
        let mut adj = vec![vec![false; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                adj[order[i]][order[j]] = rng.random::<f64>() < density;
            }
        }
        let dag = Dag {
            n,
            adj,
            names: (0..n).map(|i| format!("n{i}")).collect(),
        };
        let edges: Vec<(String, String)> = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| dag.adj[u][v])
            .map(|(u, v)| (dag.names[u].clone(), dag.names[v].clone()))
            .collect();
        let g = CausalGraph::new(&dag.names, &edges).unwrap();
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                for _ in 0..3 {
                    let z: Vec<bool> = (0..n).map(|i| i != x && i != y && rng.random::<bool>()).collect();
                    let zn: Vec<&str> = (0..n).filter(|&i| z[i]).map(|i| dag.names[i].as_str()).collect();
                    queries += 1;
                    if g.d_separated(&dag.names[x], &dag.names[y], &zn).unwrap() != dag.separated(x, y, &z) {
                        wrong += 1;
                    }
                }
                for set in backdoor_sets(&g, &dag.names[x], &dag.names[y], n).unwrap() {
                    sets += 1;
                    let idx: Vec<usize> = set.iter().map(|s| g.id(s).unwrap()).collect();
                    let mask = |keep: &dyn Fn(usize) -> bool| (0..n).map(|i| idx.contains(&i) && keep(i)).collect::<Vec<_>>();
                    let valid = dag.backdoor_valid(x, y, &mask(&|_| true));
                    let minimal = idx.iter().all(|&drop| !dag.backdoor_valid(x, y, &mask(&|i| i != drop)))
                        && (0u32..1 << idx.len()).all(|bits| {
                            bits == (1 << idx.len()) - 1
                                || !dag.backdoor_valid(x, y, &mask(&|i| bits >> idx.iter().position(|&k| k == i).unwrap() & 1 == 1))
                        });
                    if !valid || !minimal {
                        bad_sets += 1;
                    }
                }
            }
        }
    }
    verdict(
        wrong == 0 && bad_sets == 0,
        format!("1000 DAGs, {queries} queries, {wrong} disagreements; {sets} backdoor sets, {bad_sets} invalid or non-minimal"),
    )
}

// 5. ATE recovery

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let mut spec = default_spec();
    spec.seed = 5;
    let table = generate(&spec, 50_000).unwrap();
    let g = spec.graph().unwrap();
    let truth = true_ate(&spec, "acc_tenure", "churn", 1_000_000, 55).unwrap();
    let lin = estimate_ate_linear(&table, &g, "acc_tenure", "churn").unwrap();
    let ipw = estimate_ate_ipw(&table, &g, "acc_tenure", "churn", DEFAULT_CLIP).unwrap();
    let naive = naive_difference(&table, "acc_tenure", "churn").unwrap();
    let elapsed = start.elapsed();
    let (el, ei, en) = ((lin.ate - truth.value).abs(), (ipw.ate - truth.value).abs(), (naive - truth.value).abs());
    verdict(
        el < 0.02 && ei < 0.02 && en > 0.05 && elapsed < Duration::from_secs(60),
        format!(
            "true {:.4} (MC se {:.1e}); linear {:.4} (err {el:.4}), ipw {:.4} (err {ei:.4}), naive {:.4} (err {en:.4}); {:.1}s",
            truth.value,
            truth.std_error,
            lin.ate,
            ipw.ate,
            naive,
            elapsed.as_secs_f64()
        ),
    )
}

// 6. refutation stability

fn criterion_6() -> Verdict {
    let g = default_spec().graph().unwrap();
    let (mut lin_ok, mut ipw_ok, mut worst) = (0, 0, 0.0f64);
    for seed in 0..20u64 {
        let mut spec = default_spec();
        spec.seed = 600 + seed;
        let table = generate(&spec, 10_000).unwrap();
        let lin = estimate_ate_linear(&table, &g, "acc_tenure", "churn").unwrap();
        let ipw = estimate_ate_ipw(&table, &g, "acc_tenure", "churn", DEFAULT_CLIP).unwrap();
        let rl = refute_random_common_cause(&table, &g, &lin, seed).unwrap();
        let ri = refute_random_common_cause(&table, &g, &ipw, seed).unwrap();
        lin_ok += usize::from(rl.delta.abs() < 0.005);
        ipw_ok += usize::from(ri.delta.abs() < 0.005);
        worst = worst.max(rl.delta.abs()).max(ri.delta.abs());
    }
    verdict(
        lin_ok >= 18 && ipw_ok >= 18,
        format!("|delta| < 0.005 in {lin_ok}/20 (linear) and {ipw_ok}/20 (ipw) seeds, worst {worst:.1e}"),
    )
}

// 7. Shapley

fn criterion_7() -> Verdict {
    let (mut worst_gap, mut worst_z, mut null_nonzero) = (0.0f64, 0.0f64, 0);
    for (k, d) in [3usize, 5, 8, 10].iter().copied().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(70 + k as u64);
        let mut net = Network::init(NetworkConfig::plain(
            vec![d, 8, 4, 1],
            vec![Activation::Tanh, Activation::Relu],
            k as u64,
        ))
        .unwrap();
        // feature d-1 is ignored: zero its first-layer weights
        for o in 0..8 {
            net.params_mut()[o * d + d - 1] = 0.0;
        }
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..40).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let bg = table_from(&cols, vec![0; 40]);
        for _ in 0..3 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let exact = shapley_exact(&net, &x, &bg).unwrap();
            worst_gap = worst_gap.max(exact.efficiency_gap().abs());
            if exact.values[d - 1] != 0.0 {
                null_nonzero += 1;
            }
            let mc = shapley_mc(&net, &x, &bg, 2000, rng.random()).unwrap();
            let se = mc.std_errors.unwrap();
            for j in 0..d {
                let diff = (mc.values[j] - exact.values[j]).abs();
                let z = if se[j] > 0.0 {
                    diff / se[j]
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst_z = worst_z.max(z);
            }
        }
    }
    verdict(
        worst_gap < 1e-10 && worst_z <= 4.0 && null_nonzero == 0,
        format!("efficiency gap {worst_gap:.1e}, worst MC deviation {worst_z:.2} se (d up to 10), {null_nonzero} nonzero null players"),
    )
}

// 8. end-to-end benchmark

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let mut spec = default_spec();
    spec.seed = 8;
    let data = generate(&spec, 50_000).unwrap();
    let (train_raw, test_raw) = split(&data, 0.8, 8).unwrap();
    let (train_s, test_s, _) = standardize(&train_raw, &test_raw).unwrap();
    let labels = test_s.labels();
    let bayes = auc(&scored(&label_probabilities(&spec, &test_raw).unwrap(), labels), TiePolicy::Strict).unwrap();

    let cfg = NetworkConfig::churn_default(train_s.n_cols(), 8);
    let net = train(&train_s, &cfg).unwrap().network;
    let net_auc = auc(&scored(&net.predict_table(&test_s).unwrap(), labels), TiePolicy::Strict).unwrap();
    let logit = fit_logistic(&train_s, &LogisticConfig::default()).unwrap().model;
    let logit_auc = auc(&scored(&logit.predict_table(&test_s).unwrap(), labels), TiePolicy::Strict).unwrap();

    let balanced = smote(&train_s, &SmoteConfig::new(9)).unwrap().table;
    let smote_net = train(&balanced, &cfg).unwrap().network;
    let smote_auc = auc(&scored(&smote_net.predict_table(&test_s).unwrap(), labels), TiePolicy::Strict).unwrap();

    let g = spec.graph().unwrap();
    let tenure = estimate_ate_linear(&data, &g, "acc_tenure", "churn").unwrap().ate;
    let sg = estimate_ate_linear(&data, &g, "sg_recency", "churn").unwrap().ate;
    let elapsed = start.elapsed();
    verdict(
        net_auc >= bayes - 0.05
            && net_auc >= logit_auc - 0.01
            && tenure < 0.0
            && sg > 0.0
            && elapsed < Duration::from_secs(300),
        format!(
            "network auc {net_auc:.4}, bayes {bayes:.4}, logistic {logit_auc:.4}; tenure effect {tenure:.4}, sg_recency effect {sg:.4}; \
             (with SMOTE: network auc {smote_auc:.4}); {:.0}s",
            elapsed.as_secs_f64()
        ),
    )
}

// 9. CLI determinism

fn run(out: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_churnkit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_9() -> Verdict {
    let steps: [(&str, &[&str]); 6] = [
        ("synth", &["synth", "--default", "--n", "3000", "--seed", "9", "--mc-draws", "20000"]),
        ("train", &["train", "--seed", "9"]),
        ("evaluate", &["evaluate"]),
        ("causal", &["causal", "--seed", "9", "--treatment", "acc_tenure", "--outcome", "churn"]),
        ("explain", &["explain", "--seed", "9", "--sample", "4", "--mc", "300"]),
        ("explain --global", &["explain", "--seed", "9", "--global", "--rows", "20"]),
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut differing = Vec::new();
    let mut files = 0;
    for (name, args) in steps {
        let snaps: Vec<_> = dirs
            .iter()
            .map(|d| {
                let ok = run(d.path(), args);
                (ok, snapshot(d.path()))
            })
            .collect();
        if !snaps[0].0 || !snaps[1].0 {
            return verdict(false, format!("`{name}` exited with an error"));
        }
        files = snaps[0].1.len();
        if snaps[0].1 != snaps[1].1 {
            differing.push(name);
        }
    }
    verdict(
        differing.is_empty(),
        format!("5 commands (6 invocations) run twice, {files} output files compared, differing after: {differing:?}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("gradient correctness", criterion_1),
        ("AUC oracle equivalence", criterion_2),
        ("SMOTE contract", criterion_3),
        ("d-separation / backdoor oracle", criterion_4),
        ("ATE recovery", criterion_5),
        ("RCC refutation stability", criterion_6),
        ("Shapley", criterion_7),
        ("end-to-end benchmark", criterion_8),
        ("CLI determinism", criterion_9),
    ];
    let results: Vec<Verdict> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(*f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| verdict(false, "panicked".into())))
            .collect()
    });
    let mut failed = 0;
    for (k, ((name, _), v)) in criteria.iter().zip(&results).enumerate() {
        println!("criterion {} [{}] {name}: {}", k + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
