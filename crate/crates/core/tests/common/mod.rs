//! Oracle checks shared by the integration tests and the acceptance report.
//! Each returns a one-line summary on success and a diagnostic on failure.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use udrl_core::env::{EnvKind, State};
use udrl_core::eval::{global_mdi, local_path_importance};
use udrl_core::models::adaboost::AdaBoostEnsemble;
use udrl_core::models::config::{AdaBoostParams, MlpParams, TreeParams};
use udrl_core::models::dataset::Standardizer;
use udrl_core::models::mlp::MlpModel;
use udrl_core::models::tree::{DecisionTree, Node, TIE_TOLERANCE};
use udrl_core::models::{fit, fit_cart_tree, BehaviorFunction, Dataset, Family, ModelConfig, TrainedModel};
use udrl_core::udrl::{build_training_set, collect_episode, Command, Episode, ReplayBuffer, Transition};
use udrl_core::Result as CoreResult;

pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- CART oracle

/// Impurity decrease written out independently of the library.
fn oracle_decrease(labels_left: &[usize], labels_right: &[usize], n_classes: usize) -> f64 {
    let gini = |labels: &[usize]| {
        if labels.is_empty() {
            return 0.0;
        }
        let n = labels.len() as f64;
        let mut sq = 0.0;
        for c in 0..n_classes {
            let p = labels.iter().filter(|&&l| l == c).count() as f64 / n;
            sq += p * p;
        }
        1.0 - sq
    };
    let all: Vec<usize> = labels_left.iter().chain(labels_right).copied().collect();
    let n = all.len() as f64;
    gini(&all) - labels_left.len() as f64 / n * gini(labels_left) - labels_right.len() as f64 / n * gini(labels_right)
}

#[derive(Debug)]
pub struct OracleSplit {
    pub feature: usize,
    /// Threshold interval `[lo, hi)` between consecutive distinct values.
    pub lo: f64,
    pub hi: f64,
    pub decrease: f64,
}

/// Tries every feature and every cut between consecutive distinct values,
/// keeping the first strictly better candidate.
pub fn brute_force_split(data: &Dataset, rows: &[usize]) -> Option<OracleSplit> {
    let mut best: Option<OracleSplit> = None;
    for feature in 0..data.input_dim() {
        let mut values: Vec<f64> = rows.iter().map(|&i| data.inputs[i][feature]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| data.inputs[i][feature] <= lo);
            let l: Vec<usize> = left.iter().map(|&i| data.labels[i]).collect();
            let r: Vec<usize> = right.iter().map(|&i| data.labels[i]).collect();
            let decrease = oracle_decrease(&l, &r, data.n_classes);
            if best.as_ref().is_none_or(|b| decrease > b.decrease + TIE_TOLERANCE) {
                best = Some(OracleSplit { feature, lo, hi, decrease });
            }
        }
    }
    best
}

pub fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let n = rng.gen_range(5..=200);
    let d = rng.gen_range(1..=5);
    let k = rng.gen_range(2..=3);
    // half the datasets use a coarse grid so that ties and repeats are common
    let coarse = rng.gen_bool(0.5);
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| if coarse { rng.gen_range(0..6) as f64 } else { rng.gen_range(-1.0..1.0) })
                .collect()
        })
        .collect();
    let labels = inputs
        .iter()
        .map(|x| {
            let signal = (x[0] * 2.0).round().rem_euclid(k as f64) as usize;
            if rng.gen_bool(0.3) { rng.gen_range(0..k) } else { signal }
        })
        .collect();
    Dataset::new(inputs, labels, k).unwrap()
}

/// Compares every node of an exhaustive CART tree with the brute-force
/// search on the samples reaching it.
pub fn cart_matches_brute_force(n_datasets: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut nodes_checked = 0;
    for ds in 0..n_datasets {
        let data = random_dataset(&mut rng);
        let tree = fit_cart_tree(&data, &TreeParams::cart(), 0).map_err(|e| e.to_string())?;
        let mut reaching: Vec<Vec<usize>> = vec![Vec::new(); tree.nodes.len()];
        for i in 0..data.len() {
            for node in tree.decision_path(&data.inputs[i]) {
                reaching[node].push(i);
            }
        }
        for (idx, node) in tree.nodes.iter().enumerate() {
            let rows = &reaching[idx];
            let oracle = brute_force_split(&data, rows);
            match (node, oracle) {
                (
                    Node::Split {
                        feature,
                        threshold,
                        impurity_decrease,
                        ..
                    },
                    Some(o),
                ) => {
                    if *feature != o.feature || !(o.lo <= *threshold && *threshold < o.hi) {
                        return Err(format!(
                            "dataset {ds} node {idx}: tree split f{feature} at {threshold}, oracle f{} in [{}, {})",
                            o.feature, o.lo, o.hi
                        ));
                    }
                    if (impurity_decrease - o.decrease.max(0.0)).abs() > 1e-12 {
                        return Err(format!("dataset {ds} node {idx}: decrease {impurity_decrease} vs {}", o.decrease));
                    }
                }
                (Node::Split { .. }, None) => return Err(format!("dataset {ds} node {idx}: split where none exists")),
                (Node::Leaf { .. }, Some(_)) => {
                    let classes: BTreeSet<usize> = rows.iter().map(|&i| data.labels[i]).collect();
                    if classes.len() > 1 {
                        return Err(format!("dataset {ds} node {idx}: impure leaf with an available split"));
                    }
                }
                (Node::Leaf { .. }, None) => {}
            }
            nodes_checked += 1;
        }
    }
    Ok(format!("{n_datasets} datasets, {nodes_checked} nodes match"))
}

// ------------------------------------------------------------ AdaBoost oracle

pub fn adaboost_hand_example() -> Check {
    let data = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1, 0], 2).unwrap();
    let (_, trace) = AdaBoostEnsemble::fit_traced(&data, &AdaBoostParams { n_stages: 1, max_depth: 1 });
    let round = &trace[0];
    let want_alpha = 3f64.ln();
    let want_w = [1.0 / 6.0, 1.0 / 6.0, 0.5, 1.0 / 6.0];
    let w_err = round.weights.iter().zip(want_w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if (round.error - 0.25).abs() > 1e-12 || (round.alpha - want_alpha).abs() > 1e-12 || w_err > 1e-12 {
        return Err(format!("error {} alpha {} weights {:?}", round.error, round.alpha, round.weights));
    }
    Ok(format!("err 0.25, alpha ln 3, weight error {w_err:.1e}"))
}

// ---------------------------------------------------------- MLP gradients

/// Central differences on a random subset of parameters for `draws` random
/// networks and batches. Returns the worst relative error.
pub fn mlp_gradient_check(draws: usize, seed: u64) -> Result<f64, String> {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for draw in 0..draws {
        let input_dim = rng.gen_range(2..=8);
        let n_classes = rng.gen_range(2..=4);
        let mut sizes = vec![input_dim];
        sizes.extend((0..rng.gen_range(1..=3)).map(|_| rng.gen_range(3..=64)));
        sizes.push(n_classes);
        let scaler = Standardizer {
            means: (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            stds: (0..input_dim).map(|_| rng.gen_range(0.5..2.0)).collect(),
        };
        let mut model = MlpModel::new(sizes, scaler, &MlpParams::default(), &mut rng);
        for w in model.weights.iter_mut() {
            *w += rng.gen_range(-0.1..0.1);
        }
        let batch_size = rng.gen_range(1..=16);
        let xs: Vec<Vec<f64>> = (0..batch_size)
            .map(|_| (0..input_dim).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let ys: Vec<usize> = (0..batch_size).map(|_| rng.gen_range(0..n_classes)).collect();
        let batch: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let (_, grad) = model.loss_and_gradient(&batch, &ys);
        let h = 1e-5;
        let n_params = model.weights.len();
        for _ in 0..60 {
            let i = rng.gen_range(0..n_params);
            let orig = model.weights[i];
            model.weights[i] = orig + h;
            let plus = model.loss_and_gradient(&batch, &ys).0;
            model.weights[i] = orig - h;
            let minus = model.loss_and_gradient(&batch, &ys).0;
            model.weights[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-6);
            if rel >= 1e-4 {
                return Err(format!("draw {draw} param {i}: analytic {} numeric {numeric} (rel {rel:.2e})", grad[i]));
            }
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

// --------------------------------------------------- predict_proba fuzzing

pub fn fuzz_models(seed: u64) -> Vec<TrainedModel> {
    let mut rng = rng(seed);
    let inputs: Vec<Vec<f64>> = (0..300).map(|_| (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let labels = inputs
        .iter()
        .map(|x| if x[0] > 0.5 { 2 } else if x[1] + x[5] > 0.0 { 1 } else { 0 })
        .collect();
    let data = Dataset::new(inputs, labels, 3).unwrap();
    Family::ALL
        .iter()
        .map(|&family| {
            let mut config = ModelConfig::new(family, seed);
            config.forest.n_trees = 20;
            config.gbt.n_rounds = 20;
            fit(&config, &data).unwrap()
        })
        .collect()
}

/// Every output of every family is a distribution within 1e-9.
pub fn proba_fuzz(n_queries: usize, seed: u64) -> Check {
    let models = fuzz_models(seed);
    let mut rng = rng(seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for q in 0..n_queries {
        let model = &models[q % models.len()];
        let scale = [1.0, 10.0, 1e3, 1e6][rng.gen_range(0..4)];
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-scale..scale)).collect();
        let p = model.predict_proba(&x).map_err(|e| e.to_string())?;
        if p.len() != 3 || p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(format!("{}: bad output {p:?} for {x:?}", model.family));
        }
        worst = worst.max((p.iter().sum::<f64>() - 1.0).abs());
        if worst > 1e-9 {
            return Err(format!("{}: sum deviates by {worst:e}", model.family));
        }
    }
    Ok(format!("{n_queries} queries over {} families, max |sum - 1| = {worst:.1e}", models.len()))
}

// ------------------------------------------------------ algorithm invariants

/// A deterministic but state-dependent stand-in for a trained model.
pub struct HashPolicy {
    pub dim: usize,
    pub n_actions: usize,
}

impl BehaviorFunction for HashPolicy {
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn n_classes(&self) -> usize {
        self.n_actions
    }
    fn predict_proba(&self, x: &[f64]) -> CoreResult<Vec<f64>> {
        let h = x.iter().fold(0u64, |h, v| h.rotate_left(7) ^ v.to_bits());
        let mut p = vec![0.0; self.n_actions];
        p[(h % self.n_actions as u64) as usize] = 1.0;
        Ok(p)
    }
    fn family_name(&self) -> &str {
        "hash"
    }
}

pub fn command_rule_fuzz(n_episodes: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut steps = 0;
    for ep in 0..n_episodes {
        let kind = EnvKind::ALL[ep % 3];
        let spec = kind.spec();
        let policy = HashPolicy {
            dim: spec.input_dim(),
            n_actions: spec.action_count,
        };
        let model: Option<&dyn BehaviorFunction> = if rng.gen_bool(0.2) { None } else { Some(&policy) };
        let command = Command::new(rng.gen_range(-300.0..300.0), rng.gen_range(0..600));
        let epsilon = rng.gen_range(0.0..=1.0);
        let episode = collect_episode(kind, model, command, epsilon, &mut rng).map_err(|e| e.to_string())?;
        if episode.transitions[0].command != command {
            return Err(format!("episode {ep}: first command altered"));
        }
        for (t, pair) in episode.transitions.windows(2).enumerate() {
            let expected = pair[0].command.advance(pair[0].reward);
            let got = pair[1].command;
            let want_dt = pair[0].command.d_t.saturating_sub(1).max(1);
            if got != expected || got.d_r != pair[0].command.d_r - pair[0].reward || got.d_t != want_dt {
                return Err(format!("episode {ep} step {t}: {:?} then {got:?}", pair[0].command));
            }
        }
        let sum: f64 = episode.rewards().sum();
        if sum != episode.total_return || episode.len() > spec.max_steps {
            return Err(format!("episode {ep}: return or length inconsistent"));
        }
        steps += episode.len();
    }
    Ok(format!("{n_episodes} episodes, {steps} steps"))
}

fn one_hot(s: usize) -> State {
    let mut v = vec![0.0; 4];
    v[s] = 1.0;
    State(v)
}

/// The two episodes of the four-state example: s0 -a1/+2-> s1 -a3/-1-> s3
/// and s0 -a2/+1-> s2. Actions a1, a2, a3 are classes 0, 1, 2.
pub fn example_mdp_episodes() -> Vec<Episode> {
    let tr = |s, a, r| Transition {
        state: one_hot(s),
        action: a,
        reward: r,
        command: Command::new(0.0, 1),
    };
    vec![
        Episode::new(vec![tr(0, 0, 2.0), tr(1, 2, -1.0)], 0),
        Episode::new(vec![tr(0, 1, 1.0)], 1),
    ]
}

/// `(state index, d_r, d_t, action)` rows of the tabulated behavior function.
pub const BEHAVIOR_TABLE: [(usize, i64, i64, usize); 4] = [(0, 2, 1, 0), (0, 1, 1, 1), (0, 1, 2, 0), (1, -1, 1, 2)];

/// Rows produced by trailing segments of the example episodes.
pub fn trailing_rows() -> BTreeSet<(usize, i64, i64, usize)> {
    let mut buffer = ReplayBuffer::new(10);
    for e in example_mdp_episodes() {
        buffer.push(e);
    }
    // enough draws to see every start index
    let data = build_training_set(&buffer, 64, 3, &mut rng(0)).unwrap();
    data.inputs
        .iter()
        .zip(&data.labels)
        .map(|(x, &a)| {
            let s = x[..4].iter().position(|&v| v == 1.0).unwrap();
            (s, x[4] as i64, x[5] as i64, a)
        })
        .collect()
}

pub fn table_construction_check() -> Check {
    let produced = trailing_rows();
    let table: BTreeSet<_> = BEHAVIOR_TABLE.into_iter().collect();
    let expected: BTreeSet<_> = [(0, 1, 2, 0), (1, -1, 1, 2), (0, 1, 1, 1)].into_iter().collect();
    if produced != expected || !produced.is_subset(&table) {
        return Err(format!("trailing rows {produced:?}"));
    }
    let missing: Vec<_> = table.difference(&produced).collect();
    Ok(format!("3 of 4 rows are trailing segments; {missing:?} needs a non-trailing segment"))
}

fn tagged_episode(ret: f64, id: u64) -> Episode {
    Episode::new(
        vec![Transition {
            state: State(vec![0.0]),
            action: 0,
            reward: ret,
            command: Command::new(0.0, 1),
        }],
        id,
    )
}

/// Buffer contents after random pushes equal the `capacity` best episodes
/// by (return, recency).
pub fn buffer_sort_oracle(n_pushes: usize, seed: u64) -> Check {
    let mut rng = rng(seed);
    let mut trials = 0;
    let mut pushed = 0;
    while pushed < n_pushes {
        let capacity = rng.gen_range(1..=40);
        let mut buffer = ReplayBuffer::new(capacity);
        let mut all: Vec<(f64, u64)> = Vec::new();
        for _ in 0..rng.gen_range(1..=100).min(n_pushes - pushed) {
            let ret = rng.gen_range(-5..=5) as f64 * 10.0;
            let id = pushed as u64;
            buffer.push(tagged_episode(ret, id));
            all.push((ret, id));
            pushed += 1;

            let mut oracle = all.clone();
            oracle.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.cmp(&a.1)));
            oracle.truncate(capacity);
            let best: Vec<(f64, u64)> = buffer.best(capacity).iter().map(|e| (e.total_return, e.seed)).collect();
            if best != oracle {
                return Err(format!("after push {pushed}: buffer {best:?} vs oracle {oracle:?}"));
            }
            let kept: BTreeSet<u64> = buffer.episodes().map(|e| e.seed).collect();
            let want: BTreeSet<u64> = oracle.iter().map(|o| o.1).collect();
            if kept != want {
                return Err(format!("after push {pushed}: retained set differs"));
            }
        }
        trials += 1;
    }
    Ok(format!("{pushed} pushes over {trials} buffers"))
}

// ------------------------------------------------------ importance checks

fn split_features(tree: &DecisionTree) -> BTreeSet<usize> {
    tree.nodes
        .iter()
        .filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
        .collect()
}

/// Non-negativity, normalization and exact zeros for unused features, for
/// both importance kinds of one forest over `n_queries` random inputs.
pub fn importance_properties(model: &TrainedModel, n_queries: usize, seed: u64) -> Check {
    let forest = model.as_forest().ok_or("not a forest")?;
    let used: BTreeSet<usize> = forest.trees.iter().flat_map(split_features).collect();
    let normalized = |s: &[f64]| {
        let total: f64 = s.iter().sum();
        s.iter().all(|v| *v >= 0.0) && ((total - 1.0).abs() < 1e-9 || (used.is_empty() && total == 0.0))
    };
    let global = global_mdi(model).map_err(|e| e.to_string())?;
    if !normalized(&global.scores) {
        return Err(format!("global scores {:?}", global.scores));
    }
    for (f, s) in global.scores.iter().enumerate() {
        if !used.contains(&f) && *s != 0.0 {
            return Err(format!("unused feature {f} has global score {s}"));
        }
    }
    let mut rng = rng(seed);
    for q in 0..n_queries {
        // draw around training-like magnitudes with occasional extremes
        let x: Vec<f64> = (0..model.input_dim)
            .map(|_| if rng.gen_bool(0.1) { rng.gen_range(-1e3..1e3) } else { rng.gen_range(-3.0..3.0) })
            .collect();
        let local = local_path_importance(model, &x).map_err(|e| e.to_string())?;
        let on_path: BTreeSet<usize> = forest
            .trees
            .iter()
            .flat_map(|t| {
                t.decision_path(&x).into_iter().filter_map(|i| match &t.nodes[i] {
                    Node::Split { feature, .. } => Some(*feature),
                    Node::Leaf { .. } => None,
                })
            })
            .collect();
        let total: f64 = local.scores.iter().sum();
        let ok_norm = local.scores.iter().all(|v| *v >= 0.0) && ((total - 1.0).abs() < 1e-9 || total == 0.0);
        if !ok_norm {
            return Err(format!("query {q}: local scores {:?}", local.scores));
        }
        for (f, s) in local.scores.iter().enumerate() {
            if !on_path.contains(&f) && *s != 0.0 {
                return Err(format!("query {q}: feature {f} off path but scored {s}"));
            }
        }
    }
    Ok(format!("{} features used, {n_queries} local queries", used.len()))
}
