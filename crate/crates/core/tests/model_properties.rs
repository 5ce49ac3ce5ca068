use accepted::model::{feature_importance, save_model, train, Dataset, GbdtEnsemble, GbdtParams, TreeNode};
use accepted::scalar::sigmoid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, features: usize, levels: u32) -> Dataset<f64> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..features).map(|_| f64::from(rng.gen_range(0..levels)) / 2.0).collect())
        .collect();
    let mut labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + rng.gen_range(-2.0..2.0) > 1.0)).collect();
    labels[0] = 0;
    labels[1] = 1;
    Dataset::new((0..features).map(|i| format!("x{i}")).collect(), &rows, labels).unwrap()
}

/// Every feature, every midpoint between consecutive distinct values,
/// sums taken directly over the rows on each side.
fn oracle_split(data: &Dataset<f64>, lambda: f64) -> Option<(usize, f64, f64)> {
    let pos = data.labels().iter().filter(|&&y| y == 1).count() as f64;
    let p = sigmoid((pos / (data.len() as f64 - pos)).ln());
    let g: Vec<f64> = data.labels().iter().map(|&y| p - f64::from(y)).collect();
    let h = p * (1.0 - p);
    let score = |g: f64, h: f64| g * g / (h + lambda);
    let total = score(g.iter().sum(), h * data.len() as f64);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..data.n_features() {
        let mut values: Vec<f64> = (0..data.len()).map(|r| data.value(r, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<usize> = (0..data.len()).filter(|&r| data.value(r, f) < t).collect();
            let gl: f64 = left.iter().map(|&r| g[r]).sum();
            let gr: f64 = g.iter().sum::<f64>() - gl;
            let hl = h * left.len() as f64;
            let hr = h * (data.len() - left.len()) as f64;
            let gain = 0.5 * (score(gl, hl) + score(gr, hr) - total);
            if gain > 0.0 && best.map_or(true, |b| gain > b.2) {
                best = Some((f, t, gain));
            }
        }
    }
    best
}

#[test]
fn depth_one_split_matches_exhaustive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let params = GbdtParams {
        eta: 1.0,
        max_depth: 1,
        min_child_weight: 0.0,
        gamma: 0.0,
        colsample_bytree: 1.0,
        num_parallel_tree: 1,
        lambda: 1.0,
        num_rounds: 1,
        seed: 5,
    };
    for case in 0..60 {
        let n = rng.gen_range(4..=64);
        let data = random_dataset(&mut rng, n, 3, 9);
        let model = train(&data, &params).unwrap();
        let expected = oracle_split(&data, params.lambda);
        match (&model.rounds[0][0], expected) {
            (TreeNode::Split { feature, threshold, .. }, Some((f, t, _))) => {
                assert_eq!((*feature, *threshold), (f, t), "case {case}");
            }
            (TreeNode::Leaf { .. }, None) => {}
            (tree, oracle) => panic!("case {case}: tree {tree:?}, oracle {oracle:?}"),
        }
    }
}

fn mean_log_loss(model: &GbdtEnsemble<f64>, data: &Dataset<f64>) -> f64 {
    (0..data.len())
        .map(|i| {
            let p = model.probability(data.row(i)).unwrap();
            if data.labels()[i] == 1 {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum::<f64>()
        / data.len() as f64
}

#[test]
fn training_loss_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let data = random_dataset(&mut rng, 300, 6, 20);
        let params = GbdtParams {
            gamma: 0.0,
            min_child_weight: 0.0,
            max_depth: 4,
            num_rounds: 20,
            ..GbdtParams::default()
        };
        let model = train(&data, &params).unwrap();
        let losses: Vec<f64> = (0..=params.num_rounds).map(|r| mean_log_loss(&model.truncated(r), &data)).collect();
        for pair in losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{losses:?}");
        }
    }
}

fn model_bytes(data: &Dataset<f64>, params: &GbdtParams, threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let model = pool.install(|| train(data, params).unwrap());
    let mut out = Vec::new();
    save_model(&model, &mut out).unwrap();
    out
}

#[test]
fn training_is_reproducible_across_thread_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = random_dataset(&mut rng, 400, 10, 50);
    let params = GbdtParams { num_rounds: 10, gamma: 1.0, ..GbdtParams::default() };
    let single = model_bytes(&data, &params, 1);
    assert_eq!(single, model_bytes(&data, &params, 4));
    assert_eq!(single, model_bytes(&data, &params, 1));
    let other_seed = model_bytes(&data, &GbdtParams { seed: 43, ..params }, 1);
    assert_ne!(single, other_seed);
}

#[test]
fn importance_sums_to_internal_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data = random_dataset(&mut rng, 300, 8, 30);
    let model = train(&data, &GbdtParams { num_rounds: 8, gamma: 0.5, ..GbdtParams::default() }).unwrap();
    let nodes: usize = model.trees().map(TreeNode::internal_nodes).sum();
    let table = feature_importance(&model);
    assert!(nodes > 0);
    assert_eq!(table.total(), nodes as u64);
    assert!(table.entries.windows(2).all(|w| w[0].count > w[1].count || (w[0].count == w[1].count && w[0].index < w[1].index)));
}

#[test]
fn predictions_stay_in_open_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let data = random_dataset(&mut rng, 200, 4, 40);
    let model = train(&data, &GbdtParams { num_rounds: 30, gamma: 0.0, min_child_weight: 0.0, ..GbdtParams::default() }).unwrap();
    for i in 0..data.len() {
        let p = model.probability(data.row(i)).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}
