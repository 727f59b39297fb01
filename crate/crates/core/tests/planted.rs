//! Training runs on the planted tasks: the right structure learns, the
//! wrong structure cannot, and the search signals point the right way.

use tdnnas::numcore::{sgd_step, softmax, streams, Matrix, OptimState, Rng};
use tdnnas::search::{exhaustive_oracle, random_search, retrain, LrSchedule, SearchConfig, SplitData};
use tdnnas::supernet::{arch_grad_softmax, mixture_forward, LayerSpace, SearchSpace};
use tdnnas::tasks::{gen_lagged_product, gen_planted_bottleneck, BottleneckTask, Dataset};
use tdnnas::tdnnf::{CandidateSpec, Geometry, LayerChoice};

const LAG: usize = 2;

fn cfg() -> SearchConfig {
    SearchConfig {
        batch_size: 1,
        model_lr: 0.05,
        retrain_lr: Some(0.03),
        retrain_lr_schedule: LrSchedule::Linear,
        epochs_retrain: 3,
        ..SearchConfig::default()
    }
}

fn split(d: Dataset, heldout: usize) -> SplitData {
    let mut seqs = d.sequences;
    let h = seqs.split_off(seqs.len() - heldout);
    SplitData { train: seqs, heldout: h }
}

fn lagged(seed: u64, sequences: usize) -> (SplitData, Dataset) {
    let train = gen_lagged_product(seed, 0, LAG, sequences, 100, 8).unwrap();
    let test = gen_lagged_product(seed, 1, LAG, 100, 100, 8).unwrap();
    (split(train, sequences / 20), test)
}

fn geometry() -> Geometry {
    Geometry { input_dim: 8, hidden_dim: 32, classes: 2, bottleneck: 16 }
}

fn two_layers(a: (usize, usize), b: (usize, usize)) -> CandidateSpec {
    let l = |(left, right)| LayerChoice { left, right, dim: 16, skip: false };
    CandidateSpec { geometry: geometry(), layers: vec![l(a), l(b)] }
}

fn test_accuracy(spec: &CandidateSpec, data: &SplitData, test: &Dataset, cfg: &SearchConfig) -> f64 {
    retrain(spec, data, Some(&test.sequences), cfg, 0)
        .unwrap()
        .test
        .unwrap()
        .accuracy
}

#[test]
fn lagged_product_needs_both_taps() {
    let (data, test) = lagged(0, 400);
    let full = test_accuracy(&two_layers((2, 0), (0, 2)), &data, &test, &cfg());
    assert!(full > 0.95, "full context {full}");
    let short = test_accuracy(&two_layers((1, 0), (0, 2)), &data, &test, &cfg());
    assert!(short <= 0.55, "missing left lag {short}");
    let none = test_accuracy(&two_layers((0, 0), (0, 0)), &data, &test, &cfg());
    assert!((0.45..=0.55).contains(&none), "no context {none}");
}

#[test]
fn bottleneck_student_needs_teacher_rank() {
    let task = BottleneckTask { rank: 4, features: 8, classes: 4, teacher_hidden: 16 };
    let train = gen_planted_bottleneck(0, 0, &task, 400, 100).unwrap();
    let test = gen_planted_bottleneck(0, 1, &task, 100, 100).unwrap();
    let data = split(train, 20);
    let g = Geometry { input_dim: 8, hidden_dim: 32, classes: 4, bottleneck: 16 };
    let student = |dim| CandidateSpec {
        geometry: g,
        layers: vec![LayerChoice { left: 1, right: 1, dim, skip: false }],
    };
    let c = SearchConfig { epochs_retrain: 10, ..cfg() };
    let full = test_accuracy(&student(4), &data, &test, &c);
    assert!(full >= 0.9, "rank-matched student {full}");
    let half = test_accuracy(&student(2), &data, &test, &c);
    assert!(half <= 0.8, "half-rank student {half}");
}

/// Two mixed branches: one frozen at zero, one a trainable linear map whose
/// target is a fixed random map. Joint descent on the branch weights and
/// the softmax logits must move the mixture toward the useful branch.
fn functional_branch_weight(seed: u64) -> f64 {
    let mut rng = Rng::new(seed, streams::INIT);
    let (n, d) = (64, 6);
    let x = Matrix::from_fn(n, d, |_, _| rng.normal());
    let target_map = Matrix::from_fn(d, d, |_, _| rng.normal());
    let y = x.matmul(&target_map).unwrap();
    let mut w = Matrix::from_fn(d, d, |_, _| 0.01 * rng.normal());
    let mut log_alpha = vec![0.0, 0.0];
    let mut model_opt = OptimState::new(0.05, 0.9);
    let mut arch_opt = OptimState::new(0.05, 0.9);
    for _ in 0..300 {
        let lambda = softmax(&log_alpha).unwrap();
        let useful = x.matmul(&w).unwrap();
        let (h, cache) = mixture_forward(&lambda, vec![Matrix::zeros(n, d), useful]).unwrap();
        // L = ||h - y||² / (2n)
        let mut grad_h = h;
        for (g, t) in grad_h.data_mut().iter_mut().zip(y.data()) {
            *g = (*g - t) / n as f64;
        }
        let mut grad_w = Matrix::zeros(d, d);
        grad_w.add_matmul(lambda[1], &x.transpose(), &grad_h).unwrap();
        let grad_a = arch_grad_softmax(&grad_h, &cache).unwrap();
        sgd_step(&mut [w.data_mut()], &[grad_w.data()], &mut model_opt).unwrap();
        sgd_step(&mut [&mut log_alpha[..]], &[&grad_a[..]], &mut arch_opt).unwrap();
    }
    softmax(&log_alpha).unwrap()[1]
}

#[test]
fn mixture_prefers_the_functional_branch() {
    for seed in 0..5 {
        let w = functional_branch_weight(seed);
        assert!(w > 0.5, "seed {seed}: functional weight {w}");
    }
}

fn small_space() -> SearchSpace {
    SearchSpace::uniform(
        geometry(),
        2,
        LayerSpace { left: vec![0, 1, 2], right: vec![0, 1, 2], dims: vec![16], skip: vec![false] },
    )
}

#[test]
fn best_of_five_beats_one_draw() {
    let (mut best, mut single) = (0.0, 0.0);
    for seed in 0..10 {
        let (data, test) = lagged(seed, 200);
        let c = SearchConfig { seed, random_samples: 5, ..cfg() };
        let r = random_search(&small_space(), &data, Some(&test.sequences), &c).unwrap();
        best += r.winner().test.as_ref().unwrap().accuracy;
        single += r.samples[0].test.as_ref().unwrap().accuracy;
    }
    assert!(best >= single, "best-of-5 {} vs single {}", best / 10.0, single / 10.0);
}

#[test]
fn top_quartile_covers_both_lags() {
    let (data, test) = lagged(0, 200);
    let ranked = exhaustive_oracle(&small_space(), &data, Some(&test.sequences), &cfg()).unwrap();
    assert_eq!(ranked.len(), 81);
    for r in &ranked[..ranked.len() / 4] {
        let left: usize = r.spec.layers.iter().map(|l| l.left).sum();
        let right: usize = r.spec.layers.iter().map(|l| l.right).sum();
        assert!(left >= LAG && right >= LAG, "{:?} ranked {}", r.spec.layers, r.heldout.accuracy);
    }
}
