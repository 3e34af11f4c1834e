use notewatch::classifier::{fit, primal_objective, train, TrainConfig};
use notewatch::corpus::Label;
use notewatch::features::{SparseVector, Vocabulary};
use notewatch_oracles::{svm_oracle, svm_primal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Toy {
    dense: Vec<Vec<f64>>,
    y: Vec<f64>,
    data: Vec<(SparseVector, Label)>,
}

fn toy(seed: u64, n: usize, d: usize, flip: f64) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    loop {
        let mut dense = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let side = x.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>() + 0.1 > 0.0;
            let side = if rng.random_bool(flip) { !side } else { side };
            dense.push(x);
            y.push(if side { 1.0 } else { -1.0 });
        }
        if y.contains(&1.0) && y.contains(&-1.0) {
            let data = dense
                .iter()
                .zip(&y)
                .map(|(x, &yi)| {
                    let v = SparseVector::from_pairs(x.iter().enumerate().map(|(i, &w)| (i as u32, w)).collect());
                    (v, if yi > 0.0 { Label::Positive } else { Label::Negative })
                })
                .collect();
            return Toy { dense, y, data };
        }
    }
}

fn tight() -> TrainConfig {
    TrainConfig { tolerance: 1e-9, max_epochs: 100_000, ..TrainConfig::default() }
}

#[test]
fn matches_reference_solver_on_random_toys() {
    for seed in 0..20 {
        let t = toy(seed, 10 + 4 * seed as usize, 2 + seed as usize % 4, 0.1);
        let cfg = tight();
        let ours = fit(&t.data, t.dense[0].len(), &cfg).unwrap();
        let reference = svm_oracle(&t.dense, &t.y, cfg.cost_c, cfg.positive_class_weight);
        assert!(reference.gap() < 1e-7, "oracle gap {} on seed {seed}", reference.gap());
        let ours_obj = svm_primal(&ours.weights, &t.dense, &t.y, cfg.cost_c, cfg.positive_class_weight);
        assert!(
            (ours_obj - reference.primal).abs() < 1e-6,
            "seed {seed}: {ours_obj} vs {}",
            reference.primal
        );
        assert!(ours.summary.objective - ours.summary.dual_objective < 1e-4);
    }
}

#[test]
fn dual_objective_non_decreasing_per_epoch() {
    for seed in 0..20 {
        let t = toy(100 + seed, 60, 3, 0.15);
        let s = fit(&t.data, 3, &tight()).unwrap();
        for w in s.epoch_duals.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "seed {seed}: {} then {}", w[0], w[1]);
        }
        for (p, d) in s.epoch_objectives.iter().zip(&s.epoch_duals) {
            assert!(p >= &(d - 1e-9));
        }
    }
}

#[test]
fn optimum_survives_coordinate_perturbation() {
    let t = toy(7, 40, 3, 0.1);
    let cfg = tight();
    let s = fit(&t.data, 3, &cfg).unwrap();
    let base = primal_objective(&s.weights, &t.data, &cfg);
    for j in 0..s.weights.len() {
        for delta in [1e-5, -1e-5] {
            let mut w = s.weights.clone();
            w[j] += delta;
            assert!(primal_objective(&w, &t.data, &cfg) >= base - 1e-9);
        }
    }
}

#[test]
fn large_cost_separates_separable_data() {
    let t = toy(3, 30, 2, 0.0);
    let cfg = TrainConfig { cost_c: 1e3, ..tight() };
    let vocab = Vocabulary::from_parts(vec![("a".into(), 1), ("b".into(), 1)], 30).unwrap();
    let m = train(&t.data, vocab, &cfg).unwrap();
    for (x, l) in &t.data {
        assert_eq!(m.predict(x).unwrap().label, *l);
    }
}

#[test]
fn positive_weight_helps_minority_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sample = |n_pos: usize, n_neg: usize| {
        let mut out = Vec::new();
        for (count, centre, label) in [(n_pos, 0.4, Label::Positive), (n_neg, -0.4, Label::Negative)] {
            for _ in 0..count {
                let x = centre + rng.random_range(-1.0..1.0);
                let y = rng.random_range(-1.0..1.0);
                out.push((SparseVector::from_pairs(vec![(0, x), (1, y)]), label));
            }
        }
        out
    };
    let train_set = sample(15, 85);
    let held_out = sample(200, 200);
    let recall = |weight: f64| {
        let cfg = TrainConfig { cost_c: 1.0, positive_class_weight: weight, ..TrainConfig::default() };
        let s = fit(&train_set, 2, &cfg).unwrap();
        let hits = held_out
            .iter()
            .filter(|(x, l)| {
                *l == Label::Positive && {
                    let score: f64 = x.entries().iter().map(|&(i, v)| s.weights[i as usize] * v).sum::<f64>() + s.weights[2];
                    score > 0.0
                }
            })
            .count();
        hits as f64 / 200.0
    };
    assert!(recall(2.0) >= recall(1.0));
}

#[test]
fn multipliers_respect_weighted_box() {
    let t = toy(5, 50, 2, 0.3);
    let cfg = TrainConfig { cost_c: 0.8, positive_class_weight: 2.0, ..tight() };
    let s = fit(&t.data, 2, &cfg).unwrap();
    let reference = svm_oracle(&t.dense, &t.y, 0.8, 2.0);
    for ((a, b), y) in s.alphas.iter().zip(&reference.alphas).zip(&t.y) {
        let bound = if *y > 0.0 { 1.6 } else { 0.8 };
        assert!(*a <= bound + 1e-12 && *b <= bound + 1e-9);
    }
}
