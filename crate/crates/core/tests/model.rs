use proptest::prelude::*;
use qnn_core::gradients::{finite_diff_gradient, FiniteDiffConfig};
use qnn_core::model::{
    fit, hybrid_loss_gradient, mse_loss, predict, sgd_step, Activation, Dataset, DenseLayer, HybridRegressor,
    InputScale, MiddleLayer, ModelVariant, PhotonicLayerConfig, QuantumLayer, QuantumLayerConfig, TargetScale,
    TrainConfig,
};
use qnn_core::QnnError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rows(rng: &mut ChaCha8Rng, n: usize, width: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..width).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn identity_rig(variant: ModelVariant, seed: u64) -> HybridRegressor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clayer_in = DenseLayer::init(3, 2, Activation::Linear, &mut rng);
    let clayer_out = DenseLayer::init(2, 1, Activation::Linear, &mut rng);
    HybridRegressor::new(variant, clayer_in, MiddleLayer::Identity(2), clayer_out).unwrap()
}

fn toy_quantum(w: f64, v: f64) -> HybridRegressor {
    let q = QuantumLayer::new(QuantumLayerConfig::new(1, 0), vec![]).unwrap();
    HybridRegressor::new(
        ModelVariant::Hybrid,
        DenseLayer::new(vec![vec![w]], vec![0.0], Activation::Linear).unwrap(),
        MiddleLayer::Quantum(q),
        DenseLayer::new(vec![vec![v]], vec![0.0], Activation::Linear).unwrap(),
    )
    .unwrap()
}

#[test]
fn zero_weights_give_zero_output() {
    let mut m = HybridRegressor::hybrid(3, QuantumLayerConfig::new(3, 1), 1).unwrap();
    let zeros = vec![0.0; m.n_params()];
    m.set_params(&zeros).unwrap();
    assert_eq!(m.forward(&[0.4, -1.2, 2.0]).unwrap(), 0.0);

    // With only the output bias set, every prediction is that bias.
    m.clayer_out.bias[0] = 1.75;
    let data = Dataset::new(vec![vec![0.1, 0.2, 0.3], vec![-3.0, 0.0, 1.0]], vec![0.0, 0.0]).unwrap();
    assert_eq!(predict(&m, &data).unwrap().predicted, vec![1.75, 1.75]);
}

#[test]
fn identity_middle_composes_dense_layers() {
    let m = identity_rig(ModelVariant::ClassicalOnly, 3);
    let x = [0.3, -0.7, 1.1];
    let direct = m.clayer_out.forward(&m.clayer_in.forward(&x).unwrap()).unwrap()[0];
    assert_eq!(m.forward(&x).unwrap(), direct);
}

#[test]
fn single_wire_toy_is_v_cos_wx() {
    let (w, v) = (0.7, -1.3);
    let m = toy_quantum(w, v);
    for x in [-2.0, -0.5, 0.0, 0.9, 3.0] {
        let expected = v * f64::cos(w * x);
        assert!((m.forward(&[x]).unwrap() - expected).abs() < 1e-12);
    }
}

#[test]
fn shape_mismatch_is_a_contract_error() {
    let m = HybridRegressor::hybrid(3, QuantumLayerConfig::new(3, 1), 1).unwrap();
    assert!(matches!(m.forward(&[1.0, 2.0]), Err(QnnError::Contract(_))));
    let q = QuantumLayer::new(QuantumLayerConfig::new(2, 1), vec![0.0; 6]).unwrap();
    let bad = HybridRegressor::new(
        ModelVariant::Hybrid,
        DenseLayer::zeros(3, 3, Activation::Linear),
        MiddleLayer::Quantum(q),
        DenseLayer::zeros(2, 1, Activation::Linear),
    );
    assert!(bad.is_err());
}

#[test]
fn mse_examples() {
    assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert_eq!(mse_loss(&[2.0, 2.0], &[0.0, 0.0]).unwrap(), 4.0);
    assert_eq!(mse_loss(&[1.0], &[0.0]).unwrap(), 1.0);
    assert!(mse_loss(&[], &[]).is_err());
    assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn sgd_examples() {
    assert!((sgd_step(&[1.0], &[0.5], 0.08).unwrap()[0] - 0.96).abs() < 1e-15);
    assert_eq!(sgd_step(&[1.0, -2.0], &[0.0, 0.0], 0.08).unwrap(), vec![1.0, -2.0]);
    assert_eq!(sgd_step(&[1.0, -2.0], &[3.0, 4.0], 0.0).unwrap(), vec![1.0, -2.0]);
    assert!(sgd_step(&[1.0], &[1.0, 2.0], 0.1).is_err());
}

#[test]
fn identity_rig_gradient_is_linear_regression_gradient() {
    let m = identity_rig(ModelVariant::Hybrid, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let xs = random_rows(&mut rng, 6, 3);
    let ys: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let g = hybrid_loss_gradient(&m, &xs, &ys).unwrap();

    // Closed form for y = v·(W·x + b) + c.
    let (w, b) = (&m.clayer_in.weights, &m.clayer_in.bias);
    let v = &m.clayer_out.weights[0];
    let mut expected = vec![0.0; m.n_params()];
    for (x, y) in xs.iter().zip(&ys) {
        let h: Vec<f64> = (0..2).map(|i| w[i].iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b[i]).collect();
        let r = 2.0 * (v[0] * h[0] + v[1] * h[1] + m.clayer_out.bias[0] - y) / xs.len() as f64;
        for i in 0..2 {
            for j in 0..3 {
                expected[i * 3 + j] += r * v[i] * x[j];
            }
            expected[6 + i] += r * v[i];
            expected[8 + i] += r * h[i];
        }
        expected[10] += r;
    }
    for (a, e) in g.iter().zip(&expected) {
        assert!((a - e).abs() < 1e-10, "{a} vs {e}");
    }
}

#[test]
fn zero_residual_gives_zero_gradient() {
    let m = HybridRegressor::hybrid(3, QuantumLayerConfig::new(3, 1), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xs = random_rows(&mut rng, 4, 3);
    let ys: Vec<f64> = xs.iter().map(|x| m.forward(x).unwrap()).collect();
    assert!(hybrid_loss_gradient(&m, &xs, &ys).unwrap().iter().all(|g| g.abs() < 1e-10));
}

fn batch_loss(m: &HybridRegressor, params: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> f64 {
    let mut m = m.clone();
    m.set_params(params).unwrap();
    let preds: Vec<f64> = xs.iter().map(|x| m.forward(x).unwrap()).collect();
    mse_loss(&preds, ys).unwrap()
}

fn assert_matches_finite_difference(m: &HybridRegressor, xs: &[Vec<f64>], ys: &[f64], rel: f64) {
    let g = hybrid_loss_gradient(m, xs, ys).unwrap();
    let fd = finite_diff_gradient(|p| batch_loss(m, p, xs, ys), &m.params(), &FiniteDiffConfig::default()).unwrap();
    for (i, (a, e)) in g.iter().zip(&fd).enumerate() {
        // Relative to max(|g|, 1) so coordinates with vanishing gradient are judged absolutely.
        assert!((a - e).abs() <= rel * e.abs().max(1.0), "coordinate {i}: {a} vs {e}");
    }
}

#[test]
fn hybrid_gradient_matches_full_finite_difference() {
    let m = HybridRegressor::hybrid(3, QuantumLayerConfig::new(3, 1), 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let xs = random_rows(&mut rng, 5, 3);
    let ys: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert_matches_finite_difference(&m, &xs, &ys, 1e-4);
}

#[test]
fn classical_and_photonic_gradients_match_finite_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let xs = random_rows(&mut rng, 3, 3);
    let ys: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert_matches_finite_difference(&HybridRegressor::classical(3, 3, 5).unwrap(), &xs, &ys, 1e-4);

    let mut cfg = PhotonicLayerConfig::new(2);
    cfg.fock.cutoff = 10;
    let m = HybridRegressor::photonic(3, cfg, 6).unwrap();
    // The photonic layer is itself differentiated numerically, so agreement is looser.
    assert_matches_finite_difference(&m, &xs, &ys, 1e-3);
}

#[test]
fn gradient_is_linear_in_the_loss() {
    let m = HybridRegressor::hybrid(2, QuantumLayerConfig::new(2, 1), 30).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let xs = random_rows(&mut rng, 4, 2);
    let ys: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // Batch-mean gradient over the union is the size-weighted mean of the halves.
    let g_all = hybrid_loss_gradient(&m, &xs, &ys).unwrap();
    let g_a = hybrid_loss_gradient(&m, &xs[..1], &ys[..1]).unwrap();
    let g_b = hybrid_loss_gradient(&m, &xs[1..], &ys[1..]).unwrap();
    for i in 0..g_all.len() {
        assert!((g_all[i] - (0.25 * g_a[i] + 0.75 * g_b[i])).abs() < 1e-10);
    }
}

#[test]
fn zero_learning_rate_keeps_loss_constant() {
    let mut m = HybridRegressor::hybrid(2, QuantumLayerConfig::new(2, 1), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = Dataset::new(random_rows(&mut rng, 7, 2), (0..7).map(|i| i as f64 * 0.1).collect()).unwrap();
    let cfg = TrainConfig {
        epochs: 4,
        learning_rate: 0.0,
        batch_size: 3,
        seed: 2,
        shots: None,
        normalize_targets: false,
        scale_inputs: false,
    };
    let r = fit(&mut m, &data, Some(&data), &cfg).unwrap();
    assert_eq!(r.train_loss.len(), 4);
    assert_eq!(r.val_loss.len(), 4);
    assert!(r.train_loss.iter().all(|l| (l - r.initial_train_loss).abs() < 1e-12));
}

#[test]
fn single_sample_toy_converges() {
    let mut m = toy_quantum(0.8, 0.5);
    let data = Dataset::new(vec![vec![0.6]], vec![1.2]).unwrap();
    let cfg = TrainConfig {
        epochs: 50,
        learning_rate: 0.08,
        batch_size: 5,
        seed: 1,
        shots: None,
        normalize_targets: false,
        scale_inputs: false,
    };
    let r = fit(&mut m, &data, None, &cfg).unwrap();
    for w in r.train_loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-15, "{} -> {}", w[0], w[1]);
    }
    assert!(*r.train_loss.last().unwrap() < 0.1 * r.initial_train_loss);
    let residual = predict(&m, &data).unwrap().mse().unwrap();
    assert!((residual - r.train_loss.last().unwrap()).abs() < 1e-9);
}

#[test]
fn fit_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let data = Dataset::new(random_rows(&mut rng, 12, 3), (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        learning_rate: 0.08,
        batch_size: 5,
        seed: 40,
        shots: None,
        normalize_targets: false,
        scale_inputs: false,
    };
    let run = || {
        let mut m = HybridRegressor::hybrid(3, QuantumLayerConfig::new(3, 1), 40).unwrap();
        let r = fit(&mut m, &data, Some(&data), &cfg).unwrap();
        (r.train_loss, r.val_loss, r.final_params)
    };
    let (a, b) = (run(), run());
    assert_eq!(
        a.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.0.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(a, b);
}

#[test]
fn variants_share_the_training_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let data = Dataset::new(random_rows(&mut rng, 9, 3), (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let cfg = TrainConfig {
        epochs: 3,
        learning_rate: 0.05,
        batch_size: 2,
        seed: 50,
        shots: None,
        normalize_targets: false,
        scale_inputs: false,
    };
    let mut a = identity_rig(ModelVariant::Hybrid, 51);
    let mut b = identity_rig(ModelVariant::ClassicalOnly, 51);
    let ra = fit(&mut a, &data, None, &cfg).unwrap();
    let rb = fit(&mut b, &data, None, &cfg).unwrap();
    assert_eq!(ra.train_loss, rb.train_loss);
    assert_eq!(ra.final_params, rb.final_params);
}

#[test]
fn divergence_names_epoch_and_batch() {
    let mut m = HybridRegressor::classical(2, 2, 3).unwrap();
    let data = Dataset::new(vec![vec![1e3, -1e3]; 4], vec![1e6; 4]).unwrap();
    let cfg = TrainConfig {
        epochs: 50,
        learning_rate: 10.0,
        batch_size: 2,
        seed: 0,
        shots: None,
        normalize_targets: false,
        scale_inputs: false,
    };
    match fit(&mut m, &data, None, &cfg) {
        Err(QnnError::TrainingDiverged { epoch, batch }) => assert!(epoch >= 1 && batch >= 1),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn invalid_train_config_rejected() {
    let mut m = HybridRegressor::classical(1, 1, 0).unwrap();
    let data = Dataset::new(vec![vec![1.0]], vec![1.0]).unwrap();
    for cfg in [
        TrainConfig { epochs: 0, ..TrainConfig::default() },
        TrainConfig { batch_size: 0, ..TrainConfig::default() },
        TrainConfig { learning_rate: f64::NAN, ..TrainConfig::default() },
        TrainConfig { shots: Some(0), ..TrainConfig::default() },
    ] {
        assert!(fit(&mut m, &data, None, &cfg).is_err());
    }
    let d = TrainConfig::default();
    assert_eq!((d.epochs, d.learning_rate, d.batch_size), (25, 0.08, 5));
}

#[test]
fn sampled_forward_approaches_exact() {
    let m = HybridRegressor::hybrid(2, QuantumLayerConfig::new(2, 1), 12).unwrap();
    let x = [0.3, -0.4];
    let exact = m.forward(&x).unwrap();
    let sampled = m.forward_sampled(&x, 200_000, 5).unwrap();
    let scale: f64 = m.clayer_out.weights[0].iter().map(|w| w.abs()).sum();
    assert!((exact - sampled).abs() < 0.02 * scale.max(1.0));
}

#[test]
fn photonic_six_modes_exceed_default_budget() {
    assert!(matches!(
        HybridRegressor::photonic(6, PhotonicLayerConfig::new(6), 0),
        Err(QnnError::ResourceLimit { .. })
    ));
    assert!(HybridRegressor::photonic(3, PhotonicLayerConfig::new(3), 0).is_ok());
}

#[test]
fn input_scale_maps_training_range_to_unit_box() {
    let rows = vec![vec![2.0, -1.0, 5.0], vec![6.0, 3.0, 5.0], vec![4.0, 0.0, 5.0]];
    let s = InputScale::fit(&rows).unwrap();
    assert_eq!(s.apply(&rows[0]).unwrap(), vec![-1.0, -1.0, 0.0]);
    assert_eq!(s.apply(&rows[1]).unwrap(), vec![1.0, 1.0, 0.0]);
    assert_eq!(s.apply(&rows[2]).unwrap(), vec![0.0, -0.5, 0.0]);
    assert!(s.apply(&[1.0]).is_err());
    assert!(InputScale::default().is_identity());
    assert!(InputScale::fit(&[]).is_err());
}

#[test]
fn target_scale_fit() {
    let t = TargetScale::fit(&[1.0, 3.0]).unwrap();
    assert_eq!((t.mean, t.std), (2.0, 1.0));
    assert!(matches!(TargetScale::fit(&[4.0, 4.0]), Err(QnnError::ZeroVariance { .. })));
}

#[test]
fn scaled_gradient_is_gradient_of_scaled_loss() {
    let mut m = HybridRegressor::hybrid(3, QuantumLayerConfig::new(3, 1), 60).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.gen_range(-8.0..8.0)).collect()).collect();
    let ys: Vec<f64> = (0..5).map(|_| rng.gen_range(10.0..40.0)).collect();
    m.input_scale = InputScale::fit(&xs).unwrap();
    m.target_scale = TargetScale::fit(&ys).unwrap();
    let std2 = m.target_scale.std.powi(2);
    let g = hybrid_loss_gradient(&m, &xs, &ys).unwrap();
    let fd = finite_diff_gradient(|p| batch_loss(&m, p, &xs, &ys) / std2, &m.params(), &FiniteDiffConfig::default())
        .unwrap();
    for (i, (a, e)) in g.iter().zip(&fd).enumerate() {
        assert!((a - e).abs() <= 1e-4 * e.abs().max(1.0), "coordinate {i}: {a} vs {e}");
    }
}

#[test]
fn fit_with_scaling_reports_loss_in_target_units() {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let x: Vec<Vec<f64>> = (0..20).map(|_| (0..2).map(|_| rng.gen_range(-30.0..30.0)).collect()).collect();
    let y: Vec<f64> = x.iter().map(|r| 100.0 + 0.5 * r[0] - 0.2 * r[1]).collect();
    let data = Dataset::new(x, y).unwrap();
    let mut m = HybridRegressor::classical(2, 2, 71).unwrap();
    let cfg =
        TrainConfig { epochs: 30, normalize_targets: true, scale_inputs: true, seed: 3, ..TrainConfig::default() };
    let r = fit(&mut m, &data, None, &cfg).unwrap();
    assert!(!m.input_scale.is_identity());
    assert!((m.target_scale.mean - data.y.iter().sum::<f64>() / 20.0).abs() < 1e-12);
    let reported = *r.train_loss.last().unwrap();
    assert!((predict(&m, &data).unwrap().mse().unwrap() - reported).abs() < 1e-9);
    assert!(reported < 0.05 * r.initial_train_loss, "{} -> {reported}", r.initial_train_loss);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantum_outputs_lie_in_unit_box(seed in any::<u64>(), x in proptest::collection::vec(-5.0f64..5.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = QuantumLayer::init(QuantumLayerConfig::new(3, 2), &mut rng).unwrap();
        for z in q.forward(&x).unwrap() {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
        }
    }
}
