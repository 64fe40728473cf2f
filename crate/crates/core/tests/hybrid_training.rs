use hqnn::datasets::synthetic_generate;
use hqnn::hybrid::{evaluate, train, CnnConfig, ConvStage, HybridModel, ModelConfig, ModelKind, TrainConfig};
use hqnn::neural::Tensor;
use hqnn::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny(kind: ModelKind, seed: u64) -> HybridModel {
    let cfg = ModelConfig {
        kind,
        cnn: CnnConfig {
            stages: vec![ConvStage { channels: 2, kernel: 3, pool: true }],
            dense_units: 6,
        },
    };
    HybridModel::new(&cfg, [3, 8, 8], vec!["a".into(), "b".into()], seed).unwrap()
}

/// Max elementwise relative error between analytic and central-difference
/// gradients over every parameter of the model.
fn gradient_error(model: &HybridModel, image: &Tensor, label: usize) -> f64 {
    let analytic = model.backward(image, label, false).unwrap().grads;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let n_params = model.params().len();
    for p in 0..n_params {
        for i in 0..model.params()[p].len() {
            let mut plus = model.clone();
            plus.params_mut()[p].data_mut()[i] += h;
            let mut minus = model.clone();
            minus.params_mut()[p].data_mut()[i] -= h;
            let fd = (plus.loss(image, label).unwrap() - minus.loss(image, label).unwrap()) / (2.0 * h);
            let a = analytic[p].data()[i];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn end_to_end_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for kind in ModelKind::ALL {
        let mut model = tiny(kind, 5);
        if let Some(i) = model.quantum_weight_index() {
            model.params_mut()[i].data_mut().copy_from_slice(&[0.3, -0.7, 1.1, 0.2]);
        }
        let image = Tensor::uniform(&[3, 8, 8], 0.5, &mut rng).map(|v| v + 0.5);
        let err = gradient_error(&model, &image, 1);
        assert!(err < 1e-4, "{kind}: relative error {err}");
    }
}

#[test]
fn lr_zero_leaves_weights_unchanged() {
    let data = synthetic_generate(2, 6, 8, 1).unwrap();
    let mut model = tiny(ModelKind::RealAmplitudes, 2);
    let before = model.clone();
    let cfg = TrainConfig { epochs: 2, lr: 0.0, batch_size: 4, seed: 1, freeze_quantum_weights: false };
    train(&mut model, &data, None, &cfg).unwrap();
    assert_eq!(model, before);
}

#[test]
fn initial_loss_is_near_uniform() {
    let data = synthetic_generate(4, 8, 16, 7).unwrap();
    for kind in ModelKind::ALL {
        let cfg = ModelConfig { kind, cnn: CnnConfig::default() };
        let model = HybridModel::new(&cfg, [3, 16, 16], data.class_names.clone(), 7).unwrap();
        let mean: f64 =
            data.items[..32].iter().map(|it| model.loss(&it.pixels, it.label).unwrap()).sum::<f64>() / 32.0;
        assert!((mean - 4f64.ln()).abs() <= 0.5, "{kind}: {mean}");
    }
}

#[test]
fn empty_and_mismatched_datasets_are_rejected() {
    let mut model = tiny(ModelKind::Bellman, 1);
    let mut data = synthetic_generate(2, 2, 8, 1).unwrap();
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let three = synthetic_generate(3, 2, 8, 1).unwrap();
    assert!(matches!(train(&mut model, &three, None, &cfg), Err(Error::Compatibility(_))));
    data.items.clear();
    assert!(matches!(train(&mut model, &data, None, &cfg), Err(Error::Argument(_))));
}

#[test]
fn evaluate_preserves_order_and_training_is_deterministic() {
    let data = synthetic_generate(2, 4, 8, 9).unwrap();
    let cfg = TrainConfig { epochs: 3, lr: 0.01, batch_size: 3, seed: 4, freeze_quantum_weights: false };
    let mut a = tiny(ModelKind::NoEntanglement, 8);
    let mut b = a.clone();
    let ha = train(&mut a, &data, None, &cfg).unwrap();
    let hb = train(&mut b, &data, None, &cfg).unwrap();
    assert_eq!(ha.to_csv(), hb.to_csv());
    assert_eq!(a, b);
    let (pred, truth) = evaluate(&a, &data).unwrap();
    assert_eq!(truth, data.labels());
    let single: Vec<usize> = data.items.iter().map(|it| a.predict(&it.pixels).unwrap()).collect();
    assert_eq!(pred, single);
}

/// Multinomial logistic regression on raw pixels, full-batch Adam.
fn linear_probe_accuracy(train_set: &hqnn::datasets::Dataset, val_set: &hqnn::datasets::Dataset) -> f64 {
    use hqnn::neural::{adam_step, softmax_cross_entropy, AdamState, Layer, LayerSpec};
    let features = train_set.items[0].pixels.len();
    let n = train_set.n_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut layer = Layer::init(LayerSpec::Dense { inputs: features, units: n }, &mut rng);
    let flat = |t: &Tensor| t.clone().reshape(vec![1, features]).unwrap();
    let mut adam = AdamState::with_lr(0.01);
    for _ in 0..300 {
        let mut grads: Vec<Tensor> = layer.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        for item in &train_set.items {
            let x = flat(&item.pixels);
            let logits = layer.forward(&x).unwrap();
            let (_, g) = softmax_cross_entropy(&logits, item.label).unwrap();
            let (_, pg) = layer.backward(&g, &x).unwrap();
            for (acc, g) in grads.iter_mut().zip(&pg) {
                acc.add_assign(g).unwrap();
            }
        }
        grads.iter_mut().for_each(|g| g.scale(1.0 / train_set.len() as f64));
        let mut params: Vec<&mut Tensor> = layer.params.iter_mut().collect();
        adam_step(&mut params, &grads, &mut adam).unwrap();
    }
    let correct = val_set
        .items
        .iter()
        .filter(|it| layer.forward(&flat(&it.pixels)).unwrap().argmax() == it.label)
        .count();
    correct as f64 / val_set.len() as f64
}

#[test]
fn raw_pixels_are_not_linearly_separable_but_the_hybrid_learns() {
    let data = synthetic_generate(4, 50, 16, 7).unwrap();
    let (train_set, val_set) = data.split(0.8, 7).unwrap();
    let probe = linear_probe_accuracy(&train_set, &val_set);
    assert!(probe < 0.9, "linear probe {probe}");

    let cfg = ModelConfig { kind: ModelKind::RealAmplitudes, cnn: CnnConfig::default() };
    let mut model = HybridModel::new(&cfg, [3, 16, 16], data.class_names.clone(), 7).unwrap();
    let tcfg = TrainConfig { epochs: 50, lr: 0.001, batch_size: 8, seed: 7, freeze_quantum_weights: false };
    train(&mut model, &train_set, Some(&val_set), &tcfg).unwrap();
    let hybrid = hqnn::hybrid::accuracy(&model, &val_set).unwrap();
    assert!(probe < hybrid, "linear probe {probe} vs hybrid {hybrid}");
}

#[test]
fn evaluate_recovers_a_memorized_toy_set() {
    let data = synthetic_generate(2, 4, 8, 21).unwrap();
    let mut model = tiny(ModelKind::ClassicalV1, 3);
    let cfg = TrainConfig { epochs: 200, lr: 0.01, batch_size: 8, seed: 0, freeze_quantum_weights: false };
    train(&mut model, &data, None, &cfg).unwrap();
    let (pred, truth) = evaluate(&model, &data).unwrap();
    assert_eq!(pred.len(), 8);
    assert_eq!(pred, truth);
}
