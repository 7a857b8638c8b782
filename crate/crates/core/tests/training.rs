mod support;

use apdkit::dataset::{generate_synthetic, Dataset, SyntheticSpec};
use apdkit::nn::{train, Architecture, DenseReluNetwork, LayerParams, TrainConfig};
use apdkit::Error;

fn blobs() -> Dataset {
    generate_synthetic(&SyntheticSpec {
        num_classes: 2,
        points_per_class: 100,
        dimension: 2,
        class_center_separation: 4.0,
        noise_scale: 0.5,
        seed: 11,
    })
    .unwrap()
}

fn blob_config() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.05,
        epochs: 200,
        batch_size: 16,
        seed: 5,
        shuffle_each_epoch: true,
    }
}

#[test]
fn separable_blobs_are_learned() {
    let data = blobs();
    let xs: Vec<Vec<f64>> = (0..data.len()).map(|i| data.features(i).to_vec()).collect();
    let ys: Vec<usize> = data.labels().iter().map(|&y| y as usize).collect();
    assert_eq!(support::perceptron_accuracy(&xs, &ys, 2, 100), 1.0, "blobs must be linearly separable");

    let net = DenseReluNetwork::init(Architecture::new(2, vec![8], 2).unwrap(), 3).unwrap();
    let trained = train(net, &data, &blob_config(), |_, _| Ok(())).unwrap();
    let eval = trained.evaluate(&data).unwrap();
    assert!(eval.accuracy >= 0.99, "accuracy {}", eval.accuracy);
}

#[test]
fn training_is_deterministic() {
    let data = blobs();
    let run = || {
        let net = DenseReluNetwork::init(Architecture::new(2, vec![8], 2).unwrap(), 3).unwrap();
        let cfg = TrainConfig { epochs: 20, ..blob_config() };
        train(net, &data, &cfg, |_, _| Ok(())).unwrap()
    };
    let a: Vec<u64> = run().parameters().map(f64::to_bits).collect();
    let b: Vec<u64> = run().parameters().map(f64::to_bits).collect();
    assert_eq!(a, b);
}

#[test]
fn zero_learning_rate_is_a_no_op() {
    let data = blobs();
    let net = DenseReluNetwork::init(Architecture::new(2, vec![8], 2).unwrap(), 3).unwrap();
    let cfg = TrainConfig { learning_rate: 0.0, epochs: 1, ..blob_config() };
    let mut calls = Vec::new();
    let out = train(net.clone(), &data, &cfg, |e, _| {
        calls.push(e);
        Ok(())
    })
    .unwrap();
    assert_eq!(out, net);
    assert_eq!(calls, vec![0]);
}

#[test]
fn zero_epochs_rejected() {
    let data = blobs();
    let net = DenseReluNetwork::init(Architecture::new(2, vec![8], 2).unwrap(), 3).unwrap();
    let cfg = TrainConfig { epochs: 0, ..blob_config() };
    assert!(matches!(train(net, &data, &cfg, |_, _| Ok(())), Err(Error::InvalidConfig(_))));
}

fn one_weight_net(w: f64) -> DenseReluNetwork {
    DenseReluNetwork::from_layers(
        Architecture::new(1, vec![1], 1).unwrap(),
        vec![LayerParams::from_rows(&[&[w]], &[0.0]).unwrap()],
        LayerParams::from_rows(&[&[1.0]], &[0.0]).unwrap(),
    )
    .unwrap()
}

#[test]
fn sgd_step_arithmetic_and_linearity() {
    let mut net = one_weight_net(1.0);
    let mut g = apdkit::nn::Gradients::zeros_like(&net);
    g.hidden[0].weights[0] = 2.0;
    net.sgd_step(&g, 0.1).unwrap();
    assert!((net.hidden_layers[0].weights[0] - 0.8).abs() < 1e-15);

    let mut twice = one_weight_net(1.0);
    twice.sgd_step(&g, 0.125).unwrap();
    twice.sgd_step(&g, 0.125).unwrap();
    let mut once = one_weight_net(1.0);
    once.sgd_step(&g, 0.25).unwrap();
    assert_eq!(twice, once);

    let mut bad = g.clone();
    bad.output.weights[0] = f64::NAN;
    assert!(matches!(net.sgd_step(&bad, 0.1), Err(Error::TrainingDiverged(_))));
}

#[test]
fn evaluate_examples() {
    let single = Dataset::new(1, 1, vec![0], vec![1.0], vec![0]).unwrap();
    assert_eq!(one_weight_net(1.0).evaluate(&single).unwrap().accuracy, 1.0);

    // All-zero network: every logit ties, so every prediction is class 0.
    let arch = Architecture::new(3, vec![4], 10).unwrap();
    let zero = DenseReluNetwork::from_layers(arch, vec![LayerParams::zeros(4, 3)], LayerParams::zeros(10, 4)).unwrap();
    let labels: Vec<u32> = (0..50).map(|i| i % 10).collect();
    let data = Dataset::new(3, 10, (0..50).collect(), vec![0.5; 150], labels).unwrap();
    let eval = zero.evaluate(&data).unwrap();
    assert_eq!(eval.accuracy, 0.1);
    assert!(eval.predicted.iter().all(|&p| p == 0));
    let mean = eval.correct.iter().filter(|&&c| c).count() as f64 / eval.correct.len() as f64;
    assert_eq!(mean, eval.accuracy);
    assert_eq!(eval.ids, data.ids());
}
