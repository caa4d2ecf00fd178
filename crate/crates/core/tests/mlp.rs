use avqual::data::QualityDataset;
use avqual::mlp::{init_uniform, train_adadelta, MlpModel, MlpParams, MlpWeights};
use avqual::synth::{generate_dataset, ConditionGrid};
use rand::Rng;

/// Norm ratio |a - n| / (|a| + |n|) between analytic and central-difference
/// gradients of the batch loss.
fn gradient_error(model: &MlpModel, xs: &[Vec<f64>], ts: &[f64], h: f64) -> f64 {
    let (f, hid) = (model.weights.inputs(), model.weights.hidden());
    let theta = model.weights.to_flat();
    let analytic = model.gradient(xs, ts).unwrap().to_flat();
    let loss_at = |t: &[f64]| MlpModel::from_weights(MlpWeights::from_flat(f, hid, t)).batch_loss(xs, ts).unwrap();
    let numeric: Vec<f64> = (0..theta.len())
        .map(|i| {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[i] += h;
            minus[i] -= h;
            (loss_at(&plus) - loss_at(&minus)) / (2.0 * h)
        })
        .collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let denom = norm(&analytic) + norm(&numeric);
    if denom == 0.0 { 0.0 } else { norm(&diff) / denom }
}

#[test]
fn backprop_matches_finite_differences() {
    let mut rng = avqual::seed::rng(2024);
    let mut worst: f64 = 0.0;
    for pair in 0..50u64 {
        let f = rng.random_range(1..8);
        let hid = rng.random_range(1..8);
        let len = hid * f + 2 * hid + 1;
        let w = MlpWeights::from_flat(f, hid, &init_uniform(len, 1.0, pair).unwrap());
        let model = MlpModel::from_weights(w);
        let b = rng.random_range(1..7);
        let xs: Vec<Vec<f64>> = (0..b).map(|_| (0..f).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ts: Vec<f64> = (0..b).map(|_| rng.random_range(1.0..5.0)).collect();
        worst = worst.max(gradient_error(&model, &xs, &ts, 1e-5));
    }
    assert!(worst <= 1e-6, "max relative error {worst}");
}

#[test]
fn output_strictly_positive() {
    let mut rng = avqual::seed::rng(1);
    for s in 0..20 {
        let w = MlpWeights::from_flat(3, 4, &init_uniform(4 * 3 + 9, 5.0, s).unwrap());
        let m = MlpModel::from_weights(w);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
        assert!(m.forward(&x).unwrap() > 0.0);
    }
}

#[test]
fn smoothed_training_loss_does_not_rise() {
    let full = generate_dataset(&ConditionGrid::full(), 11).unwrap();
    // The loss-rate and coding columns carry the signal.
    let ds: QualityDataset = full.project(&[0, 2, 3, 4, 11, 20]);
    let params = MlpParams { seed: 4, ..MlpParams::default() };
    let model = train_adadelta(&ds, &params).unwrap();
    let l = &model.epoch_losses;
    assert_eq!(l.len(), 440);
    let smooth: Vec<f64> = l.windows(20).map(|w| w.iter().sum::<f64>() / 20.0).collect();
    // Rises up to 1e-3 are minibatch jitter on the plateau; larger ones may
    // occur in at most 5% of windows.
    let material = smooth.windows(2).filter(|w| w[1] - w[0] > 1e-3).count();
    assert!(material as f64 <= 0.05 * (smooth.len() - 1) as f64, "{material} material rises");
    assert!(smooth.last().unwrap() < &(0.1 * smooth[0]));
}
