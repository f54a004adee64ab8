use allab::corpus::{build_stats, featurize, tokenize_all};
use allab::model::{fit, TrainConfig};
use allab::rng::stream;
use allab::synthetic::{generate, SyntheticSpec};

fn test_accuracy(sep: f64) -> f64 {
    let spec = SyntheticSpec { num_examples: 1000, class_separation: sep, ..Default::default() };
    let train = tokenize_all(&generate(&spec, 1, stream::SYNTH_TRAIN).unwrap());
    let test = tokenize_all(&generate(&SyntheticSpec { num_examples: 1000, ..spec }, 1, stream::SYNTH_TEST).unwrap());
    let stats = build_stats(&train).unwrap();
    let tr: Vec<_> = train.iter().map(|e| (featurize(&e.tokens, &stats), e.label)).collect();
    let labeled: Vec<_> = tr.iter().map(|(x, y)| (x, *y)).collect();
    let cfg = TrainConfig { learning_rate: 5.0, iterations: 300, batch_size: 64, ssl_alpha: 0.0, seed: 0 };
    let params = fit(&labeled, &[], 2, stats.dim(), &cfg).unwrap().params;
    let correct = test
        .iter()
        .filter(|e| params.predict_proba(&featurize(&e.tokens, &stats)).unwrap().argmax() == e.label)
        .count();
    correct as f64 / test.len() as f64
}

#[test]
fn large_separation_is_linearly_learnable() {
    let acc = test_accuracy(10.0);
    assert!(acc >= 0.99, "{acc}");
}

#[test]
fn zero_separation_is_chance() {
    let acc = test_accuracy(0.0);
    // 1000 balanced test docs: chance 0.5, sd about 0.016
    assert!((acc - 0.5).abs() < 0.06, "{acc}");
}

#[test]
fn accuracy_grows_with_separation() {
    assert!(test_accuracy(0.05) < test_accuracy(0.3));
}
