//! Finite-difference gradient checks shared by several test targets.

use allab::corpus::FeatureVector;
use allab::model::{consistency_loss, supervised_loss, Gradient, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Point {
    pub params: ModelParams,
    pub xs: Vec<FeatureVector>,
    pub ys: Vec<usize>,
}

fn sparse(rng: &mut ChaCha8Rng, dim: usize) -> FeatureVector {
    let mut entries = Vec::new();
    for i in 0..dim {
        if rng.random_bool(0.5) {
            entries.push((i, rng.random_range(-1.0..1.0)));
        }
    }
    FeatureVector { entries }
}

pub fn point(seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = rng.random_range(2..5);
    let dim = rng.random_range(1..8);
    let w = (0..c * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    let b = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = rng.random_range(1..6);
    Point {
        params: ModelParams::from_parts(c, dim, w, b).unwrap(),
        xs: (0..2 * n).map(|_| sparse(&mut rng, dim)).collect(),
        ys: (0..n).map(|_| rng.random_range(0..c)).collect(),
    }
}

/// Largest relative error between the analytic gradient and central
/// differences of `loss`.
fn check(params: &ModelParams, grad: &Gradient, loss: impl Fn(&ModelParams) -> f64) -> f64 {
    let flat = params.to_flat();
    let analytic = grad.to_flat();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..flat.len() {
        let mut p = params.clone();
        let mut v = flat.clone();
        v[i] += h;
        p.set_flat(&v);
        let up = loss(&p);
        v[i] -= 2.0 * h;
        p.set_flat(&v);
        let down = loss(&p);
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs());
        if scale > 1e-7 {
            worst = worst.max((analytic[i] - numeric).abs() / scale);
        }
    }
    worst
}

pub fn supervised_rel_error(pt: &Point) -> f64 {
    let batch: Vec<_> = pt.ys.iter().enumerate().map(|(i, &y)| (&pt.xs[i], y)).collect();
    let (_, g) = supervised_loss(&pt.params, &batch).unwrap();
    check(&pt.params, &g, |p| supervised_loss(p, &batch).unwrap().0)
}

pub fn consistency_rel_error(pt: &Point) -> f64 {
    let n = pt.ys.len();
    let pairs: Vec<_> = (0..n).map(|i| (&pt.xs[i], &pt.xs[n + i])).collect();
    let (_, g) = consistency_loss(&pt.params, &pairs).unwrap();
    check(&pt.params, &g, |p| consistency_loss(p, &pairs).unwrap().0)
}
