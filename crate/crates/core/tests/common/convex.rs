//! Small convex logistic problems and dense oracles for the influence code.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use shardvalue::attribution::{cg_solve, hvp, loss_gradient, CgConfig, InfluenceScorer, LogisticHessian, ParamVector};
use shardvalue::proxy::{log_loss, sigmoid, train_logistic, FeatureVector, LabeledExample, TrainConfig, TrainedModel};

use super::rng;

pub fn example(r: &mut ChaCha8Rng, d: usize) -> LabeledExample {
    let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    let score = x[0] - 0.5 * x[1] + 0.25 * x[2];
    let noisy = score + r.random_range(-0.4..0.4);
    LabeledExample::new(FeatureVector::from_values(x), u8::from(noisy > 0.0))
}

pub fn random_model(r: &mut ChaCha8Rng, d: usize, lambda: f64) -> TrainedModel {
    TrainedModel {
        w: (0..d).map(|_| r.random_range(-1.5..1.5)).collect(),
        b: r.random_range(-1.0..1.0),
        config: TrainConfig {
            lambda,
            ..TrainConfig::default()
        },
    }
}

pub fn augmented(e: &LabeledExample) -> DVector<f64> {
    let mut v: Vec<f64> = e.features.as_slice().to_vec();
    v.push(1.0);
    DVector::from_vec(v)
}

/// `λI + (1/n) Σ σ(1−σ) x̃ x̃ᵀ`, assembled explicitly.
pub fn dense_hessian(train: &[LabeledExample], model: &TrainedModel, lambda: f64) -> DMatrix<f64> {
    let p = model.w.len() + 1;
    let mut h = DMatrix::<f64>::identity(p, p) * lambda;
    for e in train {
        let x = augmented(e);
        let z: f64 = model.w.iter().zip(e.features.as_slice()).map(|(w, x)| w * x).sum::<f64>() + model.b;
        let s = 1.0 / (1.0 + (-z).exp());
        h += &x * x.transpose() * (s * (1.0 - s) / train.len() as f64);
    }
    h
}

pub fn per_sample_loss(e: &LabeledExample, w: &[f64], b: f64) -> f64 {
    let z: f64 = w.iter().zip(e.features.as_slice()).map(|(w, x)| w * x).sum::<f64>() + b;
    log_loss(sigmoid(z), e.y())
}

/// Trains to (near) the optimum of the regularized objective.
pub fn fit(train: &[&LabeledExample], lambda: f64) -> TrainedModel {
    train_logistic(
        train,
        TrainConfig {
            lambda,
            epochs: 20_000,
            learning_rate: 1.0,
            seed: 0,
        },
    )
    .unwrap()
}

pub fn mean_val_loss(model: &TrainedModel, val: &[&LabeledExample]) -> f64 {
    val.iter().map(|e| log_loss(model.predict(&e.features), e.y())).sum::<f64>() / val.len() as f64
}

/// Influence signs versus actual leave-one-out retraining on a small convex
/// problem. Returns the number of agreeing points.
pub fn loo_agreement(seed: u64) -> (usize, usize) {
    let mut r = rng(seed);
    let lambda = 0.1;
    let train: Vec<LabeledExample> = (0..8).map(|_| example(&mut r, 8)).collect();
    let val: Vec<LabeledExample> = (0..6).map(|_| example(&mut r, 8)).collect();
    let t: Vec<&LabeledExample> = train.iter().collect();
    let v: Vec<&LabeledExample> = val.iter().collect();
    let full = fit(&t, lambda);
    let scorer = InfluenceScorer::new(
        &t,
        &v,
        &full,
        CgConfig {
            max_iters: 100,
            tol: 1e-12,
        },
    )
    .unwrap();
    let base = mean_val_loss(&full, &v);
    let mut agree = 0;
    for i in 0..t.len() {
        let rest: Vec<&LabeledExample> = t.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, e)| *e).collect();
        let without = fit(&rest, lambda);
        let actual = mean_val_loss(&without, &v) - base;
        let predicted = scorer.influence(t[i]).unwrap();
        if predicted.signum() == actual.signum() {
            agree += 1;
        } else {
            eprintln!("seed {seed} point {i}: influence {predicted:.3e}, LOO change {actual:.3e}");
        }
    }
    (agree, t.len())
}

/// Largest relative error between the analytic loss gradient and central
/// differences over random d = 8 problems.
pub fn worst_gradient_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = random_model(&mut r, 8, 0.01);
        let e = example(&mut r, 8);
        let g = loss_gradient(&e, &m).unwrap();
        for j in 0..=8 {
            let (mut wp, mut wm, mut bp, mut bm) = (m.w.clone(), m.w.clone(), m.b, m.b);
            if j < 8 {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fd = (per_sample_loss(&e, &wp, bp) - per_sample_loss(&e, &wm, bm)) / (2.0 * h);
            worst = worst.max((g.as_slice()[j] - fd).abs() / fd.abs().max(1e-3));
        }
    }
    worst
}

/// Largest absolute deviation of the HVP from the dense Hessian product.
pub fn worst_hvp_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let train: Vec<LabeledExample> = (0..5).map(|_| example(&mut r, 8)).collect();
        let refs: Vec<&LabeledExample> = train.iter().collect();
        let lambda = r.random_range(0.001..0.5);
        let m = random_model(&mut r, 8, lambda);
        let h = dense_hessian(&train, &m, lambda);
        let v: Vec<f64> = (0..9).map(|_| r.random_range(-2.0..2.0)).collect();
        let got = hvp(&ParamVector::from_flat(v.clone()), &refs, &m, lambda).unwrap();
        let want = &h * DVector::from_vec(v);
        for (a, b) in got.as_slice().iter().zip(want.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Largest absolute deviation of the CG solution from a dense LU solve.
pub fn worst_cg_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let train: Vec<LabeledExample> = (0..12).map(|_| example(&mut r, 7)).collect();
        let refs: Vec<&LabeledExample> = train.iter().collect();
        let m = random_model(&mut r, 7, 0.05);
        let hess = LogisticHessian::new(&refs, &m, 0.05).unwrap();
        let dense = dense_hessian(&train, &m, 0.05);
        let v: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let cfg = CgConfig { max_iters: 100, tol: 1e-12 };
        let sol = cg_solve(&ParamVector::from_flat(v.clone()), |p| hess.apply(p), cfg).unwrap();
        assert!(sol.converged);
        assert_eq!(hess.products(), sol.iterations);
        let want = dense.lu().solve(&DVector::from_vec(v)).unwrap();
        for (a, b) in sol.x.as_slice().iter().zip(want.iter()) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}
