//! Influence-function attribution for the logistic proxy.
//!
//! Parameters are handled as one flat `(d + 1)` vector whose last
//! coordinate is the bias; features are augmented with a constant 1 so the
//! bias takes part in the Hessian.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proxy::{sigmoid, LabeledExample, ProxyProblem, TrainedModel};

/// Flat `(w, b)` parameter-space vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim + 1])
    }

    pub fn from_parts(w: Vec<f64>, b: f64) -> Self {
        let mut v = w;
        v.push(b);
        ParamVector(v)
    }

    /// From a flat slice whose last entry is the bias.
    pub fn from_flat(v: Vec<f64>) -> Self {
        assert!(!v.is_empty(), "parameter vector needs a bias coordinate");
        ParamVector(v)
    }

    pub fn from_model(model: &TrainedModel) -> Self {
        Self::from_parts(model.w.clone(), model.b)
    }

    /// Weight dimension `d`.
    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn w_part(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn b_part(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> ParamVector {
        ParamVector(self.0.iter().map(|x| x * s).collect())
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &ParamVector) {
        for (y, x) in self.0.iter_mut().zip(&x.0) {
            *y += a * x;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Dot product with the augmented feature `(x, 1)`.
    fn dot_augmented(&self, x: &[f64]) -> f64 {
        self.w_part().iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b_part()
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Gradient of the unregularized per-sample log-loss:
/// `((σ − y)·x, σ − y)`.
pub fn loss_gradient(example: &LabeledExample, model: &TrainedModel) -> Result<ParamVector> {
    check_dim(model.dim(), example.features.dim())?;
    let r = model.predict(&example.features) - example.y();
    Ok(ParamVector::from_parts(
        example.features.as_slice().iter().map(|x| r * x).collect(),
        r,
    ))
}

/// Mean per-sample loss gradient over `examples`.
pub fn mean_loss_gradient(examples: &[&LabeledExample], model: &TrainedModel) -> Result<ParamVector> {
    if examples.is_empty() {
        return Err(Error::invalid("mean gradient of an empty set"));
    }
    let mut acc = ParamVector::zeros(model.dim());
    for e in examples {
        acc.axpy(1.0, &loss_gradient(e, model)?);
    }
    Ok(acc.scaled(1.0 / examples.len() as f64))
}

/// Hessian of the regularized training loss at a fixed model, applied
/// matrix-free: `Hv = λv + (1/n) Σ σᵢ(1 − σᵢ)(v·x̃ᵢ) x̃ᵢ`.
pub struct LogisticHessian<'a> {
    dim: usize,
    lambda: f64,
    examples: Vec<&'a LabeledExample>,
    curvature: Vec<f64>,
    products: Cell<usize>,
}

impl<'a> LogisticHessian<'a> {
    pub fn new(examples: &[&'a LabeledExample], model: &TrainedModel, lambda: f64) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::invalid(
                "Hessian-vector product over an empty train set (use regularization_only)",
            ));
        }
        if !(lambda > 0.0) {
            return Err(Error::invalid("lambda must be > 0"));
        }
        for e in examples {
            check_dim(model.dim(), e.features.dim())?;
        }
        let curvature = examples
            .iter()
            .map(|e| {
                let s = sigmoid(model.logit(&e.features));
                s * (1.0 - s)
            })
            .collect();
        Ok(LogisticHessian {
            dim: model.dim(),
            lambda,
            examples: examples.to_vec(),
            curvature,
            products: Cell::new(0),
        })
    }

    /// The `λI` operator with no data term.
    pub fn regularization_only(dim: usize, lambda: f64) -> Self {
        LogisticHessian {
            dim,
            lambda,
            examples: Vec::new(),
            curvature: Vec::new(),
            products: Cell::new(0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of products computed so far.
    pub fn products(&self) -> usize {
        self.products.get()
    }

    pub fn apply(&self, v: &ParamVector) -> Result<ParamVector> {
        check_dim(self.dim, v.dim())?;
        self.products.set(self.products.get() + 1);
        let mut out = v.scaled(self.lambda);
        if self.examples.is_empty() {
            return Ok(out);
        }
        let n = self.examples.len() as f64;
        for (e, c) in self.examples.iter().zip(&self.curvature) {
            let x = e.features.as_slice();
            let coef = c * v.dot_augmented(x) / n;
            for (o, xi) in out.0.iter_mut().zip(x) {
                *o += coef * xi;
            }
            *out.0.last_mut().expect("bias coordinate") += coef;
        }
        Ok(out)
    }
}

/// Matrix-free Hessian-vector product at `model` over `train`.
pub fn hvp(
    v: &ParamVector,
    train: &[&LabeledExample],
    model: &TrainedModel,
    lambda: f64,
) -> Result<ParamVector> {
    LogisticHessian::new(train, model, lambda)?.apply(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            max_iters: 40,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: ParamVector,
    pub iterations: usize,
    pub converged: bool,
    /// `‖r‖` before the first iteration and after each one.
    pub residual_norms: Vec<f64>,
}

impl CgSolution {
    pub fn residual_norm(&self) -> f64 {
        *self.residual_norms.last().expect("initial residual recorded")
    }
}

/// Conjugate gradient for `Hx = v` with `H` given by `apply`.
pub fn cg_solve(
    v: &ParamVector,
    mut apply: impl FnMut(&ParamVector) -> Result<ParamVector>,
    config: CgConfig,
) -> Result<CgSolution> {
    if config.max_iters == 0 || !(config.tol > 0.0) {
        return Err(Error::invalid("CG needs max_iters >= 1 and tol > 0"));
    }
    let mut x = ParamVector::zeros(v.dim());
    let mut r = v.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let mut norms = vec![rr.sqrt()];
    if rr.sqrt() < config.tol {
        return Ok(CgSolution {
            x,
            iterations: 0,
            converged: true,
            residual_norms: norms,
        });
    }
    for it in 1..=config.max_iters {
        let hp = apply(&p)?;
        let php = p.dot(&hp);
        if !(php > 0.0) {
            return Err(Error::Numerical(format!(
                "CG curvature p·Hp = {php} at iteration {it}; operator is not positive definite"
            )));
        }
        let alpha = rr / php;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &hp);
        if !x.is_finite() || !r.is_finite() {
            return Err(Error::Numerical(format!("non-finite CG iterate at iteration {it}")));
        }
        let rr_new = r.dot(&r);
        norms.push(rr_new.sqrt());
        if rr_new.sqrt() < config.tol {
            return Ok(CgSolution {
                x,
                iterations: it,
                converged: true,
                residual_norms: norms,
            });
        }
        let beta = rr_new / rr;
        let mut next = r.clone();
        next.axpy(beta, &p);
        p = next;
        rr = rr_new;
    }
    Ok(CgSolution {
        x,
        iterations: config.max_iters,
        converged: false,
        residual_norms: norms,
    })
}

/// Number of representative documents scored per source.
pub const REPRESENTATIVE_DOCS: usize = 5;

/// Influence scorer built around a single inverse-HVP solve on the mean
/// validation gradient. Scores are oriented so that positive means the
/// training point lowers validation loss when upweighted.
#[derive(Debug, Clone)]
pub struct InfluenceScorer {
    model: TrainedModel,
    transformed: ParamVector,
    solve: CgSolution,
}

impl InfluenceScorer {
    /// Solves `s = H⁻¹ g` once for the given validation gradient `g`.
    pub fn with_validation_gradient(
        train: &[&LabeledExample],
        model: &TrainedModel,
        validation_gradient: &ParamVector,
        config: CgConfig,
    ) -> Result<Self> {
        let hessian = LogisticHessian::new(train, model, model.config.lambda)?;
        let solve = cg_solve(validation_gradient, |p| hessian.apply(p), config)?;
        Ok(InfluenceScorer {
            model: model.clone(),
            transformed: solve.x.clone(),
            solve,
        })
    }

    pub fn new(
        train: &[&LabeledExample],
        validation: &[&LabeledExample],
        model: &TrainedModel,
        config: CgConfig,
    ) -> Result<Self> {
        let g = mean_loss_gradient(validation, model)?;
        Self::with_validation_gradient(train, model, &g, config)
    }

    pub fn solve(&self) -> &CgSolution {
        &self.solve
    }

    /// `s · ∇L(z)` with `s = H⁻¹ ∇L̄(V)`.
    pub fn influence(&self, example: &LabeledExample) -> Result<f64> {
        Ok(self.transformed.dot(&loss_gradient(example, &self.model)?))
    }

    /// Mean influence over the first `REPRESENTATIVE_DOCS` examples.
    pub fn influence_of_group(&self, examples: &[&LabeledExample]) -> Result<f64> {
        let chosen: Vec<&&LabeledExample> = examples.iter().take(REPRESENTATIVE_DOCS).collect();
        if chosen.is_empty() {
            return Err(Error::invalid("influence of an empty source"));
        }
        let mut total = 0.0;
        for e in &chosen {
            total += self.influence(e)?;
        }
        Ok(total / chosen.len() as f64)
    }
}

/// Source-level influence for every source of `problem`, using the model
/// trained on all sources and one shared solve.
pub fn influence_sources(problem: &ProxyProblem, config: CgConfig) -> Result<(Vec<f64>, CgSolution)> {
    let all = problem.all_sources();
    let model = problem.train_subset(&all)?;
    let train: Vec<&LabeledExample> = problem.train_items().iter().map(|t| &t.example).collect();
    let val: Vec<&LabeledExample> = problem.validation().iter().collect();
    let scorer = InfluenceScorer::new(&train, &val, &model, config)?;
    let scores = (0..problem.n_sources())
        .map(|i| {
            let docs: Vec<&LabeledExample> = problem
                .train_items()
                .iter()
                .filter(|t| t.source == i)
                .map(|t| &t.example)
                .collect();
            scorer.influence_of_group(&docs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((scores, scorer.solve().clone()))
}

/// Influence of one named source.
pub fn influence_source(source: &str, problem: &ProxyProblem, config: CgConfig) -> Result<f64> {
    let idx = problem
        .sources()
        .iter()
        .position(|s| s == source)
        .ok_or_else(|| Error::invalid(format!("unknown source `{source}`")))?;
    Ok(influence_sources(problem, config)?.0[idx])
}
