//! Hash-featurized logistic proxy model and the empirical value function.

mod features;
mod logistic;
mod value;

pub use features::{featurize, FeatureVector, DEFAULT_DIM};
pub use logistic::{
    log_loss, sigmoid, train_logistic, train_logistic_observed, Checkpoint, LabeledExample,
    TrainConfig, TrainedModel, PROB_EPS,
};
pub use value::{
    evaluate, loso_gains, scale_gain, subset_key, train_label, validation_set, CacheStats,
    LabelPolicy, LosoGain, ProxyConfig, ProxyProblem, TrainItem, ValueBreakdown,
    DEFAULT_SCALING_ALPHA,
};
