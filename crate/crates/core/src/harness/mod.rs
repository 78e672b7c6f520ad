//! Benchmark harness: baselines, realized gains, robustness and reports.

pub mod synthetic;
pub mod adversarial;
pub mod bench;
pub mod density;
pub mod methods;
pub mod report;
