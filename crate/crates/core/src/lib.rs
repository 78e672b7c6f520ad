//! Utility-based valuation and pricing of text data sources, with a
//! hash-chained training ledger.

pub mod attribution;
pub mod corpus;
pub mod error;
pub mod hashing;
pub mod ledger;
pub mod metrics;
pub mod pricing;
pub mod proxy;
pub mod quality;
pub mod shapley;

pub use error::{Error, Result};
pub mod valuation;
pub mod harness;
