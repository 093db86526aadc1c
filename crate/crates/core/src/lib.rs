//! Investor recommendation for reward-based crowdfunding.
//!
//! The crate covers the full pipeline: corpus ingest and validation,
//! Kickstarter-to-Twitter account linking, LDA topic modelling, pair
//! features, logistic regression and kernel SVM classifiers, cross-validated
//! classification and ranking evaluation, behavioural analyses, and a
//! synthetic corpus generator with known ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod datagen;
pub mod domain;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod link;
pub mod models;
pub mod pipeline;
pub mod stages;
pub mod stats;
pub mod text;
pub mod topics;

pub use error::{Error, Result};
