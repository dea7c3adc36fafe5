//! Stochastic gradient methods with heavy-ball and early momentum, the
//! closed-form stability and convergence bounds that describe them, and a
//! harness that measures the same quantities empirically.
//!
//! * [`models`]: loss families, gradients and certified constants.
//! * [`optim`]: the SGM / SGMM / SGMEM iteration.
//! * [`bounds`]: analytic bounds with precondition flags.
//! * [`harness`]: twin runs, generalization gaps, optimization error.
//! * [`data`]: IDX files and synthetic samples.
//! * [`config`] and [`experiment`]: JSON-described runs that emit CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod harness;
pub mod models;
pub mod optim;
pub mod stats;

pub use error::{Error, Result};
pub use models::{certify, Dataset, Example, Label, LossModel, ParamVector, SmoothnessCertificate};
pub use optim::{
    run, step, IndexSampler, LearningRateSchedule, MomentumSchedule, OptimizerConfig, ProjectionDomain, RunOptions,
    SamplerKind, Trajectory,
};
