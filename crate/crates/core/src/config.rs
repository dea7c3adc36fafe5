//! JSON experiment descriptions.
//!
//! Unknown keys are rejected everywhere. Omitted optimizer settings default
//! to step 0.01, minibatch 10, 1000 steps, no momentum; replications default
//! to 100.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{GeneralLossParams, StronglyConvexParams};
use crate::data::SynthKind;
use crate::error::{Error, Result};
use crate::optim::{
    IndexSampler, LearningRateSchedule, MomentumSchedule, OptimizerConfig, ProjectionDomain, SamplerKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "bound-eval")]
    BoundEval,
    #[serde(rename = "stability")]
    Stability,
    #[serde(rename = "generalization")]
    Generalization,
    #[serde(rename = "convergence")]
    Convergence,
    #[serde(rename = "t_d-sweep")]
    TdSweep,
    #[serde(rename = "mu-sweep")]
    MuSweep,
    #[serde(rename = "n-sweep")]
    NSweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Quadratic {
        #[serde(default = "one")]
        curvature: f64,
    },
    LogisticL2 {
        #[serde(default = "default_decay")]
        weight_decay: f64,
    },
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
}

fn one() -> f64 {
    1.0
}
fn default_decay() -> f64 {
    0.001
}
fn default_hidden() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Switches to the `alpha0 / t` schedule when present.
    #[serde(default)]
    pub alpha0: Option<f64>,
    #[serde(default)]
    pub mu_d: f64,
    /// Last momentum step; defaults to the horizon (constant momentum).
    #[serde(default)]
    pub t_d: Option<usize>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerKind,
    #[serde(default)]
    pub projection_radius: Option<f64>,
}

fn default_alpha() -> f64 {
    0.01
}
fn default_steps() -> usize {
    1000
}
fn default_batch() -> usize {
    10
}
fn default_sampler() -> SamplerKind {
    SamplerKind::Uniform
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            alpha: default_alpha(),
            alpha0: None,
            mu_d: 0.0,
            t_d: None,
            steps: default_steps(),
            batch_size: default_batch(),
            sampler: default_sampler(),
            projection_radius: None,
        }
    }
}

impl OptimizerSpec {
    pub fn build(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            schedule: match self.alpha0 {
                Some(a0) => LearningRateSchedule::InverseTime(a0),
                None => LearningRateSchedule::Constant(self.alpha),
            },
            momentum: MomentumSchedule::early(self.mu_d, self.t_d.unwrap_or(self.steps)),
            sampler: IndexSampler { kind: self.sampler, seed },
            domain: self.projection_radius.map_or(ProjectionDomain::Unbounded, ProjectionDomain::Ball),
            steps: self.steps,
            batch_size: self.batch_size,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    /// Explicit IDX files.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        /// Two-class subset (relabelled 0/1, scaled into the unit ball); all
        /// ten digits when absent.
        #[serde(default)]
        classes: Option<[u8; 2]>,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
        #[serde(default)]
        test: TestSplit,
    },
    /// MNIST from `$MNIST_DIR` or `data/mnist`.
    Mnist {
        #[serde(default)]
        classes: Option<[u8; 2]>,
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
        #[serde(default)]
        test: TestSplit,
    },
    Synthetic {
        generator: SynthKind,
        dim: usize,
        #[serde(default = "default_pool")]
        pool_size: usize,
        #[serde(default = "default_test")]
        test_size: usize,
    },
}

/// Where test risk is measured for image data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestSplit {
    /// The test image files.
    #[default]
    Files,
    /// Each replication's unused training rows (generalization sweeps only).
    PoolComplement,
}

impl DataSpec {
    pub fn test_split(&self) -> TestSplit {
        match self {
            DataSpec::Idx { test, .. } | DataSpec::Mnist { test, .. } => *test,
            DataSpec::Synthetic { .. } => TestSplit::Files,
        }
    }
}

fn default_pool() -> usize {
    10_000
}
fn default_test() -> usize {
    1_000
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    #[serde(default)]
    pub mu_d: Option<Vec<f64>>,
    #[serde(default)]
    pub t_d: Option<Vec<usize>>,
}

pub const DEFAULT_N_GRID: [usize; 4] = [100, 500, 1000, 5000];
pub const DEFAULT_MU_GRID: [f64; 3] = [0.0, 0.5, 0.9];
pub const DEFAULT_MU_D_GRID: [f64; 4] = [0.2, 0.5, 0.9, 0.99];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralSpec {
    pub alpha0: f64,
    pub l: f64,
    pub beta: f64,
    pub m: f64,
    pub n: usize,
    pub t: usize,
    pub mu_d: f64,
    #[serde(default)]
    pub t_d: f64,
    #[serde(default)]
    pub t_tilde: f64,
    #[serde(default)]
    pub k: f64,
}

impl From<&GeneralSpec> for GeneralLossParams {
    fn from(s: &GeneralSpec) -> Self {
        GeneralLossParams {
            alpha0: s.alpha0,
            l: s.l,
            beta: s.beta,
            m: s.m,
            n: s.n,
            t: s.t,
            mu_d: s.mu_d,
            t_d: s.t_d,
            t_tilde: s.t_tilde,
            k: s.k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StronglyConvexSpec {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
    pub l: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub t: usize,
    #[serde(default)]
    pub w0: f64,
    #[serde(default)]
    pub w1: f64,
    #[serde(default)]
    pub w2: f64,
    #[serde(default)]
    pub w3: f64,
    #[serde(default)]
    pub w_std_errors: [f64; 4],
}

impl From<&StronglyConvexSpec> for StronglyConvexParams {
    fn from(s: &StronglyConvexSpec) -> Self {
        StronglyConvexParams {
            alpha: s.alpha,
            mu: s.mu,
            l: s.l,
            beta: s.beta,
            gamma: s.gamma,
            n: s.n,
            t: s.t,
            w0: s.w0,
            w1: s.w1,
            w2: s.w2,
            w3: s.w3,
            w_std_errors: s.w_std_errors,
        }
    }
}

/// Non-vanishing penalty: `T = kappa n`, `t_d = rho T`, `t~ = rho T - k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySpec {
    pub rho: f64,
    pub kappa: f64,
    #[serde(default)]
    pub k: f64,
    pub alpha0: f64,
    pub l: f64,
    pub beta: f64,
    pub m: f64,
    pub n: usize,
    pub mu_d: f64,
}

impl PenaltySpec {
    pub fn params(&self) -> GeneralLossParams {
        let t = self.kappa * self.n as f64;
        GeneralLossParams {
            alpha0: self.alpha0,
            l: self.l,
            beta: self.beta,
            m: self.m,
            n: self.n,
            t: t.round() as usize,
            mu_d: self.mu_d,
            t_d: self.rho * t,
            t_tilde: self.rho * t - self.k,
            k: self.k,
        }
    }
}

/// One closed-form evaluation for `bound-eval`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "formula", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BoundSpec {
    SgmemStability(GeneralSpec),
    SgmemOptimalCutoff(GeneralSpec),
    SgmemPenalty(PenaltySpec),
    SgmemConvergence {
        w: f64,
        alpha: f64,
        mu_d: f64,
        t_d: usize,
        t: usize,
        l: f64,
        beta: f64,
    },
    MonotonicTd {
        w: f64,
        alpha: f64,
        mu_d: f64,
        t: usize,
        l: f64,
        beta: f64,
        c: f64,
    },
    MonotonicMu {
        l: f64,
        beta: f64,
    },
    ScStability(StronglyConvexSpec),
    ScConvergence(StronglyConvexSpec),
    TrueRisk(StronglyConvexSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub data: Option<DataSpec>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Training-set size where the kind does not sweep it.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub bounds: Vec<BoundSpec>,
    /// Radius of the ball the certified constants cover.
    #[serde(default)]
    pub domain_radius: Option<f64>,
    #[serde(default = "default_probes")]
    pub certificate_probes: usize,
}

fn default_replications() -> usize {
    100
}
fn default_probes() -> usize {
    1000
}

/// Certified-constant radius when neither the config nor a projection sets one.
pub const DEFAULT_DOMAIN_RADIUS: f64 = 10.0;

impl ExperimentConfig {
    pub fn domain_radius(&self) -> f64 {
        self.domain_radius.or(self.optimizer.projection_radius).unwrap_or(DEFAULT_DOMAIN_RADIUS)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.experiment == ExperimentKind::BoundEval {
            if self.bounds.is_empty() {
                return bad("bound-eval needs a non-empty `bounds` list");
            }
            return Ok(());
        }
        if self.data.is_none() {
            return bad("missing field `data`");
        }
        if self.model.is_none() {
            return bad("missing field `model`");
        }
        let o = &self.optimizer;
        if !(o.alpha > 0.0) || o.alpha0.is_some_and(|a| !(a > 0.0)) {
            return bad("`optimizer.alpha` must be positive");
        }
        if !(0.0..1.0).contains(&o.mu_d) {
            return bad("`optimizer.mu_d` must lie in [0, 1)");
        }
        if o.steps == 0 || o.batch_size == 0 {
            return bad("`optimizer.steps` and `optimizer.batch_size` must be at least 1");
        }
        if o.t_d.is_some_and(|t| t > o.steps) {
            return bad("`optimizer.t_d` exceeds `optimizer.steps`");
        }
        let generalization =
            matches!(self.experiment, ExperimentKind::Generalization | ExperimentKind::NSweep | ExperimentKind::MuSweep);
        if !generalization && self.data.as_ref().is_some_and(|d| d.test_split() == TestSplit::PoolComplement) {
            return bad("`data.test = \"pool-complement\"` applies to generalization sweeps only");
        }
        if self.replications < 2 {
            return bad("`replications` must be at least 2");
        }
        if let Some(mus) = self.sweep.mu.iter().chain(&self.sweep.mu_d).flatten().find(|m| !(0.0..1.0).contains(*m)) {
            return Err(Error::Config(format!("sweep momentum {mus} outside [0, 1)")));
        }
        if self.sweep.t_d.iter().flatten().any(|&t| t > o.steps) {
            return bad("`sweep.t_d` entries must not exceed `optimizer.steps`");
        }
        Ok(())
    }
}

/// Parses and validates a JSON experiment description.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "experiment": "stability",
        "model": {"kind": "quadratic"},
        "data": {"source": "synthetic", "generator": {"kind": "quadratic-targets", "radius": 0.5}, "dim": 2}
    }"#;

    #[test]
    fn defaults_filled() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.optimizer.alpha, 0.01);
        assert_eq!(c.optimizer.batch_size, 10);
        assert_eq!(c.replications, 100);
        assert_eq!(c.domain_radius(), DEFAULT_DOMAIN_RADIUS);
    }

    #[test]
    fn unknown_key_named() {
        let text = MINIMAL.replace("\"experiment\"", "\"momnetum\": 0.9, \"experiment\"");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("momnetum"), "{err}");
        let nested = MINIMAL.replace("\"kind\": \"quadratic\"", "\"kind\": \"quadratic\", \"curvatur\": 2");
        assert!(parse_config(&nested).unwrap_err().to_string().contains("curvatur"));
    }

    #[test]
    fn missing_data_rejected() {
        let text = r#"{"experiment": "stability", "model": {"kind": "quadratic"}}"#;
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("data"), "{err}");
    }

    #[test]
    fn pool_complement_only_for_generalization() {
        let text = r#"{"experiment": "EXP", "model": {"kind": "logistic-l2"},
            "data": {"source": "mnist", "classes": [2, 9], "test": "pool-complement"}}"#;
        assert!(parse_config(&text.replace("EXP", "n-sweep")).is_ok());
        let err = parse_config(&text.replace("EXP", "stability")).unwrap_err().to_string();
        assert!(err.contains("pool-complement"), "{err}");
    }

    #[test]
    fn bound_eval_needs_no_data() {
        let text = r#"{"experiment": "bound-eval", "bounds": [
            {"formula": "sc-stability", "alpha": 0.5, "mu": 0.05, "l": 1, "beta": 1, "gamma": 1, "n": 100}
        ]}"#;
        let c = parse_config(text).unwrap();
        assert!(matches!(c.bounds[0], BoundSpec::ScStability(_)));
    }

    #[test]
    fn optimizer_spec_builds_schedules() {
        let spec = OptimizerSpec { alpha0: Some(0.3), mu_d: 0.5, t_d: Some(7), ..Default::default() };
        let cfg = spec.build(4);
        assert_eq!(cfg.schedule, LearningRateSchedule::InverseTime(0.3));
        assert_eq!(cfg.momentum.at(7), 0.5);
        assert_eq!(cfg.momentum.at(8), 0.0);
        assert_eq!(cfg.sampler.seed, 4);
    }
}
