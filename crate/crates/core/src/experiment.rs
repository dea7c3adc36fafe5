//! Runs an [`ExperimentConfig`] and writes its CSV.
//!
//! The CSV opens with `#` comment lines echoing the config text, the crate
//! version and the effective seed. Columns depend only on the experiment
//! kind (see [`columns`]). Rows are written as each sweep point finishes; if
//! a later point fails, the file ends with a `# TRUNCATED` line.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use rand::Rng;
use serde::Serialize;

use crate::bounds::{
    monotonic_mu_condition, monotonic_td_condition, sgmem_convergence_bound, sgmem_optimal_cutoff, sgmem_penalty_bound,
    sgmem_stability_bound, strongly_convex_convergence_bound, strongly_convex_stability_bound, true_risk_bound,
    BoundReport, StronglyConvexParams,
};
use crate::config::{
    BoundSpec, DataSpec, ExperimentConfig, ExperimentKind, ModelSpec, TestSplit, DEFAULT_MU_D_GRID, DEFAULT_MU_GRID,
    DEFAULT_N_GRID,
};
use crate::data::{binary_subset, load_idx, load_mnist, multiclass, synth_dataset, RawImageSet};
use crate::error::{Error, Result};
use crate::harness::{
    estimate_generalization, estimate_stability, grad_norm_profile, probe_with_corners, reference_solve,
    replication_rng, seed_averaged_min, PoolSource, TestSet,
};
use crate::models::{certify, Dataset, LossModel, SmoothnessCertificate};
use crate::optim::{run, RunOptions};
use crate::stats::{mean, std_error};

/// Command-line adjustments applied on top of a parsed config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Network experiments at 1000 hidden units, 15000 train / 2742 test.
    pub paper_scale: bool,
}

pub const FULL_HIDDEN: usize = 1000;
pub const FULL_TRAIN: usize = 15_000;
pub const FULL_TEST: usize = 2_742;
pub const DESK_TRAIN: usize = 2_000;
pub const DESK_TEST: usize = 500;

/// Column names for an experiment kind.
pub fn columns(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::BoundEval => &["formula", "value", "valid", "failed_conditions", "std_error", "terms"],
        ExperimentKind::Stability => &[
            "n",
            "mu",
            "alpha",
            "steps",
            "replications",
            "eps_s_hat",
            "eps_s_se",
            "l_delta_mean",
            "l_delta_se",
            "theorem5_bound",
            "theorem5_valid",
            "theorem5_failed",
        ],
        ExperimentKind::Generalization | ExperimentKind::NSweep | ExperimentKind::MuSweep => &[
            "n",
            "mu",
            "alpha",
            "steps",
            "replications",
            "train_risk",
            "test_risk",
            "eps_g_hat",
            "eps_g_se",
            "accuracy_gap",
            "accuracy_gap_se",
            "theorem5_bound",
            "theorem5_valid",
            "theorem5_failed",
        ],
        ExperimentKind::Convergence => &[
            "mu_d",
            "t_d",
            "alpha",
            "steps",
            "replications",
            "min_grad_norm_sq",
            "argmin_t",
            "w",
            "convergence_bound",
            "convergence_valid",
            "convergence_failed",
        ],
        ExperimentKind::TdSweep => &[
            "mu_d",
            "t_d",
            "alpha",
            "steps",
            "replications",
            "diverged",
            "test_error_mean",
            "test_error_se",
            "test_acc_mean",
            "test_acc_se",
            "train_error_mean",
        ],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub rows: usize,
    pub output: Option<PathBuf>,
}

struct Sink {
    csv: csv::Writer<Box<dyn Write>>,
    rows: usize,
}

impl Sink {
    fn row(&mut self, fields: Vec<String>) -> Result<()> {
        self.csv.write_record(&fields).and_then(|_| Ok(self.csv.flush()?)).map_err(csv_error)?;
        self.rows += 1;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io { path: PathBuf::from("<csv>"), source: io::Error::other(e) }
}

/// Runs `config` (whose original text is `text`) and writes its CSV to the
/// override path, the config's `output`, or stdout.
pub fn run_experiment(config: &ExperimentConfig, text: &str, overrides: &Overrides) -> Result<ExperimentSummary> {
    let seed = overrides.seed.unwrap_or(config.seed);
    let output = overrides.out.clone().or_else(|| config.output.clone());
    let mut out: Box<dyn Write> = match &output {
        Some(p) => Box::new(File::create(p).map_err(|source| Error::Io { path: p.clone(), source })?),
        None => Box::new(io::stdout()),
    };
    let io_err = |source| Error::Io { path: output.clone().unwrap_or_else(|| "<stdout>".into()), source };
    for line in text.lines() {
        writeln!(out, "# config: {line}").map_err(io_err)?;
    }
    writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION")).map_err(io_err)?;
    writeln!(out, "# seed: {seed}").map_err(io_err)?;
    writeln!(out, "# paper-scale: {}", overrides.paper_scale).map_err(io_err)?;
    let mut csv = csv::WriterBuilder::new().from_writer(out);
    csv.write_record(columns(config.experiment)).map_err(csv_error)?;
    let mut sink = Sink { csv, rows: 0 };

    let result = dispatch(config, seed, overrides.paper_scale, &mut sink);
    let rows = sink.rows;
    let mut out = sink.csv.into_inner().map_err(|e| io_err(e.into_error()))?;
    if let Err(e) = &result {
        writeln!(out, "# TRUNCATED: {e}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;
    result.map(|_| ExperimentSummary { rows, output })
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn dispatch(config: &ExperimentConfig, seed: u64, paper_scale: bool, sink: &mut Sink) -> Result<()> {
    if config.experiment == ExperimentKind::BoundEval {
        for spec in &config.bounds {
            sink.row(bound_row(spec))?;
        }
        return Ok(());
    }
    let (train, test) = load_data(config, seed, paper_scale)?;
    let fixed_test = || test.as_ref().ok_or_else(|| Error::Config("this experiment needs a test set".into()));
    let model = build_model(config, &train, paper_scale)?;
    let cert = certify(&model, &train, config.domain_radius(), config.certificate_probes, seed)?;
    match config.experiment {
        ExperimentKind::BoundEval => unreachable!("handled above"),
        ExperimentKind::Stability => stability(config, seed, &model, &cert, &train, fixed_test()?, sink),
        ExperimentKind::Generalization | ExperimentKind::NSweep | ExperimentKind::MuSweep => {
            let test_set = test.as_ref().map_or(TestSet::PoolComplement, TestSet::Fixed);
            generalization(config, seed, &model, &cert, &train, test_set, sink)
        }
        ExperimentKind::Convergence => convergence(config, seed, &model, &cert, &train, sink),
        ExperimentKind::TdSweep => td_sweep(config, seed, &model, &train, fixed_test()?, sink),
    }
}

fn report_fields(r: &BoundReport) -> [String; 3] {
    [fmt(r.value), r.is_valid().to_string(), r.failed_conditions()]
}

fn bound_row(spec: &BoundSpec) -> Vec<String> {
    let (name, report) = match spec {
        BoundSpec::SgmemStability(p) => ("sgmem-stability", sgmem_stability_bound(&p.into())),
        BoundSpec::SgmemOptimalCutoff(p) => ("sgmem-optimal-cutoff", sgmem_optimal_cutoff(&p.into()).1),
        BoundSpec::SgmemPenalty(p) => ("sgmem-penalty", sgmem_penalty_bound(p.rho, p.kappa, p.k, &p.params()).0),
        BoundSpec::SgmemConvergence { w, alpha, mu_d, t_d, t, l, beta } => {
            ("sgmem-convergence", sgmem_convergence_bound(*w, *alpha, *mu_d, *t_d, *t, *l, *beta))
        }
        BoundSpec::MonotonicTd { w, alpha, mu_d, t, l, beta, c } => {
            let m = monotonic_td_condition(*w, *alpha, *mu_d, *t, *l, *beta, *c);
            let terms = format!("k1={};k2={};k3={};k4={};degenerate={}", m.k1, m.k2, m.k3, m.k4, m.degenerate);
            let failed: Vec<&str> = m.conditions.iter().filter(|c| !c.holds).map(|c| c.name).collect();
            return vec!["monotonic-td".into(), fmt(m.threshold), m.holds.to_string(), failed.join(";"), String::new(), terms];
        }
        BoundSpec::MonotonicMu { l, beta } => {
            let holds = monotonic_mu_condition(*l, *beta);
            let margin = 2.0 * (beta / 3.0).sqrt() - l;
            return vec!["monotonic-mu".into(), fmt(margin), holds.to_string(), String::new(), String::new(), String::new()];
        }
        BoundSpec::ScStability(p) => ("sc-stability", strongly_convex_stability_bound(&p.into())),
        BoundSpec::ScConvergence(p) => ("sc-convergence", strongly_convex_convergence_bound(&p.into())),
        BoundSpec::TrueRisk(p) => ("true-risk", true_risk_bound(&p.into()).report),
    };
    let [value, valid, failed] = report_fields(&report);
    let terms = report.terms.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
    vec![name.into(), value, valid, failed, report.std_error.map(fmt).unwrap_or_default(), terms]
}

fn limited(raw: RawImageSet, classes: Option<[u8; 2]>, limit: usize) -> Result<Dataset> {
    match classes {
        Some([a, b]) => {
            let all = binary_subset(&raw, a, b, true)?;
            let keep: Vec<usize> = (0..all.len().min(limit)).collect();
            all.subset(&keep)
        }
        None => multiclass(&raw, limit),
    }
}

/// `(training pool, test set)` for the config; no test set means each
/// replication is scored on the pool rows it did not draw.
fn load_data(config: &ExperimentConfig, seed: u64, paper_scale: bool) -> Result<(Dataset, Option<Dataset>)> {
    let is_mlp = matches!(config.model, Some(ModelSpec::Mlp { .. }));
    let scaled = |limit: Option<usize>, desk: usize, paper: usize| match (limit, is_mlp, paper_scale) {
        (_, true, true) => paper,
        (Some(l), _, _) => l,
        (None, true, false) => desk,
        (None, false, _) => usize::MAX,
    };
    match config.data.as_ref().ok_or_else(|| Error::Config("missing field `data`".into()))? {
        DataSpec::Idx { train_images, train_labels, test_images, test_labels, classes, train_limit, test_limit, test } => {
            let train = limited(load_idx(train_images, train_labels)?, *classes, scaled(*train_limit, DESK_TRAIN, FULL_TRAIN))?;
            let test = match test {
                TestSplit::PoolComplement => None,
                TestSplit::Files => {
                    Some(limited(load_idx(test_images, test_labels)?, *classes, scaled(*test_limit, DESK_TEST, FULL_TEST))?)
                }
            };
            Ok((train, test))
        }
        DataSpec::Mnist { classes, train_limit, test_limit, test } => {
            let train = limited(load_mnist("train")?, *classes, scaled(*train_limit, DESK_TRAIN, FULL_TRAIN))?;
            let test = match test {
                TestSplit::PoolComplement => None,
                TestSplit::Files => Some(limited(load_mnist("t10k")?, *classes, scaled(*test_limit, DESK_TEST, FULL_TEST))?),
            };
            Ok((train, test))
        }
        DataSpec::Synthetic { generator, dim, pool_size, test_size } => Ok((
            synth_dataset(*generator, *pool_size, *dim, seed)?,
            Some(synth_dataset(*generator, *test_size, *dim, seed.wrapping_add(1))?),
        )),
    }
}

fn build_model(config: &ExperimentConfig, train: &Dataset, paper_scale: bool) -> Result<LossModel> {
    Ok(match config.model.as_ref().ok_or_else(|| Error::Config("missing field `model`".into()))? {
        ModelSpec::Quadratic { curvature } => LossModel::quadratic(*curvature),
        ModelSpec::LogisticL2 { weight_decay } => LossModel::logistic(*weight_decay),
        ModelSpec::Mlp { hidden } => {
            let classes = train.examples().iter().filter_map(|e| e.class()).max().unwrap_or(0) + 1;
            let hidden = if paper_scale { FULL_HIDDEN } else { *hidden };
            LossModel::mlp(train.feature_dim(), hidden, classes.max(2))
        }
    })
}

fn sc_stability(config: &ExperimentConfig, cert: &SmoothnessCertificate, mu: f64, n: usize) -> BoundReport {
    strongly_convex_stability_bound(&StronglyConvexParams {
        alpha: config.optimizer.alpha,
        mu,
        l: cert.lipschitz,
        beta: cert.smoothness,
        gamma: cert.strong_convexity,
        n,
        t: config.optimizer.steps,
        ..Default::default()
    })
}

fn sample_size(config: &ExperimentConfig, pool: &Dataset, fallback: usize) -> usize {
    config.n.unwrap_or(fallback.min(pool.len()))
}

fn stability(
    config: &ExperimentConfig,
    seed: u64,
    model: &LossModel,
    cert: &SmoothnessCertificate,
    train: &Dataset,
    test: &Dataset,
    sink: &mut Sink,
) -> Result<()> {
    let ns = config.sweep.n.clone().unwrap_or_else(|| vec![sample_size(config, train, 100)]);
    let mus = config.sweep.mu.clone().unwrap_or_else(|| vec![config.optimizer.mu_d]);
    let heldout = test.subset(&(0..test.len().min(50)).collect::<Vec<_>>())?;
    let classes = train.examples().iter().filter_map(|e| e.class()).max().map_or(0, |c| c + 1);
    let probe = probe_with_corners(&heldout, train.max_feature_norm(), 4, classes)?;
    let source = PoolSource { pool: train.clone() };
    for &mu in &mus {
        for &n in &ns {
            let spec = crate::config::OptimizerSpec { mu_d: mu, t_d: None, ..config.optimizer.clone() };
            let est = estimate_stability(model, &spec.build(seed), &source, n, config.replications, &probe, seed)?;
            let ld: Vec<f64> = est.terminal_deltas.iter().map(|d| cert.lipschitz * d).collect();
            let [b, v, f] = report_fields(&sc_stability(config, cert, mu, n));
            sink.row(vec![
                n.to_string(),
                fmt(mu),
                fmt(config.optimizer.alpha),
                config.optimizer.steps.to_string(),
                config.replications.to_string(),
                fmt(est.epsilon_hat),
                fmt(est.std_error),
                fmt(mean(&ld)),
                fmt(std_error(&ld)),
                b,
                v,
                f,
            ])?;
        }
    }
    Ok(())
}

fn generalization(
    config: &ExperimentConfig,
    seed: u64,
    model: &LossModel,
    cert: &SmoothnessCertificate,
    train: &Dataset,
    test: TestSet,
    sink: &mut Sink,
) -> Result<()> {
    let (ns, mus) = match config.experiment {
        ExperimentKind::NSweep => (
            config.sweep.n.clone().unwrap_or_else(|| DEFAULT_N_GRID.to_vec()),
            config.sweep.mu.clone().unwrap_or_else(|| vec![config.optimizer.mu_d]),
        ),
        ExperimentKind::MuSweep => (
            config.sweep.n.clone().unwrap_or_else(|| vec![sample_size(config, train, 1000)]),
            config.sweep.mu.clone().unwrap_or_else(|| DEFAULT_MU_GRID.to_vec()),
        ),
        _ => (
            config.sweep.n.clone().unwrap_or_else(|| vec![sample_size(config, train, 1000)]),
            config.sweep.mu.clone().unwrap_or_else(|| vec![config.optimizer.mu_d]),
        ),
    };
    for &mu in &mus {
        let spec = crate::config::OptimizerSpec { mu_d: mu, t_d: None, ..config.optimizer.clone() };
        for &n in &ns {
            let reports = estimate_generalization(
                model,
                &spec.build(seed),
                train,
                test,
                &[n],
                config.replications,
                seed,
                RunOptions::minimal(),
            )?;
            let r = &reports[0];
            let [b, v, f] = report_fields(&sc_stability(config, cert, mu, n));
            sink.row(vec![
                n.to_string(),
                fmt(mu),
                fmt(config.optimizer.alpha),
                config.optimizer.steps.to_string(),
                config.replications.to_string(),
                fmt(r.train_risk),
                fmt(r.test_risk),
                fmt(r.eps_g_hat),
                fmt(r.eps_g_se),
                fmt(r.accuracy_gap),
                fmt(r.accuracy_gap_se),
                b,
                v,
                f,
            ])?;
        }
    }
    Ok(())
}

fn convergence(
    config: &ExperimentConfig,
    seed: u64,
    model: &LossModel,
    cert: &SmoothnessCertificate,
    train: &Dataset,
    sink: &mut Sink,
) -> Result<()> {
    use rayon::prelude::*;
    let o = &config.optimizer;
    let n = sample_size(config, train, 1000);
    let s = train.subset(&(0..n.min(train.len())).collect::<Vec<_>>())?;
    let mus = config.sweep.mu_d.clone().unwrap_or_else(|| vec![o.mu_d]);
    let tds = config.sweep.t_d.clone().unwrap_or_else(|| vec![o.t_d.unwrap_or(o.steps)]);
    let r_star = if model.is_strongly_convex() {
        Some(model.empirical_risk(&reference_solve(model, &s, 1_000_000)?, &s)?)
    } else {
        None
    };
    let every = o.steps.div_ceil(250).max(1);
    for &mu_d in &mus {
        for &t_d in &tds {
            let spec = crate::config::OptimizerSpec { mu_d, t_d: Some(t_d), ..o.clone() };
            let runs: Vec<(f64, Vec<(usize, f64)>)> = (0..config.replications)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replication_rng(seed, r);
                    let w0 = model.init_params(s.feature_dim(), &mut rng);
                    let cfg = spec.build(rng.random());
                    let opts = RunOptions { iterate_every: None, diagnostics_every: Some(every) };
                    let traj = run(model, &s, &cfg, &w0, opts)?;
                    // cross-entropy and the convex losses are non-negative, so
                    // R_S(w0) bounds the gap when no minimizer is available
                    let w = model.empirical_risk(&w0, &s)? - r_star.unwrap_or(0.0);
                    Ok((w, grad_norm_profile(&traj, model, &s)?))
                })
                .collect::<Result<_>>()?;
            let w = mean(&runs.iter().map(|r| r.0).collect::<Vec<_>>());
            let profiles: Vec<Vec<(usize, f64)>> = runs.into_iter().map(|r| r.1).collect();
            let (min, argmin) = seed_averaged_min(&profiles);
            let report = sgmem_convergence_bound(w, o.alpha, mu_d, t_d, o.steps, cert.lipschitz, cert.smoothness);
            let [b, v, f] = report_fields(&report);
            sink.row(vec![
                fmt(mu_d),
                t_d.to_string(),
                fmt(o.alpha),
                o.steps.to_string(),
                config.replications.to_string(),
                fmt(min),
                argmin.to_string(),
                fmt(w),
                b,
                v,
                f,
            ])?;
        }
    }
    Ok(())
}

/// Terminal test loss and accuracy of one run, `None` if it diverged.
pub fn terminal_test_metrics(
    model: &LossModel,
    train: &Dataset,
    test: &Dataset,
    config: &crate::optim::OptimizerConfig,
    seed: u64,
) -> Result<Option<(f64, f64, f64)>> {
    let w0 = model.init_params(train.feature_dim(), &mut replication_rng(seed, usize::MAX));
    match run(model, train, &config.with_seed(seed), &w0, RunOptions::minimal()) {
        Ok(traj) => {
            let w = &traj.final_point;
            let test_loss = model.empirical_risk(w, test)?;
            if !test_loss.is_finite() {
                return Ok(None);
            }
            Ok(Some((test_loss, model.accuracy(w, test)?, model.empirical_risk(w, train)?)))
        }
        Err(Error::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn td_sweep(
    config: &ExperimentConfig,
    seed: u64,
    model: &LossModel,
    train: &Dataset,
    test: &Dataset,
    sink: &mut Sink,
) -> Result<()> {
    use rayon::prelude::*;
    let o = &config.optimizer;
    let mus = config.sweep.mu_d.clone().unwrap_or_else(|| DEFAULT_MU_D_GRID.to_vec());
    let tds = config
        .sweep
        .t_d
        .clone()
        .unwrap_or_else(|| vec![0, o.steps / 4, o.steps / 2, 3 * o.steps / 4, o.steps]);
    for &mu_d in &mus {
        for &t_d in &tds {
            let spec = crate::config::OptimizerSpec { mu_d, t_d: Some(t_d), ..o.clone() };
            let cfg = spec.build(seed);
            let results: Vec<Option<(f64, f64, f64)>> = (0..config.replications)
                .into_par_iter()
                .map(|r| terminal_test_metrics(model, train, test, &cfg, replication_rng(seed, r).random()))
                .collect::<Result<_>>()?;
            let ok: Vec<(f64, f64, f64)> = results.iter().flatten().copied().collect();
            let col = |f: fn(&(f64, f64, f64)) -> f64| ok.iter().map(f).collect::<Vec<f64>>();
            let (loss, acc, train_loss) = (col(|r| r.0), col(|r| r.1), col(|r| r.2));
            sink.row(vec![
                fmt(mu_d),
                t_d.to_string(),
                fmt(o.alpha),
                o.steps.to_string(),
                config.replications.to_string(),
                (results.len() - ok.len()).to_string(),
                fmt(mean(&loss)),
                fmt(std_error(&loss)),
                fmt(mean(&acc)),
                fmt(std_error(&acc)),
                fmt(mean(&train_loss)),
            ])?;
        }
    }
    Ok(())
}
