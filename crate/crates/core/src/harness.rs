//! Empirical counterparts of the bounds: coupled twin runs for stability,
//! repeated train/test splits for generalization, and a reference solver
//! for optimization error.
//!
//! Replications run in parallel on the ambient rayon pool. Replication `r`
//! draws from its own ChaCha stream `r` under the master seed, so results do
//! not depend on scheduling.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{synth_dataset, SynthKind};
use crate::error::{Error, Result};
use crate::models::{Curvature, Dataset, Example, Label, LossModel, ParamVector};
use crate::optim::{run, OptimizerConfig, RunOptions, Trajectory};
use crate::stats::{mean, std_error};

/// Generator for replication `index` under `seed`.
pub fn replication_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Copy of `s` with position `index` replaced.
pub fn make_neighbor(s: &Dataset, index: usize, replacement: Example) -> Result<Dataset> {
    s.with_replacement(index, replacement)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwinRunTrace {
    /// `delta_t = ||w_t - w'_t||` for `t = 0..=T`.
    pub delta: Vec<f64>,
    /// `|f(w_T; z) - f(w'_T; z)|` for each probe example.
    pub loss_differences: Vec<f64>,
    /// The index sequence both runs consumed.
    pub index_log: Vec<usize>,
    /// Position where the two samples differ, if any.
    pub differing_index: Option<usize>,
    /// First step whose minibatch contains the differing position.
    pub first_divergent_step: Option<usize>,
    pub final_point: ParamVector,
    pub final_point_prime: ParamVector,
}

fn differing_position(s: &Dataset, s_prime: &Dataset) -> Result<Option<usize>> {
    if s.len() != s_prime.len() {
        return Err(Error::contract(format!("twin samples differ in size: {} vs {}", s.len(), s_prime.len())));
    }
    let diffs: Vec<usize> = (0..s.len()).filter(|&i| s.get(i) != s_prime.get(i)).collect();
    match diffs.as_slice() {
        [] => Ok(None),
        [i] => Ok(Some(*i)),
        _ => Err(Error::contract(format!("twin samples differ in {} positions", diffs.len()))),
    }
}

/// Trains on `s` and `s_prime` from the same start with the same index
/// sequence (sampler seeded by `seed`) and records their divergence.
pub fn twin_run(
    model: &LossModel,
    s: &Dataset,
    s_prime: &Dataset,
    config: &OptimizerConfig,
    seed: u64,
    probe: &Dataset,
) -> Result<TwinRunTrace> {
    let differing_index = differing_position(s, s_prime)?;
    let config = config.with_seed(seed);
    let w0 = model.init_params(s.feature_dim(), &mut replication_rng(seed, usize::MAX));
    let options = RunOptions { iterate_every: Some(1), diagnostics_every: None };
    let a = run(model, s, &config, &w0, options)?;
    let b = run(model, s_prime, &config, &w0, options)?;
    if a.index_log != b.index_log {
        return Err(Error::contract("twin runs consumed different index sequences"));
    }
    let delta: Vec<f64> = a.iterates.iter().zip(&b.iterates).map(|((_, u), (_, v))| u.distance(v)).collect();
    let bs = config.batch_size;
    let first_divergent_step = differing_index.and_then(|d| a.index_log.iter().position(|&i| i == d).map(|p| p / bs));
    let quiet_until = first_divergent_step.unwrap_or(config.steps);
    if let Some(t) = delta[..=quiet_until].iter().position(|&d| d != 0.0) {
        return Err(Error::contract(format!("twin runs diverged at t = {t} before touching the differing example")));
    }
    let loss_differences = probe
        .examples()
        .iter()
        .map(|z| Ok((model.loss(&a.final_point, z)? - model.loss(&b.final_point, z)?).abs()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(TwinRunTrace {
        delta,
        loss_differences,
        index_log: a.index_log,
        differing_index,
        first_divergent_step,
        final_point: a.final_point,
        final_point_prime: b.final_point,
    })
}

/// Where training samples and neighbour replacements come from.
pub trait SampleSource: Sync {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset>;

    /// Replacement for position `index` of `s`, never equal to `s[index]`.
    fn replacement(&self, s: &Dataset, index: usize, rng: &mut ChaCha8Rng) -> Result<Example>;
}

/// Subsamples without replacement from a finite pool.
#[derive(Clone, Debug)]
pub struct PoolSource {
    pub pool: Dataset,
}

impl PoolSource {
    /// `(S, pool rows not in S)`; consumes `rng` exactly as [`SampleSource::draw`].
    pub fn draw_with_complement(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<(Dataset, Dataset)> {
        let chosen = self.indices(n, rng)?;
        let mut used = vec![false; self.pool.len()];
        chosen.iter().for_each(|&i| used[i] = true);
        let rest: Vec<usize> = (0..self.pool.len()).filter(|&i| !used[i]).collect();
        if rest.is_empty() {
            return Err(Error::contract(format!("n = {n} leaves no pool rows to test on")));
        }
        Ok((self.pool.subset(&chosen)?, self.pool.subset(&rest)?))
    }

    fn indices(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        if n > self.pool.len() {
            return Err(Error::contract(format!("need {n} examples but the pool holds {}", self.pool.len())));
        }
        Ok(sample(rng, self.pool.len(), n).into_vec())
    }
}

impl SampleSource for PoolSource {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        self.pool.subset(&self.indices(n, rng)?)
    }

    fn replacement(&self, s: &Dataset, index: usize, rng: &mut ChaCha8Rng) -> Result<Example> {
        let old = s.get(index);
        if self.pool.examples().iter().all(|e| e == old) {
            return Err(Error::contract("pool has no example distinct from the replaced one"));
        }
        loop {
            let candidate = self.pool.get(rng.random_range(0..self.pool.len()));
            if candidate != old {
                return Ok(candidate.clone());
            }
        }
    }
}

/// Fresh synthetic draws for every sample.
#[derive(Clone, Copy, Debug)]
pub struct SynthSource {
    pub kind: SynthKind,
    pub dim: usize,
}

impl SampleSource for SynthSource {
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        synth_dataset(self.kind, n, self.dim, rng.random())
    }

    fn replacement(&self, s: &Dataset, index: usize, rng: &mut ChaCha8Rng) -> Result<Example> {
        loop {
            let e = synth_dataset(self.kind, 1, self.dim, rng.random())?.get(0).clone();
            if &e != s.get(index) {
                return Ok(e);
            }
        }
    }
}

/// Probe set for the sup over `z`: `heldout` plus the `2k` points
/// `+-radius e_i`, `i < k`, with every class label for classified data.
pub fn probe_with_corners(heldout: &Dataset, radius: f64, k: usize, classes: usize) -> Result<Dataset> {
    let d = heldout.feature_dim();
    let mut all = heldout.examples().to_vec();
    for i in 0..k.min(d) {
        for sign in [1.0, -1.0] {
            let mut x = vec![0.0; d];
            x[i] = sign * radius;
            match heldout.get(0).label {
                Label::Real(_) => all.push(Example::target(x)),
                Label::Class(_) => (0..classes).for_each(|c| all.push(Example::classified(x.clone(), c))),
            }
        }
    }
    Dataset::new(all)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityEstimate {
    /// Max over probes of the replication-mean loss difference.
    pub epsilon_hat: f64,
    pub std_error: f64,
    /// Probe attaining the max.
    pub probe_index: usize,
    /// `delta_T` per replication.
    pub terminal_deltas: Vec<f64>,
    /// Max-over-probe loss difference per replication.
    pub replication_max: Vec<f64>,
}

/// Plug-in estimate of uniform stability from `replications` twin runs on
/// fresh samples of size `n` and their random neighbours.
pub fn estimate_stability(
    model: &LossModel,
    config: &OptimizerConfig,
    source: &dyn SampleSource,
    n: usize,
    replications: usize,
    probe: &Dataset,
    seed: u64,
) -> Result<StabilityEstimate> {
    if replications < 2 {
        return Err(Error::contract("stability estimation needs at least two replications"));
    }
    let traces: Vec<TwinRunTrace> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            let s = source.draw(n, &mut rng)?;
            let index = rng.random_range(0..n);
            let replacement = source.replacement(&s, index, &mut rng)?;
            let s_prime = make_neighbor(&s, index, replacement)?;
            twin_run(model, &s, &s_prime, config, rng.random(), probe)
        })
        .collect::<Result<_>>()?;
    let probes = probe.len();
    let column = |j: usize| traces.iter().map(|t| t.loss_differences[j]).collect::<Vec<f64>>();
    let (probe_index, epsilon_hat) = (0..probes)
        .map(|j| (j, mean(&column(j))))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty probe set");
    Ok(StabilityEstimate {
        epsilon_hat,
        std_error: std_error(&column(probe_index)),
        probe_index,
        terminal_deltas: traces.iter().map(|t| *t.delta.last().expect("T + 1 entries")).collect(),
        replication_max: traces
            .iter()
            .map(|t| t.loss_differences.iter().copied().fold(0.0, f64::max))
            .collect(),
    })
}

/// One training run's risks on its own sample and on the test set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Replication {
    pub train_risk: f64,
    pub test_risk: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    /// `(t, R_S(w_t))` at the requested diagnostic interval.
    pub risk_profile: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneralizationReport {
    pub n: usize,
    pub replications: usize,
    pub train_risk: f64,
    pub test_risk: f64,
    /// Mean of test risk minus train risk (cross-entropy).
    pub eps_g_hat: f64,
    pub eps_g_se: f64,
    /// Mean of train accuracy minus test accuracy.
    pub accuracy_gap: f64,
    pub accuracy_gap_se: f64,
    pub runs: Vec<Replication>,
}

impl GeneralizationReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.test_risk - r.train_risk).collect()
    }
}

/// Where [`estimate_generalization`] measures test risk.
#[derive(Clone, Copy, Debug)]
pub enum TestSet<'a> {
    Fixed(&'a Dataset),
    /// The pool rows each replication did not draw, an independent held-out
    /// sample per replication.
    PoolComplement,
}

/// Gap between test and training risk for each `n` in `n_grid`.
///
/// Replication `r` uses the same subsample and index seed for every `n` and
/// every optimizer setting sharing `seed`, so sweeps are paired.
#[allow(clippy::too_many_arguments)]
pub fn estimate_generalization(
    model: &LossModel,
    config: &OptimizerConfig,
    train_pool: &Dataset,
    test_set: TestSet,
    n_grid: &[usize],
    replications: usize,
    seed: u64,
    options: RunOptions,
) -> Result<Vec<GeneralizationReport>> {
    let source = PoolSource { pool: train_pool.clone() };
    n_grid
        .iter()
        .map(|&n| {
            if n > train_pool.len() {
                return Err(Error::contract(format!("n = {n} exceeds the pool of {}", train_pool.len())));
            }
            let runs: Vec<Replication> = (0..replications)
                .into_par_iter()
                .map(|r| {
                    let mut rng = replication_rng(seed, r);
                    let (s, complement) = match test_set {
                        TestSet::Fixed(_) => (source.draw(n, &mut rng)?, None),
                        TestSet::PoolComplement => {
                            let (s, rest) = source.draw_with_complement(n, &mut rng)?;
                            (s, Some(rest))
                        }
                    };
                    let test_set = match (&complement, test_set) {
                        (Some(rest), _) => rest,
                        (None, TestSet::Fixed(t)) => t,
                        (None, TestSet::PoolComplement) => unreachable!("complement drawn above"),
                    };
                    let w0 = model.init_params(s.feature_dim(), &mut rng);
                    let traj = run(model, &s, &config.with_seed(rng.random()), &w0, options)?;
                    let w = &traj.final_point;
                    Ok(Replication {
                        train_risk: model.empirical_risk(w, &s)?,
                        test_risk: model.empirical_risk(w, test_set)?,
                        train_accuracy: model.accuracy(w, &s)?,
                        test_accuracy: model.accuracy(w, test_set)?,
                        risk_profile: traj.risks,
                    })
                })
                .collect::<Result<_>>()?;
            let gaps: Vec<f64> = runs.iter().map(|r| r.test_risk - r.train_risk).collect();
            let acc: Vec<f64> = runs.iter().map(|r| r.train_accuracy - r.test_accuracy).collect();
            Ok(GeneralizationReport {
                n,
                replications,
                train_risk: mean(&runs.iter().map(|r| r.train_risk).collect::<Vec<_>>()),
                test_risk: mean(&runs.iter().map(|r| r.test_risk).collect::<Vec<_>>()),
                eps_g_hat: mean(&gaps),
                eps_g_se: std_error(&gaps),
                accuracy_gap: mean(&acc),
                accuracy_gap_se: std_error(&acc),
                runs,
            })
        })
        .collect()
}

/// Closed-form smoothness of the convex families over the whole space.
fn global_smoothness(model: &LossModel, s: &Dataset) -> Result<f64> {
    match model {
        LossModel::Quadratic { curvature: Curvature::Isotropic(c) } => Ok(*c),
        LossModel::Quadratic { curvature: Curvature::Diagonal(cs) } => Ok(cs.iter().copied().fold(0.0, f64::max)),
        LossModel::LogisticL2 { weight_decay } => Ok(0.25 * s.max_feature_norm().powi(2) + weight_decay),
        LossModel::Mlp { .. } => Err(Error::contract("the reference solver needs a strongly convex model")),
    }
}

pub const REFERENCE_TOLERANCE: f64 = 1e-10;

/// Empirical-risk minimizer by full-batch gradient descent with step
/// `1/beta`, stopped at `||grad R_S|| <= 1e-10`.
pub fn reference_solve(model: &LossModel, s: &Dataset, budget: usize) -> Result<ParamVector> {
    if !model.is_strongly_convex() {
        return Err(Error::contract("the reference solver needs a strongly convex model"));
    }
    let step = 1.0 / global_smoothness(model, s)?;
    let mut w = ParamVector::zeros(model.param_dim(s.feature_dim()));
    let mut grad_norm = f64::INFINITY;
    for _ in 0..=budget {
        let (_, g) = model.risk_and_gradient(&w, s)?;
        grad_norm = g.norm();
        if grad_norm <= REFERENCE_TOLERANCE {
            return Ok(w);
        }
        w = ParamVector::new(w.as_slice().iter().zip(g.as_slice()).map(|(a, b)| a - step * b).collect())?;
    }
    Err(Error::ReferenceSolve { grad_norm, iterations: budget })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationRun {
    /// `R_S(w_hat_T) - R_S(w*)`
    pub gap: f64,
    /// `R_S(w_0) - R_S(w_T)`
    pub w0: f64,
    /// `||w_0 - w*||^2`
    pub w1: f64,
    /// `||w_hat_T - w*||^2`
    pub w2: f64,
    /// `(1/(T+1)) sum_t ||w_t - w_{t-1}||^2`
    pub w3: f64,
}

/// Optimization error of the averaged iterate on `s`, with the per-run
/// quantities whose expectations are the `W` terms.
pub fn estimate_optimization_gap(
    model: &LossModel,
    s: &Dataset,
    config: &OptimizerConfig,
    reference_budget: usize,
    seed: u64,
) -> Result<OptimizationRun> {
    let w_star = reference_solve(model, s, reference_budget)?;
    let w0 = model.init_params(s.feature_dim(), &mut replication_rng(seed, usize::MAX));
    let traj = run(model, s, &config.with_seed(seed), &w0, RunOptions::minimal())?;
    optimization_terms(model, s, &traj, &w0, &w_star)
}

fn optimization_terms(
    model: &LossModel,
    s: &Dataset,
    traj: &Trajectory,
    w0: &ParamVector,
    w_star: &ParamVector,
) -> Result<OptimizationRun> {
    let r_star = model.empirical_risk(w_star, s)?;
    Ok(OptimizationRun {
        gap: (model.empirical_risk(&traj.average, s)? - r_star).max(0.0),
        w0: model.empirical_risk(w0, s)? - model.empirical_risk(&traj.final_point, s)?,
        w1: w0.distance(w_star).powi(2),
        w2: traj.average.distance(w_star).powi(2),
        w3: traj.mean_step_sq,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationStudy {
    pub runs: Vec<OptimizationRun>,
    pub gap: f64,
    pub gap_se: f64,
    /// Monte Carlo means of `W0..W3`.
    pub w_terms: [f64; 4],
    pub w_std_errors: [f64; 4],
}

/// Repeats [`estimate_optimization_gap`] over fresh samples of size `n`.
pub fn optimization_study(
    model: &LossModel,
    config: &OptimizerConfig,
    source: &dyn SampleSource,
    n: usize,
    replications: usize,
    reference_budget: usize,
    seed: u64,
) -> Result<OptimizationStudy> {
    let runs: Vec<OptimizationRun> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            let s = source.draw(n, &mut rng)?;
            estimate_optimization_gap(model, &s, config, reference_budget, rng.random())
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&OptimizationRun) -> f64| runs.iter().map(f).collect::<Vec<f64>>();
    let cols = [col(|r| r.w0), col(|r| r.w1), col(|r| r.w2), col(|r| r.w3)];
    let gaps = col(|r| r.gap);
    Ok(OptimizationStudy {
        gap: mean(&gaps),
        gap_se: std_error(&gaps),
        w_terms: cols.each_ref().map(|c| mean(c)),
        w_std_errors: cols.each_ref().map(|c| std_error(c)),
        runs,
    })
}

/// `(min_t ||grad R_S(w_t)||^2, argmin t)` over the recorded iterates, or
/// over the recorded gradient norms when those were kept instead.
pub fn min_grad_norm_profile(trajectory: &Trajectory, model: &LossModel, s: &Dataset) -> Result<(f64, usize)> {
    let profile = grad_norm_profile(trajectory, model, s)?;
    Ok(profile
        .into_iter()
        .map(|(t, g)| (g, t))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("trajectories hold at least w_0"))
}

/// `(t, ||grad R_S(w_t)||^2)` for every recorded step.
pub fn grad_norm_profile(trajectory: &Trajectory, model: &LossModel, s: &Dataset) -> Result<Vec<(usize, f64)>> {
    if trajectory.grad_norms_sq.len() >= trajectory.iterates.len() {
        return Ok(trajectory.grad_norms_sq.clone());
    }
    trajectory
        .iterates
        .iter()
        .map(|(t, w)| Ok((*t, model.risk_and_gradient(w, s)?.1.norm_sq())))
        .collect()
}

/// `min_t mean_seeds ||grad R_S(w_t)||^2` for profiles recorded at the same steps.
pub fn seed_averaged_min(profiles: &[Vec<(usize, f64)>]) -> (f64, usize) {
    let len = profiles.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|k| (profiles.iter().map(|p| p[k].1).sum::<f64>() / profiles.len() as f64, profiles[0][k].0))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((f64::NAN, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::{IndexSampler, ProjectionDomain};

    fn quad_sample() -> Dataset {
        synth_dataset(SynthKind::QuadraticTargets { radius: 0.5 }, 20, 3, 1).unwrap()
    }

    fn cfg(steps: usize) -> OptimizerConfig {
        OptimizerConfig { domain: ProjectionDomain::Ball(0.5), ..OptimizerConfig::sgmm(0.5, 0.05, steps, 0) }
    }

    #[test]
    fn neighbor_differs_in_one_place() {
        let s = quad_sample();
        let same = make_neighbor(&s, 1, s.get(1).clone()).unwrap();
        assert_eq!(same, s);
        let t = make_neighbor(&s, 1, Example::target(vec![0.0; 3])).unwrap();
        assert_eq!(differing_position(&s, &t).unwrap(), Some(1));
        assert!(make_neighbor(&s, 20, Example::target(vec![0.0; 3])).is_err());
    }

    #[test]
    fn identical_twins_never_diverge() {
        let s = quad_sample();
        let trace = twin_run(&LossModel::quadratic(1.0), &s, &s, &cfg(200), 3, &s).unwrap();
        assert!(trace.delta.iter().all(|&d| d == 0.0));
        assert_eq!(trace.delta.len(), 201);
    }

    #[test]
    fn unsampled_difference_leaves_runs_equal() {
        let s = quad_sample();
        let mut config = cfg(5);
        config.sampler = IndexSampler::shuffled_cyclic(0);
        let seed = 11;
        let order = config.with_seed(seed).sampler.stream(s.len());
        let late = order.index(19);
        let s_prime = make_neighbor(&s, late, Example::target(vec![0.4, 0.0, 0.0])).unwrap();
        let trace = twin_run(&LossModel::quadratic(1.0), &s, &s_prime, &config, seed, &s).unwrap();
        assert!(!trace.index_log.contains(&late));
        assert_eq!(*trace.delta.last().unwrap(), 0.0);
    }

    #[test]
    fn size_mismatch_rejected() {
        let s = quad_sample();
        let short = s.subset(&[0, 1]).unwrap();
        assert!(twin_run(&LossModel::quadratic(1.0), &s, &short, &cfg(3), 0, &s).is_err());
    }

    #[test]
    fn quadratic_reference_is_mean_target() {
        let s = quad_sample();
        let w = reference_solve(&LossModel::quadratic(1.0), &s, 100).unwrap();
        for k in 0..3 {
            let m = s.examples().iter().map(|e| e.features[k]).sum::<f64>() / 20.0;
            assert!((w.as_slice()[k] - m).abs() < 1e-12);
        }
        assert!(reference_solve(&LossModel::mlp(3, 2, 2), &s, 10).is_err());
    }

    #[test]
    fn complement_excludes_the_drawn_rows() {
        let source = PoolSource { pool: quad_sample() };
        let (s, rest) = source.draw_with_complement(15, &mut replication_rng(1, 0)).unwrap();
        assert_eq!((s.len(), rest.len()), (15, 5));
        assert!(rest.examples().iter().all(|e| !s.examples().contains(e)));
        assert_eq!(s, source.draw(15, &mut replication_rng(1, 0)).unwrap());
        assert!(source.draw_with_complement(20, &mut replication_rng(1, 0)).is_err());
    }

    #[test]
    fn memorizing_one_point_overfits() {
        let pool = Dataset::new(vec![Example::target(vec![1.0, 0.0])]).unwrap();
        let test = Dataset::new(vec![Example::target(vec![-1.0, 0.0]), Example::target(vec![0.0, 1.0])]).unwrap();
        let cfg = OptimizerConfig::sgmm(0.5, 0.0, 100, 0);
        let reports =
            estimate_generalization(&LossModel::quadratic(1.0), &cfg, &pool, TestSet::Fixed(&test), &[1], 2, 0, RunOptions::minimal())
                .unwrap();
        assert!(reports[0].eps_g_hat > 0.0);
        assert!(estimate_generalization(&LossModel::quadratic(1.0), &cfg, &pool, TestSet::Fixed(&test), &[2], 2, 0, RunOptions::minimal())
            .is_err());
    }

    #[test]
    fn min_grad_norm_cases() {
        let s = Dataset::new(vec![Example::target(vec![1.0])]).unwrap();
        let model = LossModel::quadratic(1.0);
        let cfg = OptimizerConfig::sgmm(1.0, 0.0, 1, 0);
        let traj = run(&model, &s, &cfg, &ParamVector::zeros(1), RunOptions::full()).unwrap();
        assert_eq!(min_grad_norm_profile(&traj, &model, &s).unwrap(), (0.0, 1));
        let mut single = traj.clone();
        single.iterates.truncate(1);
        single.grad_norms_sq.clear();
        assert_eq!(min_grad_norm_profile(&single, &model, &s).unwrap(), (1.0, 0));
    }
}
