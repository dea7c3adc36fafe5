//! SGM, heavy-ball SGMM and early-momentum SGMEM iterations.
//!
//! All three share one update,
//! `w_{t+1} = P(w_t + mu_t (w_t - w_{t-1}) - alpha_t g_t)`, with
//! `mu_t = mu_d * 1{t <= t_d}` and `w_{-1} = w_0`. SGM is `mu_d = 0` (or
//! `t_d = 0`), classical SGMM is `t_d = T`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{dot, Dataset, LossModel, ParamVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearningRateSchedule {
    Constant(f64),
    /// `alpha_t = alpha_0 / t` for `t >= 1`; step 0 uses `alpha_0`.
    InverseTime(f64),
}

impl LearningRateSchedule {
    pub fn rate(&self, t: usize) -> f64 {
        match *self {
            LearningRateSchedule::Constant(a) => a,
            LearningRateSchedule::InverseTime(a0) if t == 0 => a0,
            LearningRateSchedule::InverseTime(a0) => a0 / t as f64,
        }
    }

    pub fn base(&self) -> f64 {
        match *self {
            LearningRateSchedule::Constant(a) | LearningRateSchedule::InverseTime(a) => a,
        }
    }
}

/// `mu_t = mu_d` for `t <= t_d`, zero afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumSchedule {
    pub mu_d: f64,
    pub t_d: usize,
}

impl MomentumSchedule {
    pub fn none() -> Self {
        MomentumSchedule { mu_d: 0.0, t_d: 0 }
    }

    pub fn early(mu_d: f64, t_d: usize) -> Self {
        MomentumSchedule { mu_d, t_d }
    }

    /// Momentum for the whole run of `steps` iterations (classical SGMM).
    pub fn constant(mu: f64, steps: usize) -> Self {
        MomentumSchedule { mu_d: mu, t_d: steps }
    }

    pub fn at(&self, t: usize) -> f64 {
        if t <= self.t_d {
            self.mu_d
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// i.i.d. uniform over `0..n` at every draw.
    Uniform,
    /// One random permutation, then cycled.
    ShuffledCyclic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl IndexSampler {
    pub fn uniform(seed: u64) -> Self {
        IndexSampler { kind: SamplerKind::Uniform, seed }
    }

    pub fn shuffled_cyclic(seed: u64) -> Self {
        IndexSampler { kind: SamplerKind::ShuffledCyclic, seed }
    }

    pub fn stream(&self, n: usize) -> IndexStream {
        let permutation = match self.kind {
            SamplerKind::Uniform => Vec::new(),
            SamplerKind::ShuffledCyclic => {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
                p
            }
        };
        IndexStream { sampler: *self, n, permutation }
    }
}

/// Random-access view of a sampler's index sequence for a fixed `n`.
#[derive(Clone, Debug)]
pub struct IndexStream {
    sampler: IndexSampler,
    n: usize,
    permutation: Vec<usize>,
}

impl IndexStream {
    /// The index drawn at position `t` (0-based).
    pub fn index(&self, t: usize) -> usize {
        match self.sampler.kind {
            SamplerKind::Uniform => {
                let key = splitmix64(self.sampler.seed ^ splitmix64(t as u64));
                ChaCha8Rng::seed_from_u64(key).random_range(0..self.n)
            }
            SamplerKind::ShuffledCyclic => self.permutation[t % self.n],
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Index drawn at position `t` from a sample of size `n` (0-based).
pub fn sample_index(sampler: &IndexSampler, t: usize, n: usize) -> usize {
    assert!(n >= 1, "cannot sample from an empty dataset");
    sampler.stream(n).index(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionDomain {
    Unbounded,
    /// Euclidean ball of this radius around the origin.
    Ball(f64),
}

impl ProjectionDomain {
    pub fn project_in_place(&self, w: &mut [f64]) {
        if let ProjectionDomain::Ball(r) = *self {
            let norm = dot(w, w).sqrt();
            if norm > r {
                let s = r / norm;
                w.iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    pub fn project(&self, w: &ParamVector) -> ParamVector {
        let mut v = w.as_slice().to_vec();
        self.project_in_place(&mut v);
        ParamVector::from_vec_unchecked(v)
    }

    pub fn radius(&self) -> Option<f64> {
        match *self {
            ProjectionDomain::Unbounded => None,
            ProjectionDomain::Ball(r) => Some(r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub schedule: LearningRateSchedule,
    pub momentum: MomentumSchedule,
    pub sampler: IndexSampler,
    pub domain: ProjectionDomain,
    pub steps: usize,
    pub batch_size: usize,
}

impl OptimizerConfig {
    pub fn sgmm(alpha: f64, mu: f64, steps: usize, seed: u64) -> Self {
        OptimizerConfig {
            schedule: LearningRateSchedule::Constant(alpha),
            momentum: MomentumSchedule::constant(mu, steps),
            sampler: IndexSampler::uniform(seed),
            domain: ProjectionDomain::Unbounded,
            steps,
            batch_size: 1,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        OptimizerConfig { sampler: IndexSampler { seed, ..self.sampler }, ..self.clone() }
    }
}

/// What a run records besides the final point, average and index log.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Store `w_t` every this many steps (and always `w_0`, `w_T`).
    pub iterate_every: Option<usize>,
    /// Evaluate full-batch `R_S(w_t)` and `||grad R_S(w_t)||^2` every this many steps.
    pub diagnostics_every: Option<usize>,
}

impl RunOptions {
    pub fn full() -> Self {
        RunOptions { iterate_every: Some(1), diagnostics_every: Some(1) }
    }

    pub fn minimal() -> Self {
        RunOptions::default()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `(t, w_t)` pairs, thinned per [`RunOptions::iterate_every`].
    pub iterates: Vec<(usize, ParamVector)>,
    /// `(t, R_S(w_t))`
    pub risks: Vec<(usize, f64)>,
    /// `(t, ||grad R_S(w_t)||^2)`
    pub grad_norms_sq: Vec<(usize, f64)>,
    pub final_point: ParamVector,
    /// `(1 / (T + 1)) sum_{t=0}^{T} w_t`
    pub average: ParamVector,
    /// `(1 / (T + 1)) sum_{t=0}^{T} ||w_t - w_{t-1}||^2` with `w_{-1} = w_0`.
    pub mean_step_sq: f64,
    /// Every sampled index, `batch_size` per step, in draw order.
    pub index_log: Vec<usize>,
    pub batch_size: usize,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.index_log.len() / self.batch_size.max(1)
    }
}

/// One update `P(w_t + mu (w_t - w_prev) - alpha g)`. `t` only labels errors.
pub fn step(
    t: usize,
    w_t: &ParamVector,
    w_prev: &ParamVector,
    g: &ParamVector,
    alpha: f64,
    mu: f64,
    domain: &ProjectionDomain,
) -> Result<ParamVector> {
    if !(alpha > 0.0) || !(0.0..1.0).contains(&mu) {
        return Err(Error::contract(format!("step {t}: need alpha > 0 and 0 <= mu < 1")));
    }
    if g.dim() != w_t.dim() || w_prev.dim() != w_t.dim() {
        return Err(Error::DimensionMismatch { expected: w_t.dim(), actual: g.dim() });
    }
    let mut next = vec![0.0; w_t.dim()];
    update_into(&mut next, w_t.as_slice(), w_prev.as_slice(), g.as_slice(), alpha, mu);
    domain.project_in_place(&mut next);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: t });
    }
    Ok(ParamVector::from_vec_unchecked(next))
}

#[inline]
fn update_into(out: &mut [f64], w: &[f64], prev: &[f64], g: &[f64], alpha: f64, mu: f64) {
    if mu == 0.0 {
        for ((o, wi), gi) in out.iter_mut().zip(w).zip(g) {
            *o = wi - alpha * gi;
        }
    } else {
        for (((o, wi), pi), gi) in out.iter_mut().zip(w).zip(prev).zip(g) {
            *o = wi + mu * (wi - pi) - alpha * gi;
        }
    }
}

/// Runs `config.steps` updates from `w0` on `data`.
///
/// The minibatch gradient is the mean of `batch_size` per-example gradients
/// drawn from consecutive sampler positions.
pub fn run(
    model: &LossModel,
    data: &Dataset,
    config: &OptimizerConfig,
    w0: &ParamVector,
    options: RunOptions,
) -> Result<Trajectory> {
    let n = data.len();
    let d = w0.dim();
    if config.steps == 0 || config.batch_size == 0 {
        return Err(Error::contract("steps and batch_size must be at least 1"));
    }
    let expected = model.param_dim(data.feature_dim());
    if d != expected {
        return Err(Error::DimensionMismatch { expected, actual: d });
    }
    model.loss(w0, data.get(0))?;
    let stream = config.sampler.stream(n);
    let b = config.batch_size;
    let scale = 1.0 / b as f64;

    let mut traj = Trajectory {
        iterates: Vec::new(),
        risks: Vec::new(),
        grad_norms_sq: Vec::new(),
        final_point: w0.clone(),
        average: w0.clone(),
        mean_step_sq: 0.0,
        index_log: Vec::with_capacity(config.steps * b),
        batch_size: b,
    };
    let record = |traj: &mut Trajectory, t: usize, w: &[f64], last: bool| -> Result<()> {
        if t == 0 || last || options.iterate_every.is_some_and(|k| t.is_multiple_of(k.max(1))) {
            traj.iterates.push((t, ParamVector::from_vec_unchecked(w.to_vec())));
        }
        if options.diagnostics_every.is_some_and(|k| t.is_multiple_of(k.max(1)) || last) {
            let (risk, grad) = model.risk_and_gradient(&ParamVector::from_vec_unchecked(w.to_vec()), data)?;
            traj.risks.push((t, risk));
            traj.grad_norms_sq.push((t, grad.norm_sq()));
        }
        Ok(())
    };

    let mut prev = w0.as_slice().to_vec();
    let mut cur = prev.clone();
    let mut next = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut sum = cur.clone();
    let mut step_sq = 0.0;
    record(&mut traj, 0, &cur, false)?;

    for t in 0..config.steps {
        g.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..b {
            let i = stream.index(t * b + j);
            traj.index_log.push(i);
            model.loss_grad_acc(&cur, data.get(i), &mut g, scale);
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: t });
        }
        let alpha = config.schedule.rate(t);
        let mu = config.momentum.at(t);
        update_into(&mut next, &cur, &prev, &g, alpha, mu);
        config.domain.project_in_place(&mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: t });
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
        step_sq += cur.iter().zip(&prev).map(|(a, p)| (a - p) * (a - p)).sum::<f64>();
        sum.iter_mut().zip(&cur).for_each(|(s, v)| *s += v);
        record(&mut traj, t + 1, &cur, t + 1 == config.steps)?;
    }

    let count = (config.steps + 1) as f64;
    traj.average = ParamVector::from_vec_unchecked(sum.into_iter().map(|s| s / count).collect());
    traj.mean_step_sq = step_sq / count;
    traj.final_point = ParamVector::from_vec_unchecked(cur);
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Example;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn first_step_has_no_momentum() {
        let w0 = pv(&[1.0, 0.0]);
        let w1 = step(0, &w0, &w0, &pv(&[1.0, 0.0]), 0.1, 0.9, &ProjectionDomain::Unbounded).unwrap();
        assert!((w1.as_slice()[0] - 0.9).abs() < 1e-15);
        let w2 = step(1, &w1, &w0, &w1, 0.1, 0.9, &ProjectionDomain::Unbounded).unwrap();
        assert!((w2.as_slice()[0] - 0.72).abs() < 1e-15);
        assert_eq!(w2.as_slice()[1], 0.0);
    }

    #[test]
    fn zero_momentum_is_plain_sgd() {
        let (w, p, g) = (pv(&[0.3, -1.2]), pv(&[5.0, 5.0]), pv(&[0.7, 0.1]));
        let out = step(3, &w, &p, &g, 0.05, 0.0, &ProjectionDomain::Unbounded).unwrap();
        assert_eq!(out.as_slice(), &[0.3 - 0.05 * 0.7, -1.2 - 0.05 * 0.1]);
    }

    #[test]
    fn projection_hits_boundary() {
        let w = pv(&[3.0, 4.0]);
        let out = step(0, &w, &w, &pv(&[0.0, 0.0]), 0.1, 0.0, &ProjectionDomain::Ball(0.5)).unwrap();
        assert!((out.norm() - 0.5).abs() < 1e-15);
        let inside = pv(&[0.1, 0.2]);
        assert_eq!(ProjectionDomain::Ball(0.5).project(&inside), inside);
    }

    #[test]
    fn non_finite_gradient_names_step() {
        let w = pv(&[0.0]);
        let g = ParamVector::from_vec_unchecked(vec![1e308]);
        let err = step(17, &w, &w, &g, 1e10, 0.0, &ProjectionDomain::Unbounded).unwrap_err();
        assert!(matches!(err, Error::NonFinite { step: 17 }));
    }

    #[test]
    fn schedules() {
        let s = LearningRateSchedule::InverseTime(0.5);
        assert_eq!(s.rate(0), 0.5);
        assert_eq!(s.rate(4), 0.125);
        let m = MomentumSchedule::early(0.9, 3);
        assert_eq!((m.at(3), m.at(4)), (0.9, 0.0));
    }

    #[test]
    fn cyclic_sampler_visits_each_index_once_per_pass() {
        let s = IndexSampler::shuffled_cyclic(11);
        let mut counts = [0; 5];
        for t in 0..10 {
            counts[sample_index(&s, t, 5)] += 1;
        }
        assert_eq!(counts, [2; 5]);
    }

    #[test]
    fn sampler_is_deterministic() {
        let s = IndexSampler::uniform(42);
        let a: Vec<usize> = (0..50).map(|t| sample_index(&s, t, 7)).collect();
        let b: Vec<usize> = (0..50).map(|t| sample_index(&s, t, 7)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn full_batch_quadratic_reaches_mean_target() {
        let data = Dataset::new(vec![
            Example::target(vec![1.0, 0.0]),
            Example::target(vec![0.0, 2.0]),
            Example::target(vec![-1.0, 1.0]),
        ])
        .unwrap();
        let model = LossModel::quadratic(1.0);
        let mut cfg = OptimizerConfig::sgmm(0.1, 0.0, 400, 0);
        cfg.sampler = IndexSampler::shuffled_cyclic(0);
        cfg.batch_size = 3;
        let traj = run(&model, &data, &cfg, &ParamVector::zeros(2), RunOptions::minimal()).unwrap();
        let w = traj.final_point.as_slice();
        assert!((w[0] - 0.0).abs() < 1e-6 && (w[1] - 1.0).abs() < 1e-6);
        assert_eq!(traj.index_log.len(), 1200);
    }

    #[test]
    fn average_and_step_statistics() {
        let data = Dataset::new(vec![Example::target(vec![1.0])]).unwrap();
        let model = LossModel::quadratic(1.0);
        let cfg = OptimizerConfig::sgmm(0.5, 0.0, 2, 0);
        let traj = run(&model, &data, &cfg, &ParamVector::zeros(1), RunOptions::full()).unwrap();
        // w = 0, 0.5, 0.75
        assert!((traj.average.as_slice()[0] - 1.25 / 3.0).abs() < 1e-15);
        assert!((traj.mean_step_sq - (0.25 + 0.0625) / 3.0).abs() < 1e-15);
        assert_eq!(traj.iterates.len(), 3);
        assert_eq!(traj.risks.len(), 3);
    }
}
