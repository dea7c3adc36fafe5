//! Loss families `f(w; z)`, their exact gradients, and certified constants.
//!
//! Three families ship: an (optionally anisotropic) quadratic whose examples
//! are target points, L2-regularised binary logistic regression, and a
//! one-hidden-layer ReLU network with a softmax cross-entropy head.
//! [`certify`] derives the Lipschitz / smoothness / strong-convexity
//! constants the bounds need and checks them by rejection sampling.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in parameter space. Entries are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        ParamVector(vec![0.0; dim])
    }

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite parameter entry at index {i}")));
        }
        Ok(ParamVector(values))
    }

    /// Wraps values the caller has already checked (or produced from finite inputs).
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        ParamVector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.0, &self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn distance(&self, other: &ParamVector) -> f64 {
        distance(&self.0, &other.0)
    }

    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        ParamVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Class(usize),
    Real(f64),
}

/// One sample `z`. For the quadratic family `features` is the target point.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: Label,
}

impl Example {
    pub fn classified(features: Vec<f64>, class: usize) -> Self {
        Example { features, label: Label::Class(class) }
    }

    pub fn target(point: Vec<f64>) -> Self {
        Example { features: point, label: Label::Real(0.0) }
    }

    pub fn class(&self) -> Option<usize> {
        match self.label {
            Label::Class(c) => Some(c),
            Label::Real(_) => None,
        }
    }

    fn hash_into(&self, h: &mut impl Hasher) {
        for v in &self.features {
            v.to_bits().hash(h);
        }
        match self.label {
            Label::Class(c) => (0u8, c as u64).hash(h),
            Label::Real(r) => (1u8, r.to_bits()).hash(h),
        }
    }
}

/// An ordered, immutable sample `S = {z_1, ..., z_n}`. Cloning is cheap.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    examples: Arc<[Example]>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::contract("dataset must contain at least one example"))?;
        let d = first.features.len();
        if let Some(bad) = examples.iter().find(|e| e.features.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, actual: bad.features.len() });
        }
        Ok(Dataset { examples: examples.into() })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.examples[0].features.len()
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn get(&self, i: usize) -> &Example {
        &self.examples[i]
    }

    pub fn max_feature_norm(&self) -> f64 {
        self.examples
            .iter()
            .map(|e| dot(&e.features, &e.features).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.examples[i].clone()).collect())
    }

    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let mut all = self.examples.to_vec();
        all.extend_from_slice(&other.examples);
        Dataset::new(all)
    }

    /// A copy with position `index` replaced.
    pub fn with_replacement(&self, index: usize, replacement: Example) -> Result<Dataset> {
        if index >= self.len() {
            return Err(Error::contract(format!("index {index} out of range for n = {}", self.len())));
        }
        if replacement.features.len() != self.feature_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim(),
                actual: replacement.features.len(),
            });
        }
        let mut all = self.examples.to_vec();
        all[index] = replacement;
        Dataset::new(all)
    }

    /// Content hash, stable within a process.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for e in self.examples.iter() {
            e.hash_into(&mut h);
        }
        h.finish()
    }
}

/// Constants the bounds consume, valid over the ball of radius `domain_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCertificate {
    /// `L`
    pub lipschitz: f64,
    /// `beta`
    pub smoothness: f64,
    /// `gamma`; zero for non-convex families.
    pub strong_convexity: f64,
    /// `M = sup f`
    pub loss_bound: f64,
    pub domain_radius: f64,
    /// Set when the constants were estimated by probing rather than derived.
    pub empirical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Curvature {
    Isotropic(f64),
    Diagonal(Vec<f64>),
}

impl Curvature {
    fn at(&self, i: usize) -> f64 {
        match self {
            Curvature::Isotropic(c) => *c,
            Curvature::Diagonal(cs) => cs[i],
        }
    }

    fn max(&self) -> f64 {
        match self {
            Curvature::Isotropic(c) => *c,
            Curvature::Diagonal(cs) => cs.iter().copied().fold(f64::MIN, f64::max),
        }
    }

    fn min(&self) -> f64 {
        match self {
            Curvature::Isotropic(c) => *c,
            Curvature::Diagonal(cs) => cs.iter().copied().fold(f64::MAX, f64::min),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LossModel {
    /// `f(w; z) = 1/2 sum_i c_i (w_i - z_i)^2`
    Quadratic { curvature: Curvature },
    /// Binary cross-entropy on `sigmoid(w . x)` plus `(weight_decay / 2) ||w||^2`.
    LogisticL2 { weight_decay: f64 },
    /// `input -> hidden (ReLU) -> classes (softmax)`, cross-entropy loss.
    Mlp { input: usize, hidden: usize, classes: usize },
}

impl LossModel {
    pub fn quadratic(curvature: f64) -> Self {
        LossModel::Quadratic { curvature: Curvature::Isotropic(curvature) }
    }

    pub fn logistic(weight_decay: f64) -> Self {
        LossModel::LogisticL2 { weight_decay }
    }

    pub fn mlp(input: usize, hidden: usize, classes: usize) -> Self {
        LossModel::Mlp { input, hidden, classes }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossModel::Quadratic { .. } => "quadratic",
            LossModel::LogisticL2 { .. } => "logistic-l2",
            LossModel::Mlp { .. } => "mlp",
        }
    }

    /// Parameter dimension for examples with `feature_dim` features.
    pub fn param_dim(&self, feature_dim: usize) -> usize {
        match self {
            LossModel::Quadratic { .. } | LossModel::LogisticL2 { .. } => feature_dim,
            LossModel::Mlp { input, hidden, classes } => hidden * input + hidden + classes * hidden + classes,
        }
    }

    pub fn is_strongly_convex(&self) -> bool {
        match self {
            LossModel::Quadratic { curvature } => curvature.min() > 0.0,
            LossModel::LogisticL2 { weight_decay } => *weight_decay > 0.0,
            LossModel::Mlp { .. } => false,
        }
    }

    /// Initial point: zeros for the convex families, Xavier-uniform weights
    /// with zero biases for the network.
    pub fn init_params(&self, feature_dim: usize, rng: &mut impl Rng) -> ParamVector {
        match self {
            LossModel::Mlp { input, hidden, classes } => {
                let mut w = vec![0.0; self.param_dim(feature_dim)];
                let (w1, rest) = w.split_at_mut(hidden * input);
                let a1 = (6.0 / (*input + *hidden) as f64).sqrt();
                w1.iter_mut().for_each(|v| *v = rng.random_range(-a1..a1));
                let w2 = &mut rest[*hidden..*hidden + classes * hidden];
                let a2 = (6.0 / (*hidden + *classes) as f64).sqrt();
                w2.iter_mut().for_each(|v| *v = rng.random_range(-a2..a2));
                ParamVector(w)
            }
            _ => ParamVector::zeros(self.param_dim(feature_dim)),
        }
    }

    fn check(&self, w: &[f64], z: &Example) -> Result<()> {
        let d = z.features.len();
        if let LossModel::Mlp { input, classes, .. } = self {
            if d != *input {
                return Err(Error::DimensionMismatch { expected: *input, actual: d });
            }
            match z.label {
                Label::Class(c) if c < *classes => {}
                _ => return Err(Error::contract("mlp examples need a class label below the class count")),
            }
        }
        if let LossModel::LogisticL2 { .. } = self {
            match z.label {
                Label::Class(0) | Label::Class(1) => {}
                _ => return Err(Error::contract("logistic examples need a class label in {0, 1}")),
            }
        }
        if let LossModel::Quadratic { curvature: Curvature::Diagonal(cs) } = self {
            if cs.len() != d {
                return Err(Error::DimensionMismatch { expected: cs.len(), actual: d });
            }
        }
        let expected = self.param_dim(d);
        if w.len() != expected {
            return Err(Error::DimensionMismatch { expected, actual: w.len() });
        }
        Ok(())
    }

    pub fn loss(&self, w: &ParamVector, z: &Example) -> Result<f64> {
        self.check(&w.0, z)?;
        Ok(self.loss_unchecked(&w.0, z))
    }

    pub fn grad(&self, w: &ParamVector, z: &Example) -> Result<ParamVector> {
        self.check(&w.0, z)?;
        let mut g = vec![0.0; w.dim()];
        self.loss_grad_acc(&w.0, z, &mut g, 1.0);
        Ok(ParamVector(g))
    }

    /// `R_S(w) = (1/n) sum_i f(w; z_i)`.
    pub fn empirical_risk(&self, w: &ParamVector, data: &Dataset) -> Result<f64> {
        self.check(&w.0, data.get(0))?;
        let n = data.len() as f64;
        Ok(data.examples().iter().map(|z| self.loss_unchecked(&w.0, z)).sum::<f64>() / n)
    }

    /// `(R_S(w), grad R_S(w))`.
    pub fn risk_and_gradient(&self, w: &ParamVector, data: &Dataset) -> Result<(f64, ParamVector)> {
        self.check(&w.0, data.get(0))?;
        let scale = 1.0 / data.len() as f64;
        let mut g = vec![0.0; w.dim()];
        let mut risk = 0.0;
        for z in data.examples() {
            risk += self.loss_grad_acc(&w.0, z, &mut g, scale);
        }
        Ok((risk * scale, ParamVector(g)))
    }

    /// Fraction of examples whose predicted class matches the label.
    pub fn accuracy(&self, w: &ParamVector, data: &Dataset) -> Result<f64> {
        self.check(&w.0, data.get(0))?;
        let hits = data
            .examples()
            .iter()
            .filter(|z| z.class().is_some() && self.predict_unchecked(&w.0, z) == z.class())
            .count();
        Ok(hits as f64 / data.len() as f64)
    }

    pub(crate) fn predict_unchecked(&self, w: &[f64], z: &Example) -> Option<usize> {
        match self {
            LossModel::Quadratic { .. } => None,
            LossModel::LogisticL2 { .. } => Some(usize::from(dot(w, &z.features) > 0.0)),
            LossModel::Mlp { .. } => {
                let logits = self.mlp_forward(w, &z.features).1;
                logits
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
            }
        }
    }

    pub(crate) fn loss_unchecked(&self, w: &[f64], z: &Example) -> f64 {
        match self {
            LossModel::Quadratic { curvature } => w
                .iter()
                .zip(&z.features)
                .enumerate()
                .map(|(i, (wi, ti))| 0.5 * curvature.at(i) * (wi - ti) * (wi - ti))
                .sum(),
            LossModel::LogisticL2 { weight_decay } => {
                let y = label01(z);
                let s = dot(w, &z.features);
                softplus(s) - y * s + 0.5 * weight_decay * dot(w, w)
            }
            LossModel::Mlp { .. } => {
                let (_, logits) = self.mlp_forward(w, &z.features);
                let class = z.class().unwrap_or(0);
                log_sum_exp(&logits) - logits[class]
            }
        }
    }

    /// Adds `scale * grad f(w; z)` into `acc` and returns `f(w; z)`.
    pub(crate) fn loss_grad_acc(&self, w: &[f64], z: &Example, acc: &mut [f64], scale: f64) -> f64 {
        match self {
            LossModel::Quadratic { curvature } => {
                let mut loss = 0.0;
                for (i, ((wi, ti), gi)) in w.iter().zip(&z.features).zip(acc.iter_mut()).enumerate() {
                    let c = curvature.at(i);
                    let r = wi - ti;
                    loss += 0.5 * c * r * r;
                    *gi += scale * c * r;
                }
                loss
            }
            LossModel::LogisticL2 { weight_decay } => {
                let y = label01(z);
                let s = dot(w, &z.features);
                let coeff = scale * (sigmoid(s) - y);
                for ((gi, xi), wi) in acc.iter_mut().zip(&z.features).zip(w) {
                    *gi += coeff * xi + scale * weight_decay * wi;
                }
                softplus(s) - y * s + 0.5 * weight_decay * dot(w, w)
            }
            LossModel::Mlp { input, hidden, classes } => {
                let (input, hidden, classes) = (*input, *hidden, *classes);
                let x = &z.features;
                let (pre, logits) = self.mlp_forward(w, x);
                let class = z.class().unwrap_or(0);
                let lse = log_sum_exp(&logits);
                let (w1_len, b1_len) = (hidden * input, hidden);
                let w2 = &w[w1_len + b1_len..w1_len + b1_len + classes * hidden];

                // dL/dlogits = softmax - onehot
                let dlogits: Vec<f64> = logits
                    .iter()
                    .enumerate()
                    .map(|(k, &l)| (l - lse).exp() - if k == class { 1.0 } else { 0.0 })
                    .collect();
                let mut dhidden = vec![0.0; hidden];
                {
                    let (_, rest) = acc.split_at_mut(w1_len + b1_len);
                    let (gw2, gb2) = rest.split_at_mut(classes * hidden);
                    for k in 0..classes {
                        let dk = dlogits[k];
                        gb2[k] += scale * dk;
                        let row = &w2[k * hidden..(k + 1) * hidden];
                        let grow = &mut gw2[k * hidden..(k + 1) * hidden];
                        for j in 0..hidden {
                            let a = pre[j].max(0.0);
                            grow[j] += scale * dk * a;
                            dhidden[j] += dk * row[j];
                        }
                    }
                }
                let nz: Vec<usize> = (0..input).filter(|&i| x[i] != 0.0).collect();
                let (gw1, rest) = acc.split_at_mut(w1_len);
                let gb1 = &mut rest[..b1_len];
                for j in 0..hidden {
                    if pre[j] <= 0.0 {
                        continue;
                    }
                    let dj = scale * dhidden[j];
                    gb1[j] += dj;
                    let grow = &mut gw1[j * input..(j + 1) * input];
                    for &i in &nz {
                        grow[i] += dj * x[i];
                    }
                }
                lse - logits[class]
            }
        }
    }

    /// Hidden pre-activations and output logits.
    fn mlp_forward(&self, w: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let LossModel::Mlp { input, hidden, classes } = *self else {
            unreachable!("mlp_forward on a non-network model")
        };
        let (w1, rest) = w.split_at(hidden * input);
        let (b1, rest) = rest.split_at(hidden);
        let (w2, b2) = rest.split_at(classes * hidden);
        let nz: Vec<usize> = (0..input).filter(|&i| x[i] != 0.0).collect();
        let pre: Vec<f64> = (0..hidden)
            .map(|j| {
                let row = &w1[j * input..(j + 1) * input];
                b1[j] + nz.iter().map(|&i| row[i] * x[i]).sum::<f64>()
            })
            .collect();
        let logits = (0..classes)
            .map(|k| {
                let row = &w2[k * hidden..(k + 1) * hidden];
                b2[k] + row.iter().zip(&pre).map(|(a, p)| a * p.max(0.0)).sum::<f64>()
            })
            .collect();
        (pre, logits)
    }
}

fn label01(z: &Example) -> f64 {
    match z.label {
        Label::Class(c) => c as f64,
        Label::Real(r) => r,
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^s)` without overflow.
fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Uniform draw from the Euclidean ball of radius `radius` around `center`.
pub(crate) fn sample_ball(center: &[f64], radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    let d = center.len();
    let dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let norm = dot(&dir, &dir).sqrt().max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    center.iter().zip(&dir).map(|(c, v)| c + r * v / norm).collect()
}

/// Relative slack for floating-point roundoff in the probe inequalities.
const PROBE_SLACK: f64 = 1e-9;
/// Inflation applied to probed constants before they are re-validated.
const EMPIRICAL_INFLATION: f64 = 2.0;

/// Derives constants for `model` on `data` over the ball of radius
/// `domain_radius` and validates them on `probe_count` random pairs.
///
/// The convex families use closed forms; the network's constants are
/// probed, inflated, and re-validated on a fresh set of pairs.
pub fn certify(
    model: &LossModel,
    data: &Dataset,
    domain_radius: f64,
    probe_count: usize,
    seed: u64,
) -> Result<SmoothnessCertificate> {
    if !(domain_radius > 0.0) {
        return Err(Error::contract("domain radius must be positive"));
    }
    let d = model.param_dim(data.feature_dim());
    certify_around(model, data, &ParamVector::zeros(d), domain_radius, probe_count, seed)
}

/// As [`certify`], with the ball centred at `center` (used to probe the
/// region a network's trajectories actually visit).
pub fn certify_around(
    model: &LossModel,
    data: &Dataset,
    center: &ParamVector,
    domain_radius: f64,
    probe_count: usize,
    seed: u64,
) -> Result<SmoothnessCertificate> {
    model.check(&center.0, data.get(0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = center.norm() + domain_radius;
    let cert = match model {
        LossModel::Quadratic { curvature } => {
            let rho = data.max_feature_norm();
            let c = curvature.max();
            SmoothnessCertificate {
                lipschitz: c * (reach + rho),
                smoothness: c,
                strong_convexity: curvature.min(),
                loss_bound: 0.5 * c * (reach + rho).powi(2),
                domain_radius,
                empirical: false,
            }
        }
        LossModel::LogisticL2 { weight_decay } => {
            let x = data.max_feature_norm();
            SmoothnessCertificate {
                lipschitz: x + weight_decay * reach,
                smoothness: 0.25 * x * x + weight_decay,
                strong_convexity: *weight_decay,
                loss_bound: softplus(x * reach) + 0.5 * weight_decay * reach * reach,
                domain_radius,
                empirical: false,
            }
        }
        LossModel::Mlp { .. } => {
            let probed = probe_constants(model, data, center, domain_radius, probe_count.max(1), &mut rng);
            SmoothnessCertificate {
                lipschitz: EMPIRICAL_INFLATION * probed.lipschitz,
                smoothness: EMPIRICAL_INFLATION * probed.smoothness,
                strong_convexity: 0.0,
                loss_bound: EMPIRICAL_INFLATION * probed.loss_bound,
                domain_radius,
                empirical: true,
            }
        }
    };
    validate_certificate(model, data, center, &cert, probe_count, &mut rng)?;
    Ok(cert)
}

fn probe_constants(
    model: &LossModel,
    data: &Dataset,
    center: &ParamVector,
    radius: f64,
    probes: usize,
    rng: &mut ChaCha8Rng,
) -> SmoothnessCertificate {
    let pick = Uniform::new(0, data.len()).expect("non-empty dataset");
    let d = center.dim();
    let (mut l, mut b, mut m) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..probes {
        let z = data.get(pick.sample(rng));
        let u = sample_ball(&center.0, radius, rng);
        let v = sample_ball(&center.0, radius, rng);
        let (mut gu, mut gv) = (vec![0.0; d], vec![0.0; d]);
        let fu = model.loss_grad_acc(&u, z, &mut gu, 1.0);
        let fv = model.loss_grad_acc(&v, z, &mut gv, 1.0);
        l = l.max(dot(&gu, &gu).sqrt()).max(dot(&gv, &gv).sqrt());
        b = b.max(distance(&gu, &gv) / distance(&u, &v).max(f64::MIN_POSITIVE));
        m = m.max(fu).max(fv);
    }
    SmoothnessCertificate {
        lipschitz: l,
        smoothness: b,
        strong_convexity: 0.0,
        loss_bound: m,
        domain_radius: radius,
        empirical: true,
    }
}

fn validate_certificate(
    model: &LossModel,
    data: &Dataset,
    center: &ParamVector,
    cert: &SmoothnessCertificate,
    probes: usize,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let pick = Uniform::new(0, data.len()).expect("non-empty dataset");
    let d = center.dim();
    for probe in 0..probes {
        let z = data.get(pick.sample(rng));
        let u = sample_ball(&center.0, cert.domain_radius, rng);
        let v = sample_ball(&center.0, cert.domain_radius, rng);
        let (mut gu, mut gv) = (vec![0.0; d], vec![0.0; d]);
        let fu = model.loss_grad_acc(&u, z, &mut gu, 1.0);
        let fv = model.loss_grad_acc(&v, z, &mut gv, 1.0);
        let dist = distance(&u, &v);
        let slack = |x: f64| x * (1.0 + PROBE_SLACK) + PROBE_SLACK;

        let checks = [
            ("lipschitz", (fu - fv).abs(), slack(cert.lipschitz * dist)),
            ("smoothness", distance(&gu, &gv), slack(cert.smoothness * dist)),
            ("loss-bound", fu.max(fv), slack(cert.loss_bound)),
        ];
        for (inequality, lhs, rhs) in checks {
            if lhs > rhs {
                return Err(Error::CertificateInvalid { inequality, probe, lhs, rhs });
            }
        }
        if matches!(model, LossModel::Mlp { .. }) {
            continue;
        }
        // f(v) + grad f(v).(u - v) + gamma/2 ||u - v||^2 <= f(u)
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let lower = fv + dot(&gv, &diff) + 0.5 * cert.strong_convexity * dist * dist;
        let tol = PROBE_SLACK * (1.0 + fu.abs() + lower.abs());
        if lower > fu + tol {
            return Err(Error::CertificateInvalid { inequality: "strong-convexity", probe, lhs: lower, rhs: fu });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_point(p: &[f64]) -> Example {
        Example::target(p.to_vec())
    }

    #[test]
    fn quadratic_loss_values() {
        let m = LossModel::quadratic(1.0);
        let origin = quad_point(&[0.0, 0.0]);
        assert_eq!(m.loss(&ParamVector::zeros(2), &origin).unwrap(), 0.0);
        let w = ParamVector::new(vec![2.0, 0.0]).unwrap();
        assert_eq!(m.loss(&w, &origin).unwrap(), 2.0);
        assert_eq!(m.grad(&w, &origin).unwrap().as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn logistic_at_origin() {
        let m = LossModel::logistic(0.001);
        let z = Example::classified(vec![0.3, -0.4], 1);
        let w = ParamVector::zeros(2);
        assert!((m.loss(&w, &z).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        // (p - y) x with p = 1/2
        let g = m.grad(&w, &z).unwrap();
        assert!((g.as_slice()[0] - (-0.5 * 0.3)).abs() < 1e-15);
        assert!((g.as_slice()[1] - (-0.5 * -0.4)).abs() < 1e-15);
    }

    #[test]
    fn empirical_risk_mean() {
        let m = LossModel::quadratic(1.0);
        let s = Dataset::new(vec![quad_point(&[0.0, 0.0]), quad_point(&[2.0, 0.0])]).unwrap();
        let w = ParamVector::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(m.empirical_risk(&w, &s).unwrap(), 0.5);
        let single = Dataset::new(vec![quad_point(&[3.0, 1.0])]).unwrap();
        assert_eq!(
            m.empirical_risk(&w, &single).unwrap(),
            m.loss(&w, single.get(0)).unwrap()
        );
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = LossModel::quadratic(1.0);
        let err = m.loss(&ParamVector::zeros(3), &quad_point(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, actual: 3 }));
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![quad_point(&[0.0]), quad_point(&[0.0, 1.0])]).is_err());
    }

    #[test]
    fn non_finite_params_rejected() {
        assert!(ParamVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(ParamVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn quadratic_certificate_closed_form() {
        let m = LossModel::quadratic(2.0);
        let s = Dataset::new(vec![quad_point(&[0.3, 0.4]), quad_point(&[-0.1, 0.0])]).unwrap();
        let c = certify(&m, &s, 1.5, 2000, 7).unwrap();
        assert_eq!(c.smoothness, 2.0);
        assert_eq!(c.strong_convexity, 2.0);
        assert!((c.lipschitz - 2.0 * (1.5 + 0.5)).abs() < 1e-12);
        assert!(!c.empirical);
    }

    #[test]
    fn logistic_certificate_closed_form() {
        let m = LossModel::logistic(0.01);
        let s = Dataset::new(vec![
            Example::classified(vec![0.6, 0.8], 1),
            Example::classified(vec![-0.5, 0.1], 0),
        ])
        .unwrap();
        let c = certify(&m, &s, 10.0, 2000, 3).unwrap();
        assert!((c.smoothness - (0.25 + 0.01)).abs() < 1e-12);
        assert_eq!(c.strong_convexity, 0.01);
        assert!((c.lipschitz - (1.0 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn understated_constant_is_caught() {
        let m = LossModel::quadratic(1.0);
        let s = Dataset::new(vec![quad_point(&[0.5, 0.0])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bad = SmoothnessCertificate {
            lipschitz: 0.01,
            smoothness: 1.0,
            strong_convexity: 1.0,
            loss_bound: 100.0,
            domain_radius: 1.0,
            empirical: false,
        };
        let err = validate_certificate(&m, &s, &ParamVector::zeros(2), &bad, 100, &mut rng).unwrap_err();
        assert!(matches!(err, Error::CertificateInvalid { inequality: "lipschitz", .. }));
    }

    #[test]
    fn mlp_xavier_init_and_zero_biases() {
        let m = LossModel::mlp(4, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = m.init_params(4, &mut rng);
        assert_eq!(w.dim(), 3 * 4 + 3 + 2 * 3 + 2);
        let bound = (6.0f64 / 7.0).sqrt();
        assert!(w.as_slice()[..12].iter().all(|v| v.abs() <= bound));
        assert!(w.as_slice()[12..15].iter().all(|&v| v == 0.0));
        assert!(w.as_slice()[21..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn with_replacement_leaves_original() {
        let s = Dataset::new(vec![quad_point(&[0.0]), quad_point(&[1.0]), quad_point(&[2.0])]).unwrap();
        let h = s.fingerprint();
        let t = s.with_replacement(1, quad_point(&[5.0])).unwrap();
        assert_eq!(s.fingerprint(), h);
        assert_eq!(t.get(1).features, vec![5.0]);
        assert!(s.with_replacement(3, quad_point(&[0.0])).is_err());
    }
}
