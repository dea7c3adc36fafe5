//! Closed-form stability, convergence and true-risk bounds.
//!
//! Every evaluator returns a [`BoundReport`]: the raw value plus the
//! preconditions it relies on, each with a signed margin (positive means the
//! condition holds with room to spare). Values are computed even when a
//! condition fails, so regime maps can be drawn across invalid regions.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub holds: bool,
    pub margin: f64,
}

impl Condition {
    /// `lhs < rhs`
    fn less(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Condition { name, holds: lhs < rhs, margin: rhs - lhs }
    }

    /// `lhs <= rhs`
    fn at_most(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Condition { name, holds: lhs <= rhs, margin: rhs - lhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub value: f64,
    pub conditions: Vec<Condition>,
    /// Every formula this evaluator stands for.
    pub formula_ids: Vec<&'static str>,
    /// Named additive pieces of `value` and other by-products.
    pub terms: Vec<(&'static str, f64)>,
    /// Standard error propagated from Monte Carlo inputs, when there are any.
    pub std_error: Option<f64>,
}

impl BoundReport {
    fn new(value: f64, formula_ids: &[&'static str]) -> Self {
        BoundReport {
            value,
            conditions: Vec::new(),
            formula_ids: formula_ids.to_vec(),
            terms: Vec::new(),
            std_error: None,
        }
    }

    fn with(mut self, c: Condition) -> Self {
        self.conditions.push(c);
        self
    }

    fn term(mut self, name: &'static str, v: f64) -> Self {
        self.terms.push((name, v));
        self
    }

    /// All conditions hold and the value is finite.
    pub fn is_valid(&self) -> bool {
        self.value.is_finite() && self.conditions.iter().all(|c| c.holds)
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn term_value(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| *n == name).map(|&(_, v)| v)
    }

    /// Names of the conditions that fail, joined with `;`.
    pub fn failed_conditions(&self) -> String {
        self.conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.name)
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// `E_1(x) = int_x^inf e^{-t} / t dt` for `x > 0`.
///
/// Integrates over `(x, x + 50)` after substituting `t = x e^s`, then adds
/// `e^{-(x+50)} / (x + 51)` for the remainder (itself below `2e-22`).
pub fn e1(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("e1 needs a finite x > 0, got {x}")));
    }
    let upper = ((x + 50.0) / x).ln();
    // e^{-x} factored out so the integrand stays O(1) for large x
    let inner = quadrature::double_exponential::integrate(|s: f64| (-x * s.exp_m1()).exp(), 0.0, upper, 1e-14);
    let y = x + 50.0;
    Ok((-x).exp() * inner.integral + (-y).exp() / (y + 1.0))
}

/// `(1/2 e^{-x} ln(1 + 2/x), e^{-x} ln(1 + 1/x))`, which bracket `E_1(x)`.
pub fn e1_sandwich(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("e1 sandwich needs a finite x > 0, got {x}")));
    }
    let ex = (-x).exp();
    Ok((0.5 * ex * (2.0 / x).ln_1p(), ex * (1.0 / x).ln_1p()))
}

/// Symbols of the general (non-convex) stability bound with a `1/t` step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneralLossParams {
    pub alpha0: f64,
    pub l: f64,
    pub beta: f64,
    /// Bound on the loss, `0 <= f <= M`.
    pub m: f64,
    pub n: usize,
    pub t: usize,
    pub mu_d: f64,
    pub t_d: f64,
    pub t_tilde: f64,
    /// Offset `t_d - t_tilde*` used by the substituted bound.
    pub k: f64,
}

impl GeneralLossParams {
    /// `u = (1 - 1/n) alpha0 beta`
    pub fn u(&self) -> f64 {
        (1.0 - 1.0 / self.n as f64) * self.alpha0 * self.beta
    }

    fn vanishing(&self) -> Condition {
        Condition::less("vanishing-regime", self.alpha0 * self.beta, 1.0)
    }
}

/// `(2 alpha0 L^2 / n) T^u [e^{2 mu_d (t_d - t~)} ln(1 + 1/(2 mu_d t~)) - 1/2 ln(1 + 1/(mu_d t_d))]`
fn momentum_term(p: &GeneralLossParams, t_d: f64, t_tilde: f64, gap: f64) -> f64 {
    let n = p.n as f64;
    let bracket = (2.0 * p.mu_d * gap).exp() * (1.0 / (2.0 * p.mu_d * t_tilde)).ln_1p()
        - 0.5 * (1.0 / (p.mu_d * t_d)).ln_1p();
    2.0 * p.alpha0 * p.l * p.l / n * (p.t as f64).powf(p.u()) * bracket
}

/// `(2 L^2 / (beta (n-1))) (T / t~)^u`
fn tail_term(p: &GeneralLossParams, t_tilde: f64) -> f64 {
    2.0 * p.l * p.l / (p.beta * (p.n as f64 - 1.0)) * (p.t as f64 / t_tilde).powf(p.u())
}

/// Uniform-stability bound for SGMEM with `alpha_t = alpha0 / t` on a
/// non-convex loss, for a cutoff `1 <= t_tilde < t_d <= T`.
pub fn sgmem_stability_bound(p: &GeneralLossParams) -> BoundReport {
    let n = p.n as f64;
    let first = momentum_term(p, p.t_d, p.t_tilde, p.t_d - p.t_tilde);
    let second = p.t_tilde * p.m / n;
    let third = tail_term(p, p.t_tilde);
    let value = first + second + third;
    BoundReport::new(value, &["sgmem-stability"])
        .with(Condition::at_most("sample-size", 2.0, n))
        .with(Condition::at_most("cutoff-order", 1.0, p.t_tilde))
        .with(Condition::less("cutoff-before-stop", p.t_tilde, p.t_d))
        .with(Condition::at_most("stop-within-horizon", p.t_d, p.t as f64))
        .with(Condition::less("positive-momentum", 0.0, p.mu_d))
        .with(p.vanishing())
        .with(Condition::at_most("non-negative", 0.0, value))
        .term("momentum", first)
        .term("cutoff", second)
        .term("tail", third)
}

/// Minimizing cutoff `t~* = (2 alpha0 L^2 / M)^{1/(u+1)} T^{u/(u+1)}` and the
/// bound after substituting `t_d = t~* + K`.
pub fn sgmem_optimal_cutoff(p: &GeneralLossParams) -> (f64, BoundReport) {
    let u = p.u();
    let n = p.n as f64;
    let t = p.t as f64;
    let t_star = (2.0 * p.alpha0 * p.l * p.l / p.m).powf(1.0 / (u + 1.0)) * t.powf(u / (u + 1.0));
    let first = momentum_term(p, t_star + p.k, t_star, p.k);
    let second = (1.0 + 1.0 / (p.alpha0 * p.beta)) / (n - 1.0)
        * (2.0 * p.alpha0 * p.l * p.l).powf(1.0 / (u + 1.0))
        * (p.m * t).powf(u / (u + 1.0));
    let value = first + second;
    let report = BoundReport::new(value, &["sgmem-stability-optimal-cutoff"])
        .with(Condition::at_most("sample-size", 2.0, n))
        .with(p.vanishing())
        .with(Condition::at_most("cutoff-order", 1.0, t_star))
        .with(Condition::at_most("stop-within-horizon", t_star + p.k, t))
        .with(Condition::less("positive-momentum", 0.0, p.mu_d))
        .with(Condition::at_most("non-negative", 0.0, value))
        .term("t-tilde-star", t_star)
        .term("momentum", first)
        .term("cutoff-and-tail", second);
    (t_star, report)
}

/// Momentum that stops at `t_d = rho T` with `T = kappa n` does not vanish
/// with `n`: returns the bound at `t~ = rho T - K` and its limit `rho kappa M`.
pub fn sgmem_penalty_bound(rho: f64, kappa: f64, k: f64, p: &GeneralLossParams) -> (BoundReport, f64) {
    let n = p.n as f64;
    let t = kappa * n;
    let t_tilde = rho * t - k;
    let tpow = t.powf(p.u());
    let bracket = (2.0 * p.mu_d * k).exp() * (1.0 / (2.0 * p.mu_d * t_tilde)).ln_1p()
        - 0.5 * (1.0 / (p.mu_d * rho * t)).ln_1p();
    let first = 2.0 * p.alpha0 * p.l * p.l / n * tpow * bracket;
    let second = t_tilde * p.m / n;
    let third = 2.0 * p.l * p.l / (p.beta * (n - 1.0)) * (t / t_tilde).powf(p.u());
    let asymptote = rho * kappa * p.m;
    let report = BoundReport::new(first + second + third, &["sgmem-penalty"])
        .with(Condition::at_most("sample-size", 2.0, n))
        .with(Condition::less("positive-fraction", 0.0, rho))
        .with(Condition::at_most("fraction-at-most-one", rho, 1.0))
        .with(Condition::less("offset-below-stop", k, rho * t))
        .with(Condition::less("positive-momentum", 0.0, p.mu_d))
        .term("momentum", first)
        .term("cutoff", second)
        .term("tail", third)
        .term("asymptote", asymptote);
    (report, asymptote)
}

/// Gradient-norm bound for SGMEM with constant step `alpha`, momentum `mu_d`
/// for the first `t_d` steps, and `W = R_S(w_0) - R_S(w*)`.
///
/// At `t_d = 0` no momentum step is taken, so `mu_d` is treated as zero.
pub fn sgmem_convergence_bound(w: f64, alpha: f64, mu_d: f64, t_d: usize, t: usize, l: f64, beta: f64) -> BoundReport {
    let mu = if t_d == 0 { 0.0 } else { mu_d };
    let (tdp1, rest) = (t_d as f64 + 1.0, t as f64 - t_d as f64);
    let om = 1.0 - mu;
    let j2 = tdp1
        * (beta / 2.0 * (alpha * l / om).powi(2) + (alpha * l * l * mu / om).powi(2) / (2.0 * (1.0 - mu * mu)))
        + rest * beta / 2.0 * alpha * alpha * l * l;
    let den = tdp1 * (alpha / om - alpha * alpha / (2.0 * om * om)) + rest * (alpha - alpha * alpha / 2.0);
    BoundReport::new((w + j2) / den, &["sgmem-convergence"])
        .with(Condition::less("step-size", alpha, 2.0 * om))
        .with(Condition::at_most("stop-within-horizon", t_d as f64, t as f64))
        .with(Condition::less("positive-denominator", 0.0, den))
        .term("j2", j2)
        .term("denominator", den)
}

/// Constant-momentum special case (`t_d = T`), written out separately.
pub fn sgmm_convergence_bound(w: f64, alpha: f64, mu: f64, t: usize, l: f64, beta: f64) -> BoundReport {
    let k3 = alpha / (1.0 - mu) - alpha * alpha / (2.0 * (1.0 - mu).powi(2));
    let first = w / ((t as f64 + 1.0) * k3);
    let second = (beta * alpha * alpha * l * l + (alpha * l * l * mu).powi(2) / (1.0 - mu * mu))
        / (2.0 * alpha * (1.0 - mu) - alpha * alpha);
    BoundReport::new(first + second, &["sgmm-convergence"])
        .with(Condition::less("step-size", alpha, 2.0 * (1.0 - mu)))
        .term("transient", first)
        .term("floor", second)
}

/// Plain SGM special case (`mu = 0`).
pub fn sgm_convergence_bound(w: f64, alpha: f64, t: usize, l: f64, beta: f64) -> BoundReport {
    let first = w / ((t as f64 + 1.0) * (alpha - alpha * alpha / 2.0));
    let second = beta * alpha * alpha * l * l / (2.0 * alpha - alpha * alpha);
    BoundReport::new(first + second, &["sgm-convergence"])
        .with(Condition::less("step-size", alpha, 2.0))
        .term("transient", first)
        .term("floor", second)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TdMonotonicity {
    /// The sufficient condition holds and the constants are non-degenerate.
    pub holds: bool,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// `(K1 - K2)(K3 + T K4)/(K3 - K4) - K1 - T K2`; `W` must exceed it.
    pub threshold: f64,
    pub degenerate: bool,
    pub conditions: Vec<Condition>,
}

/// Constants `K1..K4` of the convergence bound viewed as a function of `t_d`.
pub fn td_constants(alpha: f64, mu_d: f64, l: f64, beta: f64) -> (f64, f64, f64, f64) {
    let om = 1.0 - mu_d;
    let k1 = beta / 2.0 * (alpha * l / om).powi(2) + (alpha * l * l * mu_d / om).powi(2) / (2.0 * (1.0 - mu_d * mu_d));
    let k2 = beta / 2.0 * alpha * alpha * l * l;
    let k3 = alpha / om - alpha * alpha / (2.0 * om * om);
    let k4 = alpha - alpha * alpha / 2.0;
    (k1, k2, k3, k4)
}

/// Sufficient condition for the convergence bound to decrease in `t_d`.
///
/// `c` parameterizes the step-size restriction `alpha < 2c(1 - mu_d)` with
/// `c < 1/(2 - mu_d)`, which together make `K3 > K4`.
pub fn monotonic_td_condition(w: f64, alpha: f64, mu_d: f64, t: usize, l: f64, beta: f64, c: f64) -> TdMonotonicity {
    let (k1, k2, k3, k4) = td_constants(alpha, mu_d, l, beta);
    let tf = t as f64;
    let gap = k3 - k4;
    let degenerate = gap == 0.0 || (gap.abs() <= 1e-15 * k3.abs().max(k4.abs()) && (k1 - k2).abs() <= 1e-15 * k1.abs());
    let threshold = (k1 - k2) * (k3 + tf * k4) / gap - k1 - tf * k2;
    let conditions = vec![
        Condition::less("step-size", alpha, 2.0 * c * (1.0 - mu_d)),
        Condition::less("c-range", c, 1.0 / (2.0 - mu_d)),
        Condition::less("k3-exceeds-k4", k4, k3),
        Condition::less("positive-denominator", 0.0, (k3 + tf * k4).min((tf + 1.0) * k3)),
    ];
    let holds = !degenerate && gap > 0.0 && conditions[3].holds && w > threshold;
    TdMonotonicity { holds, k1, k2, k3, k4, threshold, degenerate, conditions }
}

/// `U(t_d) = (W + K1 + T K2 + t_d (K1 - K2)) / (K3 + T K4 + t_d (K3 - K4))`
pub fn td_objective(m: &TdMonotonicity, w: f64, t: usize, t_d: usize) -> f64 {
    let (tf, td) = (t as f64, t_d as f64);
    (w + m.k1 + tf * m.k2 + td * (m.k1 - m.k2)) / (m.k3 + tf * m.k4 + td * (m.k3 - m.k4))
}

/// `L <= 2 sqrt(beta / 3)`: the non-vanishing convergence term then
/// decreases in the momentum parameter.
pub fn monotonic_mu_condition(l: f64, beta: f64) -> bool {
    l <= 2.0 * (beta / 3.0).sqrt()
}

/// `g(mu) = (1 - mu)(beta + L^2 mu^2 / (1 - mu^2))`
pub fn momentum_profile(mu: f64, l: f64, beta: f64) -> f64 {
    (1.0 - mu) * (beta + l * l * mu * mu / (1.0 - mu * mu))
}

/// Symbols of the strongly convex bounds. The `W` terms are expectations the
/// harness estimates; their standard errors feed [`BoundReport::std_error`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StronglyConvexParams {
    pub alpha: f64,
    pub mu: f64,
    pub l: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
    pub t: usize,
    /// `E[R_S(w_0) - R_S(w_T)]`
    pub w0: f64,
    /// `E[||w_0 - w*||^2]`
    pub w1: f64,
    /// `E[||w_hat_T - w*||^2]`
    pub w2: f64,
    /// `(1/(T+1)) sum_t E[||w_t - w_{t-1}||^2]`
    pub w3: f64,
    pub w_std_errors: [f64; 4],
}

fn propagate(partials: [f64; 4], se: [f64; 4]) -> Option<f64> {
    if se.iter().all(|&s| s == 0.0) {
        return None;
    }
    Some(partials.iter().zip(&se).map(|(d, s)| (d * s).powi(2)).sum::<f64>().sqrt())
}

fn sc_stability_conditions(alpha: f64, p: &StronglyConvexParams) -> [Condition; 3] {
    let (b, g) = (p.beta, p.gamma);
    let abg = alpha * b * g / (b + g);
    [
        Condition::at_most("momentum-lower", abg - 0.5, p.mu),
        Condition::less("momentum-upper", p.mu, abg / 3.0),
        Condition::at_most("step-size", alpha, 2.0 / (b + g)),
    ]
}

/// Uniform stability of SGMM on a `gamma`-strongly convex loss. The same
/// expression bounds the stability of the averaged iterate.
pub fn strongly_convex_stability_bound(p: &StronglyConvexParams) -> BoundReport {
    let (b, g) = (p.beta, p.gamma);
    let den = p.n as f64 * (p.alpha * b * g - 3.0 * p.mu * (b + g));
    let mut report = BoundReport::new(2.0 * p.alpha * p.l * p.l * (b + g) / den, &["sc-stability", "sc-average-stability"]);
    for c in sc_stability_conditions(p.alpha, p) {
        report = report.with(c);
    }
    report.with(Condition::less("positive-denominator", 0.0, den))
}

/// Optimization error of the averaged SGMM iterate on a strongly convex loss.
pub fn strongly_convex_convergence_bound(p: &StronglyConvexParams) -> BoundReport {
    let (mu, tf, g) = (p.mu, p.t as f64, p.gamma);
    let om = 1.0 - mu;
    let parts = [
        ("start-gap", mu * p.w0 / (om * tf)),
        ("start-distance", om * p.w1 / (2.0 * p.alpha * tf)),
        ("average-distance", -g * p.w2 / 2.0),
        ("step-length", -mu * g * p.w3 / (2.0 * om)),
        ("noise-floor", p.alpha * p.l * p.l / (2.0 * om)),
    ];
    let mut report = BoundReport::new(parts.iter().map(|(_, v)| v).sum(), &["sc-convergence"])
        .with(Condition::less("momentum-below-one", mu, 1.0))
        .with(Condition::at_most("horizon", 1.0, tf));
    for (name, v) in parts {
        report = report.term(name, v);
    }
    report.std_error = propagate([mu / (om * tf), om / (2.0 * p.alpha * tf), -g / 2.0, -mu * g / (2.0 * om)], p.w_std_errors);
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrueRiskBound {
    pub alpha_star: f64,
    pub c: f64,
    pub report: BoundReport,
}

/// True-risk bound at the tuned step `alpha* = ((1 - mu)/L) sqrt(W1 / T)`.
///
/// "Sufficiently small momentum" is read as `C >= 0.9`.
pub fn true_risk_bound(p: &StronglyConvexParams) -> TrueRiskBound {
    let (mu, l, b, g, tf, nf) = (p.mu, p.l, p.beta, p.gamma, p.t as f64, p.n as f64);
    let om = 1.0 - mu;
    let alpha_star = om / l * (p.w1 / tf).sqrt();
    let a = 3.0 * mu * l * (b + g) * tf.sqrt() / (om * b * g);
    let c = 1.0 - a / p.w1.sqrt();
    let stab = 2.0 * l * l * (b + g) / (nf * b * g);
    let parts = [
        ("start-gap", mu * p.w0 / (om * tf)),
        ("optimization", l * (p.w1 / tf).sqrt()),
        ("average-distance", -g * p.w2 / 2.0),
        ("step-length", -mu * g * p.w3 / (2.0 * om)),
        ("stability", stab / c),
    ];
    let mut report = BoundReport::new(parts.iter().map(|(_, v)| v).sum(), &["true-risk", "tuned-step"])
        .with(Condition::less("positive-w1", 0.0, p.w1))
        .with(Condition::at_most("horizon", 1.0, tf))
        .with(Condition::less("c-positive", 0.0, c))
        .with(Condition::at_most("small-momentum", 0.9, c))
        .with(sc_stability_conditions(alpha_star, p)[2].clone());
    for (name, v) in parts {
        report = report.term(name, v);
    }
    report = report.term("alpha-star", alpha_star).term("c", c);
    let d_w1 = l / (2.0 * (p.w1 * tf).sqrt()) - stab / (c * c) * a / (2.0 * p.w1.powf(1.5));
    report.std_error = propagate([mu / (om * tf), d_w1, -g / 2.0, -mu * g / (2.0 * om)], p.w_std_errors);
    TrueRiskBound { alpha_star, c, report }
}
