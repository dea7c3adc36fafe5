use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgmem::bounds::{strongly_convex_stability_bound, StronglyConvexParams};
use sgmem::data::{synth_dataset, SynthKind};
use sgmem::harness::{estimate_optimization_gap, estimate_stability, SynthSource};
use sgmem::models::Curvature;
use sgmem::optim::sample_index;
use sgmem::stats::{bootstrap_coverage, spearman};
use sgmem::{certify, run, Dataset, Example, IndexSampler, LossModel, OptimizerConfig, ParamVector, ProjectionDomain, RunOptions};

#[test]
fn uniform_sampler_is_balanced_on_two_indices() {
    let sampler = IndexSampler::uniform(17);
    let draws = 100_000;
    let ones = (0..draws).filter(|&t| sample_index(&sampler, t, 2) == 1).count() as f64;
    let sigma = (draws as f64 * 0.25).sqrt();
    assert!((ones - draws as f64 / 2.0).abs() < 3.0 * sigma, "{ones}");
}

#[test]
fn certificates_survive_ten_thousand_probes() {
    let quad = synth_dataset(SynthKind::QuadraticTargets { radius: 0.5 }, 50, 4, 1).unwrap();
    let blobs = synth_dataset(SynthKind::SeparableLogistic { margin: 1.0, noise: 0.5 }, 50, 4, 2).unwrap();
    let scaled = Dataset::new(
        blobs
            .examples()
            .iter()
            .map(|e| {
                let n = e.features.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                Example::classified(e.features.iter().map(|v| v / n).collect(), e.class().unwrap())
            })
            .collect(),
    )
    .unwrap();
    let cases = [
        (LossModel::quadratic(1.5), &quad),
        (LossModel::Quadratic { curvature: Curvature::Diagonal(vec![0.5, 1.0, 2.0, 0.1]) }, &quad),
        (LossModel::logistic(0.01), &scaled),
        (LossModel::mlp(4, 6, 2), &scaled),
    ];
    for (model, data) in cases {
        let cert = certify(&model, data, 2.0, 10_000, 3).unwrap_or_else(|e| panic!("{}: {e}", model.name()));
        assert_eq!(cert.empirical, matches!(model, LossModel::Mlp { .. }));
    }
}

#[test]
fn logistic_fits_well_separated_blobs() {
    let s = synth_dataset(SynthKind::SeparableLogistic { margin: 2.0, noise: 0.1 }, 1000, 3, 5).unwrap();
    let model = LossModel::logistic(0.001);
    let traj = run(&model, &s, &OptimizerConfig::sgmm(0.5, 0.0, 5000, 1), &ParamVector::zeros(3), RunOptions::minimal())
        .unwrap();
    assert!(model.accuracy(&traj.final_point, &s).unwrap() > 0.99);
}

#[test]
fn momentum_free_stability_estimate_is_covered_by_its_bound() {
    let model = LossModel::quadratic(1.0);
    let cfg = OptimizerConfig { domain: ProjectionDomain::Ball(0.5), ..OptimizerConfig::sgmm(0.5, 0.0, 300, 0) };
    let source = SynthSource { kind: SynthKind::QuadraticTargets { radius: 0.5 }, dim: 3 };
    let probe = synth_dataset(SynthKind::QuadraticTargets { radius: 0.5 }, 5, 3, 8).unwrap();
    let est = estimate_stability(&model, &cfg, &source, 100, 200, &probe, 11).unwrap();
    let bound = strongly_convex_stability_bound(&StronglyConvexParams {
        alpha: 0.5,
        mu: 0.0,
        l: 1.0,
        beta: 1.0,
        gamma: 1.0,
        n: 100,
        ..Default::default()
    });
    assert!((bound.value - 0.04).abs() < 1e-15);
    let coverage = bootstrap_coverage(&est.replication_max, bound.value, 1000, 4);
    assert!(coverage >= 0.95, "coverage {coverage}, estimate {}", est.epsilon_hat);
}

#[test]
fn stability_estimate_shrinks_with_n() {
    let model = LossModel::quadratic(1.0);
    let cfg = OptimizerConfig { domain: ProjectionDomain::Ball(0.5), ..OptimizerConfig::sgmm(0.1, 0.0, 400, 0) };
    let source = SynthSource { kind: SynthKind::QuadraticTargets { radius: 0.5 }, dim: 3 };
    let probe = synth_dataset(SynthKind::QuadraticTargets { radius: 0.5 }, 5, 3, 8).unwrap();
    let (mut ns, mut deltas) = (Vec::new(), Vec::new());
    for n in [25, 50, 100, 200] {
        let est = estimate_stability(&model, &cfg, &source, n, 100, &probe, 3).unwrap();
        ns.extend(std::iter::repeat_n(n as f64, est.terminal_deltas.len()));
        deltas.extend(est.terminal_deltas);
    }
    let s = spearman(&ns, &deltas);
    assert!(s.rho < 0.0 && s.p_negative < 0.05, "{s:?}");
}

#[test]
fn quadratic_gap_matches_closed_form() {
    let model = LossModel::quadratic(2.0);
    let s = synth_dataset(SynthKind::QuadraticTargets { radius: 1.0 }, 40, 3, 21).unwrap();
    let cfg = OptimizerConfig::sgmm(0.05, 0.3, 200, 0);
    let gap = estimate_optimization_gap(&model, &s, &cfg, 1000, 9).unwrap();
    let traj = run(&model, &s, &cfg.with_seed(9), &ParamVector::zeros(3), RunOptions::minimal()).unwrap();
    let mean: Vec<f64> = (0..3).map(|k| s.examples().iter().map(|e| e.features[k]).sum::<f64>() / 40.0).collect();
    let closed = model.empirical_risk(&traj.average, &s).unwrap()
        - model.empirical_risk(&ParamVector::new(mean).unwrap(), &s).unwrap();
    assert!((gap.gap - closed).abs() < 1e-10, "{} vs {closed}", gap.gap);
}

#[test]
fn runs_replay_from_seed() {
    let s = synth_dataset(SynthKind::SeparableLogistic { margin: 1.0, noise: 1.0 }, 30, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let seed: u64 = rng.random();
    let cfg = OptimizerConfig { batch_size: 3, ..OptimizerConfig::sgmm(0.1, 0.5, 100, seed) };
    let model = LossModel::logistic(0.01);
    let a = run(&model, &s, &cfg, &ParamVector::zeros(2), RunOptions::minimal()).unwrap();
    let b = run(&model, &s, &cfg, &ParamVector::zeros(2), RunOptions::minimal()).unwrap();
    assert_eq!(a.index_log, b.index_log);
    assert_eq!(a.final_point, b.final_point);
}
