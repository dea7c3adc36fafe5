//! Coupled twin runs on neighbouring samples: the divergence trace of one
//! pair, then a Monte Carlo stability estimate against its bound.

use sgmem::bounds::{strongly_convex_stability_bound, StronglyConvexParams};
use sgmem::data::{synth_dataset, SynthKind};
use sgmem::harness::{estimate_stability, make_neighbor, twin_run, SynthSource};
use sgmem::{Example, LossModel, OptimizerConfig, ProjectionDomain};

fn main() -> sgmem::Result<()> {
    let kind = SynthKind::QuadraticTargets { radius: 0.5 };
    let model = LossModel::quadratic(1.0);
    let config = OptimizerConfig { domain: ProjectionDomain::Ball(0.5), ..OptimizerConfig::sgmm(0.5, 0.05, 1000, 0) };

    let s = synth_dataset(kind, 100, 5, 1)?;
    let s_prime = make_neighbor(&s, 7, Example::target(vec![0.4, 0.0, 0.0, 0.0, 0.0]))?;
    let probe = synth_dataset(kind, 10, 5, 2)?;
    let trace = twin_run(&model, &s, &s_prime, &config, 3, &probe)?;
    println!("replaced index 7, first used at step {:?}", trace.first_divergent_step);
    for t in (0..=1000).step_by(100) {
        println!("  delta_{t:<4} = {:.3e}", trace.delta[t]);
    }

    let source = SynthSource { kind, dim: 5 };
    let bound = strongly_convex_stability_bound(&StronglyConvexParams {
        alpha: 0.5,
        mu: 0.05,
        l: 1.0,
        beta: 1.0,
        gamma: 1.0,
        n: 100,
        ..Default::default()
    });
    for n in [50, 100, 200] {
        let est = estimate_stability(&model, &config, &source, n, 200, &probe, 5)?;
        println!("n = {n:<4} eps_hat = {:.3e} +- {:.1e}", est.epsilon_hat, est.std_error);
    }
    println!("bound at n = 100: {:.3}", bound.value);
    Ok(())
}
