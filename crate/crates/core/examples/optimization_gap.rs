//! Optimization error of the averaged SGMM iterate on a strongly convex
//! quadratic, with the W terms estimated by Monte Carlo and fed into the
//! strongly convex convergence bound.

use sgmem::bounds::{strongly_convex_convergence_bound, StronglyConvexParams};
use sgmem::data::SynthKind;
use sgmem::harness::{optimization_study, SynthSource};
use sgmem::models::Curvature;
use sgmem::{LossModel, OptimizerConfig, ProjectionDomain};

fn main() -> sgmem::Result<()> {
    let model = LossModel::Quadratic { curvature: Curvature::Diagonal(vec![1.0, 0.5, 0.8, 0.3, 0.6]) };
    let source = SynthSource { kind: SynthKind::QuadraticTargets { radius: 0.5 }, dim: 5 };
    for mu in [0.0, 0.25, 0.5] {
        let config = OptimizerConfig { domain: ProjectionDomain::Ball(1.0), ..OptimizerConfig::sgmm(0.05, mu, 1000, 0) };
        let study = optimization_study(&model, &config, &source, 100, 20, 10_000, 10)?;
        let [w0, w1, w2, w3] = study.w_terms;
        let bound = strongly_convex_convergence_bound(&StronglyConvexParams {
            alpha: 0.05,
            mu,
            l: 1.5,
            beta: 1.0,
            gamma: 0.3,
            n: 100,
            t: 1000,
            w0,
            w1,
            w2,
            w3,
            w_std_errors: study.w_std_errors,
        });
        println!("mu = {mu:<5} eps_opt = {:.3e} +- {:.1e}   bound = {:.4} (valid {})", study.gap, study.gap_se, bound.value, bound.is_valid());
    }
    Ok(())
}
