//! Minimum gradient norm of SGM, SGMEM and SGMM on a quadratic compared with
//! the early-momentum convergence bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgmem::bounds::sgmem_convergence_bound;
use sgmem::data::{synth_dataset, SynthKind};
use sgmem::harness::{min_grad_norm_profile, reference_solve};
use sgmem::{run, LossModel, MomentumSchedule, OptimizerConfig, ParamVector, RunOptions};

fn main() -> sgmem::Result<()> {
    let model = LossModel::quadratic(1.0);
    let s = synth_dataset(SynthKind::QuadraticTargets { radius: 0.5 }, 100, 5, 6)?;
    let r_star = model.empirical_risk(&reference_solve(&model, &s, 10_000)?, &s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w0 = ParamVector::new((0..5).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let w = model.empirical_risk(&w0, &s)? - r_star;
    let steps = 1000;
    // gradients stay below c (||w0|| + max target norm) along these runs
    let l = w0.norm() + 0.5;
    for t_d in [0, 100, steps] {
        let config = OptimizerConfig { momentum: MomentumSchedule::early(0.5, t_d), ..OptimizerConfig::sgmm(0.1, 0.5, steps, 1) };
        let traj = run(&model, &s, &config, &w0, RunOptions::full())?;
        let (min, at) = min_grad_norm_profile(&traj, &model, &s)?;
        let bound = sgmem_convergence_bound(w, 0.1, 0.5, t_d, steps, l, 1.0);
        println!("t_d = {t_d:<5} min ||grad||^2 = {min:.3e} at t = {at:<4} bound = {:.3e} (valid {})", bound.value, bound.is_valid());
    }
    Ok(())
}
