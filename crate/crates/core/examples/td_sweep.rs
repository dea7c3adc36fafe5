//! Terminal test loss of a small ReLU network as the momentum cutoff t_d
//! moves from 0 to T, for a moderate and an aggressive momentum value.

use sgmem::data::{synth_dataset, SynthKind};
use sgmem::experiment::terminal_test_metrics;
use sgmem::{LossModel, MomentumSchedule, OptimizerConfig};

fn main() -> sgmem::Result<()> {
    let kind = SynthKind::SeparableLogistic { margin: 1.0, noise: 0.7 };
    let (train, test) = (synth_dataset(kind, 500, 8, 1)?, synth_dataset(kind, 200, 8, 2)?);
    let model = LossModel::mlp(8, 16, 2);
    let steps = 2000;
    for mu_d in [0.2, 0.9, 0.99] {
        for t_d in [0, steps / 4, steps / 2, steps] {
            let config = OptimizerConfig {
                momentum: MomentumSchedule::early(mu_d, t_d),
                ..OptimizerConfig::sgmm(0.01, mu_d, steps, 0)
            };
            let mut losses = Vec::new();
            for seed in 0..5 {
                if let Some((loss, _, _)) = terminal_test_metrics(&model, &train, &test, &config, seed)? {
                    losses.push(loss);
                }
            }
            let mean = losses.iter().sum::<f64>() / losses.len().max(1) as f64;
            println!("mu_d = {mu_d:<5} t_d = {t_d:<5} test loss = {mean:.4} ({} of 5 finite)", losses.len());
        }
    }
    Ok(())
}
