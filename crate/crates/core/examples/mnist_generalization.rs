//! Generalization gap of L2-regularised logistic regression on MNIST digits
//! 2 and 9 across sample sizes and momentum values. Needs the IDX files
//! (`scripts/fetch_mnist.sh`).

use sgmem::data::{binary_subset, load_mnist};
use sgmem::harness::{estimate_generalization, TestSet};
use sgmem::{LossModel, OptimizerConfig, RunOptions};

fn main() -> sgmem::Result<()> {
    // each replication is tested on the training rows it did not draw
    let pool = binary_subset(&load_mnist("train")?, 2, 9, true)?;
    let model = LossModel::logistic(0.001);
    println!("{:>5} {:>5} {:>10} {:>10} {:>10}", "mu", "n", "train", "test", "gap");
    for mu in [0.0, 0.5, 0.9] {
        let config = OptimizerConfig { batch_size: 10, ..OptimizerConfig::sgmm(0.01, mu, 1000, 0) };
        for r in estimate_generalization(&model, &config, &pool, TestSet::PoolComplement, &[100, 500, 1000, 5000], 20, 9, RunOptions::minimal())? {
            println!("{mu:>5} {:>5} {:>10.4} {:>10.4} {:>10.4}", r.n, r.train_risk, r.test_risk, r.eps_g_hat);
        }
    }
    Ok(())
}
