//! Evaluates each analytic bound family once and prints its terms and
//! precondition flags.

use sgmem::bounds::*;

fn show(name: &str, r: &BoundReport) {
    println!("{name:<28} {:>12.6}  valid={}", r.value, r.is_valid());
    for (term, v) in &r.terms {
        println!("    {term:<20} {v:.6}");
    }
    if !r.is_valid() {
        println!("    failed: {}", r.failed_conditions());
    }
}

fn main() -> sgmem::Result<()> {
    let general = GeneralLossParams {
        alpha0: 0.1,
        l: 1.0,
        beta: 1.0,
        m: 1.0,
        n: 100,
        t: 1000,
        mu_d: 0.1,
        t_d: 20.0,
        t_tilde: 10.0,
        k: 0.0,
    };
    show("early-momentum stability", &sgmem_stability_bound(&general));
    let (t_star, r) = sgmem_optimal_cutoff(&general);
    println!("optimal cutoff t* = {t_star:.3}");
    show("  at t*", &r);

    show("early-momentum convergence", &sgmem_convergence_bound(1.0, 0.4, 0.5, 5, 9, 1.0, 1.0));
    show("constant-momentum conv.", &sgmm_convergence_bound(1.0, 0.4, 0.5, 9, 1.0, 1.0));
    show("plain SGM convergence", &sgm_convergence_bound(1.0, 1.0, 99, 1.0, 1.0));

    let td = monotonic_td_condition(5.0, 0.4, 0.5, 100, 1.0, 1.0, 0.5);
    println!("cutoff monotonicity: holds={} threshold={:.4}", td.holds, td.threshold);
    println!("momentum monotonicity (L=1, beta=1): {}", monotonic_mu_condition(1.0, 1.0));

    let sc = StronglyConvexParams { alpha: 0.5, mu: 0.05, l: 1.0, beta: 1.0, gamma: 1.0, n: 100, ..Default::default() };
    show("strongly convex stability", &strongly_convex_stability_bound(&sc));
    let opt = StronglyConvexParams { alpha: 0.1, mu: 0.5, l: 1.0, t: 100, w0: 1.0, w1: 4.0, ..Default::default() };
    show("strongly convex optimization", &strongly_convex_convergence_bound(&opt));
    let tr = true_risk_bound(&StronglyConvexParams { mu: 0.001, w1: 4.0, t: 1000, n: 1000, ..sc });
    println!("true risk: alpha* = {:.4}, C = {:.4}", tr.alpha_star, tr.c);
    show("  bound", &tr.report);

    println!("E1(1) = {:.16}, sandwich {:?}", e1(1.0)?, e1_sandwich(1.0)?);
    Ok(())
}
