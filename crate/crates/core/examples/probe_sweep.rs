use hydrolim_core::diagnostics::energy_audit_pe;
use hydrolim_core::harness::{run_sweep, RateNorm, RunSpec, SweepSpec};
use hydrolim_core::symmetry::InitialDataRecipe;
use hydrolim_core::Grid;
use std::time::Instant;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let dt: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(5e-4);
    let t_final: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let two_pi = 2.0 * std::f64::consts::PI;
    let g = Grid::new(n, n, n, two_pi, two_pi).unwrap();
    let spec = SweepSpec::new(
        RunSpec::new(&g, dt, t_final),
        InitialDataRecipe::single_mode(1.0),
        vec![0.2, 0.1, 0.05],
    );
    let t0 = Instant::now();
    let sweep = run_sweep(&spec).unwrap();
    println!("sweep wall time: {:.1}s  (N={n}, dt={dt:e}, T={t_final})", t0.elapsed().as_secs_f64());

    for (norm, out) in &sweep.fits {
        match &out.fit {
            Ok(fit) => {
                println!("norm {:<18} slope {:+.3}  residual {:.4}  points {:?}  excluded {:?}",
                    norm.label(), fit.slope, fit.residual,
                    fit.points.iter().map(|p| format!("({:.2},{:.3e})", p.0, p.1)).collect::<Vec<_>>(),
                    out.excluded);
            }
            Err(e) => println!("norm {:<18} fit failed: {e}  floor {:?}", norm.label(), out.floor_errors),
        }
    }
    let pe = &sweep.outcomes[0].pe;
    println!("PE max rel energy residual: {:.3e}", pe.max_relative_energy_residual());
    let audit = energy_audit_pe(&pe.energy_samples(), g.lambda1()).unwrap();
    let worst_decay = audit.decay_slack.iter().enumerate()
        .map(|(i, &s)| s / ((-2.0 * g.lambda1() * pe.records[i].t).exp() * audit.initial_energy))
        .fold(f64::INFINITY, f64::min);
    println!("PE decay slack (relative, min over t): {:+.3e}", worst_decay);
    for o in &sweep.outcomes {
        let slack = o.sns.min_energy_slack();
        let e0 = o.sns.records[0].l2_v.powi(2) + o.sns.records[0].eps_l2_w.powi(2);
        println!("SNS eps {:.2}: min slack {:+.3e} (rel {:+.3e}), max div {:.2e}, max parity {:.2e}",
            o.report.eps, slack, slack / e0,
            o.sns.records.iter().fold(0.0f64, |m, r| m.max(r.divergence_residual)),
            o.sns.records.iter().fold(0.0f64, |m, r| m.max(r.parity_dev_v.max(r.parity_dev_w))));
        let sup = hydrolim_core::harness::error_value(&o.report, RateNorm::SupPairL2);
        println!("           sup pair L2 {:.4e}, sup W L2 {:.4e}", sup,
            hydrolim_core::harness::error_value(&o.report, RateNorm::SupL2W));
    }
    let floor = &sweep.floor;
    println!("floor sup-l2 (eps-weight 0.05): {:.3e}",
        hydrolim_core::harness::error_value_weighted(floor, RateNorm::SupPairL2, 0.05));
}
