//! Nash-Moser run for the pure cubic equation, compared with plain Newton.

use bo_periodic::bifurcation::{build_v1, validate_mode_set};
use bo_periodic::nash_moser::{oracle_newton, original_residual, IterationConfig, Problem};
use bo_periodic::nonlinearity::NonlinearitySpec;

fn main() {
    let eps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.03);
    let d = build_v1(&validate_mode_set(&[2, 3]).unwrap(), &[1, 1]).unwrap();
    let spec = NonlinearitySpec::zero();
    let cfg = IterationConfig { n_cap: 24, check_identities: true, ..Default::default() };
    let p = Problem { spec: &spec, data: &d, eps, cfg };
    let st = p.run().unwrap();
    println!("{:>2} {:>4} {:>11} {:>11} {:>8} {:>11}", "n", "N", "residual", "|h|", "margin", "r_n defect");
    for r in &st.history {
        println!(
            "{:>2} {:>4} {:>11.3e} {:>11.3e} {:>8.3} {:>11.1e}",
            r.n,
            r.truncation,
            r.residual,
            r.h_norm,
            r.margin,
            r.rn_defect.unwrap_or(0.0)
        );
    }
    println!("status {}", st.status.as_str());
    let o = oracle_newton(&spec, &d, eps, 24, 1e-12).unwrap();
    println!("dense Newton: {} iterations, difference {:.1e}", o.iterations, o.u.distance(&st.u) / o.u.l2_norm());
    println!("original equation residual, all modes: {:.2e}", original_residual(&spec, &d, &st.u, eps).unwrap());
}
