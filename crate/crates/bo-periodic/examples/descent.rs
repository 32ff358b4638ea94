//! Reduce the transformed operator to constant coefficients and print the
//! normal form as eps varies.

use bo_periodic::bifurcation::{build_v1, build_v2, validate_mode_set};
use bo_periodic::descent::descend;
use bo_periodic::diffeo::build_diffeo;
use bo_periodic::nonlinearity::NonlinearitySpec;

fn main() {
    let d = build_v1(&validate_mode_set(&[2, 3]).unwrap(), &[1, 1]).unwrap();
    let spec = NonlinearitySpec::example_i();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "eps", "mu1", "mu0", "mu_-2", "T residual");
    for eps in [0.01, 0.02, 0.03, 0.045] {
        let v2 = build_v2(&d, &spec, eps, 16).unwrap();
        let lin = spec.linearize_in_box(&d, &v2, eps, 16).unwrap();
        let (_, tc) = build_diffeo(&lin).unwrap();
        let dd = descend(&tc);
        let t = dd.t_residuals().into_iter().fold(0.0, f64::max);
        println!("{eps:>6} {:>12.4e} {:>12.4e} {:>12.4e} {t:>12.1e}", dd.mu1, dd.mu0, dd.mu_m2);
    }
}
