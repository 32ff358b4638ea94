//! Build the torus diffeomorphism for the linearization at `v2` and report
//! the transformed constants.

use bo_periodic::bifurcation::{build_v1, build_v2, validate_mode_set};
use bo_periodic::diffeo::build_diffeo;
use bo_periodic::nonlinearity::NonlinearitySpec;

fn main() {
    let d = build_v1(&validate_mode_set(&[2, 3]).unwrap(), &[1, 1]).unwrap();
    for (name, eps) in [("example-i", 0.05), ("ux5", 0.05), ("example-ii", 0.02)] {
        let spec = NonlinearitySpec::catalog(name).unwrap();
        let v2 = build_v2(&d, &spec, eps, 16).unwrap();
        let lin = spec.linearize_in_box(&d, &v2, eps, 16).unwrap();
        let (diff, tc) = build_diffeo(&lin).unwrap();
        println!(
            "{name:>10} eps {eps}: mu2 = {:.10}, mu1 = {:.3e}, contraction {:.3e}, round trip {:.1e}, a6 mean {:.1e}",
            tc.mu2,
            tc.mu1,
            diff.contraction_bound,
            diff.round_trip_defect(),
            tc.a6_mean_defect()
        );
    }
}
