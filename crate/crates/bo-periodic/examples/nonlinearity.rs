//! Evaluate the rescaled map and check reversibility on a sample field.

use bo_periodic::bifurcation::{build_v1, validate_mode_set};
use bo_periodic::nonlinearity::{NonlinearitySpec, CATALOG};
use bo_periodic::{ModeIndex, SpectralField};
use num_complex::Complex64;

fn main() {
    let d = build_v1(&validate_mode_set(&[2, 3]).unwrap(), &[1, 1]).unwrap();
    let mut u = SpectralField::zero(6, 6);
    u.set(ModeIndex::new(1, 1), Complex64::new(0.2, 0.0));
    u.set(ModeIndex::new(-2, 3), Complex64::new(-0.1, 0.0));
    for &name in CATALOG {
        let spec = NonlinearitySpec::catalog(name).unwrap();
        let eps = if name == "example-ii" { 0.02 } else { 0.04 };
        let f = spec.eval_f(&d, &u, eps).unwrap();
        let (even, odd) = f.parity_masses();
        println!("{name:>10}: |F| = {:.4e}, even mass {even:.1e}, odd mass {odd:.3e}", f.l2_norm());
    }
}
