//! Invert the truncated conjugated operator and compare with a dense solve.

use std::time::Instant;

use bo_periodic::bifurcation::{build_v1, build_v2, validate_mode_set};
use bo_periodic::inversion::{dense_oracle_inverse, diophantine_check, invert_l4_truncated};
use bo_periodic::nonlinearity::NonlinearitySpec;
use bo_periodic::stack::{project_box, Stack};
use bo_periodic::verify::random_field;
use rand::SeedableRng;

fn main() {
    let (eps, n) = (0.05, 10);
    let d = build_v1(&validate_mode_set(&[2, 3]).unwrap(), &[1, 1]).unwrap();
    let spec = NonlinearitySpec::example_i();
    let v2 = build_v2(&d, &spec, eps, n).unwrap();
    let st = Stack::build(&spec, &d, &v2, eps, n).unwrap();
    let rep = diophantine_check(&st.nf, n);
    println!("Diophantine check on |j| <= {n}: pass {}, worst {:?}", rep.pass, rep.worst);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let f = project_box(&random_field(&mut rng, n as i32, true), n);
    let t = Instant::now();
    let (h, stats) = invert_l4_truncated(&st, &f, n).unwrap();
    println!("structured: {:?} in {:.2?}", stats, t.elapsed());
    let t = Instant::now();
    let (ho, os) = dense_oracle_inverse(&st, &f, n).unwrap();
    println!("dense: dimension {}, condition {:.2e} in {:.2?}", os.dimension, os.condition, t.elapsed());
    println!("relative difference {:.2e}", h.distance(&ho) / ho.l2_norm());
}
