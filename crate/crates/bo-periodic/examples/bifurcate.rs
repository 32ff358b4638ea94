//! Amplitudes of the kernel solution for a few mode sets.

use bo_periodic::bifurcation::{build_v1, validate_mode_set};

fn main() {
    for ks in [&[2i64, 3][..], &[1, 2], &[3, 5], &[2, 3, 4], &[1, 1]] {
        match validate_mode_set(ks) {
            Ok(set) => {
                let d = build_v1(&set, &vec![1; ks.len()]).expect("valid set");
                let rho: Vec<String> = d.rho.iter().map(|r| r.to_string()).collect();
                println!("{ks:?}: rho = [{}], b = {}, delta = {:.4}", rho.join(", "), d.b, d.delta);
            }
            Err(why) => println!("{ks:?}: rejected ({why})"),
        }
    }
}
