#![allow(dead_code)]

use bo_periodic::bifurcation::{build_v1, validate_mode_set, BifurcationData};
use bo_periodic::{ModeIndex, SpectralField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data23() -> BifurcationData {
    build_v1(&validate_mode_set(&[2, 3]).unwrap(), &[1, 1]).unwrap()
}

/// Random field in the diamond `|l| + |j| <= n` with coefficients decaying
/// like `<k>^{-2}`. `odd` selects imaginary coefficients (the space `Y`).
pub fn random_field(rng: &mut ChaCha8Rng, n: i32, amp: f64, odd: bool) -> SpectralField {
    let mut u = SpectralField::zero(n as u32, n as u32);
    for l in -n..=n {
        for j in 0..=n {
            let k = ModeIndex::new(l, j);
            if !k.is_canonical() || k == ModeIndex::ZERO || !k.in_diamond(n as i64) {
                continue;
            }
            let c = amp * rng.random_range(-1.0..1.0) / (1.0 + k.euclid()).powi(2);
            u.set(k, if odd { Complex64::new(0.0, c) } else { Complex64::new(c, 0.0) });
        }
    }
    u
}
