//! Products of two and three kernel modes land in the kernel only when a
//! pair of frequencies cancels.

use bo_periodic::spectral::{brute_force_kernel_products, classify_kernel_product};

fn main() {
    let max_j = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let bad = brute_force_kernel_products(max_j);
    println!("{} counterexamples for |j_i| <= {max_j}", bad.len());
    for js in [[2, -2, 5], [1, 2, 3], [3, -3, -3]] {
        let p = classify_kernel_product(&js);
        println!("{js:?}: in kernel {}, cancelling pair {:?}", p.in_kernel, p.cancelling_pair);
    }
}
