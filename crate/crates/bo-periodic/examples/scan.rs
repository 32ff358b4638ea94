//! Exclusion widths at 0-th order and a short parameter scan.

use bo_periodic::bifurcation::{build_v1, validate_mode_set};
use bo_periodic::cantor::{exclusion_widths, n_box, scan, ScanConfig, WidthConfig, DEFAULT_NODES};
use bo_periodic::nash_moser::IterationConfig;
use bo_periodic::nonlinearity::NonlinearitySpec;

fn main() {
    let d = build_v1(&validate_mode_set(&[2, 3]).unwrap(), &[1, 1]).unwrap();
    let spec = NonlinearitySpec::zero();
    let wc = WidthConfig { eps_min: 0.005, eps_max: 0.05, j_max: 32, box_a: n_box(&d), nodes: DEFAULT_NODES };
    let t = exclusion_widths(&d, &spec, &wc).unwrap();
    println!("{:>3} {:>6} {:>10} {:>11} {:>9}", "j", "l", "eps", "width", "w*j^4");
    for r in t.rows.iter().filter(|r| r.j % 4 == 0) {
        println!("{:>3} {:>6} {:>10.6} {:>11.3e} {:>9.4}", r.j, r.l, r.eps_centre, r.width, r.width_j4);
    }
    println!("width*j^4 max/min over 8..=32: {:.2}", t.width_ratio(8..=32).unwrap());

    let cfg = ScanConfig {
        eps_min: 0.04,
        eps_max: 0.045,
        grid_points: 6,
        solver: IterationConfig { n_cap: 16, ..Default::default() },
        ..Default::default()
    };
    let rep = scan(&cfg, &d, &spec).unwrap();
    println!("{}", rep.approximation);
    for b in &rep.bad_intervals {
        println!("bad [{:.8}, {:.8}] witness {:?}", b.lo, b.hi, b.witness);
    }
    println!("good fraction on the grid {:.3}", rep.good_fraction);
}
