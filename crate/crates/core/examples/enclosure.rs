//! Enclosure regions for a few values of `K`, and membership of sample points.

use singspec::enclosure::{boundary_points, contains, lower_bound_m, region_from_k, region_from_measure};
use singspec::C64;

fn main() -> singspec::Result<()> {
    for k in [0.25, 1.0, 4.0] {
        let r = region_from_k(k)?;
        println!(
            "K = {k:<5} vertex {:>12.4} knee {:>12.4} envelope coeff {:.6} (5K = {}) m(K) = {}",
            r.lambda0,
            r.lambda1,
            r.coeff,
            5.0 * k,
            lower_bound_m(k)?
        );
        for z in boundary_points(&r, 5, None)? {
            println!("    boundary {:>14.4} + {:>12.4}i", z.re, z.im);
        }
        for z in [C64::new(0.0, 0.0), C64::new(r.lambda0 - 1.0, 0.0), C64::new(r.lambda1, 10.0 * r.bound(r.lambda1))] {
            println!("    {z:>24.3} inside: {}", contains(&r, z, 1e-6 * (1.0 + z.norm())));
        }
    }
    let m = region_from_measure(1.0)?;
    println!("measure case K0 = 1: vertex {} coeff {}", m.lambda0, m.coeff);
    Ok(())
}
