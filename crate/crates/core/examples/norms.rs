//! Stepanov norms and the form-bound constant `K` of every catalog potential.

use singspec::enclosure::lower_bound_m;
use singspec::potentials::catalog;
use singspec::stepanov::k_constant;

fn main() -> singspec::Result<()> {
    println!("{:<20} {:>12} {:>12} {:>12} {:>14}", "potential", "|Q|_L2unif", "|tau|_L1unif", "K", "m(K)");
    for entry in catalog() {
        let rep = entry.build(2048)?;
        let n = k_constant(&rep);
        let m = if rep.is_real() { format!("{:.4e}", lower_bound_m(n.k)?) } else { "-".into() };
        println!("{:<20} {:>12.6} {:>12.6} {:>12.6} {:>14}", entry.name(), n.q_norm, n.tau_norm, n.k, m);
    }
    Ok(())
}
