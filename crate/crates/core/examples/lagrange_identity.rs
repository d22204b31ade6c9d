//! Relative residual of the Lagrange identity for direct and adjoint solutions.

use singspec::potentials::catalog;
use singspec::quasi_deriv::lagrange_residual;
use singspec::C64;

fn main() -> singspec::Result<()> {
    let lambdas = [C64::new(3.0, 1.0), C64::new(-12.0, 0.5), C64::new(40.0, -6.0)];
    for entry in catalog() {
        let rep = entry.build(20_000)?;
        let conj: Vec<String> = lambdas
            .iter()
            .map(|&l| lagrange_residual(&rep, l, l.conj(), entry.interval, 1).map(|r| format!("{r:.1e}")))
            .collect::<singspec::Result<_>>()?;
        // a mismatched pair exercises the overlap integral
        let mixed = lagrange_residual(&rep, lambdas[0], lambdas[1], entry.interval, 1)?;
        println!("{:<20} conjugate pairs [{}]  mixed pair {mixed:.1e}", entry.name(), conj.join(", "));
    }
    Ok(())
}
