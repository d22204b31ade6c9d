//! Finite-element eigenvalues of a complex Mathieu potential, refined by
//! Newton shooting, and their position relative to the enclosure.

use singspec::form_fem::{assemble, lowest_eigenvalues, spectrum_report, Mesh};
use singspec::potentials::catalog_entry;
use singspec::quasi_deriv::{eigenvalues_shooting, SearchSpec};

fn main() -> singspec::Result<()> {
    let entry = catalog_entry("complex_mathieu").expect("catalog entry");
    let rep = entry.build(2048)?;
    let pencil = assemble(&rep, &Mesh::for_rep(&rep, entry.interval)?)?;
    let fem = lowest_eigenvalues(&pencil, 6)?;
    let shot = eigenvalues_shooting(&rep, entry.interval, &SearchSpec::Seeds(fem.clone()))?;
    let report = spectrum_report(&pencil, &fem)?;
    println!("K = {:.6}, vertex of M(K) = {:.2}", report.k, report.region.lambda0);
    for ((e, z), it) in report.eigenvalues.iter().zip(&shot.eigenvalues).zip(&shot.iterations) {
        println!(
            "FE {:>10.6} {:+.6}i   shooting {:>10.6} {:+.6}i ({it} Newton steps)   in M(K): {}",
            e.re, e.im, z.re, z.im, e.in_region
        );
    }
    Ok(())
}
