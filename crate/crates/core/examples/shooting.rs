//! Dirichlet eigenvalues of a delta interaction by quasi-derivative shooting,
//! checked against the transcendental equation for the symmetric modes.

use std::f64::consts::PI;

use singspec::potentials::{build, PotentialSpec};
use singspec::quasi_deriv::lowest_real_eigenvalues;
use singspec::Grid;

fn main() -> singspec::Result<()> {
    let spec = PotentialSpec::builtin("single_delta", &[("alpha", 2.0), ("x0", 1.0)]);
    let rep = build(&spec, Grid::over(0.0, 2.0, 1000)?)?;
    let report = lowest_real_eigenvalues(&rep, (0.0, 2.0), 6, -1.0)?;
    for (z, res) in report.eigenvalues.iter().zip(&report.boundary_residuals) {
        let k = z.re.sqrt();
        // odd modes vanish at the delta; even ones satisfy tan k = -k
        let odd = (k / PI - (k / PI).round()).abs() < 1e-6;
        let defect = if odd { 0.0 } else { k.tan() + k };
        println!("lambda = {:>14.10}  k = {k:.10}  {}  tan k + k = {defect:.1e}  |F| = {res:.1e}", z.re, if odd { "odd " } else { "even" });
    }
    Ok(())
}
