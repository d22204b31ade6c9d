//! Resolvent convergence along per-cell mollifications of a delta comb.

use singspec::cli::{converge_report, prepare, RunConfig};
use singspec::potentials::PotentialSpec;

fn main() -> singspec::Result<()> {
    let cfg = RunConfig::new(PotentialSpec::builtin("delta_comb", &[("alpha", 1.0)]));
    let setup = prepare(&cfg)?;
    let report = converge_report(&cfg, &setup)?;
    println!("probe lambda = {:.4}, vertex probe = {:.1}", report.probe.re, report.vertex_probe.re);
    println!("{:>10} {:>12} {:>12} {:>14} {:>14}", "width", "dist", "a_n", "resolvent", "at vertex");
    for r in &report.rows {
        println!(
            "{:>10.6} {:>12.6} {:>12.6} {:>14.6e} {:>14.6e}",
            r.width, r.hminus1_distance, r.a_n, r.resolvent_diff_norm, r.resolvent_at_vertex
        );
    }
    println!(
        "strictly decreasing distance: {}, nonincreasing resolvent: {}, final < first/10: {}",
        report.hminus1_strictly_decreasing, report.resolvent_nonincreasing, report.final_below_tenth
    );
    Ok(())
}
