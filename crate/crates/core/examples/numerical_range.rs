//! Support points of the numerical range of an FE pencil, written as CSV to
//! stdout together with the enclosure boundary for comparison.

use singspec::enclosure::{boundary_points, region_from_k};
use singspec::form_fem::{assemble, numerical_range, Mesh};
use singspec::potentials::catalog_entry;

fn main() -> singspec::Result<()> {
    let entry = catalog_entry("complex_mathieu").expect("catalog entry");
    let rep = entry.build(1024)?;
    let pencil = assemble(&rep, &Mesh::for_rep(&rep, entry.interval)?)?;
    let range = numerical_range(&pencil, 48)?;
    eprintln!("convex: {}, inside M(K): {}", range.convex, range.contained_in_mk);
    println!("curve,re,im");
    for z in &range.boundary {
        println!("range,{},{}", z.re, z.im);
    }
    let region = region_from_k(pencil.k.expect("assembled pencils carry K"))?;
    for z in boundary_points(&region, 50, Some(range.boundary.iter().map(|z| z.re).fold(0.0, f64::max)))? {
        println!("enclosure,{},{}", z.re, z.im);
    }
    Ok(())
}
