//! Builds a sum of builtins, saves it as grid files and reloads it.

use singspec::potentials::{build, load, save, PotentialSpec};
use singspec::stepanov::k_constant;
use singspec::Grid;

fn main() -> singspec::Result<()> {
    let spec = PotentialSpec::Sum {
        parts: vec![
            PotentialSpec::builtin("delta_comb", &[("alpha", 0.5)]),
            PotentialSpec::builtin("mathieu", &[("c", 1.0)]),
        ],
    };
    let rep = build(&spec, Grid::over(0.0, 4.0, 800)?)?;
    let dir = std::env::temp_dir().join("singspec-potential-io");
    save(&rep, &dir)?;
    let back = load(&dir)?;
    println!("saved '{}' to {}", rep.label, dir.display());
    println!("jumps at {:?}", back.jump_points());
    println!("K before {:.12}, after {:.12}", k_constant(&rep).k, k_constant(&back).k);
    println!("reloaded spec: {}", std::fs::read_to_string(dir.join("potential.json"))?);
    Ok(())
}
