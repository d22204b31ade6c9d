//! Built-in potentials as representations `(Q, τ)`, file-backed ones, and sums.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_fn::{Extension, Grid, GridFn, C64};
use crate::stepanov::Representation;

pub const BUILTIN_NAMES: [&str; 8] =
    ["free", "constant", "imaginary_constant", "single_delta", "delta_comb", "ap_sum", "mathieu", "complex_mathieu"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFiles {
    #[serde(rename = "Q")]
    pub q: PathBuf,
    pub tau: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    Builtin {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Grid {
        files: GridFiles,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Sum {
        parts: Vec<PotentialSpec>,
    },
}

impl PotentialSpec {
    pub fn builtin(name: &str, params: &[(&str, f64)]) -> Self {
        Self::Builtin {
            name: name.to_string(),
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Resolves relative grid-file paths against `base`.
    pub fn resolve_paths(&self, base: &Path) -> Self {
        match self {
            Self::Builtin { .. } => self.clone(),
            Self::Grid { files, label } => Self::Grid {
                files: GridFiles { q: base.join(&files.q), tau: base.join(&files.tau) },
                label: label.clone(),
            },
            Self::Sum { parts } => Self::Sum { parts: parts.iter().map(|p| p.resolve_paths(base)).collect() },
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Builtin { name, params } => {
                if params.is_empty() {
                    name.clone()
                } else {
                    let args: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    format!("{name}({})", args.join(","))
                }
            }
            Self::Grid { files, label } => label.clone().unwrap_or_else(|| format!("grid({})", files.q.display())),
            Self::Sum { parts } => parts.iter().map(|p| p.label()).collect::<Vec<_>>().join("+"),
        }
    }
}

fn param(name: &str, params: &BTreeMap<String, f64>, key: &str) -> Result<f64> {
    let v = *params.get(key).ok_or_else(|| Error::MissingParam { name: name.into(), param: key.into() })?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("parameter '{key}' of '{name}' must be finite")));
    }
    Ok(v)
}

fn is_multiple(len: f64, period: f64) -> bool {
    let r = len / period;
    r >= 1.0 - 1e-12 && (r - r.round()).abs() <= 1e-9 * r.max(1.0)
}

fn periodic_if(grid: &Grid, period: f64, aligned: bool) -> Extension {
    if aligned && is_multiple(grid.span(), period) {
        Extension::Periodic
    } else {
        Extension::Clamp
    }
}

/// Builds the representation of `spec` on `grid`. File-backed parts keep their
/// own grids; sums require all parts to share nodes.
pub fn build(spec: &PotentialSpec, grid: Grid) -> Result<Representation> {
    match spec {
        PotentialSpec::Builtin { name, params } => build_builtin(name, params, grid),
        PotentialSpec::Grid { files, label } => {
            let q = GridFn::load(&files.q)?;
            let tau = GridFn::load(&files.tau)?;
            Representation::new(q, tau, label.clone().unwrap_or_else(|| spec.label()))
        }
        PotentialSpec::Sum { parts } => {
            let first = parts.first().ok_or_else(|| Error::InvalidArgument("sum needs at least one part".into()))?;
            let mut acc = build(first, grid)?;
            for part in &parts[1..] {
                let rep = build(part, grid)?;
                if !acc.q.grid().same_nodes(rep.q.grid()) || !acc.tau.grid().same_nodes(rep.tau.grid()) {
                    return Err(Error::IncompatibleSpans(format!("sum part '{}' has a different grid", rep.label)));
                }
                let one = C64::new(1.0, 0.0);
                let ext = |a: Extension, b: Extension| if a == b { a } else { Extension::Clamp };
                let (eq, et) = (ext(acc.q.extension(), rep.q.extension()), ext(acc.tau.extension(), rep.tau.extension()));
                acc = Representation::new(
                    acc.q.combine(one, &rep.q, one)?.with_extension(eq)?,
                    acc.tau.combine(one, &rep.tau, one)?.with_extension(et)?,
                    format!("{}+{}", acc.label, rep.label),
                )?;
            }
            Ok(acc)
        }
    }
}

fn build_builtin(name: &str, params: &BTreeMap<String, f64>, grid: Grid) -> Result<Representation> {
    let zero = C64::new(0.0, 0.0);
    let label = PotentialSpec::Builtin { name: name.into(), params: params.clone() }.label();
    let (q, tau) = match name {
        "free" => (GridFn::zeros(grid, Extension::Periodic), GridFn::zeros(grid, Extension::Periodic)),
        "constant" => {
            let c = param(name, params, "c")?;
            (GridFn::zeros(grid, Extension::Periodic), GridFn::constant(grid, Extension::Periodic, C64::new(c, 0.0)))
        }
        "imaginary_constant" => {
            let c = param(name, params, "c")?;
            (GridFn::zeros(grid, Extension::Periodic), GridFn::constant(grid, Extension::Periodic, C64::new(0.0, c)))
        }
        "single_delta" => {
            let alpha = param(name, params, "alpha")?;
            let x0 = param(name, params, "x0")?;
            let idx = grid.node_index(x0).filter(|&i| i > 0).ok_or_else(|| {
                Error::InvalidGrid(format!("delta position {x0} is not an interior node of the grid"))
            })?;
            let q = GridFn::new(
                grid,
                (0..grid.n).map(|i| if i >= idx { C64::new(alpha, 0.0) } else { zero }).collect(),
                Extension::Clamp,
            )?;
            (q.with_jump(idx, zero)?, GridFn::zeros(grid, Extension::Zero))
        }
        "delta_comb" => {
            let alpha = param(name, params, "alpha")?;
            let ext = periodic_if(&grid, 1.0, (grid.x0 - grid.x0.round()).abs() <= 1e-12);
            let mut samples = Vec::with_capacity(grid.n);
            let mut jumps = Vec::new();
            for i in 0..grid.n {
                let x = grid.node(i);
                let r = x.round();
                if (x - r).abs() <= 1e-9 * grid.h {
                    samples.push(zero);
                    if i > 0 {
                        jumps.push(i);
                    }
                } else {
                    samples.push(C64::new(-alpha * (x - x.floor()), 0.0));
                }
            }
            let crosses = (grid.x0.floor() as i64 + 1..=grid.end().floor() as i64)
                .any(|m| grid.node_index(m as f64).is_none() && (m as f64) < grid.end());
            if crosses {
                return Err(Error::InvalidGrid("delta_comb needs a grid node at every integer".into()));
            }
            let mut q = GridFn::new(grid, samples, ext)?;
            for i in jumps {
                q = q.with_jump(i, C64::new(-alpha, 0.0))?;
            }
            (q, GridFn::constant(grid, ext, C64::new(alpha, 0.0)))
        }
        "ap_sum" => {
            let mut terms = Vec::new();
            for j in 1.. {
                let (ka, kw) = (format!("A{j}"), format!("omega{j}"));
                match (params.get(&ka), params.get(&kw)) {
                    (None, None) => break,
                    (Some(&a), Some(&w)) if a.is_finite() && w.is_finite() && w != 0.0 => terms.push((a, w)),
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidArgument(format!("ap_sum term {j} needs finite A and nonzero omega")))
                    }
                    (None, Some(_)) => return Err(Error::MissingParam { name: name.into(), param: ka }),
                    (Some(_), None) => return Err(Error::MissingParam { name: name.into(), param: kw }),
                }
            }
            if terms.is_empty() {
                return Err(Error::MissingParam { name: name.into(), param: "A1".into() });
            }
            let q = GridFn::from_real_fn(grid, Extension::Clamp, |x| terms.iter().map(|(a, w)| a * (w * x).sin() / w).sum())?;
            (q, GridFn::zeros(grid, Extension::Zero))
        }
        "mathieu" | "complex_mathieu" => {
            let c = param(name, params, "c")?;
            let ext = periodic_if(&grid, PI, true);
            let amp = if name == "mathieu" { C64::new(2.0 * c, 0.0) } else { C64::new(0.0, 2.0 * c) };
            let mut tau = GridFn::from_fn(grid, Extension::Clamp, |x| amp * (2.0 * x).cos())?;
            if ext == Extension::Periodic {
                let mut s = tau.samples().to_vec();
                s[grid.n - 1] = s[0];
                tau = GridFn::new(grid, s, ext)?;
            }
            (GridFn::zeros(grid, ext), tau)
        }
        other => return Err(Error::UnknownPotential(other.to_string())),
    };
    Representation::new(q, tau, label)
}

/// One canonical test case: a potential on a fixed interval.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub spec: PotentialSpec,
    pub interval: (f64, f64),
}

impl CatalogEntry {
    pub fn grid(&self, cells: usize) -> Result<Grid> {
        Grid::over(self.interval.0, self.interval.1, cells)
    }

    pub fn build(&self, cells: usize) -> Result<Representation> {
        build(&self.spec, self.grid(cells)?)
    }

    pub fn name(&self) -> &str {
        match &self.spec {
            PotentialSpec::Builtin { name, .. } => name,
            _ => "custom",
        }
    }
}

/// Every builtin with the parameters used throughout the tests.
pub fn catalog() -> Vec<CatalogEntry> {
    let e = |spec: PotentialSpec, lo: f64, hi: f64| CatalogEntry { spec, interval: (lo, hi) };
    vec![
        e(PotentialSpec::builtin("free", &[]), 0.0, PI),
        e(PotentialSpec::builtin("constant", &[("c", 5.0)]), 0.0, PI),
        e(PotentialSpec::builtin("imaginary_constant", &[("c", 1.0)]), 0.0, PI),
        e(PotentialSpec::builtin("single_delta", &[("alpha", 2.0), ("x0", 1.0)]), 0.0, 2.0),
        e(PotentialSpec::builtin("delta_comb", &[("alpha", 1.0)]), 0.0, 4.0),
        e(
            PotentialSpec::builtin("ap_sum", &[("A1", 1.0), ("omega1", 1.0), ("A2", 0.5), ("omega2", 2f64.sqrt())]),
            0.0,
            2.0 * PI,
        ),
        e(PotentialSpec::builtin("mathieu", &[("c", 1.0)]), 0.0, PI),
        e(PotentialSpec::builtin("complex_mathieu", &[("c", 1.0)]), 0.0, PI),
    ]
}

pub fn catalog_entry(name: &str) -> Option<CatalogEntry> {
    catalog().into_iter().find(|e| e.name() == name)
}

const Q_FILE: &str = "Q.csv";
const TAU_FILE: &str = "tau.csv";
const SPEC_FILE: &str = "potential.json";

/// Writes `Q.csv`, `tau.csv` (with sidecars) and a `potential.json` grid spec into `dir`.
pub fn save(rep: &Representation, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    rep.q.save(&dir.join(Q_FILE))?;
    rep.tau.save(&dir.join(TAU_FILE))?;
    let spec = PotentialSpec::Grid {
        files: GridFiles { q: Q_FILE.into(), tau: TAU_FILE.into() },
        label: Some(rep.label.clone()),
    };
    fs::write(dir.join(SPEC_FILE), serde_json::to_string_pretty(&spec)?)?;
    Ok(())
}

/// Reads a representation written by [`save`], or any directory holding a
/// grid-kind `potential.json`.
pub fn load(dir: &Path) -> Result<Representation> {
    let path = dir.join(SPEC_FILE);
    let text = fs::read_to_string(&path)?;
    let spec: PotentialSpec = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line() as u64,
        msg: e.to_string(),
    })?;
    let PotentialSpec::Grid { files, label } = spec.resolve_paths(dir) else {
        return Err(Error::Parse { path, line: 1, msg: "expected a grid-kind potential".into() });
    };
    let q = GridFn::load(&files.q)?;
    let tau = GridFn::load(&files.tau)?;
    Representation::new(q, tau, label.unwrap_or_else(|| "grid".into()))
}
