//! Uniformly sampled complex functions on an interval.
//!
//! A [`GridFn`] carries samples on a uniform [`Grid`] together with an
//! [`Extension`] policy that defines the function on the whole line. Values
//! between nodes are linearly interpolated. A node may carry a jump: the stored
//! sample is the right limit and a separate left limit is kept, so step
//! functions (the primitive of a point interaction) are represented without
//! smearing.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used to decide whether a point coincides with a grid node,
/// relative to the spacing.
const NODE_TOL: f64 = 1e-9;

const PERIODIC_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x0: f64, h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() || !x0.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive and finite, got h = {h}")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 samples, got {n}")));
        }
        Ok(Self { x0, h, n })
    }

    /// Grid on `[lo, hi]` with `cells` equal cells (`cells + 1` nodes).
    pub fn over(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty interval [{lo}, {hi}]")));
        }
        if cells == 0 {
            return Err(Error::InvalidGrid("need at least one cell".into()));
        }
        Self::new(lo, (hi - lo) / cells as f64, cells + 1)
    }

    pub fn span(&self) -> f64 {
        (self.n - 1) as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        self.x0 + self.span()
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.end()
        } else {
            self.x0 + i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    /// Index of the node at `x`, if `x` lies on the grid.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let s = (x - self.x0) / self.h;
        let r = s.round();
        if r < 0.0 || r > (self.n - 1) as f64 || (s - r).abs() > NODE_TOL * s.abs().max(1.0) {
            return None;
        }
        Some(r as usize)
    }

    pub fn same_span(&self, other: &Grid) -> bool {
        let scale = 1.0 + self.x0.abs().max(self.end().abs());
        (self.x0 - other.x0).abs() <= 1e-12 * scale && (self.end() - other.end()).abs() <= 1e-12 * scale
    }

    pub fn same_nodes(&self, other: &Grid) -> bool {
        self.n == other.n && self.same_span(other)
    }
}

/// How a grid function is continued outside its sampled span.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extension {
    /// Period equal to the span; the last sample duplicates the first.
    Periodic,
    Zero,
    /// Constant continuation by the nearest endpoint value.
    Clamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifyScheme {
    Convolution,
    PerCell,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    grid: Grid,
    samples: Vec<C64>,
    /// Left limits at jump nodes, sorted by node index (always >= 1).
    jumps: Vec<(usize, C64)>,
    extension: Extension,
}

impl GridFn {
    pub fn new(grid: Grid, samples: Vec<C64>, extension: Extension) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "sample count {} does not match grid size {}",
                samples.len(),
                grid.n
            )));
        }
        let f = Self { grid, samples, jumps: Vec::new(), extension };
        f.check_periodic()?;
        Ok(f)
    }

    pub fn from_fn(grid: Grid, extension: Extension, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect(), extension)
    }

    pub fn from_real_fn(grid: Grid, extension: Extension, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, extension, |x| C64::new(f(x), 0.0))
    }

    pub fn constant(grid: Grid, extension: Extension, c: C64) -> Self {
        Self { grid, samples: vec![c; grid.n], jumps: Vec::new(), extension }
    }

    pub fn zeros(grid: Grid, extension: Extension) -> Self {
        Self::constant(grid, extension, C64::new(0.0, 0.0))
    }

    /// Declare a jump at node `index`: `left` becomes the left limit there while
    /// the stored sample stays the right limit.
    pub fn with_jump(mut self, index: usize, left: C64) -> Result<Self> {
        if index == 0 || index >= self.grid.n {
            return Err(Error::InvalidGrid(format!(
                "jump node index {index} must lie in 1..{} (a jump at the left end of a periodic \
                 function is stored at the last node)",
                self.grid.n
            )));
        }
        match self.jumps.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(k) => self.jumps[k].1 = left,
            Err(k) => self.jumps.insert(k, (index, left)),
        }
        Ok(self)
    }

    fn check_periodic(&self) -> Result<()> {
        if self.extension == Extension::Periodic {
            let d = (self.samples[0] - self.samples[self.grid.n - 1]).norm();
            if d > PERIODIC_TOL {
                return Err(Error::InvalidGrid(format!(
                    "periodic extension requires the last sample to duplicate the first (difference {d:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn jump_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.jumps.iter().map(|&(i, _)| i)
    }

    pub fn jumps(&self) -> &[(usize, C64)] {
        &self.jumps
    }

    /// Left limit at node `i` (equal to the sample unless the node carries a jump).
    pub fn left_value(&self, i: usize) -> C64 {
        match self.jumps.binary_search_by_key(&i, |&(j, _)| j) {
            Ok(k) => self.jumps[k].1,
            Err(_) => self.samples[i],
        }
    }

    pub fn is_real(&self) -> bool {
        self.samples.iter().chain(self.jumps.iter().map(|(_, v)| v)).all(|z| z.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().chain(self.jumps.iter().map(|(_, v)| v)).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples
            .iter()
            .chain(self.jumps.iter().map(|(_, v)| v))
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Applies `f` to every sample and left limit.
    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|&z| f(z)).collect(),
            jumps: self.jumps.iter().map(|&(i, z)| (i, f(z))).collect(),
            extension: self.extension,
        }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        self.map(|z| alpha * z)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn with_extension(&self, extension: Extension) -> Result<Self> {
        let f = Self { extension, ..self.clone() };
        f.check_periodic()?;
        Ok(f)
    }

    /// Pointwise combination `alpha * self + beta * other` on identical grids.
    /// The result keeps `self`'s extension policy.
    pub fn combine(&self, alpha: C64, other: &GridFn, beta: C64) -> Result<Self> {
        if !self.grid.same_nodes(&other.grid) {
            return Err(Error::IncompatibleSpans(format!(
                "grids differ: [{}, {}] with {} nodes vs [{}, {}] with {} nodes",
                self.grid.x0,
                self.grid.end(),
                self.grid.n,
                other.grid.x0,
                other.grid.end(),
                other.grid.n
            )));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| alpha * a + beta * b)
            .collect();
        let mut idx: Vec<usize> = self.jump_nodes().chain(other.jump_nodes()).collect();
        idx.sort_unstable();
        idx.dedup();
        let jumps = idx
            .into_iter()
            .map(|i| (i, alpha * self.left_value(i) + beta * other.left_value(i)))
            .collect();
        Ok(Self { grid: self.grid, samples, jumps, extension: self.extension })
    }

    pub fn sub(&self, other: &GridFn) -> Result<Self> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// Values at the two ends of cell `i` (`x_i` from the right, `x_{i+1}` from the left).
    fn cell_ends(&self, i: usize) -> (C64, C64) {
        (self.samples[i], self.left_value(i + 1))
    }

    /// Maps `x` into the sampled span according to the extension policy.
    /// `None` means the value is identically zero there.
    fn locate(&self, x: f64) -> Option<Located> {
        let g = &self.grid;
        let end = g.end();
        let x = match self.extension {
            Extension::Periodic => {
                if x >= g.x0 && x <= end {
                    x
                } else {
                    g.x0 + (x - g.x0).rem_euclid(g.span())
                }
            }
            Extension::Zero => {
                if x < g.x0 || x > end {
                    return None;
                }
                x
            }
            Extension::Clamp => {
                if x < g.x0 {
                    return Some(Located::Const(self.samples[0]));
                }
                if x > end {
                    return Some(Located::Const(self.samples[g.n - 1]));
                }
                x
            }
        };
        let s = (x - g.x0) / g.h;
        let i = (s.floor().max(0.0) as usize).min(g.n - 2);
        let frac = (s - i as f64).clamp(0.0, 1.0);
        Some(Located::Cell(i, frac))
    }

    pub fn eval(&self, x: f64) -> C64 {
        match self.locate(x) {
            None => C64::new(0.0, 0.0),
            Some(Located::Const(v)) => v,
            Some(Located::Cell(i, frac)) => {
                if frac == 0.0 {
                    return self.samples[i];
                }
                let (a, b) = self.cell_ends(i);
                a + (b - a) * frac
            }
        }
    }

    /// `∫_t^{t+1} |f(s)|^p ds`, exact for the piecewise-linear interpolant.
    pub fn window_integral(&self, t: f64, p: f64) -> Result<f64> {
        let acc = WindowIntegrator::new(self, p)?;
        Ok(acc.window(t))
    }

    /// Supremum of the unit-window integral over window starts spaced `h / refine`
    /// across the domain relevant for the extension policy. Returns the maximizing
    /// start and the value.
    pub fn sup_window_integral(&self, p: f64, refine: usize) -> Result<(f64, f64)> {
        let acc = WindowIntegrator::new(self, p)?;
        let g = &self.grid;
        let step = g.h / refine.max(1) as f64;
        let (lo, hi) = match self.extension {
            Extension::Periodic => (g.x0, g.end()),
            Extension::Zero | Extension::Clamp => (g.x0 - 1.0, g.end()),
        };
        let count = ((hi - lo) / step).ceil() as usize;
        let mut best = (lo, f64::NEG_INFINITY);
        // window starts on the node lattice, and starts whose window ends on it
        for offset in [0.0, -1.0] {
            let first = ((lo - offset - g.x0) / step).floor() as i64;
            for k in 0..=count as i64 + 1 {
                let t = g.x0 + (first + k) as f64 * step + offset;
                if t < lo - 1e-12 || t > hi + 1e-12 {
                    continue;
                }
                let v = acc.window(t);
                if v > best.1 {
                    best = (t, v);
                }
            }
        }
        Ok(best)
    }

    /// Cumulative trapezoid primitive with `F(x0) = 0`, clamp-extended.
    pub fn antiderivative(&self) -> GridFn {
        let g = self.grid;
        let mut out = Vec::with_capacity(g.n);
        let mut acc = C64::new(0.0, 0.0);
        out.push(acc);
        for i in 0..g.n - 1 {
            let (a, b) = self.cell_ends(i);
            acc += (a + b) * (0.5 * g.h);
            out.push(acc);
        }
        GridFn { grid: g, samples: out, jumps: Vec::new(), extension: Extension::Clamp }
    }

    /// Smooth `self` with the normalized C^∞ bump of half-width `width`,
    /// sampled back on the same grid.
    pub fn mollify(&self, width: f64, scheme: MollifyScheme) -> Result<GridFn> {
        check_width(width)?;
        let g = self.grid;
        let mut samples: Vec<C64> = g.nodes().map(|x| self.mollified_value(x, width, scheme)).collect();
        if self.extension == Extension::Periodic {
            samples[g.n - 1] = samples[0];
        }
        Ok(GridFn { grid: g, samples, jumps: Vec::new(), extension: self.extension })
    }

    /// The mollified function evaluated at an arbitrary point.
    pub fn mollify_at(&self, x: f64, width: f64, scheme: MollifyScheme) -> Result<C64> {
        check_width(width)?;
        Ok(self.mollified_value(x, width, scheme))
    }

    /// Cell `[lo, hi)` of the per-cell decomposition containing `x`. Unit cells on
    /// the integer lattice, except for periodic functions whose period is split
    /// into equal cells of length at most one anchored at `x0` (so that the
    /// smoothed function stays periodic).
    pub fn cell_of(&self, x: f64) -> (f64, f64) {
        match self.extension {
            Extension::Periodic => {
                let p = self.grid.span();
                let len = p / (p - 1e-12).ceil().max(1.0);
                let k = ((x - self.grid.x0) / len + 1e-12).floor();
                let lo = self.grid.x0 + k * len;
                (lo, lo + len)
            }
            _ => {
                let lo = (x + 1e-12).floor();
                (lo, lo + 1.0)
            }
        }
    }

    fn mollified_value(&self, x: f64, width: f64, scheme: MollifyScheme) -> C64 {
        let (lo, hi) = (x - width, x + width);
        let cell = match scheme {
            MollifyScheme::Convolution => None,
            MollifyScheme::PerCell => Some(self.cell_of(x)),
        };
        let mut cuts: Vec<f64> = vec![lo, hi];
        if let Some((c_lo, c_hi)) = cell {
            for c in [c_lo, c_hi] {
                if c > lo && c < hi {
                    cuts.push(c);
                }
            }
        }
        let g = &self.grid;
        let k0 = ((lo - g.x0) / g.h).ceil() as i64;
        let k1 = ((hi - g.x0) / g.h).floor() as i64;
        for k in k0..=k1 {
            let s = g.x0 + k as f64 * g.h;
            if s > lo && s < hi {
                cuts.push(s);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let max_len = width / 8.0;
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for pair in cuts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b - a <= 0.0 {
                continue;
            }
            let inside = match cell {
                None => true,
                Some((c_lo, c_hi)) => 0.5 * (a + b) >= c_lo && 0.5 * (a + b) < c_hi,
            };
            let parts = ((b - a) / max_len).ceil().max(1.0) as usize;
            let dl = (b - a) / parts as f64;
            for part in 0..parts {
                let pa = a + part as f64 * dl;
                for (node, wt) in GAUSS5 {
                    let s = pa + 0.5 * dl * (1.0 + node);
                    let k = bump((x - s) / width) * wt * 0.5 * dl;
                    den += k;
                    if inside && k > 0.0 {
                        num += self.eval(s) * k;
                    }
                }
            }
        }
        if den <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let value = num / den;
        match cell {
            None => value,
            Some((c_lo, c_hi)) => value * (smooth_step((x - c_lo) / width) * smooth_step((c_hi - x) / width)),
        }
    }

    /// Writes `path` (CSV `x,re,im`, 17 significant digits) and the JSON sidecar
    /// next to it. A jump node is written as two rows with equal `x`: left limit first.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["x", "re", "im"]).map_err(csv_io)?;
        let mut row = |x: f64, z: C64| -> Result<()> {
            w.write_record([fmt17(x), fmt17(z.re), fmt17(z.im)]).map_err(csv_io)
        };
        for i in 0..self.grid.n {
            let x = self.grid.node(i);
            if let Ok(k) = self.jumps.binary_search_by_key(&i, |&(j, _)| j) {
                row(x, self.jumps[k].1)?;
            }
            row(x, self.samples[i])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        fs::write(path, bytes)?;
        let meta = Sidecar {
            x0: self.grid.x0,
            h: self.grid.h,
            n: self.grid.n,
            extension: self.extension,
        };
        fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GridFn> {
        let side = sidecar_path(path);
        let meta_text = fs::read_to_string(&side)?;
        let meta: Sidecar = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
            path: side.clone(),
            line: e.line() as u64,
            msg: e.to_string(),
        })?;
        let grid = Grid::new(meta.x0, meta.h, meta.n).map_err(|e| Error::Parse {
            path: side.clone(),
            line: 1,
            msg: e.to_string(),
        })?;
        let parse_err = |line: u64, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };

        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(1);
            parse_err(line, e.to_string())
        })?;
        let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != ["x", "re", "im"] {
            return Err(parse_err(1, format!("expected header x,re,im, found {}", headers.iter().collect::<Vec<_>>().join(","))));
        }

        let mut samples: Vec<C64> = Vec::with_capacity(grid.n);
        let mut jumps = Vec::new();
        let mut last_line = 1;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(last_line + 1);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(last_line + 1);
            last_line = line;
            if rec.len() != 3 {
                return Err(parse_err(line, format!("expected 3 fields, found {}", rec.len())));
            }
            let num = |k: usize, name: &str| -> Result<f64> {
                rec[k].trim().parse::<f64>().map_err(|e| parse_err(line, format!("field '{name}': {e}")))
            };
            let (x, re, im) = (num(0, "x")?, num(1, "re")?, num(2, "im")?);
            let z = C64::new(re, im);
            let idx = samples.len();
            if idx > 0 && (x - grid.node(idx - 1)).abs() <= NODE_TOL * grid.h {
                // repeated abscissa: previous row was the left limit of a jump
                let prev = samples[idx - 1];
                if idx - 1 == 0 {
                    return Err(parse_err(line, "jump at the first node is not allowed".into()));
                }
                jumps.push((idx - 1, prev));
                samples[idx - 1] = z;
                continue;
            }
            if idx >= grid.n {
                return Err(parse_err(line, format!("more than the {} nodes declared in the sidecar", grid.n)));
            }
            if (x - grid.node(idx)).abs() > NODE_TOL * (grid.h + x.abs()) {
                return Err(parse_err(line, format!("abscissa {x} does not match grid node {}", grid.node(idx))));
            }
            samples.push(z);
        }
        if samples.len() != grid.n {
            return Err(parse_err(
                last_line + 1,
                format!("file ends after {} of {} nodes", samples.len(), grid.n),
            ));
        }
        let f = GridFn { grid, samples, jumps, extension: meta.extension };
        f.check_periodic().map_err(|e| parse_err(last_line, e.to_string()))?;
        Ok(f)
    }
}

enum Located {
    Const(C64),
    Cell(usize, f64),
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    x0: f64,
    h: f64,
    n: usize,
    extension: Extension,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_width(width: f64) -> Result<()> {
    if !(width > 0.0) || width > 1.0 {
        return Err(Error::InvalidArgument(format!("mollifier width must lie in (0, 1], got {width}")));
    }
    Ok(())
}

/// Unnormalized bump `exp(-1/(1-y²))` on `(-1, 1)`.
fn bump(y: f64) -> f64 {
    let r = 1.0 - y * y;
    if r <= 0.0 {
        0.0
    } else {
        (-1.0 / r).exp()
    }
}

/// C^∞ step: 0 for t <= 0, 1 for t >= 1.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Prefix sums of `∫|f|^p` over grid cells, giving O(1) window integrals.
pub struct WindowIntegrator<'a> {
    f: &'a GridFn,
    p: u8,
    prefix: Vec<f64>,
}

impl<'a> WindowIntegrator<'a> {
    pub fn new(f: &'a GridFn, p: f64) -> Result<Self> {
        let p = if p == 1.0 {
            1
        } else if p == 2.0 {
            2
        } else {
            return Err(Error::UnsupportedExponent(p));
        };
        let n = f.grid.n;
        let mut prefix = Vec::with_capacity(n);
        prefix.push(0.0);
        let mut acc = 0.0;
        for i in 0..n - 1 {
            let (a, b) = f.cell_ends(i);
            acc += f.grid.h * linear_abs_pow_integral(a, b, p);
            prefix.push(acc);
        }
        Ok(Self { f, p, prefix })
    }

    fn total(&self) -> f64 {
        self.prefix[self.prefix.len() - 1]
    }

    /// `∫_{x0}^{x}` for `x` inside the span.
    fn base(&self, x: f64) -> f64 {
        let g = &self.f.grid;
        let s = ((x - g.x0) / g.h).max(0.0);
        let i = (s.floor() as usize).min(g.n - 2);
        let frac = (s - i as f64).clamp(0.0, 1.0);
        if frac == 0.0 {
            return self.prefix[i];
        }
        let (a, b) = self.f.cell_ends(i);
        let b_part = a + (b - a) * frac;
        self.prefix[i] + g.h * frac * linear_abs_pow_integral(a, b_part, self.p)
    }

    pub fn cumulative(&self, x: f64) -> f64 {
        let g = &self.f.grid;
        let end = g.end();
        match self.f.extension {
            Extension::Periodic => {
                let period = g.span();
                let k = ((x - g.x0) / period).floor();
                let r = (x - g.x0 - k * period).clamp(0.0, period);
                k * self.total() + self.base(g.x0 + r)
            }
            Extension::Zero => {
                if x <= g.x0 {
                    0.0
                } else if x >= end {
                    self.total()
                } else {
                    self.base(x)
                }
            }
            Extension::Clamp => {
                let pw = |z: C64| if self.p == 1 { z.norm() } else { z.norm_sqr() };
                if x <= g.x0 {
                    pw(self.f.samples[0]) * (x - g.x0)
                } else if x >= end {
                    self.total() + pw(self.f.samples[g.n - 1]) * (x - end)
                } else {
                    self.base(x)
                }
            }
        }
    }

    pub fn window(&self, t: f64) -> f64 {
        (self.cumulative(t + 1.0) - self.cumulative(t)).max(0.0)
    }
}

/// `∫_0^1 |a + (b - a) s|^p ds` in closed form for p in {1, 2}.
fn linear_abs_pow_integral(a: C64, b: C64, p: u8) -> f64 {
    if p == 2 {
        return (a.norm_sqr() + (a * b.conj()).re + b.norm_sqr()) / 3.0;
    }
    let d = b - a;
    let qa = d.norm_sqr();
    if qa <= 1e-30 * a.norm_sqr() || qa == 0.0 {
        return 0.5 * (a.norm() + b.norm());
    }
    // |a + d s|² = qa (s - s0)² + qa k²
    let cross = a.conj() * d;
    let s0 = -cross.re / qa;
    let k = cross.im.abs() / qa;
    let prim = |u: f64| -> f64 {
        if k <= 1e-300 {
            0.5 * u * u.abs()
        } else {
            0.5 * (u * (u * u + k * k).sqrt() + k * k * (u / k).asinh())
        }
    };
    qa.sqrt() * (prim(1.0 - s0) - prim(-s0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sine(h: f64) -> GridFn {
        let n = (2.0 * PI / h).round() as usize;
        let g = Grid::over(0.0, 2.0 * PI, n).unwrap();
        let mut f = GridFn::from_real_fn(g, Extension::Periodic, f64::sin).unwrap();
        // sin(2π) is not exactly zero in floating point
        f.samples[g.n - 1] = f.samples[0];
        f
    }

    #[test]
    fn eval_constant_and_zero_extension() {
        let g = Grid::over(0.0, 1.0, 10).unwrap();
        let f = GridFn::constant(g, Extension::Clamp, c(3.0));
        assert_eq!(f.eval(0.37), c(3.0));
        let id = GridFn::from_real_fn(g, Extension::Zero, |x| x).unwrap();
        assert_eq!(id.eval(2.0), c(0.0));
        assert!((id.eval(0.37).re - 0.37).abs() < 1e-14);
    }

    #[test]
    fn eval_periodic_sine() {
        let f = sine(1e-3);
        let v = f.eval(2.0 * PI + PI / 2.0);
        assert!((v.re - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn clamp_extension_holds_end_values() {
        let g = Grid::over(0.0, 1.0, 4).unwrap();
        let f = GridFn::from_real_fn(g, Extension::Clamp, |x| 1.0 + x).unwrap();
        assert_eq!(f.eval(-5.0), c(1.0));
        assert_eq!(f.eval(7.0), c(2.0));
    }

    #[test]
    fn periodic_requires_matching_ends() {
        let g = Grid::over(0.0, 1.0, 4).unwrap();
        assert!(GridFn::from_real_fn(g, Extension::Periodic, |x| x).is_err());
    }

    #[test]
    fn jump_keeps_one_sided_values() {
        let g = Grid::over(0.0, 2.0, 4).unwrap();
        let f = GridFn::from_real_fn(g, Extension::Clamp, |x| if x >= 1.0 { 2.0 } else { 0.0 })
            .unwrap()
            .with_jump(2, c(0.0))
            .unwrap();
        assert_eq!(f.eval(0.9), c(0.0));
        assert_eq!(f.eval(1.0), c(2.0));
        assert_eq!(f.eval(1.1), c(2.0));
        assert!((f.window_integral(0.5, 2.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn window_integrals() {
        let g = Grid::over(0.0, 3.0, 30).unwrap();
        let two = GridFn::constant(g, Extension::Clamp, c(2.0));
        assert!((two.window_integral(0.0, 2.0).unwrap() - 4.0).abs() < 1e-14);
        let zero = GridFn::zeros(g, Extension::Zero);
        assert_eq!(zero.window_integral(0.3, 1.0).unwrap(), 0.0);
        let s = sine(1e-3);
        let expect = 0.5 - 1f64.sin() * 1f64.cos() / 2.0;
        assert!((s.window_integral(0.0, 2.0).unwrap() - expect).abs() < 1e-6);
        assert!(matches!(s.window_integral(0.0, 3.0), Err(Error::UnsupportedExponent(_))));
    }

    #[test]
    fn window_integral_closed_forms_agree_with_fine_quadrature() {
        let g = Grid::over(0.0, 1.0, 2).unwrap();
        let f = GridFn::new(g, vec![C64::new(1.0, -2.0), C64::new(-0.5, 0.7), C64::new(0.3, 1.1)], Extension::Zero).unwrap();
        for p in [1.0, 2.0] {
            let m = 200_000;
            let brute: f64 = (0..m)
                .map(|k| f.eval((k as f64 + 0.5) / m as f64).norm().powf(p))
                .sum::<f64>()
                / m as f64;
            assert!((f.window_integral(0.0, p).unwrap() - brute).abs() < 1e-8);
        }
    }

    #[test]
    fn real_sign_change_p1() {
        assert!((linear_abs_pow_integral(c(-1.0), c(1.0), 1) - 0.5).abs() < 1e-15);
        assert!((linear_abs_pow_integral(c(2.0), c(2.0), 1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn antiderivative_cases() {
        let g = Grid::over(0.0, 1.0, 100).unwrap();
        let one = GridFn::constant(g, Extension::Clamp, c(1.0));
        let f = one.antiderivative();
        for (i, x) in g.nodes().enumerate() {
            assert!((f.samples()[i].re - x).abs() < 1e-12);
        }
        let z = GridFn::zeros(g, Extension::Zero).antiderivative();
        assert!(z.samples().iter().all(|v| v.norm() == 0.0));

        let g = Grid::over(0.0, 2.0 * PI, 6283).unwrap();
        let cos = GridFn::from_real_fn(g, Extension::Clamp, f64::cos).unwrap();
        let err = cos
            .antiderivative()
            .samples()
            .iter()
            .zip(g.nodes())
            .map(|(v, x)| (v.re - x.sin()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-5, "{err}");
    }

    #[test]
    fn mollify_constant_is_fixed() {
        let g = Grid::over(0.0, 1.0, 64).unwrap();
        let f = GridFn::constant(g, Extension::Periodic, c(2.5));
        let m = f.mollify(0.1, MollifyScheme::Convolution).unwrap();
        assert!(m.samples().iter().all(|v| (v.re - 2.5).abs() < 1e-12 && v.im == 0.0));
    }

    #[test]
    fn mollify_step_stays_in_hull() {
        let g = Grid::over(0.0, 1.0, 200).unwrap();
        let step = GridFn::from_real_fn(g, Extension::Clamp, |x| if x >= 0.5 { 1.0 } else { 0.0 })
            .unwrap()
            .with_jump(100, c(0.0))
            .unwrap();
        let w = 0.1;
        let m = step.mollify(w, MollifyScheme::Convolution).unwrap();
        for (x, v) in g.nodes().zip(m.samples()) {
            assert!(v.re >= -1e-14 && v.re <= 1.0 + 1e-14);
            if (x - 0.5).abs() > w + 1e-12 {
                assert!((v.re - step.eval(x).re).abs() < 1e-12, "x = {x}: {}", v.re);
            }
        }
    }

    #[test]
    fn mollify_rejects_bad_widths() {
        let g = Grid::over(0.0, 1.0, 8).unwrap();
        let f = GridFn::zeros(g, Extension::Zero);
        assert!(f.mollify(0.0, MollifyScheme::Convolution).is_err());
        assert!(f.mollify(1.5, MollifyScheme::PerCell).is_err());
    }

    #[test]
    fn per_cell_pieces_vanish_at_cell_boundaries() {
        let g = Grid::over(0.0, 3.0, 300).unwrap();
        let f = GridFn::constant(g, Extension::Clamp, c(1.0));
        let m = f.mollify(0.05, MollifyScheme::PerCell).unwrap();
        for k in [0usize, 100, 200, 300] {
            assert_eq!(m.samples()[k], c(0.0));
        }
        // away from the margins the constant is reproduced
        assert!((m.eval(1.5).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mollified_sine_converges() {
        let f = sine(2e-3);
        let mut prev = f64::INFINITY;
        let mut sup_prev = f64::INFINITY;
        for k in 1..=5 {
            let w = 0.5f64.powi(k);
            let m = f.mollify(w, MollifyScheme::Convolution).unwrap();
            let d = m.sub(&f).unwrap();
            let sup = d.max_abs();
            let l2 = d.sup_window_integral(2.0, 4).unwrap().1.sqrt();
            assert!(l2 < prev && sup < sup_prev, "k = {k}: {l2} / {sup}");
            prev = l2;
            sup_prev = sup;
        }
        assert!(sup_prev < 1e-2);
    }

    #[test]
    fn save_load_round_trip_with_jump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        let g = Grid::over(0.0, 2.0, 8).unwrap();
        let f = GridFn::from_real_fn(g, Extension::Clamp, |x| if x >= 1.0 { 2.0 } else { 0.1 * x })
            .unwrap()
            .with_jump(4, c(0.1))
            .unwrap();
        f.save(&path).unwrap();
        let back = GridFn::load(&path).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn truncated_file_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        let g = Grid::over(0.0, 1.0, 4).unwrap();
        GridFn::constant(g, Extension::Zero, c(1.0)).save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(3).collect();
        fs::write(&path, cut.join("\n") + "\n").unwrap();
        match GridFn::load(&path) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("2 of 5"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(&path, "x,re,im\n0.0,1.0\n").unwrap();
        match GridFn::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
