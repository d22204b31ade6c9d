//! The `singspec` command line: config parsing, the six commands, and the
//! artifact manifest.
//!
//! Every command writes its artifacts under the output directory together
//! with `manifest.json`, which lists each artifact with its SHA-256. JSON
//! floats are printed with 17 significant digits, so reruns with the same
//! config and seed are byte-identical.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::enclosure::{self, boundary_points, lower_bound_m, region_from_k};
use crate::error::{Error, Result};
use crate::form_fem::{
    assemble, default_probe, inequality_suite, lowest_eigenvalues, near_probe, numerical_range, region_slack,
    resolvent_diff_norm, spectrum_report, InequalityReport, Mesh, Pencil, RangeReport, SpectrumReport,
    COMPARISON_WIDTH,
};
use crate::grid_fn::{Grid, MollifyScheme, C64};
use crate::potentials::{self, PotentialSpec};
use crate::quasi_deriv::{eigenvalues_shooting, lagrange_residual, lowest_real_eigenvalues, SearchSpec, ShootReport};
use crate::stepanov::{hminus1_distance, k_constant, smooth_approx_sequence, NormReport, Representation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const MIN_MESH_N: usize = 16;
const BOUNDARY_SAMPLES: usize = 400;
const LAGRANGE_CASES: u64 = 8;
const LAGRANGE_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fem,
    Shoot,
    Both,
}

impl Method {
    fn fem(self) -> bool {
        self != Method::Shoot
    }

    fn shoot(self) -> bool {
        self != Method::Fem
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeName {
    /// One unit left of the leftmost numerical-range point of the pencils compared.
    Auto,
    /// `−4(2K̂+1)⁴ − 1`, the vertex of the enclosure for the larger `K`.
    Vertex,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaProbe {
    Named(ProbeName),
    Point { re: f64, im: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Norms,
    Spectrum,
    Enclosure,
    Range,
    Converge,
    Check,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Norms => "norms",
            Command::Spectrum => "spectrum",
            Command::Enclosure => "enclosure",
            Command::Range => "range",
            Command::Converge => "converge",
            Command::Check => "check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    /// Defaults to the catalog interval for builtins and the grid span otherwise.
    #[serde(default)]
    pub interval: Option<[f64; 2]>,
    /// Cells of the sampling grid and of the FE mesh for builtins.
    #[serde(default = "default_mesh_n")]
    pub mesh_n: usize,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_eig_count")]
    pub eig_count: usize,
    #[serde(default = "default_probe_spec")]
    pub lambda_probe: LambdaProbe,
    #[serde(default = "default_widths")]
    pub mollifier_widths: Vec<f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Random trial vectors per inequality suite.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Support directions of the numerical range.
    #[serde(default = "default_angles")]
    pub angles: usize,
}

fn default_mesh_n() -> usize {
    2048
}

fn default_method() -> Method {
    Method::Both
}

fn default_eig_count() -> usize {
    5
}

fn default_probe_spec() -> LambdaProbe {
    LambdaProbe::Named(ProbeName::Auto)
}

fn default_widths() -> Vec<f64> {
    (1..=6).map(|k| 0.5f64.powi(k)).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_trials() -> usize {
    1000
}

fn default_angles() -> usize {
    64
}

fn config_err(field: &str, msg: impl Into<String>) -> Error {
    Error::Config { field: field.into(), msg: msg.into() }
}

impl RunConfig {
    /// A config for `potential` with every other field at its default.
    pub fn new(potential: PotentialSpec) -> Self {
        Self {
            potential,
            interval: None,
            mesh_n: default_mesh_n(),
            method: default_method(),
            eig_count: default_eig_count(),
            lambda_probe: default_probe_spec(),
            mollifier_widths: default_widths(),
            output_dir: default_output_dir(),
            seed: 0,
            trials: default_trials(),
            angles: default_angles(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh_n < MIN_MESH_N {
            return Err(config_err("mesh_n", format!("must be >= {MIN_MESH_N}, got {}", self.mesh_n)));
        }
        if self.eig_count < 1 {
            return Err(config_err("eig_count", "must be >= 1"));
        }
        for (i, &w) in self.mollifier_widths.iter().enumerate() {
            if !(w > 0.0 && w <= 1.0) {
                return Err(config_err(&format!("mollifier_widths[{i}]"), format!("width {w} not in (0, 1]")));
            }
        }
        if self.mollifier_widths.is_empty() {
            return Err(config_err("mollifier_widths", "must not be empty"));
        }
        if let Some([lo, hi]) = self.interval {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(config_err("interval", format!("need finite x_lo < x_hi, got [{lo}, {hi}]")));
            }
        }
        if self.trials < 1 {
            return Err(config_err("trials", "must be >= 1"));
        }
        if self.angles < 8 {
            return Err(config_err("angles", format!("must be >= 8, got {}", self.angles)));
        }
        if let LambdaProbe::Point { re, im } = self.lambda_probe {
            if !(re.is_finite() && im.is_finite()) {
                return Err(config_err("lambda_probe", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON config; relative grid-file paths resolve
/// against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        config_err(if path == "." { "<root>" } else { &path }, e.into_inner().to_string())
    })?;
    cfg.potential = cfg.potential.resolve_paths(base);
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| config_err("<file>", format!("{}: {e}", path.display())))?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Serde formatter that prints floats with 17 significant digits.
struct FixedFloat(serde_json::ser::PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for FixedFloat {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_value(),
    );

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
}

/// Pretty JSON with fixed 17-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloat(serde_json::ser::PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::Io(io::Error::other(e));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(io::Error::other(e.to_string())))
}

/// Artifacts accumulated by one command, in emission order.
#[derive(Default)]
struct Artifacts(Vec<(String, Vec<u8>)>);

impl Artifacts {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.0.push((name.into(), to_json(value)?));
        Ok(())
    }

    fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.0.push((name.into(), bytes));
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    exit_code: i32,
    config: &'a RunConfig,
    artifacts: Vec<ManifestEntry>,
}

fn write_all(dir: &Path, command: Command, cfg: &RunConfig, arts: &Artifacts, exit_code: i32) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let mut entries = Vec::new();
    for (name, bytes) in &arts.0 {
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        entries.push(ManifestEntry { path: name.clone(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() });
        paths.push(path);
    }
    let manifest = Manifest { command: command.name(), exit_code, config: cfg, artifacts: entries };
    let path = dir.join("manifest.json");
    fs::write(&path, to_json(&manifest)?)?;
    paths.push(path);
    Ok(paths)
}

/// Representation, interval and FE pencil shared by all commands.
pub struct Setup {
    pub rep: Representation,
    pub interval: (f64, f64),
    pub mesh: Mesh,
    pub pencil: Pencil,
}

pub fn prepare(cfg: &RunConfig) -> Result<Setup> {
    let potential = |e: Error| config_err("potential", e.to_string());
    let catalog_interval = match &cfg.potential {
        PotentialSpec::Builtin { name, .. } => {
            Some(potentials::catalog_entry(name).ok_or_else(|| potential(Error::UnknownPotential(name.clone())))?.interval)
        }
        _ => None,
    };
    let given = cfg.interval.map(|[lo, hi]| (lo, hi));
    let grid_interval = given.or(catalog_interval).unwrap_or((0.0, 1.0));
    let grid = Grid::over(grid_interval.0, grid_interval.1, cfg.mesh_n).map_err(potential)?;
    let rep = potentials::build(&cfg.potential, grid).map_err(potential)?;
    let interval = given.or(catalog_interval).unwrap_or_else(|| rep.span());
    let mesh = Mesh::for_rep(&rep, interval).map_err(|e| config_err("interval", e.to_string()))?;
    if cfg.eig_count > mesh.dim() {
        return Err(config_err("eig_count", format!("exceeds the {} mesh unknowns", mesh.dim())));
    }
    let pencil = assemble(&rep, &mesh).map_err(potential)?;
    Ok(Setup { rep, interval, mesh, pencil })
}

#[derive(Serialize)]
struct NormsOut<'a> {
    rep: &'a str,
    interval: [f64; 2],
    mesh_n: usize,
    #[serde(flatten)]
    norms: NormReport,
    m_k: f64,
}

#[derive(Serialize)]
struct SpectrumOut {
    #[serde(flatten)]
    report: SpectrumReport,
    method: Method,
    shooting: Option<ShootReport>,
    /// Largest distance from a shooting eigenvalue to the nearest FE one.
    agreement: Option<f64>,
}

#[derive(Serialize)]
struct RegionOut<'a> {
    rep: &'a str,
    #[serde(rename = "K")]
    k: f64,
    region: enclosure::RegionMeta,
    m_k: Option<f64>,
    re_cutoff: f64,
    boundary_samples: usize,
}

#[derive(Serialize)]
struct RangeOut<'a> {
    rep: &'a str,
    #[serde(rename = "K")]
    k: f64,
    #[serde(flatten)]
    range: &'a RangeReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergeRow {
    pub width: f64,
    pub hminus1_distance: f64,
    pub a_n: f64,
    pub resolvent_diff_norm: f64,
    pub resolvent_at_vertex: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergeReport {
    pub rep: String,
    pub probe: C64,
    pub vertex_probe: C64,
    pub rows: Vec<ConvergeRow>,
    pub hminus1_strictly_decreasing: bool,
    /// Each step at most 5% above its predecessor.
    pub resolvent_nonincreasing: bool,
    pub final_below_tenth: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub applicable: bool,
    pub passed: bool,
    /// Worst observed value of the suite's metric.
    pub metric: f64,
    pub tolerance: f64,
}

#[derive(Serialize)]
pub struct CheckReport {
    pub rep: String,
    pub passed: bool,
    pub violations: usize,
    pub suites: Vec<SuiteResult>,
    pub inequalities: InequalityReport,
}

fn shoot(setup: &Setup, count: usize, fem: Option<&[C64]>) -> Result<ShootReport> {
    if setup.rep.is_real() {
        let k = k_constant(&setup.rep).k;
        let lo = lower_bound_m(k)?.min(fem.and_then(|f| f.first()).map_or(0.0, |z| z.re)) - 1.0;
        lowest_real_eigenvalues(&setup.rep, setup.interval, count, lo)
    } else {
        let seeds = match fem {
            Some(f) => f.to_vec(),
            None => lowest_eigenvalues(&setup.pencil, count)?,
        };
        eigenvalues_shooting(&setup.rep, setup.interval, &SearchSpec::Seeds(seeds))
    }
}

fn sort_spectrum(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
}

/// Largest distance from each `a` to its nearest `b`, and the largest ratio of
/// that distance to `max(1e−4, 5h²|λ|)`.
fn agreement(a: &[C64], b: &[C64], h: f64) -> (f64, f64) {
    if a.is_empty() {
        return (f64::INFINITY, f64::INFINITY);
    }
    let mut worst = 0.0f64;
    let mut ratio = 0.0f64;
    for z in a {
        let d = b.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
        ratio = ratio.max(d / 1e-4f64.max(5.0 * h * h * z.norm()));
    }
    (worst, ratio)
}

fn spectrum(cfg: &RunConfig, setup: &Setup, arts: &mut Artifacts) -> Result<usize> {
    let fem = if cfg.method.fem() {
        let mut v = lowest_eigenvalues(&setup.pencil, cfg.eig_count)?;
        sort_spectrum(&mut v);
        Some(v)
    } else {
        None
    };
    let shooting = if cfg.method.shoot() { Some(shoot(setup, cfg.eig_count, fem.as_deref())?) } else { None };
    let shown = match (&fem, &shooting) {
        (Some(f), _) => f.clone(),
        (None, Some(s)) => s.eigenvalues.clone(),
        (None, None) => unreachable!("method selects at least one solver"),
    };
    let agree = match (&fem, &shooting) {
        (Some(f), Some(s)) => Some(agreement(&s.eigenvalues, f, setup.mesh.max_h()).0),
        _ => None,
    };
    let report = spectrum_report(&setup.pencil, &shown)?;
    let outside = report.eigenvalues.iter().filter(|e| !e.in_region).count();
    arts.json("spectrum.json", &SpectrumOut { report, method: cfg.method, shooting, agreement: agree })?;
    Ok(outside)
}

fn resolve_probe(cfg: &RunConfig, base: &Pencil, others: &[Pencil]) -> Result<(C64, C64)> {
    let mut near = f64::INFINITY;
    let mut vertex = f64::INFINITY;
    for p in others {
        near = near.min(near_probe(base, p)?.re);
        vertex = vertex.min(default_probe(base, p)?.re);
    }
    let (near, vertex) = (C64::new(near, 0.0), C64::new(vertex, 0.0));
    let probe = match cfg.lambda_probe {
        LambdaProbe::Named(ProbeName::Auto) => near,
        LambdaProbe::Named(ProbeName::Vertex) => vertex,
        LambdaProbe::Point { re, im } => C64::new(re, im),
    };
    Ok((probe, vertex))
}

/// Resolvent convergence along per-cell mollifications of the configured potential.
pub fn converge_report(cfg: &RunConfig, setup: &Setup) -> Result<ConvergeReport> {
    let approx = smooth_approx_sequence(&setup.rep, &cfg.mollifier_widths)?;
    let pencils = thread::scope(|s| {
        let handles: Vec<_> = approx.iter().map(|r| s.spawn(|| assemble(r, &setup.mesh))).collect();
        handles.into_iter().map(|h| h.join().expect("assembly thread panicked")).collect::<Result<Vec<_>>>()
    })?;
    let (probe, vertex) = resolve_probe(cfg, &setup.pencil, &pencils)?;
    let rows = thread::scope(|s| {
        let handles: Vec<_> = approx
            .iter()
            .zip(&pencils)
            .zip(&cfg.mollifier_widths)
            .map(|((r, p), &width)| {
                s.spawn(move || -> Result<ConvergeRow> {
                    let d = hminus1_distance(&setup.rep, r)?;
                    Ok(ConvergeRow {
                        width,
                        hminus1_distance: d,
                        a_n: 2.0 * d,
                        resolvent_diff_norm: resolvent_diff_norm(&setup.pencil, p, probe)?,
                        resolvent_at_vertex: resolvent_diff_norm(&setup.pencil, p, vertex)?,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("resolvent thread panicked")).collect::<Result<Vec<_>>>()
    })?;
    let res: Vec<f64> = rows.iter().map(|r| r.resolvent_diff_norm).collect();
    Ok(ConvergeReport {
        rep: setup.rep.label.clone(),
        probe,
        vertex_probe: vertex,
        hminus1_strictly_decreasing: rows.windows(2).all(|w| w[1].hminus1_distance < w[0].hminus1_distance),
        resolvent_nonincreasing: res.windows(2).all(|w| w[1] <= 1.05 * w[0]),
        final_below_tenth: res[res.len() - 1] < res[0] / 10.0,
        rows,
    })
}

fn suite(name: &'static str, metric: f64, tolerance: f64) -> SuiteResult {
    SuiteResult { name, applicable: true, passed: metric <= tolerance, metric, tolerance }
}

/// Every invariant suite for the configured potential; `passed` is their conjunction.
pub fn check_report(cfg: &RunConfig, setup: &Setup) -> Result<CheckReport> {
    let Setup { rep, interval, mesh, pencil } = setup;
    let k = k_constant(rep).k;
    let region = region_from_k(k)?;
    let (ineq, range, fem) = thread::scope(|s| {
        let ineq = s.spawn(|| inequality_suite(rep, mesh, cfg.trials, cfg.seed));
        let range = s.spawn(|| numerical_range(pencil, cfg.angles));
        let fem = lowest_eigenvalues(pencil, cfg.eig_count);
        (ineq.join().expect("suite thread panicked"), range.join().expect("range thread panicked"), fem)
    });
    let (ineq, range, mut fem) = (ineq?, range?, fem?);
    sort_spectrum(&mut fem);
    let mut suites = Vec::new();

    suites.push(suite("inequalities", ineq.violations as f64, 0.0));

    let outside = fem.iter().filter(|&&z| !enclosure::contains(&region, z, region_slack(z))).count();
    suites.push(suite("fe_eigenvalues_in_region", outside as f64, 0.0));

    let range_bad = usize::from(!range.contained_in_mk) + usize::from(!range.convex);
    suites.push(suite("numerical_range", range_bad as f64, 0.0));

    if rep.is_real() {
        let m = lower_bound_m(k)?;
        let deficit = fem.iter().map(|z| m - z.re).fold(f64::NEG_INFINITY, f64::max);
        let max_im = fem.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        suites.push(suite("real_lower_bound", deficit.max(0.0), 1e-6));
        suites.push(suite("real_spectrum", max_im, 1e-8));
    } else {
        for name in ["real_lower_bound", "real_spectrum"] {
            suites.push(SuiteResult { name, applicable: false, passed: true, metric: 0.0, tolerance: 0.0 });
        }
    }

    let shot = shoot(setup, cfg.eig_count, Some(&fem))?;
    // metric is the distance relative to max(1e−4, 5h²|λ|)
    suites.push(suite("method_agreement", agreement(&shot.eigenvalues, &fem, mesh.max_h()).1, 1.0));

    let mut lagrange = 0.0f64;
    for case in 0..LAGRANGE_CASES {
        let lam = C64::new(20.0 * (case as f64 / LAGRANGE_CASES as f64) - 10.0, 3.0 - case as f64);
        lagrange = lagrange.max(lagrange_residual(rep, lam, lam.conj(), *interval, cfg.seed.wrapping_add(case))?);
    }
    suites.push(suite("lagrange_identity", lagrange, LAGRANGE_TOL));

    let smooth = Representation::new(
        rep.q.mollify(COMPARISON_WIDTH, MollifyScheme::PerCell)?,
        rep.tau.mollify(COMPARISON_WIDTH, MollifyScheme::PerCell)?,
        format!("{}~{COMPARISON_WIDTH}", rep.label),
    )?;
    let p2 = assemble(&smooth, mesh)?;
    let (probe, _) = resolve_probe(cfg, pencil, std::slice::from_ref(&p2))?;
    let forward = resolvent_diff_norm(pencil, &p2, probe)?;
    let backward = resolvent_diff_norm(&p2, pencil, probe)?;
    suites.push(suite("resolvent_symmetry", (forward - backward).abs() / forward.max(f64::MIN_POSITIVE), SYMMETRY_TOL));

    let violations = suites.iter().filter(|s| !s.passed).count();
    Ok(CheckReport { rep: rep.label.clone(), passed: violations == 0, violations, suites, inequalities: ineq })
}

fn execute(command: Command, cfg: &RunConfig, arts: &mut Artifacts) -> Result<usize> {
    let setup = prepare(cfg)?;
    let label = setup.rep.label.clone();
    let k = k_constant(&setup.rep);
    match command {
        Command::Norms => {
            let (lo, hi) = setup.interval;
            let out = NormsOut { rep: &label, interval: [lo, hi], mesh_n: cfg.mesh_n, norms: k, m_k: lower_bound_m(k.k)? };
            arts.json("norms.json", &out)?;
            Ok(0)
        }
        Command::Spectrum => spectrum(cfg, &setup, arts),
        Command::Enclosure => {
            let region = region_from_k(k.k)?;
            let upper = boundary_points(&region, BOUNDARY_SAMPLES, None)?;
            let closed = upper.iter().copied().chain(upper.iter().rev().map(|z| z.conj()));
            arts.json(
                "region.json",
                &RegionOut {
                    rep: &label,
                    k: k.k,
                    region: region.meta(),
                    m_k: setup.rep.is_real().then(|| lower_bound_m(k.k)).transpose()?,
                    re_cutoff: region.re_cutoff(),
                    boundary_samples: BOUNDARY_SAMPLES,
                },
            )?;
            arts.raw("boundary.csv", csv_bytes(&["re", "im"], closed.map(|z| vec![fmt(z.re), fmt(z.im)]))?);
            Ok(0)
        }
        Command::Range => {
            let range = numerical_range(&setup.pencil, cfg.angles)?;
            let rows = range.boundary.iter().map(|z| vec![fmt(z.re), fmt(z.im)]);
            arts.raw("range.csv", csv_bytes(&["re", "im"], rows)?);
            arts.json("range.json", &RangeOut { rep: &label, k: k.k, range: &range })?;
            Ok(0)
        }
        Command::Converge => {
            let report = converge_report(cfg, &setup)?;
            let rows = report.rows.iter().map(|r| {
                vec![fmt(r.width), fmt(r.hminus1_distance), fmt(r.a_n), fmt(r.resolvent_diff_norm), fmt(r.resolvent_at_vertex)]
            });
            arts.raw(
                "converge.csv",
                csv_bytes(&["width", "hminus1_distance", "a_n", "resolvent_diff_norm", "resolvent_at_vertex"], rows)?,
            );
            arts.json("converge.json", &report)?;
            Ok(0)
        }
        Command::Check => {
            let report = check_report(cfg, &setup)?;
            arts.json("check.json", &report)?;
            Ok(report.violations)
        }
    }
}

#[derive(Serialize)]
struct ErrorOut<'a> {
    command: &'a str,
    kind: &'a str,
    message: String,
}

/// Outcome of [`run`]: the exit code and every file written.
#[derive(Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable reason for a nonzero exit.
    pub message: Option<String>,
}

/// Runs `command` and writes its artifacts under `cfg.output_dir`. Config
/// errors write nothing; numerical failures write `error.json`.
pub fn run(command: Command, cfg: &RunConfig) -> RunOutcome {
    if let Err(e) = cfg.validate() {
        return RunOutcome { exit_code: EXIT_CONFIG, files: Vec::new(), message: Some(e.to_string()) };
    }
    let mut arts = Artifacts::default();
    let (code, message) = match execute(command, cfg, &mut arts) {
        Ok(0) => (EXIT_OK, None),
        Ok(n) => (EXIT_VIOLATION, Some(format!("{n} check violation(s)"))),
        Err(e @ Error::Config { .. }) => {
            return RunOutcome { exit_code: EXIT_CONFIG, files: Vec::new(), message: Some(e.to_string()) };
        }
        Err(e) => {
            let out = ErrorOut { command: command.name(), kind: error_kind(&e), message: e.to_string() };
            arts.0.clear();
            if let Err(e2) = arts.json("error.json", &out) {
                return RunOutcome { exit_code: EXIT_NUMERICAL, files: Vec::new(), message: Some(e2.to_string()) };
            }
            (EXIT_NUMERICAL, Some(e.to_string()))
        }
    };
    match write_all(&cfg.output_dir, command, cfg, &arts, code) {
        Ok(files) => RunOutcome { exit_code: code, files, message },
        Err(e) => RunOutcome { exit_code: EXIT_NUMERICAL, files: Vec::new(), message: Some(format!("writing artifacts: {e}")) },
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Singular(_) => "singular",
        Error::NoConvergence(_) => "no_convergence",
        Error::NoSignChange { .. } => "no_sign_change",
        Error::NonFinite(_) => "non_finite",
        Error::Io(_) => "io",
        _ => "numerical",
    }
}

#[derive(Parser, Debug)]
#[command(name = "singspec", version, about = "Spectra and enclosures of 1-D Schrodinger operators with distributional potentials")]
struct Cli {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `method`.
    #[arg(long)]
    method: Option<Method>,
}

/// Entry point of the binary; returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let mut cfg = match parse_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("singspec: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(method) = cli.method {
        cfg.method = method;
    }
    let outcome = run(cli.command, &cfg);
    if let Some(msg) = &outcome.message {
        eprintln!("singspec {}: {msg}", cli.command.name());
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    outcome.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(r#"{"potential": {"kind": "builtin", "name": "free"}}"#).unwrap();
        assert_eq!(cfg.mesh_n, 2048);
        assert_eq!(cfg.method, Method::Both);
        assert_eq!(cfg.eig_count, 5);
        assert_eq!(cfg.lambda_probe, LambdaProbe::Named(ProbeName::Auto));
        assert_eq!(cfg.mollifier_widths, vec![0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625]);
        assert_eq!(cfg, RunConfig::new(PotentialSpec::builtin("free", &[])));
    }

    #[test]
    fn bounds_are_named_in_errors() {
        let e = parse(r#"{"potential": {"kind": "builtin", "name": "free"}, "mesh_n": 4}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, msg } if field == "mesh_n" && msg.contains(">= 16")), "{e}");
        let e = parse(r#"{"potential": {"kind": "builtin", "name": "free"}, "mollifier_widths": [0.5, 2.0]}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "mollifier_widths[1]"), "{e}");
    }

    #[test]
    fn schema_errors_carry_paths() {
        let e = parse(r#"{"potential": {"kind": "builtin", "name": "free"}, "method": "magic"}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "method"), "{e}");
        let e = parse(r#"{"potential": {"kind": "builtin", "name": "free"}, "eig_cnt": 3}"#).unwrap_err();
        assert!(e.to_string().contains("eig_cnt"), "{e}");
        let e = parse(r#"{"potential": {"kind": "builtin", "name": "free"}, "lambda_probe": {"re": 1.0}}"#).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "lambda_probe"), "{e}");
    }

    #[test]
    fn probe_forms_parse() {
        let cfg = parse(r#"{"potential": {"kind": "builtin", "name": "free"}, "lambda_probe": "vertex"}"#).unwrap();
        assert_eq!(cfg.lambda_probe, LambdaProbe::Named(ProbeName::Vertex));
        let cfg = parse(r#"{"potential": {"kind": "builtin", "name": "free"}, "lambda_probe": {"re": -3, "im": 1}}"#).unwrap();
        assert_eq!(cfg.lambda_probe, LambdaProbe::Point { re: -3.0, im: 1.0 });
    }

    #[test]
    fn floats_use_seventeen_digits() {
        let s = String::from_utf8(to_json(&serde_json::json!({"x": 0.1, "n": 3, "v": [1.0]})).unwrap()).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn unknown_builtin_is_a_config_error() {
        let cfg = RunConfig::new(PotentialSpec::builtin("nope", &[]));
        assert!(matches!(prepare(&cfg), Err(Error::Config { field, .. }) if field == "potential"));
    }

    #[test]
    fn agreement_tolerance_scales_with_h() {
        let a = [C64::new(100.0, 0.0)];
        let b = [C64::new(100.0 + 4e-3, 0.0)];
        assert!(agreement(&a, &b, 0.01).1 <= 1.0);
        assert!(agreement(&a, &b, 0.001).1 > 1.0);
    }
}
