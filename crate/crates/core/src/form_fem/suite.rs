//! Randomized checks of the form bounds on FE trial functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{assemble, form_value, q_pairing, Mesh, Pencil};
use crate::enclosure::eps_grid;
use crate::error::{Error, Result};
use crate::grid_fn::{MollifyScheme, C64};
use crate::stepanov::{hminus1_distance, k_constant, Representation};

/// Mollifier width of the default comparison representation for check (v).
pub const COMPARISON_WIDTH: f64 = 0.25;

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub trials: usize,
    pub seed: u64,
    pub eps_count: usize,
    pub eps_decades: f64,
}

impl SuiteOptions {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, eps_count: 13, eps_decades: 3.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckTally {
    pub name: &'static str,
    pub evaluated: usize,
    pub violations: usize,
    /// Largest observed `lhs / (rhs + allowance)`; a violation exceeds 1.
    pub worst_budget_fraction: f64,
}

impl CheckTally {
    fn new(name: &'static str) -> Self {
        Self { name, evaluated: 0, violations: 0, worst_budget_fraction: 0.0 }
    }

    fn record(&mut self, lhs: f64, rhs: f64, grad2: f64) {
        self.evaluated += 1;
        let budget = rhs * (1.0 + 1e-9) + 1e-7 * (1.0 + grad2);
        if lhs > budget {
            self.violations += 1;
        }
        self.worst_budget_fraction = self.worst_budget_fraction.max(lhs / budget);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub rep: String,
    pub trials: usize,
    pub q_norm: f64,
    pub tau_norm: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// `a_n = 2·hminus1_distance` to the comparison representation.
    pub a_n: f64,
    pub checks: Vec<CheckTally>,
    /// Sum of violations over `checks`.
    pub violations: usize,
    /// Diagnostic only: the unshifted `2 Re t[u] + 4‖u‖² ≥ ‖u′‖²`, which
    /// presumes the normalization `Re t[u] ≥ ‖u‖²`.
    pub literal_shifted_form_failures: usize,
}

/// Checks (i)–(v) plus the shifted coercivity bound, comparing against the
/// per-cell mollification of `rep` at width [`COMPARISON_WIDTH`].
pub fn inequality_suite(rep: &Representation, mesh: &Mesh, trials: usize, seed: u64) -> Result<InequalityReport> {
    let second = crate::stepanov::Representation::new(
        rep.q.mollify(COMPARISON_WIDTH, MollifyScheme::PerCell)?,
        rep.tau.mollify(COMPARISON_WIDTH, MollifyScheme::PerCell)?,
        format!("{}~{COMPARISON_WIDTH}", rep.label),
    )?;
    inequality_suite_with(rep, mesh, &second, &SuiteOptions::new(trials, seed))
}

pub fn inequality_suite_with(
    rep: &Representation,
    mesh: &Mesh,
    second: &Representation,
    opts: &SuiteOptions,
) -> Result<InequalityReport> {
    if opts.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let p = assemble(rep, mesh)?;
    let p2 = assemble(second, mesh)?;
    let norms = k_constant(rep);
    let (qn, tn, k) = (norms.q_norm, norms.tau_norm, norms.k);
    let a_n = 2.0 * hminus1_distance(rep, second)?;
    let eps = eps_grid(1.0, opts.eps_count, opts.eps_decades);
    let eps_sector = eps_grid(1.0 / (2.0 * k + 1.0), opts.eps_count, opts.eps_decades);
    let mut tallies = [
        CheckTally::new("q_pairing"),
        CheckTally::new("tau_pairing"),
        CheckTally::new("form_perturbation"),
        CheckTally::new("imaginary_part"),
        CheckTally::new("form_difference"),
        CheckTally::new("shifted_coercivity"),
    ];
    let mut literal = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for trial in 0..opts.trials {
        let u = trial_vector(&p, trial, &mut rng);
        let f = form_value(&p, &u)?;
        let (n2, g2) = (f.norm2, f.grad2);
        let qp = q_pairing(&p, &u)?.norm();
        let tp = p.atau.quad(&u).norm();
        let tq = (p.aq.quad(&u) + p.atau.quad(&u)).norm();
        let diff = (form_value(&p2, &u)?.value - f.value).norm();
        for &e in &eps {
            tallies[0].record(qp, qn * (e * g2 + 4.0 * n2 / (e * e * e)), g2);
            tallies[1].record(tp, tn * (e * g2 + 8.0 * n2 / e), g2);
            tallies[2].record(tq, k * e * g2 + 4.0 * k * n2 / (e * e * e), g2);
        }
        for &e in &eps_sector {
            tallies[3].record(f.value.im.abs(), 2.0 * k * e * f.value.re + 8.0 * k * n2 / (e * e * e), g2);
        }
        tallies[4].record(diff, a_n * g2 + 4.0 * a_n * n2, g2);
        // 2 Re t + 2(4K(2K+1)³ + 1)‖u‖² ≥ (1 − 2K/(2K+1))‖u′‖², as lhs ≤ rhs
        let s = 2.0 * k + 1.0;
        tallies[5].record((1.0 - 2.0 * k / s) * g2, 2.0 * f.value.re + 2.0 * (4.0 * k * s.powi(3) + 1.0) * n2, g2);
        if 2.0 * f.value.re + 4.0 * n2 < g2 {
            literal += 1;
        }
    }
    let violations = tallies.iter().map(|t| t.violations).sum();
    Ok(InequalityReport {
        rep: rep.label.clone(),
        trials: opts.trials,
        q_norm: qn,
        tau_norm: tn,
        k,
        a_n,
        checks: tallies.to_vec(),
        violations,
        literal_shifted_form_failures: literal,
    })
}

/// Trial functions cycle through white noise, smooth sine series and
/// modulated bumps; each is normalized to `‖u‖ = 1`.
fn trial_vector(p: &Pencil, trial: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mesh = p.mesh.as_ref().expect("assembled pencils carry a mesh");
    let (lo, hi) = mesh.interval();
    let len = hi - lo;
    let xs = &mesh.nodes()[1..mesh.nodes().len() - 1];
    let mut draw = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut u: Vec<C64> = match trial % 3 {
        0 => xs.iter().map(|_| draw()).collect(),
        1 => {
            let coeffs: Vec<C64> = (1..=8).map(|k| draw() / k as f64).collect();
            xs.iter()
                .map(|&x| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, ck)| ck * ((k + 1) as f64 * std::f64::consts::PI * (x - lo) / len).sin())
                        .sum()
                })
                .collect()
        }
        _ => {
            let centre = lo + len * (0.5 + 0.5 * draw().re);
            let width = len * (0.02 + 0.5 * (0.5 + 0.5 * draw().im));
            let freq = 20.0 * draw().re;
            let phase = draw();
            xs.iter()
                .map(|&x| phase * (-((x - centre) / width).powi(2)).exp() * C64::from_polar(1.0, freq * x))
                .collect()
        }
    };
    let nrm = p.m.quad(&u).re.sqrt();
    if nrm > 0.0 {
        u.iter_mut().for_each(|z| *z /= nrm);
    }
    u
}
