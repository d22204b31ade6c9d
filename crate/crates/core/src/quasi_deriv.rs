//! First-order quasi-derivative system for `l[y] = −(y′ − Qy)′ − Qy′ + τy = λy`.
//!
//! With `u₁ = y` and `u₂ = y^{[1]} = y′ − Qy` the equation becomes
//! `u₁′ = Q u₁ + u₂`, `u₂′ = (τ − λ − Q²) u₁ − Q u₂`, which makes sense for
//! `Q ∈ L²_loc` and `τ ∈ L¹_loc`. On every cell the coefficients are frozen at
//! the midpoint; the frozen generator has trace zero and `μ² = τ − λ`, so the
//! cell propagator is `cosh(μh) I + (sinh(μh)/μ) A` exactly. A jump of `Q` at a
//! cell boundary therefore acts as a point interaction.
//!
//! The formal adjoint uses `v^{1} = v′ − Q̄v` and the conjugated coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid_fn::C64;
use crate::stepanov::Representation;

pub type Mat2 = [[C64; 2]; 2];

/// Below this `|μh|` the propagator uses its Taylor series.
const SERIES_SWITCH: f64 = 1e-4;
/// Rescale the state when it grows beyond this magnitude during shooting.
const RESCALE_AT: f64 = 1e100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Direct,
    Adjoint,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub u1: Vec<C64>,
    /// `y^{[1]}` for direct trajectories, `v^{1}` for adjoint ones.
    pub u2: Vec<C64>,
    pub lambda: C64,
    pub kind: TrajectoryKind,
}

impl Trajectory {
    fn nearest(&self, t: f64) -> usize {
        match self.xs.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) if i >= self.xs.len() => self.xs.len() - 1,
            Err(i) => {
                if t - self.xs[i - 1] <= self.xs[i] - t {
                    i - 1
                } else {
                    i
                }
            }
        }
    }
}

/// Frozen coefficients of one cell.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub len: f64,
    pub q: C64,
    pub tau: C64,
}

/// `cosh(μh)` and `sinh(μh)/μ` for `μ² = mu2`.
fn cosh_sinhc(mu2: C64, h: f64) -> (C64, C64) {
    let z = mu2 * (h * h);
    if z.norm() < SERIES_SWITCH * SERIES_SWITCH {
        let c = 1.0 + z * (0.5 + z * (1.0 / 24.0 + z / 720.0));
        let s = (1.0 + z * (1.0 / 6.0 + z * (1.0 / 120.0 + z / 5040.0))) * h;
        return (c, s);
    }
    let mu = mu2.sqrt();
    let mh = mu * h;
    (mh.cosh(), mh.sinh() / mu)
}

/// `d/d(μ²)` of `sinh(μh)/μ`.
fn d_sinhc(mu2: C64, h: f64, c: C64, s: C64) -> C64 {
    let z = mu2 * (h * h);
    if z.norm() < 1e-4 {
        let h3 = h * h * h;
        return h3
            * (1.0 / 6.0
                + z * (2.0 / 120.0 + z * (3.0 / 5040.0 + z * (4.0 / 362_880.0 + z * (5.0 / 39_916_800.0)))));
    }
    (c * h - s) / (mu2 * 2.0)
}

fn generator(q: C64, tau: C64, lambda: C64) -> Mat2 {
    [[q, C64::new(1.0, 0.0)], [tau - lambda - q * q, -q]]
}

/// Exact propagator of the frozen cell system over length `h`.
pub fn cell_propagator(q: C64, tau: C64, lambda: C64, h: f64) -> Mat2 {
    let a = generator(q, tau, lambda);
    let (c, s) = cosh_sinhc(tau - lambda, h);
    [[c + s * a[0][0], s * a[0][1]], [s * a[1][0], c + s * a[1][1]]]
}

/// Propagator and its derivative with respect to `λ`.
pub fn cell_propagator_with_derivative(q: C64, tau: C64, lambda: C64, h: f64) -> (Mat2, Mat2) {
    let a = generator(q, tau, lambda);
    let mu2 = tau - lambda;
    let (c, s) = cosh_sinhc(mu2, h);
    let p = [[c + s * a[0][0], s * a[0][1]], [s * a[1][0], c + s * a[1][1]]];
    // dμ²/dλ = −1, dA/dλ = [[0, 0], [−1, 0]]
    let dc = -(s * (0.5 * h));
    let ds = -d_sinhc(mu2, h, c, s);
    let dp = [
        [dc + ds * a[0][0], ds * a[0][1]],
        [ds * a[1][0] - s, dc + ds * a[1][1]],
    ];
    (p, dp)
}

fn apply(m: &Mat2, v: [C64; 2]) -> [C64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

pub fn det(m: &Mat2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Cell boundaries on `[lo, hi]`: the endpoints plus every node of the `Q` and
/// `τ` grids strictly inside.
pub fn cell_boundaries(rep: &Representation, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let (x0, x1) = rep.span();
    let tol = 1e-12 * (1.0 + x0.abs().max(x1.abs()));
    if !(hi > lo) || lo < x0 - tol || hi > x1 + tol {
        return Err(Error::IntervalOutsideSpan { lo, hi, span_lo: x0, span_hi: x1 });
    }
    let mut xs = vec![lo];
    let gq = *rep.q.grid();
    let gt = *rep.tau.grid();
    let mut inner: Vec<f64> = gq.nodes().chain(gt.nodes()).filter(|&x| x > lo && x < hi).collect();
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min_gap = 1e-9 * gq.h.min(gt.h);
    for x in inner {
        if x - xs[xs.len() - 1] > min_gap {
            xs.push(x);
        }
    }
    if hi - xs[xs.len() - 1] <= min_gap && xs.len() > 1 {
        xs.pop();
    }
    xs.push(hi);
    Ok(xs)
}

/// Midpoint-frozen cells on `[lo, hi]`, with conjugated coefficients for the adjoint.
pub fn cells(rep: &Representation, lo: f64, hi: f64, kind: TrajectoryKind) -> Result<(Vec<f64>, Vec<Cell>)> {
    if !rep.q.is_finite() || !rep.tau.is_finite() {
        let bad = rep
            .q
            .grid()
            .nodes()
            .zip(rep.q.samples().iter().chain(rep.tau.samples()))
            .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
            .map(|(x, _)| x)
            .unwrap_or(f64::NAN);
        return Err(Error::NonFinite(bad));
    }
    let xs = cell_boundaries(rep, lo, hi)?;
    let cells = xs
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let (q, tau) = (rep.q.eval(mid), rep.tau.eval(mid));
            match kind {
                TrajectoryKind::Direct => Cell { len: w[1] - w[0], q, tau },
                TrajectoryKind::Adjoint => Cell { len: w[1] - w[0], q: q.conj(), tau: tau.conj() },
            }
        })
        .collect();
    Ok((xs, cells))
}

fn run(rep: &Representation, lambda: C64, interval: (f64, f64), init: (C64, C64), kind: TrajectoryKind) -> Result<Trajectory> {
    let (xs, cells) = cells(rep, interval.0, interval.1, kind)?;
    let mut u1 = Vec::with_capacity(xs.len());
    let mut u2 = Vec::with_capacity(xs.len());
    let mut state = [init.0, init.1];
    u1.push(state[0]);
    u2.push(state[1]);
    for cell in &cells {
        state = apply(&cell_propagator(cell.q, cell.tau, lambda, cell.len), state);
        u1.push(state[0]);
        u2.push(state[1]);
    }
    Ok(Trajectory { xs, u1, u2, lambda, kind })
}

/// Solves `l[y] = λy` on `interval` from `(y, y^{[1]})(x_lo) = init`.
pub fn integrate(rep: &Representation, lambda: C64, interval: (f64, f64), init: (C64, C64)) -> Result<Trajectory> {
    run(rep, lambda, interval, init, TrajectoryKind::Direct)
}

/// Solves `l⁺[v] = λv` on `interval` from `(v, v^{1})(x_lo) = init`.
pub fn adjoint_integrate(rep: &Representation, lambda: C64, interval: (f64, f64), init: (C64, C64)) -> Result<Trajectory> {
    run(rep, lambda, interval, init, TrajectoryKind::Adjoint)
}

/// Lagrange bracket `[u, v](t) = u(t)·conj(v^{1}(t)) − u^{[1]}(t)·conj(v(t))`
/// at the cell boundary nearest to `t`.
pub fn bracket(u: &Trajectory, v: &Trajectory, t: f64) -> Result<C64> {
    if u.kind != TrajectoryKind::Direct || v.kind != TrajectoryKind::Adjoint {
        return Err(Error::MismatchedKinds);
    }
    let i = u.nearest(t);
    let j = v.nearest(t);
    Ok(u.u1[i] * v.u2[j].conj() - u.u2[i] * v.u1[j].conj())
}

/// Residual of the Green–Lagrange identity
/// `(λ_u − conj λ_v) ∫ u v̄ = [u, v]_a^b` for randomly initialized solutions of
/// `l[u] = λ_u u` and `l⁺[v] = λ_v v`, relative to the size of its terms
/// `|λ_u − conj λ_v| ∫|u v̄| + Σ_{x=a,b} |U(x)||V(x)|` with `U = (u, u^{[1]})`.
/// The identity is bilinear, so the relative residual does not depend on
/// the scale of the initial data.
pub fn lagrange_residual(
    rep: &Representation,
    lambda_u: C64,
    lambda_v: C64,
    interval: (f64, f64),
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let init_u = (draw(), draw());
    let init_v = (draw(), draw());
    lagrange_residual_with(rep, lambda_u, lambda_v, interval, init_u, init_v)
}

pub fn lagrange_residual_with(
    rep: &Representation,
    lambda_u: C64,
    lambda_v: C64,
    interval: (f64, f64),
    init_u: (C64, C64),
    init_v: (C64, C64),
) -> Result<f64> {
    let u = integrate(rep, lambda_u, interval, init_u)?;
    let v = adjoint_integrate(rep, lambda_v, interval, init_v)?;
    let mut overlap = C64::new(0.0, 0.0);
    let mut overlap_abs = 0.0;
    for k in 0..u.xs.len() - 1 {
        let h = u.xs[k + 1] - u.xs[k];
        overlap += (u.u1[k] * v.u1[k].conj() + u.u1[k + 1] * v.u1[k + 1].conj()) * (0.5 * h);
        overlap_abs += ((u.u1[k] * v.u1[k]).norm() + (u.u1[k + 1] * v.u1[k + 1]).norm()) * (0.5 * h);
    }
    let shift = lambda_u - lambda_v.conj();
    let lhs = shift * overlap;
    let rhs = bracket(&u, &v, interval.1)? - bracket(&u, &v, interval.0)?;
    let size = |t: &Trajectory, i: usize| t.u1[i].norm().hypot(t.u2[i].norm());
    let last = u.xs.len() - 1;
    let scale = shift.norm() * overlap_abs + size(&u, 0) * size(&v, 0) + size(&u, last) * size(&v, last);
    Ok(if scale > 0.0 { (lhs - rhs).norm() / scale } else { 0.0 })
}

/// How eigenvalues are searched for.
#[derive(Clone, Debug)]
pub enum SearchSpec {
    /// Real potentials: all Dirichlet eigenvalues in `[lo, hi]`, at most `count`.
    RealWindow { lo: f64, hi: f64, count: usize },
    /// Newton iteration from each seed.
    Seeds(Vec<C64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShootMethod {
    Bisection,
    Newton,
}

#[derive(Clone, Debug)]
pub struct ShootReport {
    pub eigenvalues: Vec<C64>,
    pub boundary_residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub method: ShootMethod,
    /// Seeds for which Newton did not converge.
    pub failed_seeds: Vec<C64>,
}

impl Serialize for ShootReport {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Eig {
            re: f64,
            im: f64,
        }
        let eigs: Vec<Eig> = self.eigenvalues.iter().map(|z| Eig { re: z.re, im: z.im }).collect();
        let failed: Vec<Eig> = self.failed_seeds.iter().map(|z| Eig { re: z.re, im: z.im }).collect();
        let mut st = ser.serialize_struct("ShootReport", 5)?;
        st.serialize_field("eigenvalues", &eigs)?;
        st.serialize_field("residuals", &self.boundary_residuals)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("failed_seeds", &failed)?;
        st.end()
    }
}

/// Boundary function `F(λ) = u₁(x_hi; λ)` from `(u₁, u₂)(x_lo) = (0, 1)` on fixed cells.
pub struct Shooter {
    cells: Vec<Cell>,
}

/// One shot: boundary value, its λ-derivative, the number of sign changes of
/// `Re u₁` at interior boundaries, and the running scale of the state.
#[derive(Clone, Copy, Debug)]
pub struct Shot {
    pub value: C64,
    pub derivative: C64,
    pub zeros: usize,
    pub scale: f64,
}

impl Shooter {
    pub fn new(rep: &Representation, interval: (f64, f64)) -> Result<Self> {
        let (_, cells) = cells(rep, interval.0, interval.1, TrajectoryKind::Direct)?;
        Ok(Self { cells })
    }

    pub fn shoot(&self, lambda: C64, with_derivative: bool) -> Shot {
        let mut y = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let mut dy = [C64::new(0.0, 0.0); 2];
        let mut zeros = 0;
        let mut last_sign = 0.0f64;
        let mut log_scale = 0.0f64;
        let last = self.cells.len() - 1;
        for (k, cell) in self.cells.iter().enumerate() {
            if with_derivative {
                let (p, dp) = cell_propagator_with_derivative(cell.q, cell.tau, lambda, cell.len);
                let a = apply(&p, dy);
                let b = apply(&dp, y);
                dy = [a[0] + b[0], a[1] + b[1]];
                y = apply(&p, y);
            } else {
                y = apply(&cell_propagator(cell.q, cell.tau, lambda, cell.len), y);
            }
            let m = y[0].norm().max(y[1].norm());
            if m > RESCALE_AT {
                let f = 1.0 / m;
                y = [y[0] * f, y[1] * f];
                dy = [dy[0] * f, dy[1] * f];
                log_scale += m.ln();
            }
            if k < last {
                let sg = y[0].re.signum();
                if y[0].re != 0.0 {
                    if last_sign != 0.0 && sg != last_sign {
                        zeros += 1;
                    }
                    last_sign = sg;
                }
            }
        }
        Shot { value: y[0], derivative: dy[0], zeros, scale: log_scale.exp() }
    }

    /// Number of Dirichlet eigenvalues below the real number `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        let shot = self.shoot(C64::new(lambda, 0.0), false);
        // a zero sitting in the last cell shows up as a sign flip of the boundary value
        let mut zeros = shot.zeros;
        let last = self.last_interior_sign(lambda);
        if last != 0.0 && shot.value.re != 0.0 && shot.value.re.signum() != last {
            zeros += 1;
        }
        zeros
    }

    fn last_interior_sign(&self, lambda: f64) -> f64 {
        // replay to get the sign just before the final cell
        let mut y = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let mut sign = 0.0;
        let lam = C64::new(lambda, 0.0);
        for cell in &self.cells[..self.cells.len() - 1] {
            y = apply(&cell_propagator(cell.q, cell.tau, lam, cell.len), y);
            let m = y[0].norm().max(y[1].norm());
            if m > RESCALE_AT {
                y = [y[0] / m, y[1] / m];
            }
            if y[0].re != 0.0 {
                sign = y[0].re.signum();
            }
        }
        sign
    }
}

/// Dirichlet eigenvalues of `l` on `interval` by shooting.
pub fn eigenvalues_shooting(rep: &Representation, interval: (f64, f64), search: &SearchSpec) -> Result<ShootReport> {
    let shooter = Shooter::new(rep, interval)?;
    match search {
        SearchSpec::RealWindow { lo, hi, count } => real_window(&shooter, *lo, *hi, *count),
        SearchSpec::Seeds(seeds) => Ok(newton_seeds(&shooter, seeds)),
    }
}

/// The `count` lowest Dirichlet eigenvalues above `lo` of a real
/// representation; the upper end of the window is found by doubling.
pub fn lowest_real_eigenvalues(rep: &Representation, interval: (f64, f64), count: usize, lo: f64) -> Result<ShootReport> {
    if !rep.is_real() {
        return Err(Error::InvalidArgument("window search needs a real representation".into()));
    }
    let shooter = Shooter::new(rep, interval)?;
    let base = shooter.count_below(lo);
    let mut hi = lo + lo.abs().max(1.0);
    for _ in 0..80 {
        if shooter.count_below(hi) >= base + count {
            return real_window(&shooter, lo, hi, count);
        }
        hi = lo + 2.0 * (hi - lo);
    }
    Err(Error::NoConvergence(format!("fewer than {count} eigenvalues above {lo}")))
}

/// Lowest eigenvalues of a real representation on `[centre − L/2, centre + L/2]`
/// for each half-length `L/2` in `halves`; rows follow `halves`.
pub fn truncation_sweep(rep: &Representation, centre: f64, halves: &[f64], count: usize, lo: f64) -> Result<Vec<(f64, Vec<f64>)>> {
    halves
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("half-length {r} must be positive")));
            }
            let report = lowest_real_eigenvalues(rep, (centre - r, centre + r), count, lo)?;
            Ok((2.0 * r, report.eigenvalues.iter().map(|z| z.re).collect()))
        })
        .collect()
}

fn real_window(shooter: &Shooter, lo: f64, hi: f64, count: usize) -> Result<ShootReport> {
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!("empty search window [{lo}, {hi}]")));
    }
    let n_lo = shooter.count_below(lo);
    let n_hi = shooter.count_below(hi);
    if n_hi <= n_lo {
        return Err(Error::NoSignChange { lo, hi });
    }
    let mut report = ShootReport {
        eigenvalues: Vec::new(),
        boundary_residuals: Vec::new(),
        iterations: Vec::new(),
        method: ShootMethod::Bisection,
        failed_seeds: Vec::new(),
    };
    let f = |x: f64| shooter.shoot(C64::new(x, 0.0), false);
    for k in n_lo..n_hi.min(n_lo + count) {
        // isolate the k-th eigenvalue: count(a) <= k < count(b)
        let (mut a, mut b) = (lo, hi);
        let mut iters = 0;
        loop {
            let ca = shooter.count_below(a);
            let cb = shooter.count_below(b);
            if ca == k && cb == k + 1 {
                break;
            }
            let mid = 0.5 * (a + b);
            if shooter.count_below(mid) > k {
                b = mid;
            } else {
                a = mid;
            }
            iters += 1;
            if iters > 200 || b - a <= 1e-14 * (1.0 + a.abs()) {
                break;
            }
        }
        let (mut fa, fb) = (f(a).value.re, f(b).value.re);
        if fa == 0.0 {
            b = a;
        } else if fb == 0.0 {
            a = b;
        } else if fa.signum() == fb.signum() {
            return Err(Error::NoSignChange { lo: a, hi: b });
        }
        while b - a > 1e-12 * (1.0 + a.abs().max(b.abs())) {
            let mid = 0.5 * (a + b);
            let fm = f(mid).value.re;
            iters += 1;
            if fm == 0.0 {
                a = mid;
                b = mid;
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
            if iters > 400 {
                break;
            }
        }
        let root = 0.5 * (a + b);
        let shot = shooter.shoot(C64::new(root, 0.0), true);
        report.eigenvalues.push(C64::new(root, 0.0));
        report.boundary_residuals.push(shot.value.norm() / shot.derivative.norm().max(1.0));
        report.iterations.push(iters);
    }
    Ok(report)
}

fn newton_seeds(shooter: &Shooter, seeds: &[C64]) -> ShootReport {
    let mut report = ShootReport {
        eigenvalues: Vec::new(),
        boundary_residuals: Vec::new(),
        iterations: Vec::new(),
        method: ShootMethod::Newton,
        failed_seeds: Vec::new(),
    };
    for &seed in seeds {
        match newton(shooter, seed) {
            Some((root, residual, iters)) => {
                if report.eigenvalues.iter().any(|z| (z - root).norm() <= 1e-8 * (1.0 + root.norm())) {
                    continue;
                }
                report.eigenvalues.push(root);
                report.boundary_residuals.push(residual);
                report.iterations.push(iters);
            }
            None => report.failed_seeds.push(seed),
        }
    }
    report
}

fn newton(shooter: &Shooter, seed: C64) -> Option<(C64, f64, usize)> {
    let mut lambda = seed;
    for it in 1..=60 {
        let shot = shooter.shoot(lambda, true);
        let (f, df) = (shot.value, shot.derivative);
        if !(f.re.is_finite() && f.im.is_finite() && df.re.is_finite() && df.im.is_finite()) || df.norm() == 0.0 {
            return None;
        }
        let residual = f.norm() / df.norm().max(1.0);
        if f.norm() < 1e-10 * df.norm().max(1.0) {
            // one more step polishes the root at no risk
            let polished = lambda - f / df;
            let again = shooter.shoot(polished, true);
            if again.value.norm() <= f.norm() {
                return Some((polished, again.value.norm() / again.derivative.norm().max(1.0), it + 1));
            }
            return Some((lambda, residual, it));
        }
        let step = f / df;
        lambda -= step;
        if step.norm() > 1e6 * (1.0 + seed.norm()) {
            return None;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_fn::{Extension, Grid, GridFn};
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn rep_from(q: impl Fn(f64) -> C64, tau: impl Fn(f64) -> C64, lo: f64, hi: f64, cells: usize) -> Representation {
        let g = Grid::over(lo, hi, cells).unwrap();
        Representation::new(
            GridFn::from_fn(g, Extension::Clamp, q).unwrap(),
            GridFn::from_fn(g, Extension::Clamp, tau).unwrap(),
            "test",
        )
        .unwrap()
    }

    fn free(lo: f64, hi: f64, cells: usize) -> Representation {
        rep_from(|_| c(0.0), |_| c(0.0), lo, hi, cells)
    }

    #[test]
    fn first_order_reduction_matches_second_order_equation() {
        // smooth Q, τ: y = u1 must satisfy −y″ + (Q′ + τ) y = λ y
        let qf = |x: f64| (2.0 * x).sin() * 0.7;
        let dq = |x: f64| 1.4 * (2.0 * x).cos();
        let tf = |x: f64| 0.3 * x;
        let lambda = 2.5;
        let rep = rep_from(|x| c(qf(x)), |x| c(tf(x)), 0.0, 2.0, 20_000);
        let tr = integrate(&rep, c(lambda), (0.0, 2.0), (c(0.3), c(1.0))).unwrap();
        let h = tr.xs[1] - tr.xs[0];
        for i in (100..tr.xs.len() - 100).step_by(997) {
            let x = tr.xs[i];
            let ypp = (tr.u1[i + 1] - 2.0 * tr.u1[i] + tr.u1[i - 1]) / (h * h);
            let res = -ypp + (dq(x) + tf(x) - lambda) * tr.u1[i];
            assert!(res.norm() < 1e-3, "x = {x}: {res}");
            // u2 = y′ − Q y
            let yp = (tr.u1[i + 1] - tr.u1[i - 1]) / (2.0 * h);
            assert!((tr.u2[i] - (yp - qf(x) * tr.u1[i])).norm() < 1e-4);
        }
    }

    #[test]
    fn free_sine() {
        let rep = free(0.0, PI, 1000);
        let tr = integrate(&rep, c(1.0), (0.0, PI), (c(0.0), c(1.0))).unwrap();
        assert!(tr.u1.last().unwrap().norm() < 1e-10);
        let mid = tr.xs.len() / 2;
        assert!((tr.u1[mid] - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn free_zero_energy_is_linear() {
        let rep = free(0.0, 1.0, 64);
        let tr = integrate(&rep, c(0.0), (0.0, 1.0), (c(0.0), c(1.0))).unwrap();
        for (x, u) in tr.xs.iter().zip(&tr.u1) {
            assert!((u - c(*x)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_tau_closed_form() {
        let cst = 3.7;
        let rep = rep_from(|_| c(0.0), |_| c(cst), 0.0, PI / 2.0, 500);
        let tr = integrate(&rep, c(cst + 4.0), (0.0, PI / 2.0), (c(0.0), c(1.0))).unwrap();
        for (x, u) in tr.xs.iter().zip(&tr.u1) {
            assert!((u - c((2.0 * x).sin() / 2.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn unit_determinant_over_many_cells() {
        let rep = rep_from(|x| C64::new(x.sin(), 0.3 * x.cos()), |x| C64::new(x, -0.5), 0.0, 5.0, 10_000);
        let (_, cells) = cells(&rep, 0.0, 5.0, TrajectoryKind::Direct).unwrap();
        let lambda = C64::new(3.0, 1.0);
        let mut prod = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        for cell in &cells {
            let p = cell_propagator(cell.q, cell.tau, lambda, cell.len);
            assert!((det(&p) - c(1.0)).norm() < 1e-12);
            prod = mat_mul(&p, &prod);
        }
        assert!((det(&prod) - c(1.0)).norm() <= 1e-10);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let q = C64::new(0.4, 0.1);
        let h = 1e-3;
        for mu2 in [C64::new(0.99e-2, 0.0), C64::new(1.01e-2, 0.0), C64::new(0.0, 1.0e-2)] {
            let lam = C64::new(0.2, 0.0) - mu2;
            let p = cell_propagator(q, c(0.2), lam, h);
            let mu = mu2.sqrt();
            let (cc, ss) = ((mu * h).cosh(), (mu * h).sinh() / mu);
            assert!((p[0][1] - ss).norm() < 1e-17);
            assert!((p[1][1] - (cc - ss * q)).norm() < 1e-15);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (q, tau, h) = (C64::new(0.3, 0.2), C64::new(1.0, -0.4), 0.05);
        for lambda in [C64::new(2.0, 0.5), C64::new(1.0, -0.4), C64::new(-30.0, 3.0)] {
            let (_, dp) = cell_propagator_with_derivative(q, tau, lambda, h);
            let d = 1e-6;
            let p1 = cell_propagator(q, tau, lambda + d, h);
            let p0 = cell_propagator(q, tau, lambda - d, h);
            for i in 0..2 {
                for j in 0..2 {
                    let fd = (p1[i][j] - p0[i][j]) / (2.0 * d);
                    assert!((fd - dp[i][j]).norm() < 1e-7 * (1.0 + dp[i][j].norm()), "{lambda} {i}{j}");
                }
            }
        }
    }

    #[test]
    fn adjoint_of_real_problem_is_conjugate() {
        let rep = rep_from(|x| c(x.cos()), |x| c(x * x), 0.0, 2.0, 400);
        let init = (C64::new(0.2, 0.5), C64::new(-1.0, 0.3));
        let d = integrate(&rep, c(3.0), (0.0, 2.0), init).unwrap();
        let a = adjoint_integrate(&rep, c(3.0), (0.0, 2.0), (init.0.conj(), init.1.conj())).unwrap();
        for k in 0..d.xs.len() {
            assert!((d.u1[k].conj() - a.u1[k]).norm() < 1e-12);
            assert!((d.u2[k].conj() - a.u2[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_of_complex_tau_with_conjugate_lambda() {
        let rep = rep_from(|_| c(0.0), |_| C64::new(0.0, 1.0), 0.0, 2.0, 400);
        let lam = C64::new(2.0, 0.7);
        let init = (c(0.0), c(1.0));
        let d = integrate(&rep, lam, (0.0, 2.0), init).unwrap();
        let a = adjoint_integrate(&rep, lam.conj(), (0.0, 2.0), init).unwrap();
        for k in 0..d.xs.len() {
            assert!((d.u1[k].conj() - a.u1[k]).norm() < 1e-12);
        }
        let free = free(0.0, PI, 100);
        let s = adjoint_integrate(&free, c(1.0), (0.0, PI), init).unwrap();
        assert!((s.u1[50] - c(1.0)).norm() < 1e-10);
    }

    #[test]
    fn bracket_cases() {
        let rep = free(0.0, PI, 1000);
        let lam = C64::new(1.3, 0.4);
        let u = integrate(&rep, lam, (0.0, PI), (c(0.0), c(1.0))).unwrap();
        let v = adjoint_integrate(&rep, lam.conj(), (0.0, PI), (c(1.0), c(0.0))).unwrap();
        let b0 = bracket(&u, &v, 0.0).unwrap();
        for t in [0.5, 1.0, 2.0, PI] {
            assert!((bracket(&u, &v, t).unwrap() - b0).norm() < 1e-10);
        }
        // Wronskian of sin and cos
        let s = integrate(&rep, c(1.0), (0.0, PI), (c(0.0), c(1.0))).unwrap();
        let co = adjoint_integrate(&rep, c(1.0), (0.0, PI), (c(1.0), c(0.0))).unwrap();
        assert!((bracket(&s, &co, 0.0).unwrap() - c(-1.0)).norm() < 1e-10);
        assert!((bracket(&s, &co, PI / 2.0).unwrap() - c(-1.0)).norm() < 1e-10);
        // a real solution against its own conjugate copy
        let real = rep_from(|x| c(x.sin()), |_| c(0.5), 0.0, 2.0, 300);
        let init = (c(0.4), c(-0.2));
        let u = integrate(&real, c(2.0), (0.0, 2.0), init).unwrap();
        let v = adjoint_integrate(&real, c(2.0), (0.0, 2.0), init).unwrap();
        for t in [0.0, 0.7, 2.0] {
            assert!(bracket(&u, &v, t).unwrap().norm() < 1e-12);
        }
        assert!(matches!(bracket(&v, &u, 0.0), Err(Error::MismatchedKinds)));
    }

    #[test]
    fn lagrange_residual_cases() {
        let rep = rep_from(|x| C64::new(x.sin(), 0.2), |x| C64::new(0.0, x), 0.0, 1.0, 1000);
        let lam = C64::new(2.0, -1.0);
        assert!(lagrange_residual(&rep, lam, lam.conj(), (0.0, 1.0), 7).unwrap() <= 1e-8);
        let free = free(0.0, 1.0, 10_000);
        let r = lagrange_residual(&free, c(1.0), c(4.0), (0.0, 1.0), 3).unwrap();
        assert!(r <= 1e-6, "{r}");
        let zero = lagrange_residual_with(&free, c(1.0), c(4.0), (0.0, 1.0), (c(0.0), c(0.0)), (c(1.0), c(0.5))).unwrap();
        assert_eq!(zero, 0.0);
        let big = C64::new(1e8, -3e7);
        let a = lagrange_residual_with(&rep, lam, c(4.0), (0.0, 1.0), (c(0.3), c(1.0)), (c(1.0), c(0.5))).unwrap();
        let b = lagrange_residual_with(&rep, lam, c(4.0), (0.0, 1.0), (big * 0.3, big), (c(1.0), c(0.5))).unwrap();
        assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
    }

    #[test]
    fn outside_span_is_rejected() {
        let rep = free(0.0, 1.0, 10);
        assert!(matches!(
            integrate(&rep, c(1.0), (0.0, 2.0), (c(0.0), c(1.0))),
            Err(Error::IntervalOutsideSpan { .. })
        ));
    }

    #[test]
    fn shooting_free_and_shifted() {
        let rep = free(0.0, PI, 100);
        let r = eigenvalues_shooting(&rep, (0.0, PI), &SearchSpec::RealWindow { lo: 0.5, hi: 30.0, count: 10 }).unwrap();
        let want = [1.0, 4.0, 9.0, 16.0, 25.0];
        assert_eq!(r.eigenvalues.len(), 5);
        for (z, w) in r.eigenvalues.iter().zip(want) {
            assert!((z.re - w).abs() < 1e-8 && z.im == 0.0, "{z}");
        }
        let shifted = rep_from(|_| c(0.0), |_| c(5.0), 0.0, PI, 100);
        let r = eigenvalues_shooting(&shifted, (0.0, PI), &SearchSpec::RealWindow { lo: 0.5, hi: 31.0, count: 5 }).unwrap();
        for (z, w) in r.eigenvalues.iter().zip([6.0, 9.0, 14.0, 21.0, 30.0]) {
            assert!((z.re - w).abs() < 1e-8, "{z}");
        }
        assert!(matches!(
            eigenvalues_shooting(&rep, (0.0, PI), &SearchSpec::RealWindow { lo: 1.5, hi: 3.5, count: 3 }),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn truncation_sweep_on_free_line() {
        let rep = free(-8.0, 8.0, 160);
        let rows = truncation_sweep(&rep, 0.0, &[1.0, 2.0, 4.0], 3, -1.0).unwrap();
        for (len, vals) in rows {
            for (n, v) in vals.iter().enumerate() {
                let want = ((n + 1) as f64 * PI / len).powi(2);
                assert!((v - want).abs() < 1e-8 * want.max(1.0), "L = {len}: {v} vs {want}");
            }
        }
        assert!(truncation_sweep(&rep, 0.0, &[0.0], 1, -1.0).is_err());
    }

    #[test]
    fn shooting_newton_on_complex_shift() {
        let rep = rep_from(|_| c(0.0), |_| C64::new(0.0, 0.5), 0.0, PI, 200);
        let seeds = vec![C64::new(1.2, 0.3), C64::new(3.7, 0.6), C64::new(9.5, 0.0)];
        let r = eigenvalues_shooting(&rep, (0.0, PI), &SearchSpec::Seeds(seeds)).unwrap();
        let want = [C64::new(1.0, 0.5), C64::new(4.0, 0.5), C64::new(9.0, 0.5)];
        assert_eq!(r.eigenvalues.len(), 3);
        for (z, w) in r.eigenvalues.iter().zip(want) {
            assert!((z - w).norm() < 1e-9, "{z}");
        }
        assert!(r.boundary_residuals.iter().all(|&x| x < 1e-10));
    }
}
