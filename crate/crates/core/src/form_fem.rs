//! P1 finite elements for the form
//! `t[u, v] = (u′, v′) − (Q, ū′v + ūv′) + (τ, ūv)` with Dirichlet ends.
//!
//! With `(f, g) = ∫ f ḡ` the pencil entries are `A_ij = t[φ_j, φ_i]`, so that
//! `t[u] = x†Ax` and `‖u‖² = x†Mx` for `u = Σ x_j φ_j`. The `Q` term is
//! integrated exactly with `Q` replaced by its element average, which makes it
//! diagonal: `A_ii += Q_right − Q_left`. The `τ` term uses two-point Gauss
//! quadrature per element. All matrices are tridiagonal.

mod eigs;
pub mod linalg;
mod range;
mod suite;

use serde::Serialize;

pub use eigs::{dense_standard_form, eigs, lowest_eigenvalues, DENSE_LIMIT};
pub use linalg::{HermitianPencil, TriLu, Tridiag};
pub use range::{default_probe, hull_contains, is_convex, near_probe, numerical_range, resolvent_diff_norm, RangeReport};
pub use suite::{inequality_suite, inequality_suite_with, CheckTally, InequalityReport, SuiteOptions, COMPARISON_WIDTH};

use crate::enclosure::{self, RegionMeta};
use crate::error::{Error, Result};
use crate::grid_fn::{GridFn, C64};
use crate::stepanov::{k_constant, Representation};

const GAUSS2: f64 = 0.288_675_134_594_812_9; // 1 / (2√3)

/// Strictly increasing nodes; the first and last are the Dirichlet ends.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Mesh {
    interval: (f64, f64),
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidGrid(format!("a mesh needs at least 3 nodes, got {}", nodes.len())));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("mesh nodes must be finite and strictly increasing".into()));
        }
        Ok(Self { interval: (nodes[0], nodes[nodes.len() - 1]), nodes })
    }

    pub fn uniform(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) || cells < 2 {
            return Err(Error::InvalidGrid(format!("uniform mesh needs hi > lo and >= 2 cells, got [{lo}, {hi}] / {cells}")));
        }
        let h = (hi - lo) / cells as f64;
        let mut nodes: Vec<f64> = (0..cells).map(|k| lo + k as f64 * h).collect();
        nodes.push(hi);
        Self::new(nodes)
    }

    /// The nodes of `rep`'s grids inside `interval`, plus the endpoints.
    pub fn for_rep(rep: &Representation, interval: (f64, f64)) -> Result<Self> {
        let (lo, hi) = interval;
        let (x0, x1) = rep.span();
        let tol = 1e-12 * (1.0 + x0.abs().max(x1.abs()));
        if !(hi > lo) || lo < x0 - tol || hi > x1 + tol {
            return Err(Error::IntervalOutsideSpan { lo, hi, span_lo: x0, span_hi: x1 });
        }
        let gap = 1e-9 * rep.q.grid().h.min(rep.tau.grid().h);
        let mut inner: Vec<f64> =
            rep.q.grid().nodes().chain(rep.tau.grid().nodes()).filter(|&x| x > lo + gap && x < hi - gap).collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut nodes = vec![lo];
        for x in inner {
            if x - nodes[nodes.len() - 1] > gap {
                nodes.push(x);
            }
        }
        nodes.push(hi);
        Self::new(nodes)
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn max_h(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Number of interior nodes, the pencil dimension.
    pub fn dim(&self) -> usize {
        self.nodes.len() - 2
    }

    fn contains_node(&self, x: f64) -> bool {
        let i = self.nodes.partition_point(|&y| y < x);
        let tol = 1e-9 * self.max_h();
        (i < self.nodes.len() && (self.nodes[i] - x).abs() <= tol) || (i > 0 && (self.nodes[i - 1] - x).abs() <= tol)
    }
}

/// The discretized form: `a = a0 + aq + atau`, mass `m`.
#[derive(Clone, Debug)]
pub struct Pencil {
    pub a: Tridiag,
    pub m: Tridiag,
    /// Free stiffness, `x†A₀x = ‖u′‖²`.
    pub a0: Tridiag,
    /// The `−(Q, ū′v + ūv′)` part.
    pub aq: Tridiag,
    /// The `(τ, ūv)` part.
    pub atau: Tridiag,
    /// Element averages of `Q`.
    pub q_elem: Vec<C64>,
    pub mesh: Option<Mesh>,
    pub rep_label: String,
    /// `K` of the assembled representation.
    pub k: Option<f64>,
}

impl Pencil {
    /// A bare pencil without a representation, e.g. for matrix-level tests.
    pub fn from_matrices(a: Tridiag, m: Tridiag, label: impl Into<String>) -> Result<Self> {
        if a.dim() != m.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), got: m.dim() });
        }
        linalg::BidiagCholesky::factor(&m)?;
        let n = a.dim();
        Ok(Self {
            a0: Tridiag::zeros(n),
            aq: Tridiag::zeros(n),
            atau: a.clone(),
            a,
            m,
            q_elem: Vec::new(),
            mesh: None,
            rep_label: label.into(),
            k: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// Exact mean of the piecewise-linear `f` over `[a, b]`.
fn element_average(f: &GridFn, a: f64, b: f64) -> C64 {
    let g = f.grid();
    let first = (((a - g.x0) / g.h).floor() as i64 + 1).max(0);
    let last = (((b - g.x0) / g.h).ceil() as i64 - 1).min(g.n as i64 - 1);
    let tol = 1e-9 * g.h;
    let mut pts = vec![a];
    for i in first..=last {
        let x = g.node(i as usize);
        if x > a + tol && x < b - tol {
            pts.push(x);
        }
    }
    pts.push(b);
    let mut sum = C64::new(0.0, 0.0);
    for w in pts.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), w[1] - w[0]);
        sum += (f.eval(mid - half * GAUSS2) + f.eval(mid + half * GAUSS2)) * (0.5 * half);
    }
    sum / (b - a)
}

pub fn assemble(rep: &Representation, mesh: &Mesh) -> Result<Pencil> {
    let (lo, hi) = mesh.interval();
    let (x0, x1) = rep.span();
    let tol = 1e-12 * (1.0 + x0.abs().max(x1.abs()));
    if lo < x0 - tol || hi > x1 + tol {
        return Err(Error::MeshMismatch(format!("mesh [{lo}, {hi}] leaves the representation span [{x0}, {x1}]")));
    }
    if let Some(x) = rep.jump_points().into_iter().find(|&x| x > lo && x < hi && !mesh.contains_node(x)) {
        return Err(Error::MeshMismatch(format!("jump at x = {x} is not a mesh node")));
    }
    if !rep.q.is_finite() || !rep.tau.is_finite() {
        return Err(Error::NonFinite(f64::NAN));
    }
    let nodes = mesh.nodes();
    let n = mesh.dim();
    let (mut a0, mut aq, mut atau, mut m) = (Tridiag::zeros(n), Tridiag::zeros(n), Tridiag::zeros(n), Tridiag::zeros(n));
    let mut q_elem = Vec::with_capacity(nodes.len() - 1);
    // add a local 2×2 block for element e (nodes e, e+1 → interior e−1, e)
    let add = |t: &mut Tridiag, e: usize, local: [[C64; 2]; 2]| {
        let (i, j) = (e as i64 - 1, e as i64);
        if i >= 0 {
            t.diag[i as usize] += local[0][0];
        }
        if (j as usize) < n {
            t.diag[j as usize] += local[1][1];
        }
        if i >= 0 && (j as usize) < n {
            t.upper[i as usize] += local[0][1];
            t.lower[i as usize] += local[1][0];
        }
    };
    for e in 0..nodes.len() - 1 {
        let (a, b) = (nodes[e], nodes[e + 1]);
        let h = b - a;
        let r = |x: f64| C64::new(x, 0.0);
        add(&mut a0, e, [[r(1.0 / h), r(-1.0 / h)], [r(-1.0 / h), r(1.0 / h)]]);
        add(&mut m, e, [[r(h / 3.0), r(h / 6.0)], [r(h / 6.0), r(h / 3.0)]]);
        let qe = element_average(&rep.q, a, b);
        q_elem.push(qe);
        add(&mut aq, e, [[qe, r(0.0)], [r(0.0), -qe]]);
        let mid = 0.5 * (a + b);
        let mut local = [[C64::new(0.0, 0.0); 2]; 2];
        for x in [mid - h * GAUSS2, mid + h * GAUSS2] {
            let t = rep.tau.eval(x) * (0.5 * h);
            let phi = [(b - x) / h, (x - a) / h];
            for i in 0..2 {
                for j in 0..2 {
                    local[i][j] += t * (phi[i] * phi[j]);
                }
            }
        }
        add(&mut atau, e, local);
    }
    let a = a0.add(&aq).add(&atau);
    Ok(Pencil {
        a,
        m,
        a0,
        aq,
        atau,
        q_elem,
        mesh: Some(mesh.clone()),
        rep_label: rep.label.clone(),
        k: Some(k_constant(rep).k),
    })
}

/// `t[u] = u†Au` with its companions `‖u‖² = u†Mu` and `‖u′‖² = u†A₀u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FormValue {
    pub value: C64,
    pub norm2: f64,
    pub grad2: f64,
}

pub fn form_value(p: &Pencil, u: &[C64]) -> Result<FormValue> {
    if u.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: u.len() });
    }
    Ok(FormValue { value: p.a.quad(u), norm2: p.m.quad(u).re, grad2: p.a0.quad(u).re })
}

/// `(Q, ū′u) = ∫ Q u′ ū` with the element-averaged `Q` used in assembly.
pub fn q_pairing(p: &Pencil, u: &[C64]) -> Result<C64> {
    let mesh = p.mesh.as_ref().ok_or_else(|| Error::MeshMismatch("pencil has no mesh".into()))?;
    if u.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: u.len() });
    }
    let nodes = mesh.nodes();
    let n = u.len();
    let at = |k: usize| if k == 0 || k == n + 1 { C64::new(0.0, 0.0) } else { u[k - 1] };
    let mut sum = C64::new(0.0, 0.0);
    for e in 0..nodes.len() - 1 {
        let (ua, ub) = (at(e), at(e + 1));
        let slope = ub - ua;
        sum += p.q_elem[e] * slope * (ua + ub).conj() * 0.5;
    }
    Ok(sum)
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshMeta {
    pub h: f64,
    pub interval: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenEntry {
    pub re: f64,
    pub im: f64,
    pub in_region: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub rep: String,
    #[serde(rename = "K")]
    pub k: f64,
    pub mesh: MeshMeta,
    pub eigenvalues: Vec<EigenEntry>,
    pub region: RegionMeta,
}

/// Containment slack used throughout: `1e−6·(1 + |λ|)`.
pub fn region_slack(lambda: C64) -> f64 {
    1e-6 * (1.0 + lambda.norm())
}

pub fn spectrum_report(p: &Pencil, eigenvalues: &[C64]) -> Result<SpectrumReport> {
    let k = p.k.ok_or_else(|| Error::InvalidArgument("pencil carries no K".into()))?;
    let mesh = p.mesh.as_ref().ok_or_else(|| Error::MeshMismatch("pencil has no mesh".into()))?;
    let region = enclosure::region_from_k(k)?;
    let (lo, hi) = mesh.interval();
    Ok(SpectrumReport {
        rep: p.rep_label.clone(),
        k,
        mesh: MeshMeta { h: mesh.max_h(), interval: [lo, hi] },
        eigenvalues: eigenvalues
            .iter()
            .map(|&z| EigenEntry { re: z.re, im: z.im, in_region: enclosure::contains(&region, z, region_slack(z)) })
            .collect(),
        region: region.meta(),
    })
}
