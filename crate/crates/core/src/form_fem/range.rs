//! Numerical range of a pencil and resolvent differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::linalg::{HermitianPencil, TriLu};
use super::{region_slack, Pencil};
use crate::enclosure;
use crate::error::{Error, Result};
use crate::grid_fn::C64;

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 500;

#[derive(Clone, Debug, Serialize)]
pub struct RangeReport {
    /// Support points, counterclockwise in the support angle.
    pub boundary: Vec<C64>,
    /// Largest eigenvalue of the Hermitian part at each angle.
    pub support: Vec<f64>,
    pub angles: Vec<f64>,
    /// Every support point lies in `region_from_k(K)`; false when the pencil has no `K`.
    #[serde(rename = "contained_in_MK")]
    pub contained_in_mk: bool,
    /// Consecutive edge cross products never turn clockwise.
    pub convex: bool,
}

/// Support points of the numerical range on `angles` uniform directions.
pub fn numerical_range(p: &Pencil, angles: usize) -> Result<RangeReport> {
    if angles < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 angles, got {angles}")));
    }
    let n = p.dim();
    let adj = p.a.conj_transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let start: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5))).collect();
    let mut boundary = Vec::with_capacity(angles);
    let mut support = Vec::with_capacity(angles);
    let mut thetas = Vec::with_capacity(angles);
    for k in 0..angles {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
        let rot = C64::from_polar(1.0, -theta);
        let h = p.a.combine(rot * 0.5, &adj, rot.conj() * 0.5);
        let herm = HermitianPencil::new(&h, &p.m);
        let top = herm.largest()?;
        let x = herm.eigenvector(top, &start)?;
        boundary.push(p.a.quad(&x) / p.m.quad(&x).re);
        support.push(top);
        thetas.push(theta);
    }
    let region = p.k.map(enclosure::region_from_k).transpose()?;
    let contained_in_mk =
        region.is_some_and(|r| boundary.iter().all(|&z| enclosure::contains(&r, z, region_slack(z))));
    let convex = is_convex(&boundary);
    Ok(RangeReport { boundary, support, angles: thetas, contained_in_mk, convex })
}

fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

/// No clockwise turn beyond `1e−10` relative to the squared curve size.
pub fn is_convex(points: &[C64]) -> bool {
    let n = points.len();
    let scale = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-10 * (1.0 + scale * scale);
    (0..n).all(|k| {
        let e1 = points[(k + 1) % n] - points[k];
        let e2 = points[(k + 2) % n] - points[(k + 1) % n];
        cross(e1, e2) >= -tol
    })
}

/// Point-in-convex-polygon for a counterclockwise boundary; degenerate
/// (collinear) polygons reduce to a segment test.
pub fn hull_contains(boundary: &[C64], z: C64, slack: f64) -> bool {
    let n = boundary.len();
    let scale = boundary.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let area: f64 = (0..n).map(|k| cross(boundary[k], boundary[(k + 1) % n])).sum::<f64>() * 0.5;
    if area.abs() <= 1e-12 * (1.0 + scale * scale) {
        // segment between the two extreme points along its direction
        let (mut lo, mut hi) = (boundary[0], boundary[0]);
        for &w in boundary {
            if (w.re, w.im) < (lo.re, lo.im) {
                lo = w;
            }
            if (w.re, w.im) > (hi.re, hi.im) {
                hi = w;
            }
        }
        let d = hi - lo;
        let len = d.norm();
        if len == 0.0 {
            return (z - lo).norm() <= slack;
        }
        let t = ((z - lo) * d.conj()).re / len;
        let off = cross(d, z - lo).abs() / len;
        return off <= slack && t >= -slack && t <= len + slack;
    }
    (0..n).all(|k| {
        let e = boundary[(k + 1) % n] - boundary[k];
        let len = e.norm();
        len == 0.0 || cross(e, z - boundary[k]) >= -slack * len
    })
}

/// `−4(2K̂+1)⁴ − 1` with `K̂` the larger `K` of the two pencils.
pub fn default_probe(p1: &Pencil, p2: &Pencil) -> Result<C64> {
    match (p1.k, p2.k) {
        (Some(a), Some(b)) => Ok(C64::new(-4.0 * (2.0 * a.max(b) + 1.0).powi(4) - 1.0, 0.0)),
        _ => Err(Error::InvalidArgument("default probe needs pencils that carry K".into())),
    }
}

/// One unit left of the leftmost numerical-range point of either pencil: real,
/// outside both spectra, and on the length scale of the low spectrum.
pub fn near_probe(p1: &Pencil, p2: &Pencil) -> Result<C64> {
    let left = |p: &Pencil| {
        let herm = p.a.combine(C64::new(0.5, 0.0), &p.a.conj_transpose(), C64::new(0.5, 0.0));
        HermitianPencil::new(&herm, &p.m).smallest()
    };
    Ok(C64::new(left(p1)?.min(left(p2)?) - 1.0, 0.0))
}

/// `M`-operator norm of `(A₁−λM)⁻¹M − (A₂−λM)⁻¹M` by power iteration on
/// `D†MD x = μ M x`.
pub fn resolvent_diff_norm(p1: &Pencil, p2: &Pencil, lambda: C64) -> Result<f64> {
    let n = p1.dim();
    if p2.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p2.dim() });
    }
    if let (Some(m1), Some(m2)) = (&p1.mesh, &p2.mesh) {
        if m1 != m2 {
            return Err(Error::MeshMismatch("resolvent difference needs a common mesh".into()));
        }
    }
    let shifted = |p: &Pencil| p.a.combine(C64::new(1.0, 0.0), &p.m, -lambda);
    let (s1, s2) = (shifted(p1), shifted(p2));
    let r1 = TriLu::factor(&s1)?;
    let r2 = TriLu::factor(&s2)?;
    let r1h = TriLu::factor(&s1.conj_transpose())?;
    let r2h = TriLu::factor(&s2.conj_transpose())?;
    let m = &p1.m;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut x: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let nx = m.quad(&x).re.sqrt();
    x.iter_mut().for_each(|z| *z /= nx);
    let mut mu_prev = f64::NAN;
    let mut mu = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let mx = m.matvec(&x);
        let y: Vec<C64> = r1.solve(&mx).iter().zip(r2.solve(&mx)).map(|(a, b)| a - b).collect();
        let w = m.matvec(&y);
        let z: Vec<C64> = r1h.solve(&w).iter().zip(r2h.solve(&w)).map(|(a, b)| a - b).collect();
        // ‖Dx‖²_M with ‖x‖_M = 1
        mu = m.bilinear(&y, &y).re.max(0.0);
        let nz = m.quad(&z).re.sqrt();
        if nz == 0.0 || !nz.is_finite() {
            return if nz == 0.0 { Ok(0.0) } else { Err(Error::NonFinite(f64::NAN)) };
        }
        if (mu - mu_prev).abs() <= POWER_TOL * mu {
            break;
        }
        mu_prev = mu;
        x = z.into_iter().map(|v| v / nz).collect();
    }
    Ok(mu.sqrt())
}
