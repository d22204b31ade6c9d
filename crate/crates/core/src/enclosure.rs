//! Numerical-range enclosures for perturbed positive forms.
//!
//! If a perturbation satisfies `|β[u]| ≤ aε α₀[u] + bε^{-s}‖u‖²` for all `ε > 0`,
//! the numerical range of `α₀ + β` lies in
//! `M_{a,b,s} = ⋂_{0<ε≤(2a+1)^{-1}} {|Im λ| ≤ 2aε Re λ + 2bε^{-s}}`.
//! That set is bounded by a sector line on `[λ₀, λ₁]` and by the power-law
//! envelope `c·(Re λ)^{s/(s+1)}` beyond the knee `λ₁`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_fn::C64;

/// Default membership slack relative to `1 + |λ|`.
pub const DEFAULT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormBounds {
    pub a: f64,
    pub b: f64,
    pub s: f64,
}

impl FormBounds {
    pub fn new(a: f64, b: f64, s: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && s > 0.0) || !(a.is_finite() && b.is_finite() && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "form bounds must be positive and finite, got a = {a}, b = {b}, s = {s}"
            )));
        }
        Ok(Self { a, b, s })
    }

    /// Largest admissible sector parameter `(2a+1)^{-1}`.
    pub fn eps_max(&self) -> f64 {
        1.0 / (2.0 * self.a + 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Region {
    pub lambda0: f64,
    pub lambda1: f64,
    pub coeff: f64,
    /// `None` for the degenerate half-line `[0, ∞)` (no perturbation).
    pub bounds: Option<FormBounds>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMeta {
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    pub coeff: f64,
}

impl Region {
    pub fn half_line() -> Self {
        Self { lambda0: 0.0, lambda1: 0.0, coeff: 0.0, bounds: None }
    }

    pub fn meta(&self) -> RegionMeta {
        let (a, b, s) = self.bounds.map(|f| (f.a, f.b, f.s)).unwrap_or((0.0, 0.0, 0.0));
        RegionMeta { a, b, s, lambda0: self.lambda0, lambda1: self.lambda1, coeff: self.coeff }
    }

    /// Upper boundary `|Im λ| ≤ bound(Re λ)`; negative left of the vertex.
    pub fn bound(&self, re: f64) -> f64 {
        let Some(FormBounds { a, b, s }) = self.bounds else {
            return if re >= 0.0 { 0.0 } else { f64::NEG_INFINITY };
        };
        if re <= self.lambda1 {
            2.0 * a / (2.0 * a + 1.0) * re + 2.0 * b * (2.0 * a + 1.0).powf(s)
        } else {
            self.coeff * re.powf(s / (s + 1.0))
        }
    }

    /// Default right end for boundary sampling.
    pub fn re_cutoff(&self) -> f64 {
        (10.0 * self.lambda1).max(self.lambda0 + 100.0)
    }
}

pub fn region_from_bounds(bounds: FormBounds) -> Region {
    let FormBounds { a, b, s } = bounds;
    let lift = (2.0 * a + 1.0).powf(s + 1.0);
    Region {
        lambda0: -(b / a) * lift,
        lambda1: (b * s / a) * lift,
        coeff: 2.0 * (s + 1.0) * b.powf(1.0 / (s + 1.0)) * (a / s).powf(s / (s + 1.0)),
        bounds: Some(bounds),
    }
}

/// Region for `|t_q[u]| ≤ Kε t₀[u] + 4Kε^{-3}‖u‖²`, i.e. `(a, b, s) = (K, 4K, 3)`.
pub fn region_from_k(k: f64) -> Result<Region> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("K must be finite and nonnegative, got {k}")));
    }
    if k == 0.0 {
        return Ok(Region::half_line());
    }
    Ok(region_from_bounds(FormBounds::new(k, 4.0 * k, 3.0)?))
}

/// Region for a measure potential with unit-interval variation at most `K₀`:
/// `(a, b, s) = (4K₀, 4K₀, 1)`.
pub fn region_from_measure(k0: f64) -> Result<Region> {
    if !(k0 > 0.0) {
        return Err(Error::InvalidArgument(format!("K0 must be positive, got {k0}")));
    }
    Ok(region_from_bounds(FormBounds::new(4.0 * k0, 4.0 * k0, 1.0)?))
}

pub fn contains(region: &Region, lambda: C64, slack: f64) -> bool {
    if lambda.re < region.lambda0 - slack {
        return false;
    }
    lambda.im.abs() <= region.bound(lambda.re) + slack
}

/// Membership in the shifted parabola `|Im λ| ≤ c (Re λ − λ₀)^{s/(s+1)}`, a
/// superset of the region.
pub fn outer_parabola_contains(region: &Region, lambda: C64) -> bool {
    let Some(FormBounds { s, .. }) = region.bounds else {
        return lambda.re >= 0.0 && lambda.im == 0.0;
    };
    let shifted = lambda.re - region.lambda0;
    if shifted < 0.0 {
        return false;
    }
    lambda.im.abs() <= region.coeff * shifted.powf(s / (s + 1.0))
}

/// Upper boundary samples from the vertex to `re_max` (default
/// [`Region::re_cutoff`]), ordered by real part. The lower boundary is the
/// conjugate.
pub fn boundary_points(region: &Region, count: usize, re_max: Option<f64>) -> Result<Vec<C64>> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 boundary points, got {count}")));
    }
    let hi = re_max.unwrap_or_else(|| region.re_cutoff());
    if !(hi > region.lambda0) {
        return Err(Error::InvalidArgument(format!("cutoff {hi} must exceed the vertex {}", region.lambda0)));
    }
    Ok((0..count)
        .map(|k| {
            let re = if k == 0 {
                region.lambda0
            } else {
                region.lambda0 + (hi - region.lambda0) * k as f64 / (count - 1) as f64
            };
            C64::new(re, region.bound(re).max(0.0))
        })
        .collect())
}

/// `m(K)`: lower bound of the self-adjoint operator for real potentials.
pub fn lower_bound_m(k: f64) -> Result<f64> {
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("K must be finite and nonnegative, got {k}")));
    }
    Ok(if k < 0.5 { 0.0 - 4.0 * k } else { -32.0 * k.powi(4) })
}

/// `|Im λ| ≤ 2aε Re λ + 2bε^{-s}` for `0 < ε ≤ (2a+1)^{-1}`.
pub fn bounds_sector_contains(bounds: &FormBounds, eps: f64, lambda: C64) -> Result<bool> {
    if !(eps > 0.0) || eps > bounds.eps_max() * (1.0 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "sector parameter {eps} outside (0, {}]",
            bounds.eps_max()
        )));
    }
    Ok(lambda.im.abs() <= 2.0 * bounds.a * eps * lambda.re + 2.0 * bounds.b * eps.powf(-bounds.s))
}

/// The K-sector `|Im λ| ≤ 2Kε Re λ + 8Kε^{-3}`, `0 < ε ≤ (2K+1)^{-1}`.
pub fn sector_contains(k: f64, eps: f64, lambda: C64) -> Result<bool> {
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("K must be nonnegative, got {k}")));
    }
    if !(eps > 0.0) || eps > (1.0 / (2.0 * k + 1.0)) * (1.0 + 1e-15) {
        return Err(Error::InvalidArgument(format!(
            "sector parameter {eps} outside (0, {}]",
            1.0 / (2.0 * k + 1.0)
        )));
    }
    Ok(lambda.im.abs() <= 2.0 * k * eps * lambda.re + 8.0 * k * eps.powi(-3))
}

/// `count` log-spaced sector parameters covering `[eps_max·10^{-decades}, eps_max]`.
pub fn eps_grid(eps_max: f64, count: usize, decades: f64) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let t = if count == 1 { 0.0 } else { k as f64 / (count - 1) as f64 };
            eps_max * 10f64.powf(-decades * (1.0 - t))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn measure_case_constants() {
        let r = region_from_measure(1.0).unwrap();
        assert!(rel(r.coeff, 16.0) < 1e-12);
        assert!(rel(r.lambda0, -81.0) < 1e-12);
        assert!(rel(r.lambda1, 81.0) < 1e-12);
        assert!(rel(region_from_measure(0.125).unwrap().lambda0, -4.0) < 1e-12);
        assert!(rel(region_from_measure(2.0).unwrap().coeff, 32.0) < 1e-12);
        assert!(region_from_measure(0.0).is_err());
    }

    #[test]
    fn k_case_constants() {
        let r = region_from_bounds(FormBounds::new(1.0, 4.0, 3.0).unwrap());
        assert!(rel(r.lambda0, -324.0) < 1e-12);
        assert!(rel(r.lambda1, 972.0) < 1e-12);
        let expect = 8.0 * 4f64.powf(0.25) * 3f64.powf(-0.75);
        assert!(rel(r.coeff, expect) < 1e-12);
        assert!((r.coeff - 4.96323).abs() < 1e-5 && r.coeff <= 5.0);
        assert!(rel(region_from_k(2.0).unwrap().lambda0, -2500.0) < 1e-12);
        assert!(region_from_k(-1.0).is_err());
    }

    #[test]
    fn degenerate_half_line() {
        let r = region_from_k(0.0).unwrap();
        assert!(contains(&r, C64::new(5.0, 0.0), 0.0));
        assert!(!contains(&r, C64::new(5.0, 0.001), 0.0));
        assert!(!contains(&r, C64::new(-1.0, 0.0), 0.0));
    }

    #[test]
    fn vertex_and_knee_membership() {
        let r = region_from_k(1.0).unwrap();
        assert!(contains(&r, C64::new(r.lambda0, 0.0), 0.0));
        assert!(!contains(&r, C64::new(r.lambda0 - 1.0, 0.0), 0.0));
        let s = 3.0;
        let knee = C64::new(r.lambda1, r.coeff * r.lambda1.powf(s / (s + 1.0)));
        assert!(contains(&r, knee, 1e-9 * (1.0 + knee.norm())));
        assert!(contains(&r, C64::new(1000.0, 0.0), 0.0));
    }

    #[test]
    fn outer_parabola_cases() {
        let r = region_from_k(1.0).unwrap();
        assert!(outer_parabola_contains(&r, C64::new(r.lambda0, 0.0)));
        let m = region_from_measure(1.0).unwrap();
        assert!(!outer_parabola_contains(&m, C64::new(0.0, 145.0)));
        assert!(outer_parabola_contains(&m, C64::new(0.0, 144.0)));
    }

    #[test]
    fn boundary_samples() {
        let r = region_from_k(0.7).unwrap();
        let pts = boundary_points(&r, 500, None).unwrap();
        assert_eq!(pts[0], C64::new(r.lambda0, 0.0));
        assert!(pts.windows(2).all(|w| w[0].re < w[1].re));
        assert!(pts.iter().all(|&p| contains(&r, p, 1e-9 * (1.0 + p.norm()))));
        assert!(boundary_points(&r, 1, None).is_err());
    }

    #[test]
    fn branch_continuity_at_knee() {
        for (a, b, s) in [(1.0, 4.0, 3.0), (0.3, 2.0, 1.0), (5.0, 0.1, 2.5)] {
            let f = FormBounds::new(a, b, s).unwrap();
            let r = region_from_bounds(f);
            let line = 2.0 * a / (2.0 * a + 1.0) * r.lambda1 + 2.0 * b * (2.0 * a + 1.0).powf(s);
            let env = r.coeff * r.lambda1.powf(s / (s + 1.0));
            assert!(rel(line, env) < 1e-9);
            assert!(rel(line, 2.0 * (s + 1.0) * b * (2.0 * a + 1.0).powf(s)) < 1e-9);
        }
    }

    #[test]
    fn m_of_k() {
        assert_eq!(lower_bound_m(0.25).unwrap(), -1.0);
        assert_eq!(lower_bound_m(1.0).unwrap(), -32.0);
        assert_eq!(lower_bound_m(0.5).unwrap(), -2.0);
        assert_eq!(-4.0 * 0.5, -32.0 * 0.5f64.powi(4));
        assert!(lower_bound_m(-0.1).is_err());
    }

    #[test]
    fn k_sector_cases() {
        assert!(sector_contains(1.0, 0.2, C64::new(0.0, 0.0)).unwrap());
        assert!(sector_contains(1.0, 1.0 / 3.0, C64::new(9.0, 222.0)).unwrap());
        assert!(!sector_contains(1.0, 1.0 / 3.0, C64::new(9.0, 222.5)).unwrap());
        assert!(sector_contains(1.0, 0.5, C64::new(0.0, 0.0)).is_err());
        assert!(sector_contains(1.0, 0.0, C64::new(0.0, 0.0)).is_err());
    }
}
