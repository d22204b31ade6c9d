//! Uniformly-local (Stepanov) norms of potential representations `q = Q' + τ`,
//! the coupling constant `K = 2(‖Q‖_{L²_unif} + ‖τ‖_{L¹_unif})`, representation
//! distances and smoothing sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid_fn::{GridFn, MollifyScheme, C64};

/// Window-start density used for all Stepanov suprema (starts every `h / 4`).
pub const WINDOW_REFINE: usize = 4;

/// A potential `q = Q' + τ` given by its primitive part `Q` and regular part `τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Representation {
    pub q: GridFn,
    pub tau: GridFn,
    pub label: String,
}

impl Representation {
    pub fn new(q: GridFn, tau: GridFn, label: impl Into<String>) -> Result<Self> {
        if !q.grid().same_span(tau.grid()) {
            return Err(Error::IncompatibleSpans(format!(
                "Q spans [{}, {}] but tau spans [{}, {}]",
                q.grid().x0,
                q.grid().end(),
                tau.grid().x0,
                tau.grid().end()
            )));
        }
        Ok(Self { q, tau, label: label.into() })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.q.grid().x0, self.q.grid().end())
    }

    pub fn is_real(&self) -> bool {
        self.q.is_real() && self.tau.is_real()
    }

    /// The representation of the complex-conjugate potential.
    pub fn conj(&self) -> Self {
        Self { q: self.q.conj(), tau: self.tau.conj(), label: format!("conj({})", self.label) }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            q: self.q.scale(alpha),
            tau: self.tau.scale(alpha),
            label: format!("{}*({})", alpha, self.label),
        }
    }

    /// Abscissae of every jump of `Q` or `τ`.
    pub fn jump_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .q
            .jump_nodes()
            .map(|i| self.q.grid().node(i))
            .chain(self.tau.jump_nodes().map(|i| self.tau.grid().node(i)))
            .collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub q_norm: f64,
    pub tau_norm: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

pub fn norm_l2_unif(q: &GridFn) -> f64 {
    q.sup_window_integral(2.0, WINDOW_REFINE).map(|(_, v)| v.sqrt()).unwrap_or(f64::NAN)
}

pub fn norm_l1_unif(tau: &GridFn) -> f64 {
    tau.sup_window_integral(1.0, WINDOW_REFINE).map(|(_, v)| v).unwrap_or(f64::NAN)
}

pub fn k_constant(rep: &Representation) -> NormReport {
    let q_norm = norm_l2_unif(&rep.q);
    let tau_norm = norm_l1_unif(&rep.tau);
    NormReport { q_norm, tau_norm, k: 2.0 * (q_norm + tau_norm) }
}

/// `‖Q₁ − Q₂‖_{L²_unif} + ‖τ₁ − τ₂‖_{L¹_unif}` for representations sampled on
/// the same nodes. The differences are continued with `r1`'s extension policies.
pub fn hminus1_distance(r1: &Representation, r2: &Representation) -> Result<f64> {
    let dq = r1.q.sub(&r2.q)?;
    let dt = r1.tau.sub(&r2.tau)?;
    Ok(norm_l2_unif(&dq) + norm_l1_unif(&dt))
}

/// Per-cell smoothings of `rep`, one per width.
pub fn smooth_approx_sequence(rep: &Representation, widths: &[f64]) -> Result<Vec<Representation>> {
    widths
        .iter()
        .map(|&w| {
            Ok(Representation {
                q: rep.q.mollify(w, MollifyScheme::PerCell)?,
                tau: rep.tau.mollify(w, MollifyScheme::PerCell)?,
                label: format!("{}~{w}", rep.label),
            })
        })
        .collect()
}
