//! Tridiagonal complex matrices: products, pivoted LU and Sturm counts for
//! Hermitian pencils.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid_fn::C64;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Square tridiagonal matrix; `lower[i] = T[i+1][i]`, `upper[i] = T[i][i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<C64>,
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        let off = n.saturating_sub(1);
        Self { lower: vec![ZERO; off], diag: vec![ZERO; n], upper: vec![ZERO; off] }
    }

    pub fn new(lower: Vec<C64>, diag: Vec<C64>, upper: Vec<C64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        for off in [&lower, &upper] {
            if off.len() != n - 1 {
                return Err(Error::DimensionMismatch { expected: n - 1, got: off.len() });
            }
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n);
        t.diag.iter_mut().for_each(|d| *d = C64::new(1.0, 0.0));
        t
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.lower[j]
        } else if j == i + 1 {
            self.upper[i]
        } else {
            ZERO
        }
    }

    pub fn conj_transpose(&self) -> Self {
        Self {
            lower: self.upper.iter().map(|z| z.conj()).collect(),
            diag: self.diag.iter().map(|z| z.conj()).collect(),
            upper: self.lower.iter().map(|z| z.conj()).collect(),
        }
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: C64, other: &Tridiag, beta: C64) -> Self {
        let mix = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect();
        Self {
            lower: mix(&self.lower, &other.lower),
            diag: mix(&self.diag, &other.diag),
            upper: mix(&self.upper, &other.upper),
        }
    }

    pub fn add(&self, other: &Tridiag) -> Self {
        self.combine(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        let mut y = vec![ZERO; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// `y† T x`.
    pub fn bilinear(&self, y: &[C64], x: &[C64]) -> C64 {
        let n = self.dim();
        let mut s = ZERO;
        for i in 0..n {
            let mut row = self.diag[i] * x[i];
            if i > 0 {
                row += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                row += self.upper[i] * x[i + 1];
            }
            s += y[i].conj() * row;
        }
        s
    }

    /// `x† T x`.
    pub fn quad(&self, x: &[C64]) -> C64 {
        self.bilinear(x, x)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Largest entrywise `|T − T†|`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.diag.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let o = self.lower.iter().zip(&self.upper).map(|(l, u)| (l - u.conj()).norm()).fold(0.0, f64::max);
        d.max(o)
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().chain(&self.diag).chain(&self.upper).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// LU factorization with partial pivoting, `P T = L U`, where `U` has two
/// superdiagonals.
#[derive(Clone, Debug)]
pub struct TriLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swapped: Vec<bool>,
}

impl TriLu {
    pub fn factor(t: &Tridiag) -> Result<Self> {
        let n = t.dim();
        let mut dl = t.lower.clone();
        let mut d = t.diag.clone();
        let mut du = t.upper.clone();
        let mut du2 = vec![ZERO; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] == ZERO {
                    return Err(Error::Singular(i));
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if let Some(i) = d.iter().position(|z| *z == ZERO || !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Singular(i));
        }
        Ok(Self { dl, d, du, du2, swapped })
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Hermitian tridiagonal pencil `(H, M)` with `M` positive definite.
#[derive(Clone, Debug)]
pub struct HermitianPencil {
    h_diag: Vec<f64>,
    h_off: Vec<C64>,
    m_diag: Vec<f64>,
    m_off: Vec<f64>,
}

impl HermitianPencil {
    /// Uses the diagonal and lower triangle of `h`; `m` must be real.
    pub fn new(h: &Tridiag, m: &Tridiag) -> Self {
        Self {
            h_diag: h.diag.iter().map(|z| z.re).collect(),
            h_off: h.lower.clone(),
            m_diag: m.diag.iter().map(|z| z.re).collect(),
            m_off: m.lower.iter().map(|z| z.re).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.h_diag.len()
    }

    /// Number of pencil eigenvalues below `s` (inertia of `H − sM`).
    pub fn count_below(&self, s: f64) -> usize {
        let n = self.dim();
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..n {
            let t = self.h_diag[i] - s * self.m_diag[i];
            d = if i == 0 {
                t
            } else {
                let e = self.h_off[i - 1] - s * self.m_off[i - 1];
                t - e.norm_sqr() / d
            };
            if d == 0.0 {
                d = -f64::EPSILON * (t.abs() + 1e-300);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on inertia.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        let n = self.dim();
        if k >= n {
            return Err(Error::DimensionMismatch { expected: n, got: k + 1 });
        }
        let mut hi = 1.0f64;
        while self.count_below(hi) <= k {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NoConvergence("no upper bound for Hermitian pencil".into()));
            }
        }
        let mut lo = -1.0f64;
        while self.count_below(lo) > k {
            lo *= 2.0;
            if !lo.is_finite() {
                return Err(Error::NoConvergence("no lower bound for Hermitian pencil".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn largest(&self) -> Result<f64> {
        self.eigenvalue(self.dim() - 1)
    }

    pub fn smallest(&self) -> Result<f64> {
        self.eigenvalue(0)
    }

    /// Eigenvector for the eigenvalue `lambda` by inverse iteration, normalized
    /// in the `M`-norm.
    pub fn eigenvector(&self, lambda: f64, start: &[C64]) -> Result<Vec<C64>> {
        let n = self.dim();
        let m = self.m_tridiag();
        let scale = 1.0 + lambda.abs();
        let mut shift = lambda + 1e-10 * scale;
        let lu = loop {
            let t = self.h_tridiag().combine(C64::new(1.0, 0.0), &m, C64::new(-shift, 0.0));
            match TriLu::factor(&t) {
                Ok(lu) => break lu,
                Err(Error::Singular(_)) => shift += 1e-9 * scale,
                Err(e) => return Err(e),
            }
        };
        let mut x = start.to_vec();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        for _ in 0..4 {
            x = lu.solve(&m.matvec(&x));
            let nrm = m.quad(&x).re.sqrt();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::NoConvergence("inverse iteration collapsed".into()));
            }
            x.iter_mut().for_each(|z| *z /= nrm);
        }
        Ok(x)
    }

    fn h_tridiag(&self) -> Tridiag {
        Tridiag {
            lower: self.h_off.clone(),
            diag: self.h_diag.iter().map(|&d| C64::new(d, 0.0)).collect(),
            upper: self.h_off.iter().map(|z| z.conj()).collect(),
        }
    }

    fn m_tridiag(&self) -> Tridiag {
        let off: Vec<C64> = self.m_off.iter().map(|&x| C64::new(x, 0.0)).collect();
        Tridiag { lower: off.clone(), diag: self.m_diag.iter().map(|&d| C64::new(d, 0.0)).collect(), upper: off }
    }
}

/// Lower bidiagonal Cholesky factor of a real symmetric tridiagonal matrix.
pub struct BidiagCholesky {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
}

impl BidiagCholesky {
    pub fn factor(m: &Tridiag) -> Result<Self> {
        let n = m.dim();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut d = m.diag[i].re;
            if i > 0 {
                sub[i - 1] = m.lower[i - 1].re / diag[i - 1];
                d -= sub[i - 1] * sub[i - 1];
            }
            if !(d > 0.0) {
                return Err(Error::Singular(i));
            }
            diag[i] = d.sqrt();
        }
        Ok(Self { diag, sub })
    }

    /// `L⁻¹ B` for a dense `B`.
    pub fn solve_dense(&self, b: &DMatrix<C64>) -> DMatrix<C64> {
        let mut x = b.clone();
        for c in 0..x.ncols() {
            for i in 0..x.nrows() {
                let mut v = x[(i, c)];
                if i > 0 {
                    v -= x[(i - 1, c)] * self.sub[i - 1];
                }
                x[(i, c)] = v / self.diag[i];
            }
        }
        x
    }
}
