//! Generalized eigenvalues of `A x = λ M x` near a shift.

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{BidiagCholesky, HermitianPencil, TriLu, Tridiag};
use super::Pencil;
use crate::error::{Error, Result};
use crate::grid_fn::C64;

/// Below this dimension a failed Arnoldi run falls back to the dense problem.
pub const DENSE_LIMIT: usize = 800;
/// Relative Ritz residual accepted by shift-invert Arnoldi.
const RITZ_TOL: f64 = 1e-11;
const MAX_RESTARTS: usize = 5;
const ARNOLDI_SEED: u64 = 0x5eed;

/// The `count` eigenvalues nearest `shift`, sorted by distance to it.
pub fn eigs(p: &Pencil, count: usize, shift: C64) -> Result<Vec<C64>> {
    let n = p.dim();
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!("eigenvalue count {count} not in 1..={n}")));
    }
    // dense when the Krylov space would span a sizeable part of the problem
    let mut vals = if 4 * krylov_size(count) >= n {
        dense(p)?
    } else {
        match shift_invert_with_retry(p, count, shift) {
            Err(Error::NoConvergence(_)) if n < DENSE_LIMIT => dense(p)?,
            r => r?,
        }
    };
    vals.sort_by(|a, b| (a - shift).norm().partial_cmp(&(b - shift).norm()).unwrap());
    vals.truncate(count);
    Ok(vals)
}

/// The `count` eigenvalues nearest a shift placed one unit left of the
/// numerical range.
pub fn lowest_eigenvalues(p: &Pencil, count: usize) -> Result<Vec<C64>> {
    let herm = p.a.combine(C64::new(0.5, 0.0), &p.a.conj_transpose(), C64::new(0.5, 0.0));
    let left = HermitianPencil::new(&herm, &p.m).smallest()?;
    eigs(p, count, C64::new(left - 1.0, 0.0))
}

fn dense(p: &Pencil) -> Result<Vec<C64>> {
    let schur = Schur::try_new(dense_standard_form(&p.a, &p.m)?, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NoConvergence("dense Schur iteration".into()))?;
    Ok(schur.eigenvalues().expect("complex Schur form is triangular").iter().copied().collect())
}

fn shift_invert_with_retry(p: &Pencil, count: usize, shift: C64) -> Result<Vec<C64>> {
    let scale = 1.0 + shift.norm();
    let mut sigma = shift;
    for attempt in 0..4 {
        let shifted = p.a.combine(C64::new(1.0, 0.0), &p.m, -sigma);
        match TriLu::factor(&shifted) {
            Ok(lu) => return shift_invert(p, &lu, count, sigma),
            Err(Error::Singular(_)) => sigma += C64::new(1e-7, 1e-7) * scale * (attempt + 1) as f64,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular(0))
}

fn krylov_size(count: usize) -> usize {
    (2 * count + 20).max(30)
}

fn m_dot(mv: &[C64], w: &[C64]) -> C64 {
    mv.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

fn shift_invert(p: &Pencil, lu: &TriLu, count: usize, sigma: C64) -> Result<Vec<C64>> {
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(ARNOLDI_SEED);
    let start: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let mut m = krylov_size(count).min(n);
    for _ in 0..MAX_RESTARTS {
        if let Some(vals) = arnoldi(p, lu, &start, m, count, sigma)? {
            return Ok(vals);
        }
        if m == n {
            break;
        }
        m = (2 * m).min(n);
    }
    Err(Error::NoConvergence(format!("shift-invert Arnoldi with {m} vectors for {count} eigenvalues")))
}

/// One Arnoldi cycle on `(A − σM)⁻¹M` in the `M`-inner product; `None` when
/// the wanted Ritz pairs have not converged.
fn arnoldi(p: &Pencil, lu: &TriLu, start: &[C64], m: usize, count: usize, sigma: C64) -> Result<Option<Vec<C64>>> {
    let norm_m = |x: &[C64]| p.m.quad(x).re.max(0.0).sqrt();
    let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut mv: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut h = DMatrix::<C64>::zeros(m + 1, m);
    let s0 = norm_m(start);
    let v0: Vec<C64> = start.iter().map(|z| z / s0).collect();
    mv.push(p.m.matvec(&v0));
    v.push(v0);
    let mut size = m;
    let mut breakdown = false;
    for j in 0..m {
        let mut w = lu.solve(&mv[j]);
        let before = norm_m(&w);
        for _ in 0..2 {
            for i in 0..=j {
                let hij = m_dot(&mv[i], &w);
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
                h[(i, j)] += hij;
            }
        }
        let beta = norm_m(&w);
        h[(j + 1, j)] = C64::new(beta, 0.0);
        if beta <= 1e-14 * before {
            size = j + 1;
            breakdown = true;
            break;
        }
        w.iter_mut().for_each(|z| *z /= beta);
        mv.push(p.m.matvec(&w));
        v.push(w);
    }
    let hm = h.view((0, 0), (size, size)).into_owned();
    let beta = h[(size, size - 1)].norm();
    let schur = Schur::try_new(hm, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NoConvergence("Hessenberg Schur iteration".into()))?;
    let (z, t) = schur.unpack();
    let mut ritz: Vec<(C64, f64)> = (0..size)
        .map(|k| {
            let y = triangular_eigenvector(&t, k);
            let s = &z * y;
            let last = s[size - 1].norm() / s.norm();
            (t[(k, k)], if breakdown { 0.0 } else { beta * last })
        })
        .collect();
    ritz.sort_by(|a, b| b.0.norm().partial_cmp(&a.0.norm()).unwrap());
    let wanted = count.min(size);
    let converged = ritz[..wanted].iter().all(|(theta, res)| *res <= RITZ_TOL * theta.norm());
    if !converged && !breakdown && size < p.dim() {
        return Ok(None);
    }
    Ok(Some(ritz.iter().filter(|(theta, _)| theta.norm() > 0.0).map(|(theta, _)| sigma + theta.inv()).collect()))
}

/// Eigenvector of the upper-triangular `t` for its `k`-th diagonal entry.
fn triangular_eigenvector(t: &DMatrix<C64>, k: usize) -> nalgebra::DVector<C64> {
    let n = t.nrows();
    let mut y = nalgebra::DVector::<C64>::zeros(n);
    y[k] = C64::new(1.0, 0.0);
    let tkk = t[(k, k)];
    let floor = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
    for i in (0..k).rev() {
        let mut s = C64::new(0.0, 0.0);
        for j in i + 1..=k {
            s += t[(i, j)] * y[j];
        }
        let mut den = t[(i, i)] - tkk;
        if den.norm() < floor {
            den = C64::new(floor, 0.0);
        }
        y[i] = -s / den;
    }
    y
}

/// The dense standard matrix `L⁻¹ A L⁻ᴴ` of the pencil; exposed for tests.
pub fn dense_standard_form(a: &Tridiag, m: &Tridiag) -> Result<DMatrix<C64>> {
    let l = BidiagCholesky::factor(m)?;
    let b = l.solve_dense(&a.to_dense());
    Ok(l.solve_dense(&b.adjoint()).adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form_fem::{assemble, Mesh};
    use crate::grid_fn::{Extension, Grid, GridFn};
    use crate::stepanov::Representation;
    use std::f64::consts::PI;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn pencil(cells: usize, tau: impl Fn(f64) -> C64) -> Pencil {
        let g = Grid::over(0.0, PI, cells).unwrap();
        let rep = Representation::new(
            GridFn::zeros(g, Extension::Zero),
            GridFn::from_fn(g, Extension::Clamp, tau).unwrap(),
            "t",
        )
        .unwrap();
        assemble(&rep, &Mesh::for_rep(&rep, (0.0, PI)).unwrap()).unwrap()
    }

    /// Mathieu `b₁(q)` from the continued fraction of the odd sine series.
    fn mathieu_b1(q: f64) -> f64 {
        let f = |a: f64| {
            let mut g = 0.0;
            for k in (1..60).rev() {
                let m = (2 * k + 1) as f64;
                g = q / (a - m * m - q * g);
            }
            a - 1.0 + q - q * g
        };
        let (mut lo, mut hi) = (-2.0, 0.99);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn mathieu_oracle_sanity() {
        assert!((mathieu_b1(1.0) + 0.110_248_8).abs() < 1e-6);
        // small-q series 1 − q − q²/8 + q³/64
        assert!((mathieu_b1(0.1) - (1.0 - 0.1 - 0.01 / 8.0 + 0.001 / 64.0)).abs() < 1e-6);
    }

    #[test]
    fn free_dirichlet_eigenvalues() {
        let p = pencil(400, |_| c(0.0));
        let vals = eigs(&p, 3, c(0.0)).unwrap();
        for (z, w) in vals.iter().zip([1.0, 4.0, 9.0]) {
            assert!((z - c(w)).norm() < 5e-4, "{z}");
        }
    }

    #[test]
    fn imaginary_constant_shifts_exactly() {
        let real = eigs(&pencil(300, |_| c(0.0)), 4, c(0.0)).unwrap();
        let shifted = eigs(&pencil(300, |_| C64::new(0.0, 0.7)), 4, C64::new(0.0, 0.7)).unwrap();
        for (a, b) in real.iter().zip(&shifted) {
            assert!((a + C64::new(0.0, 0.7) - b).norm() < 1e-8);
        }
    }

    #[test]
    fn mathieu_smallest_eigenvalue() {
        let p = pencil(2000, |x| c(2.0 * (2.0 * x).cos()));
        let low = lowest_eigenvalues(&p, 1).unwrap()[0];
        assert!((low.re - mathieu_b1(1.0)).abs() < 1e-3 && low.im.abs() < 1e-10, "{low}");
    }

    #[test]
    fn arnoldi_agrees_with_dense() {
        let p = pencil(1200, |x| C64::new((3.0 * x).cos(), 0.5 * x.sin()));
        let sparse = eigs(&p, 6, c(0.0)).unwrap();
        let small = pencil(400, |x| C64::new((3.0 * x).cos(), 0.5 * x.sin()));
        let dense = eigs(&small, 6, c(0.0)).unwrap();
        for (a, b) in sparse.iter().zip(&dense) {
            assert!((a - b).norm() < 1e-2 * (1.0 + a.norm()), "{a} vs {b}");
        }
        let direct = dense_standard_form(&small.a, &small.m).unwrap();
        let all = Schur::new(direct).eigenvalues().unwrap();
        assert!(dense.iter().all(|z| all.iter().any(|w| (w - z).norm() < 1e-9)));
    }

    #[test]
    fn count_bounds() {
        let p = pencil(20, |_| c(0.0));
        assert!(eigs(&p, 0, c(0.0)).is_err());
        assert!(eigs(&p, 20, c(0.0)).is_err());
        assert_eq!(eigs(&p, 19, c(0.0)).unwrap().len(), 19);
    }
}
