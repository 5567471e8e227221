//! Orthogonality-constrained and linear-algebra subproblem solvers: the
//! generalized power iteration, orthogonal Procrustes, smallest-eigenvector
//! extraction, and SPD linear solves.

use nalgebra::DMatrix;

use crate::error::{Result, ShineError};
use crate::model::orthonormality_deviation;

/// Inflation applied to the spectral bound so the shifted quadratic stays
/// strictly positive definite.
const SHIFT_INFLATION: f64 = 1e-6;

/// One trace-form subproblem `min tr(W^T quad W - 2 W^T lin)` over matrices
/// with orthonormal columns.
#[derive(Debug, Clone)]
pub struct GpiProblem {
    /// `d x d` symmetric positive semidefinite (diagonal in this crate's use).
    pub quad: DMatrix<f64>,
    /// `d x c` linear coefficient.
    pub lin: DMatrix<f64>,
    /// `d x c` starting point with orthonormal columns.
    pub init: DMatrix<f64>,
}

impl GpiProblem {
    fn check(&self) -> Result<()> {
        let d = self.quad.nrows();
        if self.quad.ncols() != d {
            return Err(ShineError::ShapeMismatch {
                context: format!("quad is {}x{}", d, self.quad.ncols()),
            });
        }
        let scale = self.quad.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                dev = dev.max((self.quad[(i, j)] - self.quad[(j, i)]).abs());
            }
        }
        if dev > 1e-12 * scale {
            return Err(ShineError::NotSymmetric { deviation: dev });
        }
        let c = self.lin.ncols();
        if c > d || self.lin.nrows() != d {
            return Err(ShineError::ShapeMismatch {
                context: format!("lin is {}x{} for quad dimension {}", self.lin.nrows(), c, d),
            });
        }
        if self.init.nrows() != d || self.init.ncols() != c {
            return Err(ShineError::ShapeMismatch {
                context: format!("init is {}x{}", self.init.nrows(), self.init.ncols()),
            });
        }
        let ortho = orthonormality_deviation(&self.init);
        if ortho > 1e-8 {
            return Err(ShineError::NotOrthonormal { deviation: ortho });
        }
        Ok(())
    }
}

/// Thin SVD by one-sided Jacobi rotations: `m = U diag(sigma) V^T` with
/// `U` p x q orthonormal, `sigma` descending, `V` q x q orthogonal.
///
/// Jacobi stays accurate on rank-deficient input, which the bidiagonalization
/// SVD is not: the anchor subproblem feeds structurally singular matrices
/// (zero-mean data times simplex columns) and loses several digits there.
/// Columns belonging to zero singular values are completed to an orthonormal
/// basis deterministically.
pub(crate) fn jacobi_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (p, q) = (m.nrows(), m.ncols());
    assert!(q <= p, "jacobi_svd expects a tall matrix");
    let mut u = m.clone();
    let mut v = DMatrix::<f64>::identity(q, q);
    let tol = f64::EPSILON;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..q {
            for j in (i + 1)..q {
                let mut aa = 0.0;
                let mut bb = 0.0;
                let mut ab = 0.0;
                for r in 0..p {
                    let x = u[(r, i)];
                    let y = u[(r, j)];
                    aa += x * x;
                    bb += y * y;
                    ab += x * y;
                }
                if ab.abs() <= tol * (aa * bb).sqrt() || aa == 0.0 || bb == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (bb - aa) / (2.0 * ab);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..p {
                    let x = u[(r, i)];
                    let y = u[(r, j)];
                    u[(r, i)] = cs * x - sn * y;
                    u[(r, j)] = sn * x + cs * y;
                }
                for r in 0..q {
                    let x = v[(r, i)];
                    let y = v[(r, j)];
                    v[(r, i)] = cs * x - sn * y;
                    v[(r, j)] = sn * x + cs * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..q).collect();
    let norms: Vec<f64> = (0..q).map(|i| u.column(i).norm()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let mut u_sorted = DMatrix::zeros(p, q);
    let mut v_sorted = DMatrix::zeros(q, q);
    let mut sigma = Vec::with_capacity(q);
    let scale = norms.iter().cloned().fold(0.0f64, f64::max);
    let rank_tol = scale * (p.max(q) as f64) * f64::EPSILON;
    let mut rank = 0;
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(norms[src]);
        v_sorted.set_column(dst, &v.column(src));
        if norms[src] > rank_tol {
            let scaled = u.column(src) / norms[src];
            u_sorted.set_column(dst, &scaled);
            rank = dst + 1;
        }
    }
    // complete columns for vanished singular values: orthogonalize the
    // standard basis vector with the largest residual against what we have
    #[allow(clippy::needless_range_loop)]
    for dst in rank..q {
        sigma[dst] = 0.0; // norms below the rank threshold get flushed

        let mut best: Option<(f64, nalgebra::DVector<f64>)> = None;
        for basis in 0..p {
            let mut cand = nalgebra::DVector::<f64>::zeros(p);
            cand[basis] = 1.0;
            for prev in 0..dst {
                let proj = u_sorted.column(prev).dot(&cand);
                cand -= u_sorted.column(prev) * proj;
            }
            let norm = cand.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, cand));
            }
        }
        let (norm, cand) = best.unwrap();
        u_sorted.set_column(dst, &(cand / norm));
    }
    (u_sorted, sigma, v_sorted)
}

/// Orthonormal polar factor `U V^T` of the thin SVD.
pub(crate) fn polar_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, _, v) = jacobi_svd(m);
    u * v.transpose()
}

/// Minimizes `tr(W^T quad W - 2 W^T lin)` over `W^T W = I` by the
/// generalized power iteration: repeatedly form
/// `M = (shift I - quad) W + lin` and replace `W` with the polar factor of
/// `M`. The shift is the Gershgorin bound of `quad` (its max diagonal when
/// `quad` is diagonal) inflated by a hair so the shifted matrix stays
/// positive definite; this makes the subproblem objective non-increasing.
pub fn gpi_orthogonal(problem: &GpiProblem, tol: f64, max_iters: usize) -> Result<DMatrix<f64>> {
    gpi_traced(problem, tol, max_iters).map(|(w, _)| w)
}

pub(crate) fn gpi_traced(
    problem: &GpiProblem,
    tol: f64,
    max_iters: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    problem.check()?;
    let d = problem.quad.nrows();
    let mut shift: f64 = 0.0;
    for i in 0..d {
        let mut radius = 0.0;
        for j in 0..d {
            if j != i {
                radius += problem.quad[(i, j)].abs();
            }
        }
        shift = shift.max(problem.quad[(i, i)] + radius);
    }
    shift *= 1.0 + SHIFT_INFLATION;

    let value = |w: &DMatrix<f64>| -> f64 {
        (w.transpose() * &problem.quad * w).trace() - 2.0 * (w.transpose() * &problem.lin).trace()
    };

    let mut w = problem.init.clone();
    let mut trace = vec![value(&w)];
    for _ in 0..max_iters {
        let m = &w * shift - &problem.quad * &w + &problem.lin;
        w = polar_factor(&m);
        let v = value(&w);
        let prev = *trace.last().unwrap();
        trace.push(v);
        if (prev - v).abs() <= tol * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((w, trace))
}

/// Maximizes `tr(C^T E)` over `C^T C = I` for a `c x m` input with `m <= c`:
/// the polar factor of `E`. The optimum equals the sum of `E`'s singular
/// values.
pub fn procrustes_max_trace(e: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (c, m) = (e.nrows(), e.ncols());
    if m > c {
        return Err(ShineError::MExceedsC { m, c });
    }
    for x in e.iter() {
        if !x.is_finite() {
            return Err(ShineError::NonFinite {
                context: "procrustes input".into(),
            });
        }
    }
    Ok(polar_factor(e))
}

/// Orthonormal eigenvectors for the `c` algebraically smallest eigenvalues
/// of a symmetric matrix, ordered ascending, with a deterministic sign
/// convention (the largest-magnitude component of each column is positive).
pub fn smallest_eigvecs(l: &DMatrix<f64>, c: usize) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(ShineError::ShapeMismatch {
            context: format!("eigen input {}x{} not square", n, l.ncols()),
        });
    }
    if c > n {
        return Err(ShineError::CExceedsSamples { c, n });
    }
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((l[(i, j)] - l[(j, i)]).abs());
        }
    }
    if dev > 1e-10 {
        return Err(ShineError::NotSymmetric { deviation: dev });
    }
    let sym = (l + l.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut out = DMatrix::zeros(n, c);
    for (col, &idx) in order.iter().take(c).enumerate() {
        let src = eig.eigenvectors.column(idx);
        let mut max_abs = 0.0;
        let mut sign = 1.0;
        for &x in src.iter() {
            if x.abs() > max_abs {
                max_abs = x.abs();
                sign = if x >= 0.0 { 1.0 } else { -1.0 };
            }
        }
        for i in 0..n {
            out[(i, col)] = src[i] * sign;
        }
    }
    Ok(out)
}

/// Solves `P Z = RHS` for symmetric positive-definite `P` by Cholesky
/// factorization, with one step of iterative refinement. Indefinite or
/// ill-conditioned systems are reported, never silently regularized.
pub fn spd_solve(p: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = p.nrows();
    if p.ncols() != n || rhs.nrows() != n {
        return Err(ShineError::ShapeMismatch {
            context: format!(
                "spd solve with P {}x{}, RHS {}x{}",
                n,
                p.ncols(),
                rhs.nrows(),
                rhs.ncols()
            ),
        });
    }
    let scale = p.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((p[(i, j)] - p[(j, i)]).abs());
        }
    }
    if dev > 1e-10 * scale {
        return Err(ShineError::NotSymmetric { deviation: dev });
    }
    let sym = (p + p.transpose()) * 0.5;
    let chol = sym
        .clone()
        .cholesky()
        .ok_or(ShineError::NotPositiveDefinite)?;

    // crude condition estimate from the factor diagonal
    let diag: Vec<f64> = (0..n).map(|i| chol.l_dirty()[(i, i)]).collect();
    let dmax = diag.iter().cloned().fold(0.0f64, f64::max);
    let dmin = diag.iter().cloned().fold(f64::MAX, f64::min);
    let cond = (dmax / dmin).powi(2);
    if !cond.is_finite() || cond > 1e12 {
        return Err(ShineError::IllConditioned { cond });
    }

    let mut z = chol.solve(rhs);
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(DMatrix::zeros(n, rhs.ncols()));
    }
    let residual = rhs - p * &z;
    if residual.norm() / rhs_norm > 1e-12 {
        z += chol.solve(&residual);
    }
    let rel = (rhs - p * &z).norm() / rhs_norm;
    if rel > 1e-10 {
        return Err(ShineError::IllConditioned { cond: rel / f64::EPSILON });
    }
    Ok(z)
}
