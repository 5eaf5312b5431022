//! Matrix-free Krylov iterations on flat `f64` vectors.
//!
//! All three methods stop on the true relative residual `‖b - Ax‖ / ‖b‖`,
//! recomputed from the operator, and report it.

use super::{LinearOperator, Preconditioner, SolveReport};
use crate::error::{Error, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// `r = b - A x`, returns `‖r‖`.
pub(crate) fn residual(op: &dyn LinearOperator, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

fn finish(iterations: usize, r_norm: f64, b_norm: f64, rel_tol: f64) -> SolveReport {
    let rel = r_norm / b_norm;
    SolveReport {
        iterations,
        final_relative_residual: rel,
        converged: rel <= rel_tol,
    }
}

/// Settings shared by the iterations.
#[derive(Debug, Clone, Copy)]
pub struct KrylovSettings {
    pub rel_tol: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

/// Conjugate gradients for symmetric positive definite operators.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    s: &KrylovSettings,
) -> Result<SolveReport> {
    let n = op.dim();
    let b_norm = norm2(b);
    let mut r = vec![0.0; n];
    let mut r_norm = residual(op, b, x, &mut r);
    if !r_norm.is_finite() {
        return Err(Error::NonFiniteSolve { iterations: 0 });
    }
    let tol = s.rel_tol * b_norm;
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = r_norm * r_norm;
    let mut it = 0;
    while it < s.max_iterations && r_norm > tol {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            break;
        }
        let alpha = rr / pap;
        axpy(x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        let rr_new = dot(&r, &r);
        it += 1;
        if !rr_new.is_finite() {
            return Err(Error::NonFiniteSolve { iterations: it });
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        r_norm = rr.sqrt();
        if r_norm <= tol {
            // confirm against the true residual to avoid recurrence drift
            r_norm = residual(op, b, x, &mut r);
            rr = r_norm * r_norm;
            p.copy_from_slice(&r);
        }
    }
    let true_norm = residual(op, b, x, &mut r);
    if !true_norm.is_finite() {
        return Err(Error::NonFiniteSolve { iterations: it });
    }
    Ok(finish(it, true_norm, b_norm, s.rel_tol))
}

/// Restarted GMRES with right preconditioning and modified Gram–Schmidt.
pub fn gmres(
    op: &dyn LinearOperator,
    precond: &dyn Preconditioner,
    b: &[f64],
    x: &mut [f64],
    s: &KrylovSettings,
) -> Result<SolveReport> {
    let n = op.dim();
    let b_norm = norm2(b);
    let tol = s.rel_tol * b_norm;
    let m = s.restart.clamp(1, n.max(1));
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut hess = vec![vec![0.0; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut it = 0;

    loop {
        let beta = residual(op, b, x, &mut r);
        if !beta.is_finite() {
            return Err(Error::NonFiniteSolve { iterations: it });
        }
        if beta <= tol || it >= s.max_iterations {
            return Ok(finish(it, beta, b_norm, s.rel_tol));
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = 0.0);
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            precond.apply(&basis[j], &mut z);
            op.apply(&z, &mut w);
            for i in 0..=j {
                let hij = dot(&w, &basis[i]);
                hess[i][j] = hij;
                axpy(&mut w, -hij, &basis[i]);
            }
            let wn = norm2(&w);
            hess[j + 1][j] = wn;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            if denom == 0.0 || !denom.is_finite() {
                if !denom.is_finite() {
                    return Err(Error::NonFiniteSolve { iterations: it });
                }
                break;
            }
            cs[j] = hess[j][j] / denom;
            sn[j] = hess[j + 1][j] / denom;
            hess[j][j] = denom;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            it += 1;
            if g[j + 1].abs() <= tol || it >= s.max_iterations || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        if used == 0 {
            let beta = residual(op, b, x, &mut r);
            return Ok(finish(it, beta, b_norm, s.rel_tol));
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for l in i + 1..used {
                acc -= hess[i][l] * y[l];
            }
            y[i] = acc / hess[i][i];
        }
        w.iter_mut().for_each(|v| *v = 0.0);
        for (yi, v) in y.iter().zip(&basis) {
            axpy(&mut w, *yi, v);
        }
        precond.apply(&w, &mut z);
        axpy(x, 1.0, &z);
    }
}

/// BiCGStab; cheaper memory than GMRES, less robust.
pub fn bicgstab(
    op: &dyn LinearOperator,
    b: &[f64],
    x: &mut [f64],
    s: &KrylovSettings,
) -> Result<SolveReport> {
    let n = op.dim();
    let b_norm = norm2(b);
    let tol = s.rel_tol * b_norm;
    let mut r = vec![0.0; n];
    let mut r_norm = residual(op, b, x, &mut r);
    if !r_norm.is_finite() {
        return Err(Error::NonFiniteSolve { iterations: 0 });
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut sv = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut it = 0;
    while r_norm > tol && it < s.max_iterations {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        op.apply(&p, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho / rv;
        for i in 0..n {
            sv[i] = r[i] - alpha * v[i];
        }
        it += 1;
        if norm2(&sv) <= tol {
            axpy(x, alpha, &p);
            break;
        }
        op.apply(&sv, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &sv) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p[i] + omega * sv[i];
            r[i] = sv[i] - omega * t[i];
        }
        r_norm = norm2(&r);
        if !r_norm.is_finite() {
            return Err(Error::NonFiniteSolve { iterations: it });
        }
        if omega == 0.0 {
            break;
        }
    }
    let true_norm = residual(op, b, x, &mut r);
    if !true_norm.is_finite() {
        return Err(Error::NonFiniteSolve { iterations: it });
    }
    Ok(finish(it, true_norm, b_norm, s.rel_tol))
}
