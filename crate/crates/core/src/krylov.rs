//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};

pub(crate) struct GmresOptions {
    pub restart: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct GmresOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = rhs` starting from `x`. `apply(v, out)` computes `A v` and
/// `precond(v, out)` computes `M^{-1} v`; the iteration runs on `A M^{-1}`.
pub(crate) fn gmres(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    mut precond: impl FnMut(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &mut [f64],
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let len = rhs.len();
    let m = opts.restart.max(1);
    let rhs_norm = norm(rhs);
    if rhs_norm == 0.0 {
        x.fill(0.0);
        return Ok(GmresOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let target = opts.rel_tol * rhs_norm;

    let mut basis: Vec<Vec<f64>> = (0..=m).map(|_| vec![0.0; len]).collect();
    let mut hess = vec![0.0; (m + 1) * m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut z = vec![0.0; len];
    let mut w = vec![0.0; len];
    let mut iterations = 0;

    loop {
        apply(x, &mut w);
        for (r, (b, aw)) in basis[0].iter_mut().zip(rhs.iter().zip(&w)) {
            *r = b - aw;
        }
        let beta = norm(&basis[0]);
        if beta <= target {
            return Ok(GmresOutcome {
                iterations,
                relative_residual: beta / rhs_norm,
            });
        }
        if iterations >= opts.max_iters {
            return Err(Error::LinearSolveFailed {
                relative_residual: beta / rhs_norm,
                iterations,
            });
        }
        basis[0].iter_mut().for_each(|v| *v /= beta);
        g.fill(0.0);
        g[0] = beta;

        let mut k = 0;
        while k < m && iterations < opts.max_iters {
            precond(&basis[k], &mut z);
            apply(&z, &mut w);
            for i in 0..=k {
                let hik = dot(&w, &basis[i]);
                hess[i * m + k] = hik;
                for (wv, bv) in w.iter_mut().zip(&basis[i]) {
                    *wv -= hik * bv;
                }
            }
            let hnext = norm(&w);
            hess[(k + 1) * m + k] = hnext;
            if hnext > 0.0 {
                for (bv, wv) in basis[k + 1].iter_mut().zip(&w) {
                    *bv = wv / hnext;
                }
            }
            for i in 0..k {
                let (a, b) = (hess[i * m + k], hess[(i + 1) * m + k]);
                hess[i * m + k] = cs[i] * a + sn[i] * b;
                hess[(i + 1) * m + k] = -sn[i] * a + cs[i] * b;
            }
            let (a, b) = (hess[k * m + k], hess[(k + 1) * m + k]);
            let r = a.hypot(b);
            let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (a / r, b / r) };
            cs[k] = c;
            sn[k] = s;
            hess[k * m + k] = r;
            hess[(k + 1) * m + k] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            iterations += 1;
            k += 1;
            if g[k].abs() <= target || hnext == 0.0 {
                break;
            }
        }

        // back substitution on the k x k triangle, then x += M^{-1} V y
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in (i + 1)..k {
                s -= hess[i * m + j] * y[j];
            }
            y[i] = s / hess[i * m + i];
        }
        w.fill(0.0);
        for (yi, v) in y.iter().zip(&basis) {
            for (wv, bv) in w.iter_mut().zip(v) {
                *wv += yi * bv;
            }
        }
        precond(&w, &mut z);
        for (xv, zv) in x.iter_mut().zip(&z) {
            *xv += zv;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::LinearSolveFailed {
                relative_residual: f64::NAN,
                iterations,
            });
        }
    }
}
