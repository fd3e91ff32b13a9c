//! Matrix-free Krylov solvers with a diagonal (Jacobi) preconditioner.

use rayon::prelude::*;

use crate::torus::dot;

/// A linear map applied without forming its matrix.
pub trait LinearOperator: Sync {
    fn len(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovSettings {
    /// Stop once `‖b − Ax‖ ≤ rtol · ‖b‖`.
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-2,
            max_iter: 500,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn precondition(inv_diag: Option<&[f64]>, r: &[f64], z: &mut [f64]) {
    match inv_diag {
        Some(d) => z
            .par_iter_mut()
            .zip(r.par_iter().zip(d.par_iter()))
            .for_each(|(z, (r, d))| *z = r * d),
        None => z.copy_from_slice(r),
    }
}

fn residual<A: LinearOperator>(op: &A, b: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    r.par_iter_mut()
        .zip(b.par_iter())
        .for_each(|(r, b)| *r = b - *r);
}

/// BiCGSTAB, right-preconditioned by `inv_diag` when given. `x` holds the
/// initial guess on entry.
pub fn bicgstab<A: LinearOperator>(
    op: &A,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    settings: KrylovSettings,
) -> KrylovOutcome {
    let m = op.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; m];
    residual(op, b, x, &mut r);
    let mut rel = norm(&r) / bnorm;
    if rel <= settings.rtol {
        return KrylovOutcome {
            iterations: 0,
            relative_residual: rel,
            converged: true,
        };
    }
    let mut r_hat = r.clone();
    let mut p = vec![0.0; m];
    let mut v = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut s = vec![0.0; m];
    let mut z = vec![0.0; m];
    let mut t = vec![0.0; m];
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);

    for it in 1..=settings.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 || omega == 0.0 {
            // Breakdown: restart the shadow space from the current residual.
            r_hat.copy_from_slice(&r);
            p.iter_mut().for_each(|q| *q = 0.0);
            v.iter_mut().for_each(|q| *q = 0.0);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        p.par_iter_mut()
            .zip(r.par_iter().zip(v.par_iter()))
            .for_each(|(p, (r, v))| *p = r + beta * (*p - omega * v));
        precondition(inv_diag, &p, &mut y);
        op.apply(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            p.iter_mut().for_each(|q| *q = 0.0);
            v.iter_mut().for_each(|q| *q = 0.0);
            continue;
        }
        alpha = rho / denom;
        s.par_iter_mut()
            .zip(r.par_iter().zip(v.par_iter()))
            .for_each(|(s, (r, v))| *s = r - alpha * v);
        let snorm = norm(&s) / bnorm;
        if snorm <= settings.rtol {
            x.par_iter_mut()
                .zip(y.par_iter())
                .for_each(|(x, y)| *x += alpha * y);
            return KrylovOutcome {
                iterations: it,
                relative_residual: snorm,
                converged: true,
            };
        }
        precondition(inv_diag, &s, &mut z);
        op.apply(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        x.par_iter_mut()
            .zip(y.par_iter().zip(z.par_iter()))
            .for_each(|(x, (y, z))| *x += alpha * y + omega * z);
        r.par_iter_mut()
            .zip(s.par_iter().zip(t.par_iter()))
            .for_each(|(r, (s, t))| *r = s - omega * t);
        rel = norm(&r) / bnorm;
        if rel <= settings.rtol {
            return KrylovOutcome {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
    }
    residual(op, b, x, &mut r);
    KrylovOutcome {
        iterations: settings.max_iter,
        relative_residual: norm(&r) / bnorm,
        converged: false,
    }
}

/// Preconditioned conjugate gradients for symmetric positive-definite maps.
pub fn conjugate_gradient<A: LinearOperator>(
    op: &A,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x: &mut [f64],
    settings: KrylovSettings,
) -> KrylovOutcome {
    let m = op.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut r = vec![0.0; m];
    residual(op, b, x, &mut r);
    let mut z = vec![0.0; m];
    precondition(inv_diag, &r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; m];
    let mut rz = dot(&r, &z);
    for it in 1..=settings.max_iter {
        op.apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut()
            .zip(p.par_iter())
            .for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut()
            .zip(ap.par_iter())
            .for_each(|(r, q)| *r -= alpha * q);
        let rel = norm(&r) / bnorm;
        if rel <= settings.rtol {
            return KrylovOutcome {
                iterations: it,
                relative_residual: rel,
                converged: true,
            };
        }
        precondition(inv_diag, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut()
            .zip(z.par_iter())
            .for_each(|(p, z)| *p = z + beta * *p);
    }
    KrylovOutcome {
        iterations: settings.max_iter,
        relative_residual: norm(&r) / bnorm,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Periodic 1D operator `−u'' + c·u` with a nonsymmetric first-order term.
    struct Conv {
        m: usize,
        c: f64,
        drift: f64,
    }

    impl LinearOperator for Conv {
        fn len(&self) -> usize {
            self.m
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let m = self.m;
            for i in 0..m {
                let l = x[(i + m - 1) % m];
                let r = x[(i + 1) % m];
                y[i] = 2.0 * x[i] - l - r + self.c * x[i] + self.drift * (r - l);
            }
        }
    }

    fn check<F>(solve: F, drift: f64)
    where
        F: Fn(&Conv, Option<&[f64]>, &[f64], &mut [f64], KrylovSettings) -> KrylovOutcome,
    {
        let op = Conv {
            m: 64,
            c: 0.3,
            drift,
        };
        let exact: Vec<f64> = (0..64).map(|i| ((i as f64) * 0.3).sin()).collect();
        let mut b = vec![0.0; 64];
        op.apply(&exact, &mut b);
        let inv = vec![1.0 / 2.3; 64];
        let mut x = vec![0.0; 64];
        let out = solve(
            &op,
            Some(&inv),
            &b,
            &mut x,
            KrylovSettings {
                rtol: 1e-12,
                max_iter: 1000,
            },
        );
        assert!(out.converged, "{out:?}");
        for (a, e) in x.iter().zip(&exact) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn bicgstab_solves_nonsymmetric() {
        check(bicgstab, 0.2);
    }

    #[test]
    fn cg_solves_spd() {
        check(conjugate_gradient, 0.0);
    }
}
