//! Restarted GMRES with right preconditioning.

/// Outcome of a Krylov solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovStats {
    pub iterations: usize,
    /// Final `|b - A x|_2 / |b|_2`, recomputed from the operator.
    pub relative_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresParams {
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-13,
            restart: 80,
            max_iterations: 800,
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solve `A x = b` from the initial guess `x`, where `apply(v)` returns
/// `A v` and `precond(v)` approximates `A^{-1} v`.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    params: GmresParams,
) -> KrylovStats {
    let n = b.len();
    let b_norm = norm(b).max(f64::MIN_POSITIVE);
    let m = params.restart.max(1);
    let mut iterations = 0;
    loop {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta / b_norm <= params.tolerance || iterations >= params.max_iterations {
            return KrylovStats {
                iterations,
                relative_residual: beta / b_norm,
                converged: beta / b_norm <= params.tolerance,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut z_basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && iterations < params.max_iterations {
            let z = precond(&basis[k]);
            let mut w = apply(&z);
            z_basis.push(z);
            // modified Gram-Schmidt, applied twice for orthogonality at
            // tight tolerances
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let dot: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
                    h[i][k] += dot;
                    w.iter_mut().zip(v).for_each(|(a, b)| *a -= dot * b);
                }
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() / b_norm <= 0.5 * params.tolerance || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, z) in y.iter().zip(&z_basis) {
            for j in 0..n {
                x[j] += yi * z[j];
            }
        }
    }
}
