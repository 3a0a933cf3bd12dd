//! Kronecker-structured inverses on the uniform periodic lattice.
//!
//! Every mass matrix is, per vector component, a Kronecker product of 1D
//! periodic mass matrices, and every incidence matrix is a sum of 1D
//! difference operators. This makes mass inverses and the two discrete
//! Laplacians that appear as pressure Schur complements exactly invertible
//! by fast diagonalization, at `O(n^4)` cost for `n^3` lattice points.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, Side};

use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::mesh::{Family, SpaceKind};

/// Dense `n x n` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "dense matrix size");
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn to_faer(&self) -> Mat<f64> {
        Mat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    fn from_faer(m: &Mat<f64>) -> Self {
        let n = m.nrows();
        Self::from_row_major(n, (0..n * n).map(|k| m[(k / n, k % n)]).collect())
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        Self::from_row_major(n, (0..n * n).map(|k| self.get(k % n, k / n)).collect())
    }

    pub fn matmul(&self, other: &Dense) -> Dense {
        Self::from_faer(&(self.to_faer() * other.to_faer()))
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn spd_inverse(&self) -> Result<Dense> {
        let llt = self.to_faer().llt(Side::Lower).map_err(|e| Error::Factorization {
            context: "1D mass inverse".into(),
            reason: format!("{e:?}"),
        })?;
        Ok(Self::from_faer(&llt.inverse()))
    }
}

/// `A_v = lambda B_v` for symmetric `A` and SPD `B`: returns `V` with
/// `V^T B V = I`, `V^T A V = diag(lambda)`, eigenvalues nondecreasing.
pub fn generalized_eigen(a: &Dense, b: &Dense) -> Result<(Dense, Vec<f64>)> {
    let evd_err = |e| Error::Factorization {
        context: "1D generalized eigenproblem".into(),
        reason: format!("{e:?}"),
    };
    let n = a.n;
    let eb = b.to_faer().self_adjoint_eigen(Side::Lower).map_err(evd_err)?;
    let (ub, sb) = (eb.U(), eb.S());
    let inv_sqrt = Mat::from_fn(n, n, |i, j| {
        (0..n).map(|k| ub[(i, k)] * ub[(j, k)] / sb[k].sqrt()).sum::<f64>()
    });
    let c = &inv_sqrt * a.to_faer() * &inv_sqrt;
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let ec = c.self_adjoint_eigen(Side::Lower).map_err(evd_err)?;
    let v = &inv_sqrt * ec.U();
    let lambda = (0..n).map(|k| ec.S()[k]).collect();
    Ok((Dense::from_faer(&v), lambda))
}

/// `y = (A_z ⊗ A_y ⊗ A_x) x` for `x` indexed `(iz n + iy) n + ix`.
pub fn apply_kron(mats: [&Dense; 3], x: &[f64]) -> Vec<f64> {
    let n = mats[0].n;
    assert_eq!(x.len(), n * n * n, "lattice vector length");
    let mut cur = x.to_vec();
    let mut next = vec![0.0; cur.len()];
    for (axis, m) in mats.iter().enumerate() {
        let stride = n.pow(axis as u32);
        for base in 0..n * n * n {
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for i in 0..n {
                let row = &m.data[i * n..(i + 1) * n];
                let mut acc = 0.0;
                for (j, r) in row.iter().enumerate() {
                    acc += r * cur[base + j * stride];
                }
                next[base + i * stride] = acc;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Periodic forward difference `(δ x)_j = x_{j+1} - x_j`.
fn difference(n: usize) -> Dense {
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        d[j * n + j] -= 1.0;
        d[j * n + (j + 1) % n] += 1.0;
    }
    Dense::from_row_major(n, d)
}

/// Fast-diagonalization pseudo-inverse of `sum_c ⊗_a (a == c ? A_a : B_a)`.
#[derive(Debug, Clone)]
struct KronLaplacian {
    v: [Dense; 3],
    vt: [Dense; 3],
    lambda: [Vec<f64>; 3],
}

impl KronLaplacian {
    fn new(a: [Dense; 3], b: [Dense; 3]) -> Result<Self> {
        let mut v = Vec::new();
        let mut lambda = Vec::new();
        for (aa, bb) in a.iter().zip(&b) {
            let (va, la) = generalized_eigen(aa, bb)?;
            v.push(va);
            lambda.push(la);
        }
        let v: [Dense; 3] = v.try_into().expect("three axes");
        let vt = [v[0].transpose(), v[1].transpose(), v[2].transpose()];
        let lambda: [Vec<f64>; 3] = lambda.try_into().expect("three axes");
        Ok(Self { v, vt, lambda })
    }

    /// Minimum-norm solution in the transformed basis; the constant mode
    /// (smallest eigenvalue on every axis) is dropped.
    fn pinv(&self, r: &[f64]) -> Vec<f64> {
        let n = self.v[0].n;
        let mut t = apply_kron([&self.vt[0], &self.vt[1], &self.vt[2]], r);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let idx = (iz * n + iy) * n + ix;
                    if idx == 0 {
                        t[idx] = 0.0;
                        continue;
                    }
                    t[idx] /= self.lambda[0][ix] + self.lambda[1][iy] + self.lambda[2][iz];
                }
            }
        }
        apply_kron([&self.v[0], &self.v[1], &self.v[2]], &t)
    }
}

/// Exact inverses of the mass matrices and pseudo-inverses of the nodal
/// and volume Laplacians `E_grad^T M E_grad` and `E_div N^{-1} E_div^T`.
#[derive(Debug, Clone)]
pub struct TensorOps {
    n: usize,
    nodal_inv: [Dense; 3],
    edge_inv: [Dense; 3],
    nodal_laplacian: KronLaplacian,
    volume_laplacian: KronLaplacian,
}

impl TensorOps {
    pub fn new(disc: &Discretization) -> Result<Self> {
        let n = disc.map(SpaceKind::G).lattice();
        let nodal: Vec<Dense> = (0..3)
            .map(|a| Dense::from_row_major(n, disc.axis_mass(a, Family::Nodal)))
            .collect();
        let edge: Vec<Dense> = (0..3)
            .map(|a| Dense::from_row_major(n, disc.axis_mass(a, Family::Edge)))
            .collect();
        let nodal_inv: [Dense; 3] = nodal
            .iter()
            .map(Dense::spd_inverse)
            .collect::<Result<Vec<_>>>()?
            .try_into()
            .expect("three axes");
        let edge_inv: [Dense; 3] = edge
            .iter()
            .map(Dense::spd_inverse)
            .collect::<Result<Vec<_>>>()?
            .try_into()
            .expect("three axes");
        let d = difference(n);
        let dt = d.transpose();
        let g_a = [0, 1, 2].map(|a| dt.matmul(&edge[a]).matmul(&d));
        let g_b = [nodal[0].clone(), nodal[1].clone(), nodal[2].clone()];
        let s_a = [0, 1, 2].map(|a| d.matmul(&nodal_inv[a]).matmul(&dt));
        let s_b = edge_inv.clone();
        Ok(Self {
            n,
            nodal_laplacian: KronLaplacian::new(g_a, g_b)?,
            volume_laplacian: KronLaplacian::new(s_a, s_b)?,
            nodal_inv,
            edge_inv,
        })
    }

    pub fn lattice(&self) -> usize {
        self.n
    }

    /// `mass(kind)^{-1} x`.
    pub fn mass_inverse(&self, kind: SpaceKind, x: &[f64]) -> Vec<f64> {
        let n3 = self.n.pow(3);
        let comps = kind.num_components();
        assert_eq!(x.len(), comps * n3, "coefficient vector length");
        let mut out = vec![0.0; x.len()];
        for c in 0..comps {
            let fam = kind.families(c);
            let mats = [0, 1, 2].map(|a| match fam[a] {
                Family::Nodal => &self.nodal_inv[a],
                Family::Edge => &self.edge_inv[a],
            });
            let xc: Vec<f64> = (0..n3).map(|l| x[comps * l + c]).collect();
            for (l, v) in apply_kron(mats, &xc).into_iter().enumerate() {
                out[comps * l + c] = v;
            }
        }
        out
    }

    /// Minimum-norm `p` with `E_grad^T M E_grad p = r` for `r` of zero sum.
    pub fn nodal_laplacian_pinv(&self, r: &[f64]) -> Vec<f64> {
        self.nodal_laplacian.pinv(r)
    }

    /// Minimum-norm `q` with `E_div N^{-1} E_div^T q = r` for `r` of zero
    /// sum.
    pub fn volume_laplacian_pinv(&self, r: &[f64]) -> Vec<f64> {
        self.volume_laplacian.pinv(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PeriodicMesh;
    use crate::sparse;
    use rand::{Rng, SeedableRng};

    fn disc(k: usize, degree: usize) -> Discretization {
        let mesh = PeriodicMesh::new(k, [0.0, -1.0, 0.5], [1.0, 1.0, 2.0]).unwrap();
        Discretization::new(mesh, degree).unwrap()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn zero_sum(mut x: Vec<f64>) -> Vec<f64> {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        x
    }

    #[test]
    fn kron_matches_explicit_product() {
        let n = 3;
        let m = |s: f64| Dense::from_row_major(n, (0..9).map(|k| s + k as f64).collect());
        let (a, b, c) = (m(0.5), m(-2.0), m(1.0));
        let x = random(27, 1);
        let y = apply_kron([&a, &b, &c], &x);
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let mut acc = 0.0;
                    for jz in 0..n {
                        for jy in 0..n {
                            for jx in 0..n {
                                acc += c.get(iz, jz) * b.get(iy, jy) * a.get(ix, jx) * x[(jz * n + jy) * n + jx];
                            }
                        }
                    }
                    assert!((acc - y[(iz * n + iy) * n + ix]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn generalized_eigen_diagonalizes() {
        let d = disc(3, 2);
        let a_mat = Dense::from_row_major(6, d.axis_mass(0, Family::Edge));
        let b_mat = Dense::from_row_major(6, d.axis_mass(1, Family::Nodal));
        let (v, lambda) = generalized_eigen(&a_mat, &b_mat).unwrap();
        let vtbv = v.transpose().matmul(&b_mat).matmul(&v);
        let vtav = v.transpose().matmul(&a_mat).matmul(&v);
        for i in 0..6 {
            for j in 0..6 {
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((vtbv.get(i, j) - id).abs() < 1e-12);
                let l = if i == j { lambda[i] } else { 0.0 };
                assert!((vtav.get(i, j) - l).abs() < 1e-12 * lambda[5]);
            }
        }
    }

    #[test]
    fn mass_inverse_inverts_assembled_mass() {
        for degree in [1, 2, 3] {
            let d = disc(2, degree);
            let ops = TensorOps::new(&d).unwrap();
            for kind in SpaceKind::ALL {
                let x = random(d.map(kind).global_count(), 7);
                let y = ops.mass_inverse(kind, &sparse::matvec(d.mass(kind), &x));
                let err = sparse::norm_inf(&sparse::axpby(1.0, &y, -1.0, &x));
                assert!(err < 1e-11, "{kind:?} N={degree}: {err}");
            }
        }
    }

    #[test]
    fn nodal_laplacian_pinv_solves() {
        let d = disc(3, 2);
        let ops = TensorOps::new(&d).unwrap();
        let inc = d.incidence();
        let r = zero_sum(random(d.map(SpaceKind::G).global_count(), 3));
        let p = ops.nodal_laplacian_pinv(&r);
        let lp = inc.grad.to_real();
        let back = sparse::matvec_t(&lp, &sparse::matvec(d.mass(SpaceKind::C), &inc.grad.apply(&p)));
        let err = sparse::norm_inf(&sparse::axpby(1.0, &back, -1.0, &r));
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn volume_laplacian_pinv_solves() {
        let d = disc(3, 2);
        let ops = TensorOps::new(&d).unwrap();
        let div = d.incidence().div.to_real();
        let r = zero_sum(random(d.map(SpaceKind::S).global_count(), 4));
        let q = ops.volume_laplacian_pinv(&r);
        let flux = ops.mass_inverse(SpaceKind::D, &sparse::matvec_t(&div, &q));
        let back = sparse::matvec(&div, &flux);
        let err = sparse::norm_inf(&sparse::axpby(1.0, &back, -1.0, &r));
        assert!(err < 1e-10, "{err}");
    }
}
