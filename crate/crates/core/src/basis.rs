//! One-dimensional Gauss-Lobatto-Legendre machinery.
//!
//! The nodal polynomials `l_i` interpolate at the GLL points; the edge
//! polynomials `e_i = -sum_{k<i} l_k'` histopolate between consecutive GLL
//! points, so that differentiating a nodal expansion yields an edge expansion
//! whose coefficients are plain differences of the nodal ones.

use crate::error::{Error, Result};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Dense polynomial in monomial form, `c[0] + c[1] x + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::constant(0.0);
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    fn mul_linear(&self, root: f64, scale: f64) -> Poly {
        // self * (x - root) * scale
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[k + 1] += c * scale;
            out[k] -= c * root * scale;
        }
        Poly::new(out)
    }

    fn add_scaled(&mut self, other: &Poly, s: f64) {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0.0);
        }
        for (a, &b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }
}

/// Legendre polynomial `P_n(x)` and its derivative, by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    let (mut d_prev, mut d) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        let d_next = d_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

/// A one-dimensional quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature1D {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.nodes.len() - 3
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Integrate over `[a, b]` by affine mapping.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.integrate(|x| f(mid + half * x))
    }
}

/// Gauss-Lobatto-Legendre rule with `degree + 1` points: the endpoints plus
/// the roots of `P_N'`.
pub fn gll_rule(degree: usize) -> Result<Quadrature1D> {
    if degree == 0 {
        return Err(Error::InvalidDegree(degree));
    }
    let n = degree;
    let np = n + 1;
    let mut nodes = vec![0.0; np];
    // Newton on (1 - x^2) P_N'(x) = 0, written as x P_N - P_{N-1} = 0 for the
    // interior points, seeded with Chebyshev-Gauss-Lobatto points.
    for (i, node) in nodes.iter_mut().enumerate() {
        let mut x = -(std::f64::consts::PI * i as f64 / n as f64).cos();
        if i == 0 || i == n {
            *node = x;
            continue;
        }
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, _) = legendre(n, x);
            let (pm1, _) = legendre(n - 1, x);
            let dx = (x * p - pm1) / (np as f64 * p);
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::QuadratureNotConverged(degree));
        }
        *node = x;
    }
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    // enforce exact antisymmetry
    for i in 0..np / 2 {
        let a = 0.5 * (nodes[n - i] - nodes[i]);
        nodes[i] = -a;
        nodes[n - i] = a;
    }
    if np % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let nf = n as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok(Quadrature1D { nodes, weights })
}

/// Lagrange polynomials through the GLL nodes of degree `N`.
#[derive(Debug, Clone)]
pub struct NodalBasis1D {
    nodes: Vec<f64>,
    polys: Vec<Poly>,
    derivs: Vec<Poly>,
}

impl NodalBasis1D {
    pub fn new(degree: usize) -> Result<Self> {
        let nodes = gll_rule(degree)?.nodes;
        let polys: Vec<Poly> = (0..nodes.len())
            .map(|i| {
                nodes
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != i)
                    .fold(Poly::constant(1.0), |p, (_, &xm)| {
                        p.mul_linear(xm, 1.0 / (nodes[i] - xm))
                    })
            })
            .collect();
        let derivs = polys.iter().map(Poly::derivative).collect();
        Ok(Self { nodes, polys, derivs })
    }

    pub fn degree(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn poly(&self, i: usize) -> &Poly {
        &self.polys[i]
    }

    pub fn eval(&self, i: usize, x: f64) -> Result<f64> {
        self.polys.get(i).map(|p| p.eval(x)).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.polys.len(),
        })
    }

    pub fn eval_deriv(&self, i: usize, x: f64) -> Result<f64> {
        self.derivs.get(i).map(|p| p.eval(x)).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.derivs.len(),
        })
    }
}

/// Edge (histopolation) polynomials `e_1 ... e_N`, stored zero-based.
#[derive(Debug, Clone)]
pub struct EdgeBasis1D {
    polys: Vec<Poly>,
    derivs: Vec<Poly>,
}

impl EdgeBasis1D {
    pub fn new(nodal: &NodalBasis1D) -> Self {
        let n = nodal.degree();
        let mut polys = Vec::with_capacity(n);
        let mut acc = Poly::constant(0.0);
        for k in 0..n {
            acc.add_scaled(&nodal.derivs[k], -1.0);
            polys.push(acc.clone());
        }
        let derivs = polys.iter().map(Poly::derivative).collect();
        Self { polys, derivs }
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn poly(&self, i: usize) -> &Poly {
        &self.polys[i]
    }

    /// `e_{i+1}(x)`; integrates to one over `[x_i, x_{i+1}]`.
    pub fn eval(&self, i: usize, x: f64) -> Result<f64> {
        self.polys.get(i).map(|p| p.eval(x)).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.polys.len(),
        })
    }

    pub fn eval_deriv(&self, i: usize, x: f64) -> Result<f64> {
        self.derivs.get(i).map(|p| p.eval(x)).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.derivs.len(),
        })
    }
}

/// Both 1D families of one degree, as used by every space kind.
#[derive(Debug, Clone)]
pub struct Basis1D {
    pub nodal: NodalBasis1D,
    pub edge: EdgeBasis1D,
}

impl Basis1D {
    pub fn new(degree: usize) -> Result<Self> {
        let nodal = NodalBasis1D::new(degree)?;
        let edge = EdgeBasis1D::new(&nodal);
        Ok(Self { nodal, edge })
    }

    pub fn degree(&self) -> usize {
        self.nodal.degree()
    }

    /// Tabulate values (and first derivatives) of both families at `points`.
    pub fn tabulate(&self, points: &[f64]) -> Tabulation1D {
        let tab = |polys: &[Poly]| -> Vec<Vec<f64>> {
            polys
                .iter()
                .map(|p| points.iter().map(|&x| p.eval(x)).collect())
                .collect()
        };
        Tabulation1D {
            nodal: tab(&self.nodal.polys),
            nodal_deriv: tab(&self.nodal.derivs),
            edge: tab(&self.edge.polys),
            edge_deriv: tab(&self.edge.derivs),
        }
    }
}

/// Reference-coordinate values of the 1D bases at a set of points, indexed
/// `[function][point]`.
#[derive(Debug, Clone)]
pub struct Tabulation1D {
    pub nodal: Vec<Vec<f64>>,
    pub nodal_deriv: Vec<Vec<f64>>,
    pub edge: Vec<Vec<f64>>,
    pub edge_deriv: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gll_degree_one_is_trapezoid() {
        let q = gll_rule(1).unwrap();
        assert_eq!(q.nodes, vec![-1.0, 1.0]);
        assert_abs_diff_eq!(q.weights[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.weights[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gll_degree_two_matches_simpson() {
        // (1 - x^2) P2'(x) = 3x(1 - x^2) -> {-1, 0, 1}; weights 2/(6 P2^2)
        let q = gll_rule(2).unwrap();
        for (a, b) in q.nodes.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        for (a, b) in q.weights.iter().zip([1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn gll_weights_sum_to_two_and_integrate_monomials() {
        for n in 1..=10 {
            let q = gll_rule(n).unwrap();
            assert_abs_diff_eq!(q.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for p in 0..=q.exact_degree() {
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                let got = q.integrate(|x| x.powi(p as i32));
                assert_abs_diff_eq!(got, exact, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn degree_zero_is_rejected() {
        assert!(matches!(gll_rule(0), Err(Error::InvalidDegree(0))));
    }

    #[test]
    fn nodal_kronecker_and_partition_of_unity() {
        for n in 1..=4 {
            let b = NodalBasis1D::new(n).unwrap();
            for i in 0..=n {
                for (j, &xj) in b.nodes().iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(b.eval(i, xj).unwrap(), expect, epsilon = 1e-13);
                }
            }
            for k in 0..=20 {
                let x = -1.0 + 0.1 * k as f64;
                let s: f64 = (0..=n).map(|i| b.eval(i, x).unwrap()).sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn edge_functions_histopolate() {
        let fine = gll_rule(12).unwrap();
        for n in 1..=4 {
            let b = Basis1D::new(n).unwrap();
            let x = b.nodal.nodes().to_vec();
            for i in 0..n {
                for j in 0..n {
                    let got = fine.integrate_on(x[j], x[j + 1], |s| b.edge.eval(i, s).unwrap());
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn degree_one_edge_function_is_one_half() {
        // e_1 = -l_0' with l_0 = (1 - x)/2
        let b = Basis1D::new(1).unwrap();
        for k in 0..=10 {
            let x = -1.0 + 0.2 * k as f64;
            assert_abs_diff_eq!(b.edge.eval(0, x).unwrap(), 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn derivative_of_nodal_expansion_is_incidence() {
        for n in 1..=4 {
            let b = Basis1D::new(n).unwrap();
            let c: Vec<f64> = (0..=n).map(|i| (i as f64 * 1.7).sin() + 0.3 * i as f64).collect();
            for k in 0..=16 {
                let x = -1.0 + 0.125 * k as f64;
                let lhs: f64 = (0..=n).map(|i| c[i] * b.nodal.eval_deriv(i, x).unwrap()).sum();
                let rhs: f64 = (0..n).map(|i| (c[i + 1] - c[i]) * b.edge.eval(i, x).unwrap()).sum();
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let b = Basis1D::new(2).unwrap();
        assert!(b.nodal.eval(3, 0.0).is_err());
        assert!(b.edge.eval(2, 0.0).is_err());
    }
}
