//! Global matrices, load vectors, mimetic projection and evaluation of
//! discrete fields.
//!
//! The mesh is uniform and affine, so every element shares one reference
//! element matrix. Mass matrices and the weak derivative operators are
//! tensor products of 1D quadrature matrices; the rotation matrices depend on
//! a vorticity field and are integrated element by element on the 3D
//! quadrature lattice.

use crate::basis::{gll_rule, Basis1D, Quadrature1D};
use crate::error::{Error, Result};
use crate::mesh::{DofMap, DofMaps, Family, IncidenceSet, LocalDof, PeriodicMesh, SpaceKind};
use crate::sparse::{self, SpMat};

/// GLL points per axis beyond `N + 1` used for inner products.
const EXTRA_QUAD_POINTS: usize = 1;
/// Degree of the GLL rule used for loads and error norms.
const MIN_FINE_DEGREE: usize = 8;
/// Degree of the GLL rule applied on each lattice sub-interval when
/// computing edge, face and volume integrals of analytic fields.
const REDUCTION_DEGREE: usize = 11;

/// Coefficient vector tagged with its space and time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub kind: SpaceKind,
    pub coeffs: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn new(kind: SpaceKind, coeffs: Vec<f64>, time: f64) -> Self {
        Self { kind, coeffs, time }
    }

    pub fn zeros(map: &DofMap, time: f64) -> Self {
        Self::new(map.kind(), vec![0.0; map.global_count()], time)
    }

    /// Checks kind, length and finiteness against a DOF map.
    pub fn check(&self, map: &DofMap) -> Result<()> {
        if self.kind != map.kind() {
            return Err(Error::KindMismatch {
                expected: map.kind(),
                got: self.kind,
            });
        }
        if self.coeffs.len() != map.global_count() {
            return Err(Error::LengthMismatch {
                expected: map.global_count(),
                got: self.coeffs.len(),
            });
        }
        if !sparse::is_finite(&self.coeffs) {
            return Err(Error::NonFinite {
                context: format!("{} field at t = {}", self.kind.name(), self.time),
            });
        }
        Ok(())
    }
}

/// The constant global matrices of the scheme.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    /// Mass of the nodal scalar space.
    pub mass_g: SpMat,
    /// Mass of the edge vector space (`M`).
    pub mass_c: SpMat,
    /// Mass of the face vector space (`N`).
    pub mass_d: SpMat,
    /// Mass of the volume scalar space.
    pub mass_s: SpMat,
    /// `<curl tau_j, sigma_i>`, face rows by edge columns.
    pub curl: SpMat,
    /// `<div sigma_j, chi_i>`, volume rows by face columns.
    pub div: SpMat,
    /// `<grad gamma_j, tau_i>`, edge rows by node columns.
    pub grad: SpMat,
    pub incidence: IncidenceSet,
}

/// Physical-space 1D basis values on one axis, indexed `[function][point]`.
#[derive(Debug, Clone)]
struct AxisTab {
    nodal: Vec<Vec<f64>>,
    nodal_d: Vec<Vec<f64>>,
    edge: Vec<Vec<f64>>,
    edge_d: Vec<Vec<f64>>,
}

impl AxisTab {
    fn new(basis: &Basis1D, points: &[f64], h: f64) -> Self {
        let t = basis.tabulate(points);
        let s = 2.0 / h;
        let scale = |m: Vec<Vec<f64>>, f: f64| -> Vec<Vec<f64>> {
            m.into_iter().map(|r| r.into_iter().map(|v| v * f).collect()).collect()
        };
        Self {
            nodal: t.nodal,
            nodal_d: scale(t.nodal_deriv, s),
            edge: scale(t.edge, s),
            edge_d: scale(t.edge_deriv, s * s),
        }
    }

    fn get(&self, family: Family, deriv: bool) -> &[Vec<f64>] {
        match (family, deriv) {
            (Family::Nodal, false) => &self.nodal,
            (Family::Nodal, true) => &self.nodal_d,
            (Family::Edge, false) => &self.edge,
            (Family::Edge, true) => &self.edge_d,
        }
    }
}

/// Local basis functions of one space tabulated on a tensor lattice of
/// reference points inside an element.
#[derive(Debug, Clone)]
pub struct LocalTab {
    kind: SpaceKind,
    per_axis: usize,
    components: Vec<usize>,
    values: Vec<Vec<f64>>,
    divergence: Vec<Vec<f64>>,
}

impl LocalTab {
    fn new(kind: SpaceKind, map: &DofMap, axes: &[AxisTab; 3], per_axis: usize) -> Self {
        let n_pts = per_axis.pow(3);
        let mut values = Vec::with_capacity(map.local_count());
        let mut divergence = Vec::with_capacity(map.local_count());
        let mut components = Vec::with_capacity(map.local_count());
        for dof in map.local_dofs() {
            let fam = kind.families(dof.component);
            let mut v = vec![0.0; n_pts];
            let mut dv = vec![0.0; n_pts];
            for (q, (vq, dq)) in v.iter_mut().zip(dv.iter_mut()).enumerate() {
                let qi = [q % per_axis, (q / per_axis) % per_axis, q / (per_axis * per_axis)];
                let mut prod = 1.0;
                let mut dprod = 1.0;
                for a in 0..3 {
                    let val = axes[a].get(fam[a], false)[dof.index[a]][qi[a]];
                    prod *= val;
                    dprod *= if a == dof.component {
                        axes[a].get(fam[a], true)[dof.index[a]][qi[a]]
                    } else {
                        val
                    };
                }
                *vq = prod;
                *dq = dprod;
            }
            values.push(v);
            divergence.push(if kind.is_vector() { dv } else { Vec::new() });
            components.push(dof.component);
        }
        Self {
            kind,
            per_axis,
            components,
            values,
            divergence,
        }
    }

    pub fn num_points(&self) -> usize {
        self.per_axis.pow(3)
    }

    /// Field values at every lattice point of element `e`. Scalars are
    /// returned in the first slot.
    pub fn element_values(&self, coeffs: &[f64], dofs: &[usize]) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.num_points()];
        for ((vals, &c), &g) in self.values.iter().zip(&self.components).zip(dofs) {
            let a = coeffs[g];
            if a == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(vals) {
                o[c] += a * v;
            }
        }
        out
    }

    /// Pointwise divergence of a vector field inside element `e`.
    pub fn element_divergence(&self, coeffs: &[f64], dofs: &[usize]) -> Vec<f64> {
        assert!(self.kind.is_vector(), "divergence of a scalar field");
        let mut out = vec![0.0; self.num_points()];
        for (vals, &g) in self.divergence.iter().zip(dofs) {
            let a = coeffs[g];
            for (o, v) in out.iter_mut().zip(vals) {
                *o += a * v;
            }
        }
        out
    }
}

/// One term of a tensor-product bilinear form: test component, trial
/// component, coefficient and which axis (if any) differentiates the trial
/// function.
struct Term {
    test: usize,
    trial: usize,
    coef: f64,
    trial_deriv_axis: Option<usize>,
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    let (i, j, k) = (i as i64, j as i64, k as i64);
    ((i - j) * (j - k) * (k - i)) as f64 / 2.0
}

/// Mesh, DOF maps, quadrature and constant matrices of one discretization.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: PeriodicMesh,
    degree: usize,
    maps: DofMaps,
    basis: Basis1D,
    quad: Quadrature1D,
    fine: Quadrature1D,
    quad_axes: [AxisTab; 3],
    quad_c: LocalTab,
    quad_d: LocalTab,
    fine_c: LocalTab,
    fine_d: LocalTab,
    fine_weights: Vec<f64>,
    quad_weights: Vec<f64>,
    matrices: SystemMatrices,
}

impl Discretization {
    pub fn new(mesh: PeriodicMesh, degree: usize) -> Result<Self> {
        let maps = DofMaps::new(&mesh, degree)?;
        let basis = Basis1D::new(degree)?;
        let quad = gll_rule(degree + 1 + EXTRA_QUAD_POINTS)?;
        let fine = gll_rule((degree + 4).max(MIN_FINE_DEGREE))?;
        let h = mesh.element_size();
        let quad_axes = [0, 1, 2].map(|a| AxisTab::new(&basis, &quad.nodes, h[a]));
        let fine_axes = [0, 1, 2].map(|a| AxisTab::new(&basis, &fine.nodes, h[a]));
        let incidence = IncidenceSet::new(&maps);

        let quad_c = LocalTab::new(SpaceKind::C, &maps.c, &quad_axes, quad.len());
        let quad_d = LocalTab::new(SpaceKind::D, &maps.d, &quad_axes, quad.len());
        let fine_c = LocalTab::new(SpaceKind::C, &maps.c, &fine_axes, fine.len());
        let fine_d = LocalTab::new(SpaceKind::D, &maps.d, &fine_axes, fine.len());
        let quad_weights = tensor_weights(&quad, h);
        let fine_weights = tensor_weights(&fine, h);

        let mut disc = Self {
            mesh,
            degree,
            maps,
            basis,
            quad,
            fine,
            quad_axes,
            quad_c,
            quad_d,
            fine_c,
            fine_d,
            fine_weights,
            quad_weights,
            matrices: SystemMatrices {
                mass_g: sparse::zero(0, 0),
                mass_c: sparse::zero(0, 0),
                mass_d: sparse::zero(0, 0),
                mass_s: sparse::zero(0, 0),
                curl: sparse::zero(0, 0),
                div: sparse::zero(0, 0),
                grad: sparse::zero(0, 0),
                incidence,
            },
        };
        disc.matrices.mass_g = disc.assemble_mass(SpaceKind::G);
        disc.matrices.mass_c = disc.assemble_mass(SpaceKind::C);
        disc.matrices.mass_d = disc.assemble_mass(SpaceKind::D);
        disc.matrices.mass_s = disc.assemble_mass(SpaceKind::S);
        disc.matrices.curl = disc.assemble_curl();
        disc.matrices.div = disc.assemble_div();
        disc.matrices.grad = disc.assemble_grad();
        Ok(disc)
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn maps(&self) -> &DofMaps {
        &self.maps
    }

    pub fn map(&self, kind: SpaceKind) -> &DofMap {
        self.maps.get(kind)
    }

    pub fn matrices(&self) -> &SystemMatrices {
        &self.matrices
    }

    pub fn incidence(&self) -> &IncidenceSet {
        &self.matrices.incidence
    }

    /// Quadrature rule of the inner products, per axis.
    pub fn quadrature(&self) -> &Quadrature1D {
        &self.quad
    }

    pub fn mass(&self, kind: SpaceKind) -> &SpMat {
        match kind {
            SpaceKind::G => &self.matrices.mass_g,
            SpaceKind::C => &self.matrices.mass_c,
            SpaceKind::D => &self.matrices.mass_d,
            SpaceKind::S => &self.matrices.mass_s,
        }
    }

    /// 1D matrix `int test_i trial_j` on one axis with the inner-product rule.
    fn axis_matrix(&self, axis: usize, test: Family, trial: Family, trial_deriv: bool) -> Vec<Vec<f64>> {
        let h = self.mesh.element_size()[axis];
        let tab = &self.quad_axes[axis];
        let a = tab.get(test, false);
        let b = tab.get(trial, trial_deriv);
        a.iter()
            .map(|ai| {
                b.iter()
                    .map(|bj| {
                        self.quad
                            .weights
                            .iter()
                            .zip(ai.iter().zip(bj))
                            .map(|(w, (x, y))| w * (x * y))
                            .sum::<f64>()
                            * (h / 2.0)
                    })
                    .collect()
            })
            .collect()
    }

    /// Global 1D mass matrix of one family along one axis, `n x n` row-major
    /// with `n = K N`. Every global mass matrix is a Kronecker product of
    /// these per component.
    pub fn axis_mass(&self, axis: usize, family: Family) -> Vec<f64> {
        let n = self.maps.g.lattice();
        let degree = self.degree;
        let local = self.axis_matrix(axis, family, family, false);
        let mut out = vec![0.0; n * n];
        for k in 0..self.mesh.cells_per_axis() {
            for (i, row) in local.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let (gi, gj) = ((k * degree + i) % n, (k * degree + j) % n);
                    out[gi * n + gj] += v;
                }
            }
        }
        out
    }

    /// Assemble a bilinear form that factorizes along the axes.
    fn tensor_operator(&self, test_kind: SpaceKind, trial_kind: SpaceKind, terms: &[Term]) -> SpMat {
        let symmetric =
            test_kind == trial_kind && terms.iter().all(|t| t.test == t.trial && t.trial_deriv_axis.is_none());
        let test_map = self.map(test_kind);
        let trial_map = self.map(trial_kind);
        let nt = test_map.local_count();
        let nr = trial_map.local_count();
        let mut local = vec![0.0; nt * nr];
        for term in terms {
            let tf = test_kind.families(term.test);
            let rf = trial_kind.families(term.trial);
            let axes: Vec<Vec<Vec<f64>>> = (0..3)
                .map(|a| self.axis_matrix(a, tf[a], rf[a], term.trial_deriv_axis == Some(a)))
                .collect();
            for (i, ti) in test_map.local_dofs().iter().enumerate() {
                if ti.component != term.test {
                    continue;
                }
                for (j, rj) in trial_map.local_dofs().iter().enumerate() {
                    if rj.component != term.trial {
                        continue;
                    }
                    let v = (0..3).fold(term.coef, |acc, a| acc * axes[a][ti.index[a]][rj.index[a]]);
                    local[i * nr + j] += v;
                }
            }
        }
        let mut tri = Vec::with_capacity(self.mesh.num_elements() * nt * nr);
        for e in 0..self.mesh.num_elements() {
            let rows = test_map.element_dofs(e);
            let cols = trial_map.element_dofs(e);
            for (i, &gi) in rows.iter().enumerate() {
                for (j, &gj) in cols.iter().enumerate() {
                    let v = local[i * nr + j];
                    if v == 0.0 || (symmetric && gi > gj) {
                        continue;
                    }
                    tri.push((gi, gj, v));
                }
            }
        }
        let (nrows, ncols) = (test_map.global_count(), trial_map.global_count());
        if !symmetric {
            return sparse::from_triplets(nrows, ncols, &tri);
        }
        // sum the upper triangle once, then mirror it so that the result is
        // symmetric bit for bit regardless of summation order
        let upper = sparse::from_triplets(nrows, ncols, &tri);
        let full: Vec<(usize, usize, f64)> = sparse::entries(&upper)
            .flat_map(|(i, j, v)| {
                let mirror = (i != j).then_some((j, i, v));
                std::iter::once((i, j, v)).chain(mirror)
            })
            .collect();
        sparse::from_triplets(nrows, ncols, &full)
    }

    pub fn assemble_mass(&self, kind: SpaceKind) -> SpMat {
        let terms: Vec<Term> = (0..kind.num_components())
            .map(|c| Term {
                test: c,
                trial: c,
                coef: 1.0,
                trial_deriv_axis: None,
            })
            .collect();
        self.tensor_operator(kind, kind, &terms)
    }

    /// `<curl tau_j, sigma_i>` by quadrature.
    pub fn assemble_curl(&self) -> SpMat {
        let mut terms = Vec::new();
        for r in 0..3 {
            for q in 0..3 {
                if r == q {
                    continue;
                }
                let s = 3 - r - q;
                terms.push(Term {
                    test: r,
                    trial: q,
                    coef: levi_civita(r, s, q),
                    trial_deriv_axis: Some(s),
                });
            }
        }
        self.tensor_operator(SpaceKind::D, SpaceKind::C, &terms)
    }

    /// `<div sigma_j, chi_i>` by quadrature.
    pub fn assemble_div(&self) -> SpMat {
        let terms: Vec<Term> = (0..3)
            .map(|d| Term {
                test: 0,
                trial: d,
                coef: 1.0,
                trial_deriv_axis: Some(d),
            })
            .collect();
        self.tensor_operator(SpaceKind::S, SpaceKind::D, &terms)
    }

    /// `<grad gamma_j, tau_i>` by quadrature.
    pub fn assemble_grad(&self) -> SpMat {
        let terms: Vec<Term> = (0..3)
            .map(|d| Term {
                test: d,
                trial: 0,
                coef: 1.0,
                trial_deriv_axis: Some(d),
            })
            .collect();
        self.tensor_operator(SpaceKind::C, SpaceKind::G, &terms)
    }

    /// `R_ij = <w x phi_j, phi_i>` on the space of `w` (C or D), with the
    /// full local pattern stored so that it does not depend on `w`.
    pub fn assemble_rotation(&self, w: &Field) -> Result<SpMat> {
        let kind = w.kind;
        let map = self.map(kind);
        w.check(map)?;
        let tab = match kind {
            SpaceKind::C => &self.quad_c,
            SpaceKind::D => &self.quad_d,
            _ => {
                return Err(Error::KindMismatch {
                    expected: SpaceKind::D,
                    got: kind,
                })
            }
        };
        let nl = map.local_count();
        let nq = tab.num_points();
        let mut tri = Vec::with_capacity(self.mesh.num_elements() * nl * nl * 2 / 3);
        let mut block = vec![0.0; nl * nl];
        let mut weighted = [vec![0.0; nq], vec![0.0; nq], vec![0.0; nq]];
        for e in 0..self.mesh.num_elements() {
            let dofs = map.element_dofs(e);
            let wq = tab.element_values(&w.coeffs, dofs);
            for (r, wr) in weighted.iter_mut().enumerate() {
                for (k, v) in wr.iter_mut().enumerate() {
                    *v = self.quad_weights[k] * wq[k][r];
                }
            }
            block.iter_mut().for_each(|v| *v = 0.0);
            // the integrand is antisymmetric in (i, j) pointwise, so each
            // pair is integrated once and mirrored with the opposite sign
            for i in 0..nl {
                let p = tab.components[i];
                for (j, &q) in tab.components.iter().enumerate().skip(i + 1) {
                    if p == q {
                        continue;
                    }
                    let r = 3 - p - q;
                    let v: f64 = weighted[r]
                        .iter()
                        .zip(tab.values[i].iter().zip(&tab.values[j]))
                        .map(|(a, (b, c))| a * (b * c))
                        .sum();
                    let v = levi_civita(p, r, q) * v;
                    block[i * nl + j] = v;
                    block[j * nl + i] = -v;
                }
            }
            // both orientations are pushed together so duplicate global
            // entries accumulate the same sums with opposite signs
            for i in 0..nl {
                for j in i + 1..nl {
                    let (gi, gj) = (dofs[i], dofs[j]);
                    if tab.components[i] == tab.components[j] || gi == gj {
                        continue;
                    }
                    let v = block[i * nl + j];
                    let (a, b, v) = if gi < gj { (gi, gj, v) } else { (gj, gi, -v) };
                    tri.push((a, b, v));
                    tri.push((b, a, -v));
                }
            }
        }
        Ok(sparse::from_triplets(map.global_count(), map.global_count(), &tri))
    }

    /// `<f, phi_i>` for a vector load on C or D, using the fine rule.
    pub fn assemble_load(&self, kind: SpaceKind, f: impl Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
        let tab = match kind {
            SpaceKind::C => &self.fine_c,
            SpaceKind::D => &self.fine_d,
            _ => panic!("vector loads live on C or D"),
        };
        let map = self.map(kind);
        let mut out = vec![0.0; map.global_count()];
        let m = self.fine.len();
        let h = self.mesh.element_size();
        for e in 0..self.mesh.num_elements() {
            let o = self.mesh.element_origin(e);
            let fv: Vec<[f64; 3]> = (0..tab.num_points())
                .map(|q| {
                    let qi = [q % m, (q / m) % m, q / (m * m)];
                    let x = [0, 1, 2].map(|a| o[a] + (self.fine.nodes[qi[a]] + 1.0) * 0.5 * h[a]);
                    f(x)
                })
                .collect();
            for (l, &g) in map.element_dofs(e).iter().enumerate() {
                let c = tab.components[l];
                out[g] += tab.values[l]
                    .iter()
                    .zip(&fv)
                    .zip(&self.fine_weights)
                    .map(|((v, fq), w)| w * v * fq[c])
                    .sum::<f64>();
            }
        }
        out
    }

    /// Physical coordinate of lattice node `g` along `axis` (`g` may equal
    /// `n`, the right end of the box).
    fn node_coord(&self, axis: usize, g: usize) -> f64 {
        let n = self.degree;
        let (e, a) = if g == self.maps.g.lattice() {
            (g / n - 1, n)
        } else {
            (g / n, g % n)
        };
        let h = self.mesh.element_size()[axis];
        self.mesh.box_min()[axis] + e as f64 * h + (self.basis.nodal.nodes()[a] + 1.0) * 0.5 * h
    }

    /// Quadrature nodes and weights used to reduce along one axis: a single
    /// point for a node, a sub-interval rule for an edge.
    fn reduction_axis(&self, rule: &Quadrature1D, family: Family, axis: usize, g: usize) -> Vec<(f64, f64)> {
        match family {
            Family::Nodal => vec![(self.node_coord(axis, g), 1.0)],
            Family::Edge => {
                let a = self.node_coord(axis, g);
                let b = self.node_coord(axis, g + 1);
                rule.nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| (a + (x + 1.0) * 0.5 * (b - a), w * 0.5 * (b - a)))
                    .collect()
            }
        }
    }

    fn reduce(&self, kind: SpaceKind, f: &dyn Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
        let rule = gll_rule(REDUCTION_DEGREE).expect("fixed reduction degree is valid");
        let map = self.map(kind);
        (0..map.global_count())
            .map(|g| {
                let (c, lat) = map.position(g);
                let fam = kind.families(c);
                let ax = [0, 1, 2].map(|a| self.reduction_axis(&rule, fam[a], a, lat[a]));
                let mut acc = 0.0;
                for &(z, wz) in &ax[2] {
                    for &(y, wy) in &ax[1] {
                        for &(x, wx) in &ax[0] {
                            acc += wx * wy * wz * f([x, y, z])[c];
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Mimetic reduction of a vector field: edge line integrals (C) or face
    /// fluxes (D).
    pub fn project_vector(&self, kind: SpaceKind, f: impl Fn([f64; 3]) -> [f64; 3], time: f64) -> Field {
        assert!(kind.is_vector(), "vector projection onto a scalar space");
        Field::new(kind, self.reduce(kind, &f), time)
    }

    /// Mimetic reduction of a scalar field: nodal values (G) or volume
    /// integrals (S).
    pub fn project_scalar(&self, kind: SpaceKind, f: impl Fn([f64; 3]) -> f64, time: f64) -> Field {
        assert!(!kind.is_vector(), "scalar projection onto a vector space");
        let g = move |x: [f64; 3]| [f(x), 0.0, 0.0];
        Field::new(kind, self.reduce(kind, &g), time)
    }

    /// Evaluate a discrete field at a physical point (wrapped into the box).
    /// Scalars come back in the first slot.
    pub fn eval(&self, field: &Field, point: [f64; 3]) -> [f64; 3] {
        let (e, xi) = self.mesh.locate(point);
        self.eval_in_element(field, e, xi)
    }

    /// Evaluate a field at reference coordinates `xi` of element `e`.
    pub fn eval_in_element(&self, field: &Field, e: usize, xi: [f64; 3]) -> [f64; 3] {
        let map = self.map(field.kind);
        let h = self.mesh.element_size();
        let axes = [0, 1, 2].map(|a| AxisTab::new(&self.basis, &[xi[a]], h[a]));
        let mut out = [0.0; 3];
        for (dof, &g) in map.local_dofs().iter().zip(map.element_dofs(e)) {
            let fam = field.kind.families(dof.component);
            let v = (0..3).fold(field.coeffs[g], |acc, a| {
                acc * axes[a].get(fam[a], false)[dof.index[a]][0]
            });
            out[dof.component] += v;
        }
        out
    }

    /// Tabulate a space's local basis on a tensor lattice of reference
    /// points (the same points along every axis).
    pub fn local_tab(&self, kind: SpaceKind, points: &[f64]) -> LocalTab {
        let h = self.mesh.element_size();
        let axes = [0, 1, 2].map(|a| AxisTab::new(&self.basis, points, h[a]));
        LocalTab::new(kind, self.map(kind), &axes, points.len())
    }

    /// Fine quadrature lattice: reference nodes, physical weights per
    /// element.
    pub fn fine_rule(&self) -> (&Quadrature1D, &[f64]) {
        (&self.fine, &self.fine_weights)
    }

    /// Physical position of reference lattice point `q` in element `e`.
    pub fn lattice_point(&self, e: usize, points: &[f64], q: usize) -> [f64; 3] {
        let m = points.len();
        let qi = [q % m, (q / m) % m, q / (m * m)];
        let o = self.mesh.element_origin(e);
        let h = self.mesh.element_size();
        [0, 1, 2].map(|a| o[a] + (points[qi[a]] + 1.0) * 0.5 * h[a])
    }

    pub fn local_dofs(&self, kind: SpaceKind) -> &[LocalDof] {
        self.map(kind).local_dofs()
    }
}

fn tensor_weights(rule: &Quadrature1D, h: [f64; 3]) -> Vec<f64> {
    let m = rule.len();
    let jac = h.iter().map(|x| x * 0.5).product::<f64>();
    (0..m * m * m)
        .map(|q| rule.weights[q % m] * rule.weights[(q / m) % m] * rule.weights[q / (m * m)] * jac)
        .collect()
}
