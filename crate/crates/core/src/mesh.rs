//! Periodic structured hexahedral mesh, DOF numbering of the four mimetic
//! spaces and the integer incidence matrices linking them.
//!
//! Every space lives on the periodic GLL lattice with `n = K N` points per
//! axis. Along each axis a DOF is either attached to a lattice node or to the
//! lattice edge between node `i` and node `i + 1`:
//!
//! | kind | component `d` along axis `d` | other axes |
//! |------|------------------------------|------------|
//! | G    | node                         | node       |
//! | C    | edge                         | node       |
//! | D    | node                         | edge       |
//! | S    | edge                         | edge       |
//!
//! Global numbering is lexicographic in `(z, y, x)` with x fastest, and for
//! the vector kinds the direction index is the fastest of all:
//! `3 * ((iz * n + iy) * n + ix) + d`. Edges and faces are oriented along the
//! positive axes both locally and globally, so every orientation sign is +1.

use crate::error::{Error, Result};
use crate::sparse::IntCsr;

/// Uniform `K x K x K` tessellation of a periodic box.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMesh {
    cells_per_axis: usize,
    box_min: [f64; 3],
    box_max: [f64; 3],
}

impl PeriodicMesh {
    pub fn new(cells_per_axis: usize, box_min: [f64; 3], box_max: [f64; 3]) -> Result<Self> {
        if cells_per_axis == 0 {
            return Err(Error::ZeroCells);
        }
        if (0..3).any(|d| !box_min[d].is_finite() || !box_max[d].is_finite() || box_max[d] <= box_min[d]) {
            return Err(Error::DegenerateBox {
                min: box_min,
                max: box_max,
            });
        }
        Ok(Self {
            cells_per_axis,
            box_min,
            box_max,
        })
    }

    pub fn unit_cube(cells_per_axis: usize) -> Result<Self> {
        Self::new(cells_per_axis, [0.0; 3], [1.0; 3])
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn box_min(&self) -> [f64; 3] {
        self.box_min
    }

    pub fn box_max(&self) -> [f64; 3] {
        self.box_max
    }

    pub fn lengths(&self) -> [f64; 3] {
        [0, 1, 2].map(|d| self.box_max[d] - self.box_min[d])
    }

    pub fn element_size(&self) -> [f64; 3] {
        let k = self.cells_per_axis as f64;
        self.lengths().map(|l| l / k)
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn num_elements(&self) -> usize {
        self.cells_per_axis.pow(3)
    }

    pub fn element_index(&self, c: [usize; 3]) -> usize {
        let k = self.cells_per_axis;
        (c[2] * k + c[1]) * k + c[0]
    }

    pub fn element_coords(&self, e: usize) -> [usize; 3] {
        let k = self.cells_per_axis;
        [e % k, (e / k) % k, e / (k * k)]
    }

    /// Neighbours in the order -x, +x, -y, +y, -z, +z.
    pub fn neighbors(&self, e: usize) -> [usize; 6] {
        let k = self.cells_per_axis;
        let c = self.element_coords(e);
        let mut out = [0; 6];
        for d in 0..3 {
            let mut lo = c;
            let mut hi = c;
            lo[d] = (c[d] + k - 1) % k;
            hi[d] = (c[d] + 1) % k;
            out[2 * d] = self.element_index(lo);
            out[2 * d + 1] = self.element_index(hi);
        }
        out
    }

    pub fn element_origin(&self, e: usize) -> [f64; 3] {
        let c = self.element_coords(e);
        let h = self.element_size();
        [0, 1, 2].map(|d| self.box_min[d] + c[d] as f64 * h[d])
    }

    pub fn element_volume(&self) -> f64 {
        self.element_size().iter().product()
    }

    /// Wraps `point` into the box and returns the containing element together
    /// with the reference coordinates in `[-1, 1]^3`.
    pub fn locate(&self, point: [f64; 3]) -> (usize, [f64; 3]) {
        let k = self.cells_per_axis;
        let h = self.element_size();
        let len = self.lengths();
        let mut cell = [0usize; 3];
        let mut xi = [0.0; 3];
        for d in 0..3 {
            let mut s = (point[d] - self.box_min[d]).rem_euclid(len[d]) / h[d];
            if s >= k as f64 {
                s = k as f64 - 1e-300;
            }
            let c = (s.floor() as usize).min(k - 1);
            cell[d] = c;
            xi[d] = (2.0 * (s - c as f64) - 1.0).clamp(-1.0, 1.0);
        }
        (self.element_index(cell), xi)
    }
}

/// One of the four spaces of the discrete de Rham complex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// H1-conforming nodal scalars (total pressure `P0`).
    G,
    /// H(curl)-conforming edge vectors (`u1`, `w1`).
    C,
    /// H(div)-conforming face vectors (`u2`, `w2`).
    D,
    /// L2 volume scalars (total pressure `P3`).
    S,
}

impl SpaceKind {
    pub const ALL: [SpaceKind; 4] = [SpaceKind::G, SpaceKind::C, SpaceKind::D, SpaceKind::S];

    pub fn is_vector(self) -> bool {
        matches!(self, SpaceKind::C | SpaceKind::D)
    }

    pub fn num_components(self) -> usize {
        if self.is_vector() {
            3
        } else {
            1
        }
    }

    /// The 1D family used along each axis for the given component.
    pub fn families(self, component: usize) -> [Family; 3] {
        use Family::{Edge, Nodal};
        match self {
            SpaceKind::G => [Nodal; 3],
            SpaceKind::S => [Edge; 3],
            SpaceKind::C => {
                let mut f = [Nodal; 3];
                f[component] = Edge;
                f
            }
            SpaceKind::D => {
                let mut f = [Edge; 3];
                f[component] = Nodal;
                f
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::G => "G",
            SpaceKind::C => "C",
            SpaceKind::D => "D",
            SpaceKind::S => "S",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Nodal,
    Edge,
}

impl Family {
    pub fn local_count(self, degree: usize) -> usize {
        match self {
            Family::Nodal => degree + 1,
            Family::Edge => degree,
        }
    }
}

/// A local DOF: its vector component and per-axis 1D local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDof {
    pub component: usize,
    pub index: [usize; 3],
}

/// Element-to-global DOF numbering of one space.
#[derive(Debug, Clone)]
pub struct DofMap {
    kind: SpaceKind,
    degree: usize,
    cells_per_axis: usize,
    global_count: usize,
    local: Vec<LocalDof>,
    local_to_global: Vec<usize>,
    signs: Vec<i8>,
}

impl DofMap {
    pub fn new(mesh: &PeriodicMesh, kind: SpaceKind, degree: usize) -> Result<Self> {
        if degree == 0 {
            return Err(Error::InvalidDegree(degree));
        }
        let k = mesh.cells_per_axis();
        let n = k * degree;
        let global_count = kind.num_components() * n.pow(3);

        let mut local = Vec::new();
        for component in 0..kind.num_components() {
            let f = kind.families(component);
            let counts = f.map(|f| f.local_count(degree));
            for c in 0..counts[2] {
                for b in 0..counts[1] {
                    for a in 0..counts[0] {
                        local.push(LocalDof {
                            component,
                            index: [a, b, c],
                        });
                    }
                }
            }
        }

        let mut local_to_global = Vec::with_capacity(mesh.num_elements() * local.len());
        for e in 0..mesh.num_elements() {
            let ec = mesh.element_coords(e);
            for dof in &local {
                let f = kind.families(dof.component);
                let lattice = [0, 1, 2].map(|d| {
                    let g = ec[d] * degree + dof.index[d];
                    match f[d] {
                        Family::Nodal => g % n,
                        Family::Edge => g,
                    }
                });
                local_to_global.push(global_index(kind, n, dof.component, lattice));
            }
        }
        let signs = vec![1; local_to_global.len()];
        Ok(Self {
            kind,
            degree,
            cells_per_axis: k,
            global_count,
            local,
            local_to_global,
            signs,
        })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn global_count(&self) -> usize {
        self.global_count
    }

    /// GLL lattice points per axis, `K N`.
    pub fn lattice(&self) -> usize {
        self.cells_per_axis * self.degree
    }

    pub fn local_dofs(&self) -> &[LocalDof] {
        &self.local
    }

    pub fn local_count(&self) -> usize {
        self.local.len()
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        let m = self.local.len();
        &self.local_to_global[e * m..(e + 1) * m]
    }

    pub fn element_signs(&self, e: usize) -> &[i8] {
        let m = self.local.len();
        &self.signs[e * m..(e + 1) * m]
    }

    /// Global index of the DOF of `component` at the lattice position
    /// (node or edge index per axis, as appropriate for the kind).
    pub fn index(&self, component: usize, lattice: [usize; 3]) -> usize {
        global_index(self.kind, self.lattice(), component, lattice)
    }

    /// Inverse of [`DofMap::index`].
    pub fn position(&self, global: usize) -> (usize, [usize; 3]) {
        let n = self.lattice();
        let (component, l) = if self.kind.is_vector() {
            (global % 3, global / 3)
        } else {
            (0, global)
        };
        (component, [l % n, (l / n) % n, l / (n * n)])
    }
}

fn global_index(kind: SpaceKind, n: usize, component: usize, lattice: [usize; 3]) -> usize {
    let l = (lattice[2] * n + lattice[1]) * n + lattice[0];
    if kind.is_vector() {
        3 * l + component
    } else {
        l
    }
}

/// The four DOF maps of one mesh and degree.
#[derive(Debug, Clone)]
pub struct DofMaps {
    pub g: DofMap,
    pub c: DofMap,
    pub d: DofMap,
    pub s: DofMap,
}

impl DofMaps {
    pub fn new(mesh: &PeriodicMesh, degree: usize) -> Result<Self> {
        Ok(Self {
            g: DofMap::new(mesh, SpaceKind::G, degree)?,
            c: DofMap::new(mesh, SpaceKind::C, degree)?,
            d: DofMap::new(mesh, SpaceKind::D, degree)?,
            s: DofMap::new(mesh, SpaceKind::S, degree)?,
        })
    }

    pub fn get(&self, kind: SpaceKind) -> &DofMap {
        match kind {
            SpaceKind::G => &self.g,
            SpaceKind::C => &self.c,
            SpaceKind::D => &self.d,
            SpaceKind::S => &self.s,
        }
    }
}

/// Integer incidence matrices realizing grad, curl and div on coefficients.
#[derive(Debug, Clone)]
pub struct IncidenceSet {
    pub grad: IntCsr,
    pub curl: IntCsr,
    pub div: IntCsr,
}

impl IncidenceSet {
    pub fn new(maps: &DofMaps) -> Self {
        let n = maps.g.lattice();
        assert!(
            [&maps.c, &maps.d, &maps.s].iter().all(|m| m.lattice() == n),
            "DOF maps built from different meshes or degrees"
        );
        let up = |v: [usize; 3], d: usize| {
            let mut w = v;
            w[d] = (v[d] + 1) % n;
            w
        };

        let mut grad = Vec::with_capacity(2 * maps.c.global_count());
        let mut curl = Vec::with_capacity(4 * maps.d.global_count());
        let mut div = Vec::with_capacity(6 * maps.s.global_count());

        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    let p = [ix, iy, iz];
                    // edge along d starting at node p
                    for d in 0..3 {
                        let row = maps.c.index(d, p);
                        grad.push((row, maps.g.index(0, up(p, d)), 1));
                        grad.push((row, maps.g.index(0, p), -1));
                    }
                    // face normal to d: node along d, edges along a = d+1, b = d+2;
                    // circulation = d_a(u_b) - d_b(u_a)
                    for d in 0..3 {
                        let a = (d + 1) % 3;
                        let b = (d + 2) % 3;
                        let row = maps.d.index(d, p);
                        curl.push((row, maps.c.index(b, up(p, a)), 1));
                        curl.push((row, maps.c.index(b, p), -1));
                        curl.push((row, maps.c.index(a, up(p, b)), -1));
                        curl.push((row, maps.c.index(a, p), 1));
                    }
                    let row = maps.s.index(0, p);
                    for d in 0..3 {
                        div.push((row, maps.d.index(d, up(p, d)), 1));
                        div.push((row, maps.d.index(d, p), -1));
                    }
                }
            }
        }
        Self {
            grad: IntCsr::from_triplets(maps.c.global_count(), maps.g.global_count(), grad),
            curl: IntCsr::from_triplets(maps.d.global_count(), maps.c.global_count(), curl),
            div: IntCsr::from_triplets(maps.s.global_count(), maps.d.global_count(), div),
        }
    }
}
