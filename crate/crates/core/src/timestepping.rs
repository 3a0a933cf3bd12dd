//! Staggered dual-field time march.
//!
//! Integer steps advance `(u2, w1)` from `t^{k-1}` to `t^k` using the face
//! vorticity `w2` at `t^{k-1/2}`; half-integer steps advance `(u1, w2)` from
//! `t^{k-1/2}` to `t^{k+1/2}` using the edge vorticity `w1` at `t^k`. Both
//! are linear saddle-point systems solved directly. A first explicit half
//! step starts the half-integer sequence from the initial data.
//!
//! Each pressure block has the constants as its null space on a periodic
//! box; one Lagrange multiplier per system pins the mean total pressure to
//! zero.

use std::io::{BufRead, Write};

use crate::assembly::{Discretization, Field, SystemMatrices};
use crate::error::{Error, Result};
use crate::krylov::{gmres, GmresParams};
use crate::linsolve::{solve_checked, solve_matrix, DirectSolver, TripletSystem};
use crate::mesh::SpaceKind;
use crate::sparse::{self, SpMat};
use crate::tensor::TensorOps;

/// Body force `f(t, x)`.
pub type Forcing<'a> = &'a (dyn Fn(f64, [f64; 3]) -> [f64; 3] + Sync);

/// Staggered solution snapshot.
///
/// After `k` completed integer steps: `u2`, `w1` live at `t^k`, `u1`, `w2`
/// at `t^{k+1/2}`, `p0` at `t^k` and `p3` at `t^{k-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u1: Field,
    pub w2: Field,
    pub u2: Field,
    pub w1: Field,
    pub p0: Field,
    pub p3: Field,
    pub k: usize,
    pub dt: f64,
    /// `None` for the inviscid limit.
    pub reynolds: Option<f64>,
}

impl SimState {
    pub fn time(&self) -> f64 {
        self.k as f64 * self.dt
    }
}

/// Fields at `t = 0`, kept for diagnostics of the first step.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialFields {
    pub u1: Field,
    pub u2: Field,
    pub w1: Field,
    pub w2: Field,
}

/// Solver-level health of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    /// `|A x - b|_inf / max(|b|_inf, 1)` of the linear solve.
    pub residual: f64,
    /// `|E_div u2|_inf` (integer steps) or `|G^T u1|_inf` (half steps).
    pub constraint: f64,
    /// `|w2 - E_curl u1|_inf` (half steps); zero for integer steps.
    pub curl_identity: f64,
    /// Krylov iterations; zero for direct solves.
    pub iterations: usize,
}

/// How the per-step saddle-point systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinearSolver {
    /// Sparse LU of the full block system every step.
    Direct,
    /// GMRES preconditioned by the exact inverse of the block system
    /// without rotation and viscous coupling.
    Krylov,
    /// Direct up to [`DIRECT_SIZE_LIMIT`] unknowns, Krylov above.
    #[default]
    Auto,
}

/// Largest block system solved by LU under [`LinearSolver::Auto`]. LU fill
/// on the 3D lattice grows roughly like the seventh power of `K`.
pub const DIRECT_SIZE_LIMIT: usize = 2_000;

/// Relative residual every Krylov solve must reach.
pub const KRYLOV_TOLERANCE: f64 = 1e-13;

/// Integer-step block operator on `[u2, w1, P3, lambda]`.
struct IntegerOperator<'m> {
    m: &'m SystemMatrices,
    r: &'m SpMat,
    dt: f64,
    nu: f64,
    sizes: [usize; 3],
}

impl IntegerOperator<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let [nd, nc, ns] = self.sizes;
        let (u, rest) = x.split_at(nd);
        let (w, rest) = rest.split_at(nc);
        let (p, lam) = rest.split_at(ns);
        let m = self.m;
        let nu_ = sparse::matvec(&m.mass_d, u);
        let ru = sparse::matvec(self.r, u);
        let dtp = sparse::matvec_t(&m.div, p);
        let mut y = Vec::with_capacity(x.len());
        if self.nu != 0.0 {
            let cw = sparse::matvec(&m.curl, w);
            y.extend((0..nd).map(|i| nu_[i] / self.dt + 0.5 * ru[i] + 0.5 * self.nu * cw[i] - dtp[i]));
        } else {
            y.extend((0..nd).map(|i| nu_[i] / self.dt + 0.5 * ru[i] - dtp[i]));
        }
        let ctu = sparse::matvec_t(&m.curl, u);
        let mw = sparse::matvec(&m.mass_c, w);
        y.extend(ctu.iter().zip(&mw).map(|(a, b)| a - b));
        y.extend(sparse::matvec(&m.div, u).iter().map(|v| v + lam[0]));
        y.push(p.iter().sum());
        y
    }
}

/// Half-step block operator on `[u1, w2, P0, mu]`; also the bootstrap
/// operator with no rotation, no viscosity and a halved step.
struct HalfOperator<'m> {
    m: &'m SystemMatrices,
    r: Option<&'m SpMat>,
    dt: f64,
    nu: f64,
    mean_g: &'m [f64],
    sizes: [usize; 3],
}

impl HalfOperator<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let [nc, nd, ng] = self.sizes;
        let (u, rest) = x.split_at(nc);
        let (w, rest) = rest.split_at(nd);
        let (p, mu) = rest.split_at(ng);
        let m = self.m;
        let mut yu = sparse::matvec(&m.mass_c, u);
        yu.iter_mut().for_each(|v| *v /= self.dt);
        if let Some(r) = self.r {
            let ru = sparse::matvec(r, u);
            yu.iter_mut().zip(&ru).for_each(|(a, b)| *a += 0.5 * b);
        }
        if self.nu != 0.0 {
            let ctw = sparse::matvec_t(&m.curl, w);
            yu.iter_mut().zip(&ctw).for_each(|(a, b)| *a += 0.5 * self.nu * b);
        }
        let gp = sparse::matvec(&m.grad, p);
        yu.iter_mut().zip(&gp).for_each(|(a, b)| *a += b);
        let mut y = yu;
        let cu = sparse::matvec(&m.curl, u);
        let nw = sparse::matvec(&m.mass_d, w);
        y.extend(cu.iter().zip(&nw).map(|(a, b)| a - b));
        let gtu = sparse::matvec_t(&m.grad, u);
        y.extend(gtu.iter().zip(self.mean_g).map(|(a, b)| a + mu[0] * b));
        y.push(sparse::dot(self.mean_g, p));
        y
    }
}

/// Exact inverses of the integer and half-step systems with the rotation
/// and viscous coupling removed.
struct BlockPreconditioner {
    ops: TensorOps,
    /// `M_S^{-1} 1`.
    volume_null: Vec<f64>,
    volume_null_sum: f64,
    mean_g: Vec<f64>,
    volume: f64,
}

impl BlockPreconditioner {
    fn new(disc: &Discretization, mean_g: &[f64]) -> Result<Self> {
        let ops = TensorOps::new(disc)?;
        let ns = disc.map(SpaceKind::S).global_count();
        let volume_null = ops.mass_inverse(SpaceKind::S, &vec![1.0; ns]);
        let volume_null_sum = volume_null.iter().sum();
        Ok(Self {
            ops,
            volume_null,
            volume_null_sum,
            mean_g: mean_g.to_vec(),
            volume: mean_g.iter().sum(),
        })
    }

    fn integer(&self, m: &SystemMatrices, dt: f64, sizes: [usize; 3], b: &[f64]) -> Vec<f64> {
        let [nd, nc, ns] = sizes;
        let (f, rest) = b.split_at(nd);
        let (gw, rest) = rest.split_at(nc);
        let (gp, h) = rest.split_at(ns);
        let ops = &self.ops;
        let z = &self.volume_null;
        let t = ops.mass_inverse(SpaceKind::D, f);
        let dtv = sparse::matvec(&m.div, &t);
        let g1: Vec<f64> = gp.iter().zip(&dtv).map(|(a, b)| a - dt * b).collect();
        let lam = sparse::dot(z, &g1) / self.volume_null_sum;
        let shifted: Vec<f64> = g1.iter().map(|v| (v - lam) / dt).collect();
        let r = ops.mass_inverse(SpaceKind::S, &shifted);
        let q = ops.volume_laplacian_pinv(&r);
        let p0 = ops.mass_inverse(SpaceKind::S, &q);
        let c = (h[0] - p0.iter().sum::<f64>()) / self.volume_null_sum;
        let p: Vec<f64> = p0.iter().zip(z).map(|(a, b)| a + c * b).collect();
        let dtp = sparse::matvec_t(&m.div, &p);
        let rhs_u: Vec<f64> = f.iter().zip(&dtp).map(|(a, b)| a + b).collect();
        let u: Vec<f64> = ops.mass_inverse(SpaceKind::D, &rhs_u).iter().map(|v| dt * v).collect();
        let ctu = sparse::matvec_t(&m.curl, &u);
        let w = ops.mass_inverse(
            SpaceKind::C,
            &ctu.iter().zip(gw).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        let mut x = u;
        x.extend(w);
        x.extend(p);
        x.push(lam);
        x
    }

    fn half(&self, m: &SystemMatrices, dt: f64, sizes: [usize; 3], b: &[f64]) -> Vec<f64> {
        let [nc, nd, ng] = sizes;
        let (f, rest) = b.split_at(nc);
        let (gw, rest) = rest.split_at(nd);
        let (gp, h) = rest.split_at(ng);
        let ops = &self.ops;
        let mg = &self.mean_g;
        let t = sparse::matvec_t(&m.grad, &ops.mass_inverse(SpaceKind::C, f));
        let g1: Vec<f64> = gp.iter().zip(&t).map(|(a, b)| a - dt * b).collect();
        let mu = g1.iter().sum::<f64>() / self.volume;
        let r: Vec<f64> = g1.iter().zip(mg).map(|(a, b)| (mu * b - a) / dt).collect();
        let p0 = ops.nodal_laplacian_pinv(&r);
        let c = (h[0] - sparse::dot(mg, &p0)) / self.volume;
        let p: Vec<f64> = p0.iter().map(|v| v + c).collect();
        let gp_ = sparse::matvec(&m.grad, &p);
        let rhs_u: Vec<f64> = f.iter().zip(&gp_).map(|(a, b)| a - b).collect();
        let u: Vec<f64> = ops.mass_inverse(SpaceKind::C, &rhs_u).iter().map(|v| dt * v).collect();
        let cu = sparse::matvec(&m.curl, &u);
        let w = ops.mass_inverse(SpaceKind::D, &cu.iter().zip(gw).map(|(a, b)| a - b).collect::<Vec<_>>());
        let mut x = u;
        x.extend(w);
        x.extend(p);
        x.push(mu);
        x
    }
}

fn relative_residual_inf(ax: &[f64], b: &[f64]) -> f64 {
    let res = ax.iter().zip(b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    res / b.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// Time stepper over one discretization.
pub struct Stepper<'a> {
    disc: &'a Discretization,
    dt: f64,
    reynolds: Option<f64>,
    forcing: Option<Forcing<'a>>,
    solver: LinearSolver,
    integer_solver: DirectSolver,
    half_solver: DirectSolver,
    preconditioner: Option<BlockPreconditioner>,
    mean_g: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(disc: &'a Discretization, dt: f64, reynolds: Option<f64>, forcing: Option<Forcing<'a>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if let Some(re) = reynolds {
            if !(re > 0.0 && re.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "Reynolds number must be positive, got {re}"
                )));
            }
        }
        let ones = vec![1.0; disc.map(SpaceKind::G).global_count()];
        let mean_g = sparse::matvec(disc.mass(SpaceKind::G), &ones);
        Ok(Self {
            disc,
            dt,
            reynolds,
            forcing,
            solver: LinearSolver::Auto,
            integer_solver: DirectSolver::new(),
            half_solver: DirectSolver::new(),
            preconditioner: None,
            mean_g,
        })
    }

    pub fn with_solver(mut self, solver: LinearSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn reynolds(&self) -> Option<f64> {
        self.reynolds
    }

    /// Solver actually used for systems of the integer-step size.
    pub fn resolved_solver(&self) -> LinearSolver {
        match self.solver {
            LinearSolver::Auto => {
                let d = self.disc;
                let size = d.map(SpaceKind::D).global_count()
                    + d.map(SpaceKind::C).global_count()
                    + d.map(SpaceKind::S).global_count()
                    + 1;
                if size <= DIRECT_SIZE_LIMIT {
                    LinearSolver::Direct
                } else {
                    LinearSolver::Krylov
                }
            }
            s => s,
        }
    }

    fn inv_re(&self) -> f64 {
        self.reynolds.map_or(0.0, |re| 1.0 / re)
    }

    fn load(&self, kind: SpaceKind, t: f64) -> Option<Vec<f64>> {
        self.forcing.map(|f| self.disc.assemble_load(kind, |x| f(t, x)))
    }

    fn preconditioner(&mut self) -> Result<&BlockPreconditioner> {
        if self.preconditioner.is_none() {
            self.preconditioner = Some(BlockPreconditioner::new(self.disc, &self.mean_g)?);
        }
        Ok(self.preconditioner.as_ref().expect("built above"))
    }

    /// Derive both vorticities of the initial data: `w2 = E_curl u1` (the
    /// strong curl) and `w1 = M^{-1} C^T u2` (the weak curl).
    pub fn initial_fields(&self, u1: Field, u2: Field) -> Result<InitialFields> {
        u1.check(self.disc.map(SpaceKind::C))?;
        u2.check(self.disc.map(SpaceKind::D))?;
        let m = self.disc.matrices();
        let w2 = Field::new(SpaceKind::D, m.incidence.curl.apply(&u1.coeffs), u1.time);
        let rhs = sparse::matvec_t(&m.curl, &u2.coeffs);
        let w1 = Field::new(
            SpaceKind::C,
            solve_matrix(&m.mass_c, &rhs, "initial weak curl")?,
            u2.time,
        );
        Ok(InitialFields { u1, u2, w1, w2 })
    }

    /// Solve one block system with the configured solver. `guess` seeds
    /// the Krylov iteration.
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &mut self,
        apply: &dyn Fn(&[f64]) -> Vec<f64>,
        triplets: &dyn Fn() -> TripletSystem,
        precond: &dyn Fn(&BlockPreconditioner, &[f64]) -> Vec<f64>,
        rhs: &[f64],
        guess: Vec<f64>,
        which: SystemKind,
        context: &str,
    ) -> Result<(Vec<f64>, f64, usize)> {
        match self.resolved_solver() {
            LinearSolver::Krylov => {
                let pc = self.preconditioner()?;
                let mut x = guess;
                let stats = gmres(
                    apply,
                    |v| precond(pc, v),
                    rhs,
                    &mut x,
                    GmresParams {
                        tolerance: KRYLOV_TOLERANCE,
                        ..Default::default()
                    },
                );
                if !sparse::is_finite(&x) {
                    return Err(Error::NonFinite {
                        context: context.to_string(),
                    });
                }
                if !stats.converged {
                    return Err(Error::Factorization {
                        context: context.to_string(),
                        reason: format!(
                            "GMRES stalled at relative residual {:e} after {} iterations",
                            stats.relative_residual, stats.iterations
                        ),
                    });
                }
                Ok((x.clone(), relative_residual_inf(&apply(&x), rhs), stats.iterations))
            }
            _ => {
                let sys = triplets();
                let solver = match which {
                    SystemKind::Integer => &mut self.integer_solver,
                    SystemKind::Half => &mut self.half_solver,
                    SystemKind::Bootstrap => &mut DirectSolver::new(),
                };
                let (x, residual) = solve_checked(solver, &sys, rhs, context)?;
                Ok((x, residual, 0))
            }
        }
    }

    /// Explicit half step from `t^0` to `t^{1/2}` for the edge velocity,
    /// returning the state ready for the first integer step.
    pub fn bootstrap(&mut self, init: &InitialFields) -> Result<(SimState, StepReport)> {
        let d = self.disc;
        let m = d.matrices();
        let sizes = [
            d.map(SpaceKind::C).global_count(),
            d.map(SpaceKind::D).global_count(),
            d.map(SpaceKind::G).global_count(),
        ];
        let [nc, nd, ng] = sizes;
        let half = 0.5 * self.dt;
        let size = nc + nd + ng + 1;
        let mean_g = self.mean_g.clone();
        let op = HalfOperator {
            m,
            r: None,
            dt: half,
            nu: 0.0,
            mean_g: &mean_g,
            sizes,
        };
        let triplets = || {
            let mut sys = TripletSystem::new(size);
            sys.add_block(0, 0, &m.mass_c, 1.0 / half);
            sys.add_block(0, nc + nd, &m.grad, 1.0);
            sys.add_block(nc, 0, &m.curl, 1.0);
            sys.add_block(nc, nc, &m.mass_d, -1.0);
            sys.add_block_t(nc + nd, 0, &m.grad, 1.0);
            push_mean_constraint(&mut sys, nc + nd, &mean_g);
            sys
        };

        let r = d.assemble_rotation(&init.w1)?;
        let mut rhs = vec![0.0; size];
        let mu = sparse::matvec(&m.mass_c, &init.u1.coeffs);
        let ru = sparse::matvec(&r, &init.u1.coeffs);
        let visc = sparse::matvec_t(&m.curl, &init.w2.coeffs);
        let f = self.load(SpaceKind::C, 0.0);
        let nu = self.inv_re();
        for i in 0..nc {
            rhs[i] = mu[i] / half - ru[i] - nu * visc[i] + f.as_ref().map_or(0.0, |f| f[i]);
        }
        let mut guess = init.u1.coeffs.clone();
        guess.extend(&init.w2.coeffs);
        guess.resize(size, 0.0);
        let (x, residual, iterations) = self.solve(
            &|v| op.apply(v),
            &triplets,
            &|pc, v| pc.half(m, half, sizes, v),
            &rhs,
            guess,
            SystemKind::Bootstrap,
            "bootstrap half step",
        )?;
        let u1 = Field::new(SpaceKind::C, x[..nc].to_vec(), half);
        let w2 = Field::new(SpaceKind::D, x[nc..nc + nd].to_vec(), half);
        let p0 = Field::new(SpaceKind::G, x[nc + nd..nc + nd + ng].to_vec(), 0.0);
        let mut report = self.half_report(&u1, &w2, residual);
        report.iterations = iterations;
        let state = SimState {
            u1,
            w2,
            u2: init.u2.clone(),
            w1: init.w1.clone(),
            p0,
            p3: Field::zeros(d.map(SpaceKind::S), -half),
            k: 0,
            dt: self.dt,
            reynolds: self.reynolds,
        };
        Ok((state, report))
    }

    fn half_report(&self, u1: &Field, w2: &Field, residual: f64) -> StepReport {
        let m = self.disc.matrices();
        let constraint = sparse::norm_inf(&sparse::matvec_t(&m.grad, &u1.coeffs));
        let cu = m.incidence.curl.apply(&u1.coeffs);
        let curl_identity = sparse::norm_inf(&sparse::axpby(1.0, &w2.coeffs, -1.0, &cu));
        StepReport {
            residual,
            constraint,
            curl_identity,
            iterations: 0,
        }
    }

    /// Integer step `S_{k+1}`: `(u2, w1)` from `t^k` to `t^{k+1}` and `P3`
    /// at `t^{k+1/2}`, with `w2` at `t^{k+1/2}` frozen in the convection.
    pub fn integer_step(&mut self, state: &mut SimState) -> Result<StepReport> {
        let d = self.disc;
        let m = d.matrices();
        let sizes = [
            d.map(SpaceKind::D).global_count(),
            d.map(SpaceKind::C).global_count(),
            d.map(SpaceKind::S).global_count(),
        ];
        let [nd, nc, ns] = sizes;
        let dt = self.dt;
        let nu = self.inv_re();
        let r = d.assemble_rotation(&state.w2)?;
        let size = nd + nc + ns + 1;
        let op = IntegerOperator {
            m,
            r: &r,
            dt,
            nu,
            sizes,
        };
        let triplets = || {
            let mut sys = TripletSystem::new(size);
            sys.add_block(0, 0, &m.mass_d, 1.0 / dt);
            sys.add_block(0, 0, &r, 0.5);
            if nu != 0.0 {
                sys.add_block(0, nd, &m.curl, 0.5 * nu);
            }
            sys.add_block_t(0, nd + nc, &m.div, -1.0);
            sys.add_block_t(nd, 0, &m.curl, 1.0);
            sys.add_block(nd, nd, &m.mass_c, -1.0);
            sys.add_block(nd + nc, 0, &m.div, 1.0);
            push_mean_constraint(&mut sys, nd + nc, &vec![1.0; ns]);
            sys
        };

        let t_mid = state.time() + 0.5 * dt;
        let mut rhs = vec![0.0; size];
        let nu_ = sparse::matvec(&m.mass_d, &state.u2.coeffs);
        let ru = sparse::matvec(&r, &state.u2.coeffs);
        let cw = sparse::matvec(&m.curl, &state.w1.coeffs);
        let f = self.load(SpaceKind::D, t_mid);
        for i in 0..nd {
            rhs[i] = nu_[i] / dt - 0.5 * ru[i] - 0.5 * nu * cw[i] + f.as_ref().map_or(0.0, |f| f[i]);
        }
        let mut guess = state.u2.coeffs.clone();
        guess.extend(&state.w1.coeffs);
        guess.extend(&state.p3.coeffs);
        guess.push(0.0);
        let context = format!("integer step {}", state.k + 1);
        let (x, residual, iterations) = self.solve(
            &|v| op.apply(v),
            &triplets,
            &|pc, v| pc.integer(m, dt, sizes, v),
            &rhs,
            guess,
            SystemKind::Integer,
            &context,
        )?;
        let t_new = state.time() + dt;
        state.u2 = Field::new(SpaceKind::D, x[..nd].to_vec(), t_new);
        state.w1 = Field::new(SpaceKind::C, x[nd..nd + nc].to_vec(), t_new);
        state.p3 = Field::new(SpaceKind::S, x[nd + nc..nd + nc + ns].to_vec(), t_mid);
        state.k += 1;
        let constraint = sparse::norm_inf(&m.incidence.div.apply(&state.u2.coeffs));
        Ok(StepReport {
            residual,
            constraint,
            curl_identity: 0.0,
            iterations,
        })
    }

    /// Half-integer step `Ŝ_k`: `(u1, w2)` from `t^{k-1/2}` to `t^{k+1/2}`
    /// and `P0` at `t^k`, with `w1` at `t^k` frozen in the convection.
    pub fn half_step(&mut self, state: &mut SimState) -> Result<StepReport> {
        let d = self.disc;
        let m = d.matrices();
        let sizes = [
            d.map(SpaceKind::C).global_count(),
            d.map(SpaceKind::D).global_count(),
            d.map(SpaceKind::G).global_count(),
        ];
        let [nc, nd, ng] = sizes;
        let dt = self.dt;
        let nu = self.inv_re();
        let r = d.assemble_rotation(&state.w1)?;
        let size = nc + nd + ng + 1;
        let mean_g = self.mean_g.clone();
        let op = HalfOperator {
            m,
            r: Some(&r),
            dt,
            nu,
            mean_g: &mean_g,
            sizes,
        };
        let triplets = || {
            let mut sys = TripletSystem::new(size);
            sys.add_block(0, 0, &m.mass_c, 1.0 / dt);
            sys.add_block(0, 0, &r, 0.5);
            if nu != 0.0 {
                sys.add_block_t(0, nc, &m.curl, 0.5 * nu);
            }
            sys.add_block(0, nc + nd, &m.grad, 1.0);
            sys.add_block(nc, 0, &m.curl, 1.0);
            sys.add_block(nc, nc, &m.mass_d, -1.0);
            sys.add_block_t(nc + nd, 0, &m.grad, 1.0);
            push_mean_constraint(&mut sys, nc + nd, &mean_g);
            sys
        };

        let t_int = state.time();
        let mut rhs = vec![0.0; size];
        let mu = sparse::matvec(&m.mass_c, &state.u1.coeffs);
        let ru = sparse::matvec(&r, &state.u1.coeffs);
        let cw = sparse::matvec_t(&m.curl, &state.w2.coeffs);
        let f = self.load(SpaceKind::C, t_int);
        for i in 0..nc {
            rhs[i] = mu[i] / dt - 0.5 * ru[i] - 0.5 * nu * cw[i] + f.as_ref().map_or(0.0, |f| f[i]);
        }
        let mut guess = state.u1.coeffs.clone();
        guess.extend(&state.w2.coeffs);
        guess.extend(&state.p0.coeffs);
        guess.push(0.0);
        let context = format!("half-integer step {}", state.k);
        let (x, residual, iterations) = self.solve(
            &|v| op.apply(v),
            &triplets,
            &|pc, v| pc.half(m, dt, sizes, v),
            &rhs,
            guess,
            SystemKind::Half,
            &context,
        )?;
        let t_new = t_int + 0.5 * dt;
        state.u1 = Field::new(SpaceKind::C, x[..nc].to_vec(), t_new);
        state.w2 = Field::new(SpaceKind::D, x[nc..nc + nd].to_vec(), t_new);
        state.p0 = Field::new(SpaceKind::G, x[nc + nd..nc + nd + ng].to_vec(), t_int);
        let mut report = self.half_report(&state.u1, &state.w2, residual);
        report.iterations = iterations;
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SystemKind {
    Integer,
    Half,
    Bootstrap,
}

fn push_mean_constraint(sys: &mut TripletSystem, offset: usize, weights: &[f64]) {
    let lambda = sys.size() - 1;
    for (i, &w) in weights.iter().enumerate() {
        sys.push(offset + i, lambda, w);
        sys.push(lambda, offset + i, w);
    }
}

/// `w^T C u` with the weak curl matrix (face rows, edge columns).
pub fn curl_pairing(curl: &SpMat, w2: &[f64], w1: &[f64]) -> f64 {
    sparse::bilinear(w2, curl, w1)
}

const CHECKPOINT_MAGIC: &str = "mdf-checkpoint 1";

/// Write a text checkpoint: a header line with `K N dt Re k` followed by
/// one line per field (`u1 w2 u2 w1 p0 p3`), each the field name and its
/// coefficients in global order. `Re` is `inf` for inviscid runs.
pub fn write_checkpoint(out: &mut impl Write, state: &SimState, cells_per_axis: usize, degree: usize) -> Result<()> {
    writeln!(out, "{CHECKPOINT_MAGIC}")?;
    writeln!(
        out,
        "{} {} {:e} {} {}",
        cells_per_axis,
        degree,
        state.dt,
        state.reynolds.map_or("inf".to_string(), |r| format!("{r:e}")),
        state.k
    )?;
    for (name, f) in [
        ("u1", &state.u1),
        ("w2", &state.w2),
        ("u2", &state.u2),
        ("w1", &state.w1),
        ("p0", &state.p0),
        ("p3", &state.p3),
    ] {
        write!(out, "{name} {:e}", f.time)?;
        for v in &f.coeffs {
            write!(out, " {v:e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Read a checkpoint written by [`write_checkpoint`], returning the state
/// and the `(K, N)` it was written for.
pub fn read_checkpoint(input: impl BufRead) -> Result<(SimState, usize, usize)> {
    let bad = |m: &str| Error::Checkpoint(m.to_string());
    let mut lines = input.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(Error::from)
    };
    if next()?.trim() != CHECKPOINT_MAGIC {
        return Err(bad("missing header"));
    }
    let header = next()?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 {
        return Err(bad("header must hold K N dt Re k"));
    }
    let parse_u = |s: &str| s.parse::<usize>().map_err(|_| bad("bad integer in header"));
    let parse_f = |s: &str| s.parse::<f64>().map_err(|_| bad("bad real in header"));
    let (k_cells, degree, dt) = (parse_u(h[0])?, parse_u(h[1])?, parse_f(h[2])?);
    let reynolds = if h[3] == "inf" { None } else { Some(parse_f(h[3])?) };
    let k = parse_u(h[4])?;
    let mut fields = Vec::new();
    for (name, kind) in [
        ("u1", SpaceKind::C),
        ("w2", SpaceKind::D),
        ("u2", SpaceKind::D),
        ("w1", SpaceKind::C),
        ("p0", SpaceKind::G),
        ("p3", SpaceKind::S),
    ] {
        let line = next()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(name) {
            return Err(bad(&format!("expected field {name}")));
        }
        let time = it
            .next()
            .ok_or_else(|| bad("missing time"))?
            .parse::<f64>()
            .map_err(|_| bad("bad time"))?;
        let coeffs = it
            .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("bad coefficient in {name}"))))
            .collect::<Result<Vec<f64>>>()?;
        let n = k_cells * degree;
        let expected = kind.num_components() * n * n * n;
        if coeffs.len() != expected {
            return Err(bad(&format!(
                "{name} has {} coefficients, expected {expected}",
                coeffs.len()
            )));
        }
        fields.push(Field::new(kind, coeffs, time));
    }
    let mut it = fields.into_iter();
    let mut take = || it.next().expect("six fields parsed");
    let state = SimState {
        u1: take(),
        w2: take(),
        u2: take(),
        w1: take(),
        p0: take(),
        p3: take(),
        k,
        dt,
        reynolds,
    };
    Ok((state, k_cells, degree))
}
