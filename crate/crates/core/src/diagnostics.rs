//! Conserved quantities, dissipation balances, errors and spectra.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::assembly::{Discretization, Field};
use crate::error::{Error, Result};
use crate::mesh::SpaceKind;
use crate::sparse;
use crate::timestepping::{InitialFields, SimState};

/// Points per axis per element used for pointwise divergence checks.
pub const DIVERGENCE_SAMPLES: usize = 5;

/// `½ uᵀ M u` in the mass matrix of the field's space.
pub fn kinetic_energy(disc: &Discretization, u: &Field) -> f64 {
    0.5 * sparse::bilinear(&u.coeffs, disc.mass(u.kind), &u.coeffs)
}

/// `½ |w|²` in the mass matrix of the vorticity's space.
pub fn enstrophy(disc: &Discretization, w: &Field) -> f64 {
    kinetic_energy(disc, w)
}

/// `(u, w)` for two fields of the same space.
pub fn helicity(disc: &Discretization, u: &Field, w: &Field) -> Result<f64> {
    if u.kind != w.kind {
        return Err(Error::KindMismatch {
            expected: u.kind,
            got: w.kind,
        });
    }
    Ok(sparse::bilinear(&u.coeffs, disc.mass(u.kind), &w.coeffs))
}

/// Coefficient-level divergence `|E_div u|_inf` of a face field.
pub fn divergence_coeffs(disc: &Discretization, u: &Field) -> Result<f64> {
    expect_kind(u, SpaceKind::D)?;
    Ok(sparse::norm_inf(&disc.incidence().div.apply(&u.coeffs)))
}

/// Pointwise `max |div u|` over a uniform lattice of
/// [`DIVERGENCE_SAMPLES`]³ points in every element. Works for face and edge
/// fields; edge fields are only tangentially continuous so their
/// divergence is taken element by element.
pub fn divergence_linf(disc: &Discretization, u: &Field) -> Result<f64> {
    if !u.kind.is_vector() {
        return Err(Error::KindMismatch {
            expected: SpaceKind::D,
            got: u.kind,
        });
    }
    let points: Vec<f64> = (0..DIVERGENCE_SAMPLES)
        .map(|i| -1.0 + 2.0 * i as f64 / (DIVERGENCE_SAMPLES - 1) as f64)
        .collect();
    let map = disc.map(u.kind);
    let mut max = 0.0f64;
    if u.kind == SpaceKind::D {
        let s = Field::new(SpaceKind::S, disc.incidence().div.apply(&u.coeffs), u.time);
        let tab = disc.local_tab(SpaceKind::S, &points);
        let smap = disc.map(SpaceKind::S);
        for e in 0..disc.mesh().num_elements() {
            for v in tab.element_values(&s.coeffs, smap.element_dofs(e)) {
                max = max.max(v[0].abs());
            }
        }
    } else {
        let tab = disc.local_tab(u.kind, &points);
        for e in 0..disc.mesh().num_elements() {
            for v in tab.element_divergence(&u.coeffs, map.element_dofs(e)) {
                max = max.max(v.abs());
            }
        }
    }
    Ok(max)
}

/// `L²` distance between a discrete field and a reference function, on the
/// fine quadrature. Scalars use the first slot of `exact`.
pub fn l2_error(disc: &Discretization, u: &Field, exact: impl Fn([f64; 3]) -> [f64; 3]) -> f64 {
    let (rule, weights) = disc.fine_rule();
    let tab = disc.local_tab(u.kind, &rule.nodes);
    let map = disc.map(u.kind);
    let comps = u.kind.num_components();
    let mut acc = 0.0;
    for e in 0..disc.mesh().num_elements() {
        let vals = tab.element_values(&u.coeffs, map.element_dofs(e));
        for (q, (v, w)) in vals.iter().zip(weights).enumerate() {
            let x = disc.lattice_point(e, &rule.nodes, q);
            let f = exact(x);
            acc += w * (0..comps).map(|c| (v[c] - f[c]).powi(2)).sum::<f64>();
        }
    }
    acc.sqrt()
}

/// `L²` distance between two discrete vector fields of any spaces.
pub fn dual_difference(disc: &Discretization, a: &Field, b: &Field) -> f64 {
    let (rule, weights) = disc.fine_rule();
    let ta = disc.local_tab(a.kind, &rule.nodes);
    let tb = disc.local_tab(b.kind, &rule.nodes);
    let mut acc = 0.0;
    for e in 0..disc.mesh().num_elements() {
        let va = ta.element_values(&a.coeffs, disc.map(a.kind).element_dofs(e));
        let vb = tb.element_values(&b.coeffs, disc.map(b.kind).element_dofs(e));
        for ((x, y), w) in va.iter().zip(&vb).zip(weights) {
            acc += w * (0..3).map(|c| (x[c] - y[c]).powi(2)).sum::<f64>();
        }
    }
    acc.sqrt()
}

fn expect_kind(f: &Field, kind: SpaceKind) -> Result<()> {
    if f.kind != kind {
        return Err(Error::KindMismatch {
            expected: kind,
            got: f.kind,
        });
    }
    Ok(())
}

/// Vorticity coefficients entering the helicity rate over `t^{k-1} → t^k`.
#[derive(Debug, Clone, Copy)]
pub struct HelicityRateInputs<'v> {
    /// Face vorticity at `t^{k-1/2}`.
    pub w2_half: &'v [f64],
    /// Edge vorticity at `t^{k-1}`.
    pub w1_prev: &'v [f64],
    /// Edge vorticity at `t^k`.
    pub w1: &'v [f64],
    /// Face vorticity at `t^{k-1}` (midpoint of its half-instant values).
    pub w2_prev: &'v [f64],
    /// Face vorticity at `t^k` (midpoint of its half-instant values).
    pub w2: &'v [f64],
}

/// Rate at which the discrete helicity changes under viscosity:
/// `-(w2^{k-1/2}, curl w1^{k-1/2}) / Re - [(w2^k, curl w1^k) +
/// (w2^{k-1}, curl w1^{k-1})] / (2 Re)`, with `w1^{k-1/2}` the midpoint of
/// the integer values. Exactly zero when inviscid.
pub fn helicity_dissipation_rate(disc: &Discretization, w: HelicityRateInputs<'_>, reynolds: Option<f64>) -> f64 {
    let Some(re) = reynolds else {
        return 0.0;
    };
    let curl = &disc.matrices().curl;
    let cross = |w2: &[f64], w1: &[f64]| sparse::bilinear(w2, curl, w1);
    let w1_mid = sparse::midpoint(w.w1_prev, w.w1);
    -cross(w.w2_half, &w1_mid) / re - (cross(w.w2, w.w1) + cross(w.w2_prev, w.w1_prev)) / (2.0 * re)
}

/// Diagnostics at step `k`. Quantities of the edge family (`k1`, `e2`)
/// live at the half instant `t^{k+1/2}`, the rest at `t^k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub k: usize,
    pub t: f64,
    /// `½|u2^k|²`.
    pub k2: f64,
    /// `½|u1^{k+1/2}|²`.
    pub k1: f64,
    /// `½|w1^k|²`.
    pub e1: f64,
    /// `½|w2^{k+1/2}|²`.
    pub e2: f64,
    /// Helicity from the edge velocity and edge vorticity at `t^k`.
    pub h1: f64,
    /// Helicity from the face velocity and face vorticity at `t^k`.
    pub h2: f64,
    /// Pointwise `max |div u2^k|`.
    pub div_u2: f64,
    /// `|E_div u2^k|_inf`.
    pub div_u2_coeffs: f64,
    /// Element-wise pointwise `max |div u1^{k+1/2}|`; only weakly zero.
    pub div_u1: f64,
    /// `L²` distance between the two velocities at `t^k`.
    pub dual_diff_u: f64,
    /// `L²` distance between the two vorticities at `t^k`.
    pub dual_diff_w: f64,
    /// Kinetic energy balance residual of the face velocity, step `k-1 → k`.
    pub energy_residual_2: f64,
    /// Kinetic energy balance residual of the edge velocity, step
    /// `k-1/2 → k+1/2`.
    pub energy_residual_1: f64,
    /// Discrete helicity dissipation rate over step `k-1 → k`.
    pub helicity_rate: f64,
    /// `(h1^k - h1^{k-1}) / dt`.
    pub helicity_change: f64,
}

impl DiagnosticsRecord {
    pub const HEADER: &'static str = "k,t,K1,K2,E1,E2,H1,H2,div_u2,div_u2_coeffs,div_u1,dual_diff_u,dual_diff_w,energy_residual_1,energy_residual_2,helicity_rate,helicity_change";

    pub fn csv_row(&self) -> String {
        let values = [
            self.t,
            self.k1,
            self.k2,
            self.e1,
            self.e2,
            self.h1,
            self.h2,
            self.div_u2,
            self.div_u2_coeffs,
            self.div_u1,
            self.dual_diff_u,
            self.dual_diff_w,
            self.energy_residual_1,
            self.energy_residual_2,
            self.helicity_rate,
            self.helicity_change,
        ];
        let mut row = self.k.to_string();
        for v in values {
            row.push_str(&format!(",{v:.17e}"));
        }
        row
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.k1,
            self.k2,
            self.e1,
            self.e2,
            self.h1,
            self.h2,
            self.div_u2,
            self.div_u1,
            self.energy_residual_1,
            self.energy_residual_2,
            self.helicity_rate,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Tracks the previous instants needed for time-differenced diagnostics.
pub struct Recorder<'a> {
    disc: &'a Discretization,
    dt: f64,
    inv_re: f64,
    reynolds: Option<f64>,
    prev: Option<Previous>,
}

struct Previous {
    u1_half: Vec<f64>,
    w2_half: Vec<f64>,
    w1_int: Vec<f64>,
    w2_int: Vec<f64>,
    k1: f64,
    k2: f64,
    h1: f64,
}

impl<'a> Recorder<'a> {
    pub fn new(disc: &'a Discretization, dt: f64, reynolds: Option<f64>) -> Self {
        Self {
            disc,
            dt,
            inv_re: reynolds.map_or(0.0, |r| 1.0 / r),
            reynolds,
            prev: None,
        }
    }

    /// Record the state right after the bootstrap half step.
    pub fn record_initial(&mut self, init: &InitialFields, state: &SimState) -> Result<DiagnosticsRecord> {
        let d = self.disc;
        let rec = DiagnosticsRecord {
            k: state.k,
            t: state.time(),
            k2: kinetic_energy(d, &state.u2),
            k1: kinetic_energy(d, &state.u1),
            e1: enstrophy(d, &state.w1),
            e2: enstrophy(d, &state.w2),
            h1: helicity(d, &init.u1, &state.w1)?,
            h2: helicity(d, &state.u2, &init.w2)?,
            div_u2: divergence_linf(d, &state.u2)?,
            div_u2_coeffs: divergence_coeffs(d, &state.u2)?,
            div_u1: divergence_linf(d, &state.u1)?,
            dual_diff_u: dual_difference(d, &init.u1, &state.u2),
            dual_diff_w: dual_difference(d, &state.w1, &init.w2),
            ..Default::default()
        };
        self.prev = Some(Previous {
            u1_half: state.u1.coeffs.clone(),
            w2_half: state.w2.coeffs.clone(),
            w1_int: state.w1.coeffs.clone(),
            w2_int: init.w2.coeffs.clone(),
            k1: rec.k1,
            k2: rec.k2,
            h1: rec.h1,
        });
        Ok(rec)
    }

    /// Record the state after integer step `k` and half step `k`.
    pub fn record(&mut self, state: &SimState) -> Result<DiagnosticsRecord> {
        let d = self.disc;
        let m = d.matrices();
        let prev = self
            .prev
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("record_initial must run first".into()))?;
        let dt = self.dt;
        let nu = self.inv_re;

        let u1_int = sparse::midpoint(&prev.u1_half, &state.u1.coeffs);
        let w2_int = sparse::midpoint(&prev.w2_half, &state.w2.coeffs);
        let w1_mid = sparse::midpoint(&prev.w1_int, &state.w1.coeffs);
        let w2_mid = sparse::midpoint(&prev.w2_half, &state.w2.coeffs);

        let k1 = kinetic_energy(d, &state.u1);
        let k2 = kinetic_energy(d, &state.u2);
        let h1 = sparse::bilinear(&u1_int, &m.mass_c, &state.w1.coeffs);
        let h2 = sparse::bilinear(&state.u2.coeffs, &m.mass_d, &w2_int);

        let dissipation_2 = nu * sparse::bilinear(&w1_mid, &m.mass_c, &w1_mid);
        let dissipation_1 = nu * sparse::bilinear(&w2_mid, &m.mass_d, &w2_mid);

        let helicity_rate = helicity_dissipation_rate(
            d,
            HelicityRateInputs {
                w2_half: &prev.w2_half,
                w1_prev: &prev.w1_int,
                w1: &state.w1.coeffs,
                w2_prev: &prev.w2_int,
                w2: &w2_int,
            },
            self.reynolds,
        );

        let rec = DiagnosticsRecord {
            k: state.k,
            t: state.time(),
            k2,
            k1,
            e1: enstrophy(d, &state.w1),
            e2: enstrophy(d, &state.w2),
            h1,
            h2,
            div_u2: divergence_linf(d, &state.u2)?,
            div_u2_coeffs: divergence_coeffs(d, &state.u2)?,
            div_u1: divergence_linf(d, &state.u1)?,
            dual_diff_u: dual_difference(d, &Field::new(SpaceKind::C, u1_int.clone(), state.time()), &state.u2),
            dual_diff_w: dual_difference(d, &state.w1, &Field::new(SpaceKind::D, w2_int.clone(), state.time())),
            energy_residual_2: (k2 - prev.k2) / dt + dissipation_2,
            energy_residual_1: (k1 - prev.k1) / dt + dissipation_1,
            helicity_rate,
            helicity_change: (h1 - prev.h1) / dt,
        };
        self.prev = Some(Previous {
            u1_half: state.u1.coeffs.clone(),
            w2_half: state.w2.coeffs.clone(),
            w1_int: state.w1.coeffs.clone(),
            w2_int,
            k1,
            k2,
            h1,
        });
        Ok(rec)
    }
}

/// Shell-binned kinetic energy spectrum of a velocity field sampled on a
/// uniform periodic lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub sample_n: usize,
    /// Energy in shell `s`, `s = round(|κ|)` with `κ` in units of `2π/L`.
    pub shells: Vec<f64>,
    /// Mean of `½|u|²` over the sample lattice.
    pub sample_energy: f64,
}

impl Spectrum {
    pub fn total(&self) -> f64 {
        self.shells.iter().sum()
    }
}

/// Sample `u` at `sample_n³` uniform points of the box, returning one
/// `[x, y, z]` triple per point in `(iz n + iy) n + ix` order.
pub fn sample_lattice(disc: &Discretization, u: &Field, sample_n: usize) -> Vec<[f64; 3]> {
    let n = sample_n;
    let lo = disc.mesh().box_min();
    let len = disc.mesh().lengths();
    let mut out = Vec::with_capacity(n * n * n);
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let x = [
                    lo[0] + len[0] * ix as f64 / n as f64,
                    lo[1] + len[1] * iy as f64 / n as f64,
                    lo[2] + len[2] * iz as f64 / n as f64,
                ];
                out.push(disc.eval(u, x));
            }
        }
    }
    out
}

/// Sample `u` at `sample_n³` uniform points and bin `½|û|²` by shell.
/// The transform is normalized so the shells sum to the sample mean of
/// `½|u|²`.
pub fn energy_spectrum(disc: &Discretization, u: &Field, sample_n: usize) -> Result<Spectrum> {
    let min = 2 * disc.mesh().cells_per_axis() * disc.degree();
    if sample_n < min {
        return Err(Error::SpectrumUndersampled { sample_n, min });
    }
    if !u.kind.is_vector() {
        return Err(Error::KindMismatch {
            expected: SpaceKind::D,
            got: u.kind,
        });
    }
    Ok(spectrum_from_samples(&sample_lattice(disc, u, sample_n), sample_n))
}

/// Shell spectrum of vector samples on an `n³` periodic lattice.
pub fn spectrum_from_samples(samples: &[[f64; 3]], n: usize) -> Spectrum {
    assert_eq!(samples.len(), n * n * n, "sample count must be n^3");
    let sample_energy = samples
        .iter()
        .map(|v| 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
        .sum::<f64>()
        / (n * n * n) as f64;
    let mut comps: Vec<Vec<Complex<f64>>> = (0..3)
        .map(|c| samples.iter().map(|v| Complex::new(v[c], 0.0)).collect())
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    for data in comps.iter_mut() {
        fft3d(data, n, fft.as_ref());
    }

    let signed = |i: usize| if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
    let max_shell = ((3.0f64).sqrt() * (n / 2) as f64).round() as usize + 1;
    let mut shells = vec![0.0; max_shell + 1];
    let norm = ((n * n * n) as f64).powi(2);
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let kappa = (signed(ix).powi(2) + signed(iy).powi(2) + signed(iz).powi(2)).sqrt();
                let idx = (iz * n + iy) * n + ix;
                let e: f64 = comps.iter().map(|c| c[idx].norm_sqr()).sum::<f64>() * 0.5 / norm;
                shells[kappa.round() as usize] += e;
            }
        }
    }
    while shells.len() > 1 && shells.last() == Some(&0.0) {
        shells.pop();
    }
    Spectrum {
        sample_n: n,
        shells,
        sample_energy,
    }
}

fn fft3d(data: &mut [Complex<f64>], n: usize, fft: &dyn rustfft::Fft<f64>) {
    // x lines are contiguous
    for line in data.chunks_exact_mut(n) {
        fft.process(line);
    }
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for stride_axis in [1usize, 2] {
        let stride = n.pow(stride_axis as u32);
        for base in 0..n * n * n {
            // first index of each line along the axis has zero coordinate there
            if !(base / stride).is_multiple_of(n) {
                continue;
            }
            for (j, b) in buf.iter_mut().enumerate() {
                *b = data[base + j * stride];
            }
            fft.process(&mut buf);
            for (j, b) in buf.iter().enumerate() {
                data[base + j * stride] = *b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_relative_eq;

    use super::*;
    use crate::analytic::AnalyticFlow;
    use crate::mesh::PeriodicMesh;
    use crate::timestepping::Stepper;

    fn disc_for(flow: AnalyticFlow, k: usize, degree: usize) -> Discretization {
        let (lo, hi) = flow.box_bounds();
        Discretization::new(PeriodicMesh::new(k, lo, hi).unwrap(), degree).unwrap()
    }

    fn project(d: &Discretization, flow: AnalyticFlow, kind: SpaceKind) -> Field {
        d.project_vector(kind, |x| flow.velocity(0.0, x), 0.0)
    }

    #[test]
    fn zero_fields_have_zero_invariants() {
        let d = disc_for(AnalyticFlow::HelicalShear, 2, 1);
        let z = Field::zeros(d.map(SpaceKind::C), 0.0);
        let u = project(&d, AnalyticFlow::HelicalShear, SpaceKind::C);
        assert_eq!(kinetic_energy(&d, &z), 0.0);
        assert_eq!(enstrophy(&d, &z), 0.0);
        assert_eq!(helicity(&d, &u, &z).unwrap(), 0.0);
    }

    #[test]
    fn helicity_requires_matching_spaces() {
        let d = disc_for(AnalyticFlow::HelicalShear, 1, 1);
        let u = Field::zeros(d.map(SpaceKind::C), 0.0);
        let w = Field::zeros(d.map(SpaceKind::D), 0.0);
        assert!(matches!(helicity(&d, &u, &w), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn shear_flow_initial_invariants() {
        // closed form: |curl u|^2 integrates to 6 pi^2 on the unit cube
        let d = disc_for(AnalyticFlow::HelicalShear, 3, 2);
        let st = Stepper::new(&d, 0.05, None, None).unwrap();
        let flow = AnalyticFlow::HelicalShear;
        let init = st
            .initial_fields(project(&d, flow, SpaceKind::C), project(&d, flow, SpaceKind::D))
            .unwrap();
        assert_relative_eq!(enstrophy(&d, &init.w1), 3.0 * PI * PI, max_relative = 0.02);
        assert_relative_eq!(enstrophy(&d, &init.w2), 3.0 * PI * PI, max_relative = 0.02);
        assert_relative_eq!(
            helicity(&d, &init.u1, &init.w1).unwrap(),
            -2.0 * PI,
            max_relative = 0.02
        );
        assert_relative_eq!(
            helicity(&d, &init.u2, &init.w2).unwrap(),
            -2.0 * PI,
            max_relative = 0.02
        );
        assert_relative_eq!(kinetic_energy(&d, &init.u2), 0.75, max_relative = 0.02);
    }

    #[test]
    fn taylor_green_initial_helicity_vanishes() {
        let flow = AnalyticFlow::TaylorGreen;
        let d = disc_for(flow, 8, 2);
        let st = Stepper::new(&d, 0.05, Some(500.0), None).unwrap();
        let init = st
            .initial_fields(project(&d, flow, SpaceKind::C), project(&d, flow, SpaceKind::D))
            .unwrap();
        assert!(helicity(&d, &init.u1, &init.w1).unwrap().abs() < 1e-10);
        assert!(helicity(&d, &init.u2, &init.w2).unwrap().abs() < 1e-10);
        let k = kinetic_energy(&d, &init.u2) / d.mesh().volume();
        assert_relative_eq!(k, 0.125, max_relative = 0.01);
    }

    #[test]
    fn divergence_of_projected_fields() {
        let flow = AnalyticFlow::TaylorGreen;
        let d = disc_for(flow, 3, 2);
        let u2 = project(&d, flow, SpaceKind::D);
        assert!(divergence_linf(&d, &u2).unwrap() < 1e-12);
        assert!(divergence_coeffs(&d, &u2).unwrap() < 1e-12);
        // the edge projection is divergence free only weakly
        let u1 = project(&d, flow, SpaceKind::C);
        assert!(divergence_linf(&d, &u1).unwrap() > 1e-3);
        assert!(divergence_coeffs(&d, &u1).is_err());
    }

    #[test]
    fn constant_edge_field_is_divergence_free() {
        let d = Discretization::new(PeriodicMesh::new(2, [0.0; 3], [4.0; 3]).unwrap(), 2).unwrap();
        let u = d.project_vector(SpaceKind::C, |_| [0.3, 1.0, -2.0], 0.0);
        assert!(divergence_linf(&d, &u).unwrap() < 1e-12);
    }

    #[test]
    fn l2_error_of_exact_evaluation_is_zero() {
        let flow = AnalyticFlow::TaylorGreen;
        let d = disc_for(flow, 2, 2);
        let u = project(&d, flow, SpaceKind::D);
        let err = l2_error(&d, &u, |x| d.eval(&u, x));
        assert!(err < 1e-12, "{err}");
        assert!(l2_error(&d, &u, |x| flow.velocity(0.0, x)) > 1e-4);
    }

    #[test]
    fn dual_difference_bounded_by_projection_errors() {
        let flow = AnalyticFlow::TaylorGreen;
        let d = disc_for(flow, 3, 2);
        let u1 = project(&d, flow, SpaceKind::C);
        let u2 = project(&d, flow, SpaceKind::D);
        let e1 = l2_error(&d, &u1, |x| flow.velocity(0.0, x));
        let e2 = l2_error(&d, &u2, |x| flow.velocity(0.0, x));
        let dd = dual_difference(&d, &u1, &u2);
        assert!(dd > 0.0 && dd <= e1 + e2 + 1e-12, "{dd} vs {e1} + {e2}");
        assert!(dual_difference(&d, &u2, &u2) < 1e-14);
    }

    #[test]
    fn inviscid_rate_is_exactly_zero() {
        let d = disc_for(AnalyticFlow::HelicalShear, 1, 1);
        let v = vec![1.0; d.map(SpaceKind::C).global_count()];
        let w = vec![1.0; d.map(SpaceKind::D).global_count()];
        let inputs = HelicityRateInputs {
            w2_half: &w,
            w1_prev: &v,
            w1: &v,
            w2_prev: &w,
            w2: &w,
        };
        assert_eq!(helicity_dissipation_rate(&d, inputs, None), 0.0);
    }

    fn single_mode(n: usize) -> Vec<[f64; 3]> {
        let mut out = Vec::new();
        for _iz in 0..n {
            for _iy in 0..n {
                for ix in 0..n {
                    let x = -PI + 2.0 * PI * ix as f64 / n as f64;
                    out.push([0.0, x.sin(), 0.0]);
                }
            }
        }
        out
    }

    #[test]
    fn single_mode_lands_in_first_shell() {
        let s = spectrum_from_samples(&single_mode(16), 16);
        assert_relative_eq!(s.shells[1], 0.25, max_relative = 1e-14);
        let rest: f64 = s
            .shells
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != 1)
            .map(|(_, e)| e)
            .sum();
        assert!(rest < 1e-28);
        assert_relative_eq!(s.total(), s.sample_energy, max_relative = 1e-12);
    }

    #[test]
    fn taylor_green_spectrum_concentrated_in_low_shells() {
        let flow = AnalyticFlow::TaylorGreen;
        let d = disc_for(flow, 8, 2);
        let u = project(&d, flow, SpaceKind::D);
        let s = energy_spectrum(&d, &u, 32).unwrap();
        assert!((s.total() - s.sample_energy).abs() <= 1e-10 * s.sample_energy);
        let low: f64 = s.shells.iter().take(3).sum();
        assert!(low >= 0.99 * s.total(), "{low} of {}", s.total());
    }

    #[test]
    fn spectrum_refuses_undersampling() {
        let d = disc_for(AnalyticFlow::TaylorGreen, 4, 2);
        let u = Field::zeros(d.map(SpaceKind::D), 0.0);
        assert!(matches!(
            energy_spectrum(&d, &u, 15),
            Err(Error::SpectrumUndersampled { sample_n: 15, min: 16 })
        ));
    }

    #[test]
    fn csv_row_matches_header() {
        let r = DiagnosticsRecord::default();
        assert_eq!(
            r.csv_row().split(',').count(),
            DiagnosticsRecord::HEADER.split(',').count()
        );
    }
}
