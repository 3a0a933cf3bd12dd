//! Closed-form flows used as initial conditions, exact solutions and body
//! forces.

use std::f64::consts::PI;

const TAU: f64 = 2.0 * PI;

/// A named analytic flow on a periodic box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFlow {
    /// `(cos 2 pi z, sin 2 pi z, sin 2 pi x)` on the unit cube, unforced.
    /// Nonzero helicity; an exact steady Euler solution is not implied.
    HelicalShear,
    /// Manufactured time-dependent solution on the unit cube driven by the
    /// body force that makes it exact at the given Reynolds number.
    Manufactured { reynolds: f64 },
    /// Taylor-Green vortex on `[-pi, pi]^3`, unforced.
    TaylorGreen,
}

impl AnalyticFlow {
    pub fn box_bounds(&self) -> ([f64; 3], [f64; 3]) {
        match self {
            AnalyticFlow::HelicalShear | AnalyticFlow::Manufactured { .. } => ([0.0; 3], [1.0; 3]),
            AnalyticFlow::TaylorGreen => ([-PI; 3], [PI; 3]),
        }
    }

    pub fn velocity(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        match self {
            AnalyticFlow::HelicalShear => shear_velocity(1.0, 1.0, 1.0, x),
            AnalyticFlow::Manufactured { .. } => shear_velocity(2.0 - t, 1.0 + t, 1.0 - t, x),
            AnalyticFlow::TaylorGreen => {
                let [x, y, z] = x;
                [x.sin() * y.cos() * z.cos(), -x.cos() * y.sin() * z.cos(), 0.0]
            }
        }
    }

    pub fn vorticity(&self, t: f64, x: [f64; 3]) -> [f64; 3] {
        match self {
            AnalyticFlow::HelicalShear => shear_vorticity(1.0, 1.0, 1.0, x),
            AnalyticFlow::Manufactured { .. } => shear_vorticity(2.0 - t, 1.0 + t, 1.0 - t, x),
            AnalyticFlow::TaylorGreen => {
                let [x, y, z] = x;
                [
                    -x.cos() * y.sin() * z.sin(),
                    -x.sin() * y.cos() * z.sin(),
                    2.0 * x.sin() * y.sin() * z.cos(),
                ]
            }
        }
    }

    /// Static pressure `p` where known (manufactured case only).
    pub fn pressure(&self, t: f64, x: [f64; 3]) -> Option<f64> {
        match self {
            AnalyticFlow::Manufactured { .. } => Some((TAU * (x[0] + x[1] + t)).sin()),
            _ => None,
        }
    }

    /// Total pressure `p + |u|^2 / 2` where known.
    pub fn total_pressure(&self, t: f64, x: [f64; 3]) -> Option<f64> {
        let u = self.velocity(t, x);
        self.pressure(t, x)
            .map(|p| p + 0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]))
    }

    /// Body force, or `None` for unforced flows.
    pub fn forcing(&self, t: f64, x: [f64; 3]) -> Option<[f64; 3]> {
        match *self {
            AnalyticFlow::Manufactured { reynolds } => Some(manufactured_forcing(reynolds, t, x)),
            _ => None,
        }
    }

    pub fn is_forced(&self) -> bool {
        matches!(self, AnalyticFlow::Manufactured { .. })
    }

    /// Whether `velocity(t, .)` is the exact solution for all `t` (and not
    /// only the initial condition).
    pub fn is_exact_in_time(&self) -> bool {
        matches!(self, AnalyticFlow::Manufactured { .. })
    }
}

fn shear_velocity(a: f64, b: f64, c: f64, x: [f64; 3]) -> [f64; 3] {
    [a * (TAU * x[2]).cos(), b * (TAU * x[2]).sin(), c * (TAU * x[0]).sin()]
}

fn shear_vorticity(a: f64, b: f64, c: f64, x: [f64; 3]) -> [f64; 3] {
    [
        -TAU * b * (TAU * x[2]).cos(),
        -TAU * a * (TAU * x[2]).sin() - TAU * c * (TAU * x[0]).cos(),
        0.0,
    ]
}

/// `du/dt + (u . grad) u - lap(u) / Re + grad p` for the manufactured
/// solution, which equals the rotational form with the total pressure.
fn manufactured_forcing(re: f64, t: f64, x: [f64; 3]) -> [f64; 3] {
    let (a, b, c) = (2.0 - t, 1.0 + t, 1.0 - t);
    let (sx, cx) = (TAU * x[0]).sin_cos();
    let (sz, cz) = (TAU * x[2]).sin_cos();
    let u = [a * cz, b * sz, c * sx];
    let dudt = [-cz, sz, -sx];
    // u . grad: ux depends on z, uy on z, uz on x
    let adv = [u[2] * (-TAU * a * sz), u[2] * (TAU * b * cz), u[0] * (TAU * c * cx)];
    let lap = TAU * TAU / re;
    let gp = TAU * (TAU * (x[0] + x[1] + t)).cos();
    [
        dudt[0] + adv[0] + lap * u[0] + gp,
        dudt[1] + adv[1] + lap * u[1] + gp,
        dudt[2] + adv[2] + lap * u[2],
    ]
}
