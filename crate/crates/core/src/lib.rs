//! Structure-preserving mimetic dual-field solver for the incompressible
//! Navier-Stokes equations on triply periodic boxes.
//!
//! The velocity is carried twice, once in H(curl) (`u1`, with vorticity `w2`
//! in H(div)) and once in H(div) (`u2`, with vorticity `w1` in H(curl)). The
//! two copies live on staggered time instants and exchange vorticities, which
//! makes every step a linear saddle-point solve while conserving mass, kinetic
//! energy and helicity exactly in the inviscid limit.

pub mod analytic;
pub mod assembly;
pub mod basis;
pub mod diagnostics;
pub mod error;
pub mod krylov;
pub mod linsolve;
pub mod mesh;
pub mod run;
pub mod sparse;
pub mod tensor;
pub mod timestepping;

pub use error::{Error, Result};
