//! The time loop: bootstrap, then alternating integer and half-integer
//! steps, with one diagnostics record per step.

use crate::assembly::Discretization;
use crate::diagnostics::{DiagnosticsRecord, Recorder};
use crate::error::{Error, Result};
use crate::timestepping::{InitialFields, SimState, StepReport, Stepper};

/// Largest accepted relative residual of any step's linear solve.
pub const MAX_SOLVE_RESIDUAL: f64 = 1e-9;
/// Largest accepted `|w2 - E_curl u1|_inf` after a half step, relative to
/// `max(|w2|_inf, 1)`.
pub const MAX_CURL_IDENTITY: f64 = 1e-9;

/// Number of steps to reach `t_end`; `t_end` must be a whole multiple of
/// `dt` up to rounding.
pub fn steps_for(t_end: f64, dt: f64) -> Result<usize> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "t_end must be nonnegative, got {t_end}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} is not a whole number of steps of dt = {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Everything a finished run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub initial: InitialFields,
    pub records: Vec<DiagnosticsRecord>,
    pub state: SimState,
}

fn check_report(report: &StepReport, w2_scale: f64, context: &str) -> Result<()> {
    if report.residual > MAX_SOLVE_RESIDUAL {
        return Err(Error::SolverAccuracy {
            context: context.to_string(),
            what: "relative solve residual",
            value: report.residual,
            limit: MAX_SOLVE_RESIDUAL,
        });
    }
    let limit = MAX_CURL_IDENTITY * w2_scale.max(1.0);
    if report.curl_identity > limit {
        return Err(Error::SolverAccuracy {
            context: context.to_string(),
            what: "|w2 - E_curl u1|",
            value: report.curl_identity,
            limit,
        });
    }
    Ok(())
}

fn check_record(rec: &DiagnosticsRecord) -> Result<()> {
    if rec.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            context: format!("diagnostics at step {}", rec.k),
        })
    }
}

/// Run `steps` integer/half-integer step pairs after the bootstrap.
/// `observer` sees every state with its record (the bootstrap state as
/// `k = 0`) and may abort the run by returning an error.
pub fn run(
    disc: &Discretization,
    stepper: &mut Stepper<'_>,
    initial: InitialFields,
    steps: usize,
    mut observer: impl FnMut(&SimState, &DiagnosticsRecord) -> Result<()>,
) -> Result<RunOutput> {
    let (mut state, report) = stepper.bootstrap(&initial)?;
    let w2_scale = |s: &SimState| s.w2.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    check_report(&report, w2_scale(&state), "bootstrap half step")?;
    let mut recorder = Recorder::new(disc, stepper.dt(), stepper.reynolds());
    let rec = recorder.record_initial(&initial, &state)?;
    check_record(&rec)?;
    observer(&state, &rec)?;
    let mut records = vec![rec];
    for _ in 0..steps {
        let report = stepper.integer_step(&mut state)?;
        check_report(&report, 0.0, &format!("integer step {}", state.k))?;
        let report = stepper.half_step(&mut state)?;
        check_report(&report, w2_scale(&state), &format!("half-integer step {}", state.k))?;
        let rec = recorder.record(&state)?;
        check_record(&rec)?;
        observer(&state, &rec)?;
        records.push(rec);
    }
    Ok(RunOutput {
        initial,
        records,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_for_whole_multiples() {
        assert_eq!(steps_for(10.0, 0.05).unwrap(), 200);
        assert_eq!(steps_for(1.0, 1.0 / 200.0).unwrap(), 200);
        assert_eq!(steps_for(0.0, 0.1).unwrap(), 0);
    }

    #[test]
    fn steps_for_rejects_bad_input() {
        assert!(steps_for(1.0, 0.0).is_err());
        assert!(steps_for(-1.0, 0.1).is_err());
        assert!(steps_for(1.0, 0.3).is_err());
        assert!(steps_for(f64::NAN, 0.1).is_err());
    }
}
