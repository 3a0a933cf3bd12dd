//! Orchestration of a configured case and its output files.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mdf_core::assembly::Discretization;
use mdf_core::diagnostics::{energy_spectrum, l2_error, DiagnosticsRecord, Spectrum};
use mdf_core::mesh::{PeriodicMesh, SpaceKind};
use mdf_core::run::{run, steps_for};
use mdf_core::timestepping::{write_checkpoint, LinearSolver, SimState, Stepper};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::vtk::field_dump;

pub const MANIFEST: &str = "manifest.txt";
pub const DIAGNOSTICS: &str = "diagnostics.csv";
pub const ERRORS: &str = "errors.csv";
pub const SPECTRUM: &str = "spectrum.csv";
pub const FIELDS_DIR: &str = "fields";
pub const CHECKPOINTS_DIR: &str = "checkpoints";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run K = {cells}, N = {degree}: {source}")]
    Solver {
        cells: usize,
        degree: usize,
        #[source]
        source: mdf_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Solver { .. } => 3,
            RunError::Io { .. } => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Final-time errors against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub cells: usize,
    pub degree: usize,
    pub h: f64,
    pub dt: f64,
    /// Integer instant of `u2` and `w1`; `u1` and `w2` are half a step
    /// later.
    pub t: f64,
    pub u1: f64,
    pub u2: f64,
    pub w1: f64,
    pub w2: f64,
    pub dual_diff_u: f64,
    pub dual_diff_w: f64,
}

impl ErrorRow {
    pub const HEADER: &'static str = "K,N,h,dt,t,u1_l2,u2_l2,w1_l2,w2_l2,dual_diff_u,dual_diff_w";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            self.cells,
            self.degree,
            self.h,
            self.dt,
            self.t,
            self.u1,
            self.u2,
            self.w1,
            self.w2,
            self.dual_diff_u,
            self.dual_diff_w
        )
    }
}

/// A sampled spectrum of `u2` at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSnapshot {
    pub k: usize,
    pub t: f64,
    pub spectrum: Spectrum,
}

/// One `(K, N)` run of a case.
#[derive(Debug, Clone)]
pub struct CaseRun {
    pub cells: usize,
    pub degree: usize,
    /// Solver used for the step systems after resolving `auto`.
    pub solver: LinearSolver,
    pub volume: f64,
    /// Every step, whatever the CSV cadence.
    pub records: Vec<DiagnosticsRecord>,
    pub errors: Option<ErrorRow>,
    pub spectra: Vec<SpectrumSnapshot>,
    pub state: SimState,
}

#[derive(Debug, Clone)]
pub struct CaseOutput {
    pub config: RunConfig,
    pub runs: Vec<CaseRun>,
}

pub const DIAGNOSTICS_HEADER_PREFIX: &str = "K,N,";
pub const DIAGNOSTICS_HEADER_SUFFIX: &str = ",K1_mean,K2_mean";

pub fn diagnostics_header() -> String {
    format!(
        "{DIAGNOSTICS_HEADER_PREFIX}{}{DIAGNOSTICS_HEADER_SUFFIX}",
        DiagnosticsRecord::HEADER
    )
}

fn solver_label(s: LinearSolver) -> &'static str {
    match s {
        LinearSolver::Direct => "direct",
        LinearSolver::Krylov => "krylov",
        LinearSolver::Auto => "auto",
    }
}

struct Outputs {
    dir: PathBuf,
    diagnostics: BufWriter<File>,
    spectrum: Option<BufWriter<File>>,
    errors: Option<BufWriter<File>>,
}

impl Outputs {
    fn create(cfg: &RunConfig, with_errors: bool) -> Result<Self, RunError> {
        let dir = cfg.output_dir.clone();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let open = |name: &str, header: &str| -> Result<BufWriter<File>, RunError> {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
            writeln!(w, "{header}").and_then(|_| w.flush()).map_err(io_err(&path))?;
            Ok(w)
        };
        let diagnostics = open(DIAGNOSTICS, &diagnostics_header())?;
        let spectrum = if cfg.spectrum_n > 0 {
            Some(open(SPECTRUM, "K,N,k,t,shell,energy")?)
        } else {
            None
        };
        let errors = if with_errors {
            Some(open(ERRORS, ErrorRow::HEADER)?)
        } else {
            None
        };
        Ok(Outputs {
            dir,
            diagnostics,
            spectrum,
            errors,
        })
    }
}

fn write_manifest(
    cfg: &RunConfig,
    runs: &[(usize, usize, LinearSolver, usize, f64)],
    steps: usize,
) -> Result<(), RunError> {
    let path = cfg.output_dir.join(MANIFEST);
    let mut text = format!("# mdf-cli {}\n", env!("CARGO_PKG_VERSION"));
    text.push_str("# resolved configuration; this file is itself a valid config\n");
    text.push_str(&cfg.to_text());
    text.push_str(&format!("# steps = {steps}\n"));
    for (k, n, solver, unknowns, volume) in runs {
        text.push_str(&format!(
            "# run K = {k}, N = {n}: solver {}, {unknowns} unknowns in the integer system, volume {volume:e}\n",
            solver_label(*solver)
        ));
    }
    fs::write(&path, text).map_err(io_err(&path))
}

fn write_spectrum(w: &mut BufWriter<File>, cells: usize, degree: usize, s: &SpectrumSnapshot) -> io::Result<()> {
    for (shell, e) in s.spectrum.shells.iter().enumerate() {
        writeln!(w, "{cells},{degree},{},{:.17e},{shell},{e:.17e}", s.k, s.t)?;
    }
    w.flush()
}

/// Run every `(K, N)` of the case, writing the artifacts under
/// `cfg.output_dir`. Rows are flushed as they are produced, so a failed
/// run leaves the output up to the failure.
pub fn run_case(cfg: &RunConfig) -> Result<CaseOutput, RunError> {
    cfg.validate()?;
    let flow = cfg.analytic_flow();
    let steps = steps_for(cfg.t_end, cfg.dt).map_err(|e| ConfigError::Invalid {
        key: "t_end".into(),
        value: cfg.t_end.to_string(),
        reason: e.to_string(),
    })?;
    let (lo, hi) = flow.box_bounds();
    let force = move |t: f64, x: [f64; 3]| flow.forcing(t, x).unwrap_or([0.0; 3]);
    let forcing: Option<mdf_core::timestepping::Forcing<'_>> = if flow.is_forced() { Some(&force) } else { None };

    let mut out = Outputs::create(cfg, flow.is_exact_in_time())?;
    let mut discs = Vec::new();
    let mut planned = Vec::new();
    for (cells, degree) in cfg.runs() {
        let solver_err = |source| RunError::Solver { cells, degree, source };
        let disc = PeriodicMesh::new(cells, lo, hi)
            .and_then(|mesh| Discretization::new(mesh, degree))
            .map_err(solver_err)?;
        let stepper = Stepper::new(&disc, cfg.dt, cfg.reynolds, forcing).map_err(solver_err)?;
        let unknowns = [SpaceKind::D, SpaceKind::C, SpaceKind::S]
            .iter()
            .map(|&k| disc.map(k).global_count())
            .sum::<usize>()
            + 1;
        planned.push((
            cells,
            degree,
            stepper.with_solver(cfg.solver).resolved_solver(),
            unknowns,
            disc.mesh().volume(),
        ));
        discs.push(disc);
    }
    write_manifest(cfg, &planned, steps)?;

    let mut runs = Vec::new();
    for (disc, &(cells, degree, solver, _, volume)) in discs.iter().zip(&planned) {
        let solver_err = |source| RunError::Solver { cells, degree, source };
        let mut stepper = Stepper::new(disc, cfg.dt, cfg.reynolds, forcing)
            .map_err(solver_err)?
            .with_solver(cfg.solver);
        let u1 = disc.project_vector(SpaceKind::C, |x| flow.velocity(0.0, x), 0.0);
        let u2 = disc.project_vector(SpaceKind::D, |x| flow.velocity(0.0, x), 0.0);
        let initial = stepper.initial_fields(u1, u2).map_err(solver_err)?;

        let mut spectra = Vec::new();
        if cfg.spectrum_n > 0 {
            let s = SpectrumSnapshot {
                k: 0,
                t: 0.0,
                spectrum: energy_spectrum(disc, &initial.u2, cfg.spectrum_n).map_err(solver_err)?,
            };
            if let Some(w) = out.spectrum.as_mut() {
                let path = out.dir.join(SPECTRUM);
                write_spectrum(w, cells, degree, &s).map_err(io_err(&path))?;
            }
            spectra.push(s);
        }

        let dump_n = if cfg.dump_n == 0 {
            2 * cells * degree
        } else {
            cfg.dump_n
        };
        let mut failure: Option<RunError> = None;
        let observer = |state: &SimState, rec: &DiagnosticsRecord| -> mdf_core::Result<()> {
            let k = state.k;
            let result = (|| -> Result<(), RunError> {
                if k.is_multiple_of(cfg.diagnostics_every) || k == steps {
                    let path = out.dir.join(DIAGNOSTICS);
                    let w = &mut out.diagnostics;
                    writeln!(
                        w,
                        "{cells},{degree},{},{:.17e},{:.17e}",
                        rec.csv_row(),
                        rec.k1 / volume,
                        rec.k2 / volume
                    )
                    .and_then(|_| w.flush())
                    .map_err(io_err(&path))?;
                }
                let stem = format!("K{cells}_N{degree}_step{k:06}");
                if cfg.dump_every > 0 && (k.is_multiple_of(cfg.dump_every) || k == steps) {
                    let dir = out.dir.join(FIELDS_DIR);
                    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                    let path = dir.join(format!("{stem}.vtk"));
                    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
                    field_dump(disc, state, dump_n)
                        .write(&mut w)
                        .and_then(|_| w.flush())
                        .map_err(io_err(&path))?;
                }
                if cfg.checkpoint_every > 0 && (k.is_multiple_of(cfg.checkpoint_every) || k == steps) {
                    let dir = out.dir.join(CHECKPOINTS_DIR);
                    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
                    let path = dir.join(format!("{stem}.txt"));
                    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
                    write_checkpoint(&mut w, state, cells, degree).map_err(|source| RunError::Solver {
                        cells,
                        degree,
                        source,
                    })?;
                    w.flush().map_err(io_err(&path))?;
                }
                if cfg.spectrum_n > 0
                    && k > 0
                    && ((cfg.spectrum_every > 0 && k.is_multiple_of(cfg.spectrum_every)) || k == steps)
                {
                    let s = SpectrumSnapshot {
                        k,
                        t: state.time(),
                        spectrum: energy_spectrum(disc, &state.u2, cfg.spectrum_n).map_err(solver_err)?,
                    };
                    if let Some(w) = out.spectrum.as_mut() {
                        let path = out.dir.join(SPECTRUM);
                        write_spectrum(w, cells, degree, &s).map_err(io_err(&path))?;
                    }
                    spectra.push(s);
                }
                Ok(())
            })();
            result.map_err(|e| {
                let msg = e.to_string();
                failure = Some(e);
                mdf_core::Error::InvalidParameter(format!("output failed: {msg}"))
            })
        };
        let output = match run(disc, &mut stepper, initial, steps, observer) {
            Ok(o) => o,
            Err(source) => return Err(failure.take().unwrap_or(RunError::Solver { cells, degree, source })),
        };

        let errors = if flow.is_exact_in_time() {
            let s = &output.state;
            let last = output.records.last().expect("run records the initial state");
            let row = ErrorRow {
                cells,
                degree,
                h: disc.mesh().element_size()[0],
                dt: cfg.dt,
                t: s.u2.time,
                u1: l2_error(disc, &s.u1, |x| flow.velocity(s.u1.time, x)),
                u2: l2_error(disc, &s.u2, |x| flow.velocity(s.u2.time, x)),
                w1: l2_error(disc, &s.w1, |x| flow.vorticity(s.w1.time, x)),
                w2: l2_error(disc, &s.w2, |x| flow.vorticity(s.w2.time, x)),
                dual_diff_u: last.dual_diff_u,
                dual_diff_w: last.dual_diff_w,
            };
            if let Some(w) = out.errors.as_mut() {
                let path = out.dir.join(ERRORS);
                writeln!(w, "{}", row.csv_row())
                    .and_then(|_| w.flush())
                    .map_err(io_err(&path))?;
            }
            Some(row)
        } else {
            None
        };
        runs.push(CaseRun {
            cells,
            degree,
            solver,
            volume,
            records: output.records,
            errors,
            spectra,
            state: output.state,
        });
    }
    Ok(CaseOutput {
        config: cfg.clone(),
        runs,
    })
}
