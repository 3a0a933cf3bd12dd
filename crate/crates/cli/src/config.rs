//! Run configuration: flat `key = value` text, case defaults and
//! validation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use mdf_core::analytic::AnalyticFlow;
use mdf_core::run::steps_for;
use mdf_core::timestepping::LinearSolver;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    Invalid { key: String, value: String, reason: String },
    #[error("no case given; use one of conservation, dissipation, convergence, tgv, custom")]
    MissingCase,
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Conservation,
    Dissipation,
    Convergence,
    Tgv,
    Custom,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Conservation => "conservation",
            CaseKind::Dissipation => "dissipation",
            CaseKind::Convergence => "convergence",
            CaseKind::Tgv => "tgv",
            CaseKind::Custom => "custom",
        }
    }
}

impl FromStr for CaseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "conservation" => CaseKind::Conservation,
            "dissipation" => CaseKind::Dissipation,
            "convergence" => CaseKind::Convergence,
            "tgv" => CaseKind::Tgv,
            "custom" => CaseKind::Custom,
            _ => return Err("expected conservation, dissipation, convergence, tgv or custom".into()),
        })
    }
}

/// Initial condition (and forcing) of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowChoice {
    Shear,
    Manufactured,
    TaylorGreen,
}

impl FlowChoice {
    pub fn name(self) -> &'static str {
        match self {
            FlowChoice::Shear => "shear",
            FlowChoice::Manufactured => "manufactured",
            FlowChoice::TaylorGreen => "taylor-green",
        }
    }
}

impl FromStr for FlowChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "shear" => FlowChoice::Shear,
            "manufactured" => FlowChoice::Manufactured,
            "taylor-green" => FlowChoice::TaylorGreen,
            _ => return Err("expected shear, manufactured or taylor-green".into()),
        })
    }
}

fn solver_name(s: LinearSolver) -> &'static str {
    match s {
        LinearSolver::Direct => "direct",
        LinearSolver::Krylov => "krylov",
        LinearSolver::Auto => "auto",
    }
}

/// Every key the configuration accepts, in manifest order.
pub const KEYS: &[&str] = &[
    "case",
    "flow",
    "K",
    "N",
    "dt",
    "t_end",
    "Re",
    "inviscid",
    "sweep_K",
    "sweep_N",
    "solver",
    "out",
    "diagnostics_every",
    "spectrum_n",
    "spectrum_every",
    "dump_every",
    "dump_n",
    "checkpoint_every",
    "deterministic",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseKind,
    pub flow: FlowChoice,
    /// Elements per axis.
    pub cells: usize,
    pub degree: usize,
    pub dt: f64,
    pub t_end: f64,
    /// `None` is inviscid.
    pub reynolds: Option<f64>,
    /// `(K, N)` pairs of a convergence sweep are the product of these.
    pub sweep_cells: Vec<usize>,
    pub sweep_degrees: Vec<usize>,
    pub solver: LinearSolver,
    pub output_dir: PathBuf,
    /// Write every n-th diagnostics row; the first and last are always
    /// written.
    pub diagnostics_every: usize,
    /// Spectrum sample count per axis; 0 disables spectra.
    pub spectrum_n: usize,
    /// Extra spectra every n steps besides the first and last; 0 for none.
    pub spectrum_every: usize,
    /// Field dumps every n steps; 0 disables them.
    pub dump_every: usize,
    /// Dump lattice per axis; 0 means `2 K N`.
    pub dump_n: usize,
    pub checkpoint_every: usize,
}

/// Parse real numbers, accepting fractions such as `1/20` and `inf`.
pub fn parse_real(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = match value.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| invalid(key, value, "not a number"))?;
            let b: f64 = b.trim().parse().map_err(|_| invalid(key, value, "not a number"))?;
            a / b
        }
        None => value.parse().map_err(|_| invalid(key, value, "not a number"))?,
    };
    if v.is_nan() {
        return Err(invalid(key, value, "not a number"));
    }
    Ok(v)
}

fn parse_usize(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| invalid(key, value, "expected a nonnegative integer"))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, ConfigError> {
    let list = value
        .split(',')
        .map(|v| parse_usize(key, v.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(invalid(key, value, "empty list"));
    }
    Ok(list)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

/// Split flat `key = value` text into pairs. `#` starts a comment; blank
/// lines are skipped; a key may appear once.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if pairs.iter().any(|(p, _)| p == k) {
            return Err(ConfigError::DuplicateKey(k.to_string()));
        }
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(pairs)
}

impl RunConfig {
    /// Defaults of a case.
    pub fn defaults(case: CaseKind) -> Self {
        let base = RunConfig {
            case,
            flow: FlowChoice::Shear,
            cells: 3,
            degree: 2,
            dt: 1.0 / 20.0,
            t_end: 10.0,
            reynolds: None,
            sweep_cells: vec![2, 3, 4],
            sweep_degrees: vec![1, 2],
            solver: LinearSolver::Auto,
            output_dir: PathBuf::from("out"),
            diagnostics_every: 1,
            spectrum_n: 0,
            spectrum_every: 0,
            dump_every: 0,
            dump_n: 0,
            checkpoint_every: 0,
        };
        match case {
            CaseKind::Conservation => base,
            CaseKind::Dissipation => RunConfig {
                reynolds: Some(100.0),
                ..base
            },
            CaseKind::Convergence => RunConfig {
                flow: FlowChoice::Manufactured,
                dt: 1.0 / 50.0,
                t_end: 2.0,
                reynolds: Some(1.0),
                ..base
            },
            CaseKind::Tgv => RunConfig {
                flow: FlowChoice::TaylorGreen,
                cells: 8,
                reynolds: Some(500.0),
                spectrum_n: 32,
                ..base
            },
            CaseKind::Custom => RunConfig {
                cells: 2,
                t_end: 1.0,
                reynolds: Some(100.0),
                ..base
            },
        }
    }

    /// Resolve a configuration from file pairs overridden by flag pairs.
    pub fn resolve(file: &[(String, String)], flags: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut merged: Vec<(String, String)> = file.to_vec();
        for (k, v) in flags {
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
            match merged.iter_mut().find(|(p, _)| p == k) {
                Some(slot) => slot.1 = v.clone(),
                None => merged.push((k.clone(), v.clone())),
            }
        }
        let get = |key: &str| merged.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let case_str = get("case").ok_or(ConfigError::MissingCase)?;
        let case: CaseKind = case_str.parse().map_err(|e: String| invalid("case", case_str, e))?;
        let mut cfg = RunConfig::defaults(case);

        let (mut re_given, mut inviscid) = (None, None);
        for (key, value) in &merged {
            let (key, value) = (key.as_str(), value.as_str());
            match key {
                "case" => {}
                "flow" => {
                    if case != CaseKind::Custom {
                        return Err(invalid(
                            key,
                            value,
                            format!("the flow is fixed by case {}", case.name()),
                        ));
                    }
                    cfg.flow = value.parse().map_err(|e: String| invalid(key, value, e))?;
                }
                "K" => cfg.cells = parse_usize(key, value)?,
                "N" => cfg.degree = parse_usize(key, value)?,
                "dt" => cfg.dt = parse_real(key, value)?,
                "t_end" => cfg.t_end = parse_real(key, value)?,
                "Re" => re_given = Some(parse_real(key, value)?),
                "inviscid" => inviscid = Some(parse_bool(key, value)?),
                "sweep_K" | "sweep_N" => {
                    if case != CaseKind::Convergence {
                        return Err(invalid(key, value, "sweeps apply to case convergence only"));
                    }
                    let list = parse_list(key, value)?;
                    if key == "sweep_K" {
                        cfg.sweep_cells = list;
                    } else {
                        cfg.sweep_degrees = list;
                    }
                }
                "solver" => {
                    cfg.solver = match value {
                        "direct" => LinearSolver::Direct,
                        "krylov" => LinearSolver::Krylov,
                        "auto" => LinearSolver::Auto,
                        _ => return Err(invalid(key, value, "expected direct, krylov or auto")),
                    }
                }
                "out" => cfg.output_dir = PathBuf::from(value),
                "diagnostics_every" => cfg.diagnostics_every = parse_usize(key, value)?,
                "spectrum_n" => cfg.spectrum_n = parse_usize(key, value)?,
                "spectrum_every" => cfg.spectrum_every = parse_usize(key, value)?,
                "dump_every" => cfg.dump_every = parse_usize(key, value)?,
                "dump_n" => cfg.dump_n = parse_usize(key, value)?,
                "checkpoint_every" => cfg.checkpoint_every = parse_usize(key, value)?,
                "deterministic" => {
                    if !parse_bool(key, value)? {
                        return Err(invalid(key, value, "runs are always deterministic"));
                    }
                }
                _ => return Err(ConfigError::UnknownKey(key.to_string())),
            }
        }
        if case == CaseKind::Convergence {
            for (key, list) in [("K", &mut cfg.sweep_cells), ("N", &mut cfg.sweep_degrees)] {
                if let Some(v) = get(key) {
                    if get(&format!("sweep_{key}")).is_some() {
                        return Err(invalid(key, v, format!("give either {key} or sweep_{key}")));
                    }
                    *list = vec![parse_usize(key, v)?];
                }
            }
        }
        match (re_given, inviscid) {
            (Some(re), Some(true)) if re.is_finite() => {
                return Err(invalid("inviscid", "true", format!("conflicts with Re = {re}")));
            }
            (_, Some(true)) => cfg.reynolds = None,
            (Some(re), _) => cfg.reynolds = if re.is_infinite() { None } else { Some(re) },
            (None, Some(false)) if cfg.reynolds.is_none() => {
                return Err(invalid("inviscid", "false", "give a finite Re"));
            }
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |key: &str, value: String, reason: &str| Err(invalid(key, &value, reason));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail("dt", self.dt.to_string(), "must be positive and finite");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return fail("t_end", self.t_end.to_string(), "must be nonnegative and finite");
        }
        if let Err(e) = steps_for(self.t_end, self.dt) {
            return fail("t_end", self.t_end.to_string(), &e.to_string());
        }
        if let Some(re) = self.reynolds {
            if re.is_nan() || re <= 0.0 {
                return fail("Re", re.to_string(), "must be positive");
            }
        }
        if self.flow == FlowChoice::Manufactured && self.reynolds.is_none() {
            return fail("Re", "inf".into(), "the manufactured flow needs a finite Re");
        }
        for (k, n) in self.runs() {
            if k == 0 {
                return fail("K", k.to_string(), "must be at least 1");
            }
            if n == 0 {
                return fail("N", n.to_string(), "must be at least 1");
            }
            if self.spectrum_n != 0 && self.spectrum_n < 2 * k * n {
                return fail("spectrum_n", self.spectrum_n.to_string(), "must be 0 or at least 2 K N");
            }
        }
        if self.diagnostics_every == 0 {
            return fail("diagnostics_every", "0".into(), "must be at least 1");
        }
        Ok(())
    }

    /// `(K, N)` of every run the case performs.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        if self.case == CaseKind::Convergence {
            self.sweep_degrees
                .iter()
                .flat_map(|&n| self.sweep_cells.iter().map(move |&k| (k, n)))
                .collect()
        } else {
            vec![(self.cells, self.degree)]
        }
    }

    pub fn analytic_flow(&self) -> AnalyticFlow {
        match self.flow {
            FlowChoice::Shear => AnalyticFlow::HelicalShear,
            FlowChoice::Manufactured => AnalyticFlow::Manufactured {
                reynolds: self.reynolds.unwrap_or(f64::INFINITY),
            },
            FlowChoice::TaylorGreen => AnalyticFlow::TaylorGreen,
        }
    }

    /// The resolved configuration as `key = value` text that parses back
    /// to the same configuration.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut put = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        put("case", self.case.name().into());
        if self.case == CaseKind::Custom {
            put("flow", self.flow.name().into());
        }
        if self.case == CaseKind::Convergence {
            put("sweep_K", list(&self.sweep_cells));
            put("sweep_N", list(&self.sweep_degrees));
        } else {
            put("K", self.cells.to_string());
            put("N", self.degree.to_string());
        }
        put("dt", format!("{:e}", self.dt));
        put("t_end", format!("{:e}", self.t_end));
        put("Re", self.reynolds.map_or("inf".into(), |r| format!("{r:e}")));
        put("solver", solver_name(self.solver).into());
        put("out", self.output_dir.display().to_string());
        put("diagnostics_every", self.diagnostics_every.to_string());
        put("spectrum_n", self.spectrum_n.to_string());
        put("spectrum_every", self.spectrum_every.to_string());
        put("dump_every", self.dump_every.to_string());
        put("dump_n", self.dump_n.to_string());
        put("checkpoint_every", self.checkpoint_every.to_string());
        put("deterministic", "true".into());
        out
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
