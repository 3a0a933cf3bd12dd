//! Point-sampled field dumps in the legacy VTK structured-points ASCII
//! layout.
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title>
//! ASCII
//! DATASET STRUCTURED_POINTS
//! DIMENSIONS nx ny nz
//! ORIGIN ox oy oz
//! SPACING sx sy sz
//! POINT_DATA nx*ny*nz
//! VECTORS <name> double
//! <x y z per point>
//! ...
//! ```
//!
//! Point `(i, j, l)` is stored at index `i + nx (j + ny l)`.

use std::io::{self, BufRead, Write};

use mdf_core::assembly::{Discretization, Field};
use mdf_core::diagnostics::sample_lattice;
use mdf_core::timestepping::SimState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("malformed field dump at line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredPoints {
    pub title: String,
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    /// Named vector arrays of `nx ny nz` points each.
    pub vectors: Vec<(String, Vec<[f64; 3]>)>,
}

impl StructuredPoints {
    pub fn num_points(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * l)
    }

    pub fn get(&self, name: &str) -> Option<&[[f64; 3]]> {
        self.vectors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn write(&self, out: &mut impl Write) -> io::Result<()> {
        let [nx, ny, nz] = self.dims;
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "{}", self.title.replace('\n', " "))?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET STRUCTURED_POINTS")?;
        writeln!(out, "DIMENSIONS {nx} {ny} {nz}")?;
        let [ox, oy, oz] = self.origin;
        writeln!(out, "ORIGIN {ox:e} {oy:e} {oz:e}")?;
        let [sx, sy, sz] = self.spacing;
        writeln!(out, "SPACING {sx:e} {sy:e} {sz:e}")?;
        writeln!(out, "POINT_DATA {}", self.num_points())?;
        for (name, values) in &self.vectors {
            assert_eq!(values.len(), self.num_points(), "array {name} has the wrong length");
            writeln!(out, "VECTORS {name} double")?;
            for v in values {
                writeln!(out, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
            }
        }
        Ok(())
    }

    pub fn read(input: impl BufRead) -> Result<Self, DumpError> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), DumpError> {
            match lines.next() {
                Some((i, l)) => Ok((i, l?)),
                None => Err(DumpError::Format {
                    line: 0,
                    reason: format!("file ends before {what}"),
                }),
            }
        };
        let fail = |line: usize, reason: &str| DumpError::Format {
            line,
            reason: reason.to_string(),
        };
        let (l, magic) = next("header")?;
        if !magic.starts_with("# vtk DataFile") {
            return Err(fail(l, "missing vtk header"));
        }
        let (_, title) = next("title")?;
        for expected in ["ASCII", "DATASET STRUCTURED_POINTS"] {
            let (l, s) = next(expected)?;
            if s.trim() != expected {
                return Err(fail(l, &format!("expected {expected}")));
            }
        }
        fn triple<T: std::str::FromStr>(line: usize, s: &str, key: &str) -> Result<[T; 3], DumpError> {
            let bad = || DumpError::Format {
                line,
                reason: format!("expected `{key}` and three values"),
            };
            let mut it = s.split_whitespace();
            if it.next() != Some(key) {
                return Err(bad());
            }
            let v: Vec<T> = it.map(|x| x.parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
            <[T; 3]>::try_from(v).map_err(|_| bad())
        }
        let (l, s) = next("DIMENSIONS")?;
        let dims: [usize; 3] = triple(l, &s, "DIMENSIONS")?;
        let (l, s) = next("ORIGIN")?;
        let origin: [f64; 3] = triple(l, &s, "ORIGIN")?;
        let (l, s) = next("SPACING")?;
        let spacing: [f64; 3] = triple(l, &s, "SPACING")?;
        let count: usize = dims.iter().product();
        let (l, s) = next("POINT_DATA")?;
        if s.split_whitespace().collect::<Vec<_>>() != ["POINT_DATA", &count.to_string()] {
            return Err(fail(l, "POINT_DATA does not match DIMENSIONS"));
        }
        let mut vectors = Vec::new();
        while let Some((l, s)) = lines.next() {
            let s = s?;
            if s.trim().is_empty() {
                continue;
            }
            let head: Vec<&str> = s.split_whitespace().collect();
            if head.len() != 3 || head[0] != "VECTORS" {
                return Err(fail(l, "expected `VECTORS name double`"));
            }
            let mut values = Vec::with_capacity(count);
            for _ in 0..count {
                let (l, s) = lines.next().ok_or_else(|| fail(l, "array ends early"))?;
                let s = s?;
                let v: Vec<f64> = s
                    .split_whitespace()
                    .map(|x| x.parse().map_err(|_| fail(l, "bad number")))
                    .collect::<Result<_, _>>()?;
                values.push(<[f64; 3]>::try_from(v).map_err(|_| fail(l, "expected three values"))?);
            }
            vectors.push((head[1].to_string(), values));
        }
        Ok(StructuredPoints {
            title,
            dims,
            origin,
            spacing,
            vectors,
        })
    }
}

/// Sample fields on the `sample_n³` uniform periodic lattice of the box
/// (the far faces are excluded).
pub fn sample_fields(
    disc: &Discretization,
    fields: &[(&str, &Field)],
    sample_n: usize,
    title: String,
) -> StructuredPoints {
    let mesh = disc.mesh();
    let len = mesh.lengths();
    StructuredPoints {
        title,
        dims: [sample_n; 3],
        origin: mesh.box_min(),
        spacing: len.map(|l| l / sample_n as f64),
        vectors: fields
            .iter()
            .map(|(name, f)| (name.to_string(), sample_lattice(disc, f, sample_n)))
            .collect(),
    }
}

/// Dump `u1, u2, w1, w2` of a state. The integer-sequence fields are at
/// `t^k`, the half-sequence fields at `t^{k+1/2}`.
pub fn field_dump(disc: &Discretization, state: &SimState, sample_n: usize) -> StructuredPoints {
    let title = format!(
        "mdf step {} u2,w1 at t={:e} u1,w2 at t={:e}",
        state.k, state.u2.time, state.u1.time
    );
    sample_fields(
        disc,
        &[
            ("u1", &state.u1),
            ("u2", &state.u2),
            ("w1", &state.w1),
            ("w2", &state.w2),
        ],
        sample_n,
        title,
    )
}
