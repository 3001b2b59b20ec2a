//! Plain-text problem container.
//!
//! ```text
//! 1,complex,M,L
//! <M lines: row m of H; complex entries as re,im pairs>
//! <y; complex entries as re,im pairs>
//! [<alpha_true>]
//! [<lambda>]
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Numbers are written
//! in shortest round-trip form, so reading back reproduces every bit.

use std::fmt::Write as _;

use crate::error::{Result, SblError};
use crate::linalg::Mat;
use crate::model::{Observation, ProblemInstance};
use crate::scalar::{Field, FieldKind, Real};

pub const FORMAT_VERSION: u32 = 1;

/// Contents of a problem file; ground truth is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile<S: Field> {
    pub obs: Observation<S>,
    pub alpha_true: Option<Vec<S>>,
    pub lambda: Option<S::Real>,
}

impl<S: Field> ProblemFile<S> {
    /// A full instance when both the weights and the noise precision are present.
    pub fn into_instance(self) -> Result<Option<ProblemInstance<S>>> {
        match (self.alpha_true, self.lambda) {
            (Some(a), Some(l)) => Ok(Some(ProblemInstance::new(self.obs, a, l)?)),
            _ => Ok(None),
        }
    }
}

impl<S: Field> From<&ProblemInstance<S>> for ProblemFile<S> {
    fn from(p: &ProblemInstance<S>) -> Self {
        ProblemFile {
            obs: p.obs.clone(),
            alpha_true: Some(p.alpha_true.clone()),
            lambda: Some(p.lambda_true),
        }
    }
}

fn push_values<S: Field>(out: &mut String, values: impl Iterator<Item = S>) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(',');
        }
        first = false;
        match S::KIND {
            FieldKind::Real => write!(out, "{}", v.re()),
            FieldKind::Complex => write!(out, "{},{}", v.re(), v.im()),
        }
        .expect("writing to a String cannot fail");
    }
    out.push('\n');
}

pub fn write_problem<S: Field>(file: &ProblemFile<S>) -> String {
    let (m, l) = (file.obs.m(), file.obs.l());
    let mut out = format!("{FORMAT_VERSION},{},{m},{l}\n", S::KIND);
    for i in 0..m {
        push_values::<S>(&mut out, (0..l).map(|j| file.obs.h[(i, j)]));
    }
    push_values::<S>(&mut out, file.obs.y.iter().copied());
    if let Some(a) = &file.alpha_true {
        push_values::<S>(&mut out, a.iter().copied());
    }
    if let Some(lambda) = file.lambda {
        writeln!(out, "{lambda}").expect("writing to a String cannot fail");
    }
    out
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, s)| (i + 1, s.trim()))
        .filter(|(_, s)| !s.is_empty() && !s.starts_with('#'))
}

struct Header {
    field: FieldKind,
    m: usize,
    l: usize,
}

fn parse_header(line: usize, s: &str) -> Result<Header> {
    let err = |message: String| SblError::Parse { line, message };
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(err(format!("header needs 4 fields, found {}", parts.len())));
    }
    let version: u32 = parts[0]
        .parse()
        .map_err(|_| err(format!("bad format version `{}`", parts[0])))?;
    if version != FORMAT_VERSION {
        return Err(err(format!("unsupported format version {version}")));
    }
    let field: FieldKind = parts[1].parse().map_err(err)?;
    let m: usize = parts[2].parse().map_err(|_| err(format!("bad M `{}`", parts[2])))?;
    let l: usize = parts[3].parse().map_err(|_| err(format!("bad L `{}`", parts[3])))?;
    if m == 0 || l == 0 {
        return Err(err("M and L must be positive".into()));
    }
    Ok(Header { field, m, l })
}

/// Field declared in the header, to pick the scalar type before parsing.
pub fn peek_field(text: &str) -> Result<FieldKind> {
    let (line, s) = content_lines(text).next().ok_or(SblError::Parse {
        line: 1,
        message: "empty problem file".into(),
    })?;
    Ok(parse_header(line, s)?.field)
}

fn parse_values<S: Field>(line: usize, s: &str, count: usize) -> Result<Vec<S>> {
    let nums = s
        .split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| SblError::Parse {
                line,
                message: format!("bad number `{}`", t.trim()),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let width = match S::KIND {
        FieldKind::Real => 1,
        FieldKind::Complex => 2,
    };
    if nums.len() != count * width {
        return Err(SblError::Parse {
            line,
            message: format!("expected {} numbers, found {}", count * width, nums.len()),
        });
    }
    Ok(nums
        .chunks(width)
        .map(|c| {
            let re = S::Real::lit(c[0]);
            let im = if width == 2 { S::Real::lit(c[1]) } else { re * S::Real::lit(0.0) };
            S::from_parts(re, im)
        })
        .collect())
}

/// Parses a problem file whose field matches `S`.
///
/// After `y`, two extra lines are `alpha_true` and `lambda`; a single extra
/// line is `alpha_true` if it has the length of a weight vector, otherwise
/// `lambda`.
pub fn read_problem<S: Field>(text: &str) -> Result<ProblemFile<S>> {
    let mut lines = content_lines(text);
    let (hl, hs) = lines.next().ok_or(SblError::Parse {
        line: 1,
        message: "empty problem file".into(),
    })?;
    let header = parse_header(hl, hs)?;
    if header.field != S::KIND {
        return Err(SblError::Parse {
            line: hl,
            message: format!("file holds a {} problem, expected {}", header.field, S::KIND),
        });
    }
    let (m, l) = (header.m, header.l);
    let mut rows = Vec::with_capacity(m * l);
    for i in 0..m {
        let (ln, s) = lines.next().ok_or(SblError::Parse {
            line: hl + i + 1,
            message: format!("missing dictionary row {}", i + 1),
        })?;
        rows.extend(parse_values::<S>(ln, s, l)?);
    }
    let h = Mat::from_row_major(m, l, &rows)?;
    let (yl, ys) = lines.next().ok_or(SblError::Parse {
        line: hl + m + 1,
        message: "missing observation vector".into(),
    })?;
    let y = parse_values::<S>(yl, ys, m)?;
    let rest: Vec<(usize, &str)> = lines.collect();
    let parse_lambda = |(ln, s): (usize, &str)| -> Result<S::Real> {
        let v: f64 = s.parse().map_err(|_| SblError::Parse {
            line: ln,
            message: format!("bad noise precision `{s}`"),
        })?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(SblError::Parse {
                line: ln,
                message: format!("noise precision must be positive, got {v}"),
            });
        }
        Ok(S::Real::lit(v))
    };
    let (alpha_true, lambda) = match rest.as_slice() {
        [] => (None, None),
        [(ln, s)] => {
            let n = s.split(',').count();
            let width = if S::KIND == FieldKind::Complex { 2 } else { 1 };
            if n == l * width {
                (Some(parse_values::<S>(*ln, s, l)?), None)
            } else {
                (None, Some(parse_lambda((*ln, s))?))
            }
        }
        [(la, sa), second] => (Some(parse_values::<S>(*la, sa, l)?), Some(parse_lambda(*second)?)),
        [.., (ln, _)] => {
            return Err(SblError::Parse {
                line: *ln,
                message: "unexpected trailing content".into(),
            })
        }
    };
    Ok(ProblemFile {
        obs: Observation::new(h, y)?,
        alpha_true,
        lambda,
    })
}
