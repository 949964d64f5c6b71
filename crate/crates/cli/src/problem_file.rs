//! INI-style problem files.
//!
//! ```text
//! [grid]
//! points = 0 0.25 0.6 1.0        # or: uniform = 0 1 25
//! [equation]
//! f = 1 - x^2                    # vars t, x, y
//! [boundary]
//! g_right = 1.0                  # or: g = t + 1
//! [bounds]
//! alpha = 0
//! beta  = 1
//! [solver]
//! method = auto
//! tol = 1e-10
//! max_iter = 10000
//! damping = 0.5
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;
use tsbvp::{BVProblem, BoundsPair, Expr, Grid, GridFunction, Method, SolveOptions, F_VARS, T_VARS};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("[{section}] {key}: {message}")]
    Value { section: String, key: String, message: String },
    #[error("missing {0}")]
    Missing(String),
    #[error(transparent)]
    Core(#[from] tsbvp::Error),
}

const SECTIONS: [(&str, &[&str]); 5] = [
    ("grid", &["points", "uniform"]),
    ("equation", &["f"]),
    ("boundary", &["g_right", "g"]),
    ("bounds", &["alpha", "beta"]),
    ("solver", &["method", "tol", "max_iter", "damping"]),
];

#[derive(Debug, Clone)]
pub enum GridSpec {
    Points(Vec<f64>),
    Uniform { a: f64, b: f64, n: usize },
}

#[derive(Debug, Clone)]
pub enum Boundary {
    Value(f64),
    Expr(String),
}

/// A parsed but not yet resolved problem file.
#[derive(Debug, Clone)]
pub struct ProblemFile {
    pub grid: GridSpec,
    pub f: String,
    pub boundary: Boundary,
    pub alpha: Option<String>,
    pub beta: Option<String>,
    pub method: Option<Method>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damping: Option<f64>,
}

/// Everything a command needs, built from a [`ProblemFile`].
pub struct Resolved {
    pub problem: BVProblem,
    pub bounds: Option<BoundsPair>,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

fn parse_number(section: &str, key: &str, text: &str) -> Result<f64, FileError> {
    text.trim().parse::<f64>().map_err(|_| FileError::Value {
        section: section.into(),
        key: key.into(),
        message: format!("`{}` is not a number", text.trim()),
    })
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<ProblemFile, FileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| FileError::Io { path: path.display().to_string(), source })?;
        ProblemFile::parse(&text)
    }

    pub fn parse(text: &str) -> Result<ProblemFile, FileError> {
        let mut entries: BTreeMap<(String, String), String> = BTreeMap::new();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| FileError::Syntax { line: line_no, message: "unterminated section header".into() })?
                    .trim()
                    .to_string();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(FileError::Syntax { line: line_no, message: format!("unknown section [{name}]") });
                }
                section = Some(name);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(FileError::Syntax { line: line_no, message: "expected `key = value`".into() });
            };
            let Some(sec) = section.clone() else {
                return Err(FileError::Syntax { line: line_no, message: "entry before any section".into() });
            };
            let key = key.trim().to_string();
            let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).map(|(_, keys)| *keys).unwrap_or(&[]);
            if !allowed.contains(&key.as_str()) {
                return Err(FileError::Syntax { line: line_no, message: format!("unknown key `{key}` in [{sec}]") });
            }
            if entries.insert((sec.clone(), key.clone()), value.trim().to_string()).is_some() {
                return Err(FileError::Syntax { line: line_no, message: format!("duplicate key `{key}` in [{sec}]") });
            }
        }
        let get = |s: &str, k: &str| entries.get(&(s.to_string(), k.to_string())).cloned();

        let grid = match (get("grid", "points"), get("grid", "uniform")) {
            (Some(_), Some(_)) => {
                return Err(FileError::Value {
                    section: "grid".into(),
                    key: "points".into(),
                    message: "give exactly one of `points` and `uniform`".into(),
                })
            }
            (Some(p), None) => GridSpec::Points(
                p.split_whitespace().map(|x| parse_number("grid", "points", x)).collect::<Result<_, _>>()?,
            ),
            (None, Some(u)) => {
                let parts: Vec<&str> = u.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(FileError::Value {
                        section: "grid".into(),
                        key: "uniform".into(),
                        message: "expected `a b n`".into(),
                    });
                }
                let n = parts[2].parse::<usize>().map_err(|_| FileError::Value {
                    section: "grid".into(),
                    key: "uniform".into(),
                    message: format!("`{}` is not a non-negative integer", parts[2]),
                })?;
                GridSpec::Uniform {
                    a: parse_number("grid", "uniform", parts[0])?,
                    b: parse_number("grid", "uniform", parts[1])?,
                    n,
                }
            }
            (None, None) => return Err(FileError::Missing("[grid] points or uniform".into())),
        };
        let f = get("equation", "f").ok_or_else(|| FileError::Missing("[equation] f".into()))?;
        let boundary = match (get("boundary", "g_right"), get("boundary", "g")) {
            (Some(_), Some(_)) => {
                return Err(FileError::Value {
                    section: "boundary".into(),
                    key: "g_right".into(),
                    message: "give exactly one of `g_right` and `g`".into(),
                })
            }
            (Some(v), None) => Boundary::Value(parse_number("boundary", "g_right", &v)?),
            (None, Some(e)) => Boundary::Expr(e),
            (None, None) => return Err(FileError::Missing("[boundary] g_right or g".into())),
        };
        let method = get("solver", "method")
            .map(|m| {
                m.parse::<Method>().map_err(|e| FileError::Value {
                    section: "solver".into(),
                    key: "method".into(),
                    message: e.to_string(),
                })
            })
            .transpose()?;
        let tol = get("solver", "tol").map(|v| parse_number("solver", "tol", &v)).transpose()?;
        let damping = get("solver", "damping").map(|v| parse_number("solver", "damping", &v)).transpose()?;
        let max_iter = get("solver", "max_iter")
            .map(|v| {
                v.parse::<usize>().map_err(|_| FileError::Value {
                    section: "solver".into(),
                    key: "max_iter".into(),
                    message: format!("`{v}` is not a non-negative integer"),
                })
            })
            .transpose()?;
        Ok(ProblemFile {
            grid,
            f,
            boundary,
            alpha: get("bounds", "alpha"),
            beta: get("bounds", "beta"),
            method,
            tol,
            max_iter,
            damping,
        })
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>, FileError> {
        Ok(Arc::new(match &self.grid {
            GridSpec::Points(p) => Grid::new(p.clone())?,
            GridSpec::Uniform { a, b, n } => Grid::uniform(*a, *b, *n)?,
        }))
    }

    pub fn resolve(&self) -> Result<Resolved, FileError> {
        let grid = self.build_grid()?;
        let expr = |key: &str, src: &str, vars: &[&str]| {
            Expr::parse(src, vars).map_err(|e| FileError::Value {
                section: if key == "f" {
                    "equation"
                } else if key == "g" {
                    "boundary"
                } else {
                    "bounds"
                }
                .into(),
                key: key.into(),
                message: e.to_string(),
            })
        };
        let f = expr("f", &self.f, &F_VARS)?;
        let problem = match &self.boundary {
            Boundary::Value(g) => BVProblem::new(grid.clone(), f, *g)?,
            Boundary::Expr(src) => BVProblem::with_g_expr(grid.clone(), f, expr("g", src, &T_VARS)?)?,
        };
        let bounds = match (&self.alpha, &self.beta) {
            (Some(a), Some(b)) => {
                let sample = |key: &str, src: &str| -> Result<GridFunction, FileError> {
                    let e = expr(key, src, &T_VARS)?;
                    let values = grid
                        .points()
                        .iter()
                        .map(|&t| e.eval(&[t]).map_err(tsbvp::Error::from))
                        .collect::<Result<Vec<f64>, _>>()?;
                    Ok(GridFunction::new(grid.clone(), values)?)
                };
                Some(BoundsPair::new(sample("alpha", a)?, sample("beta", b)?)?)
            }
            (None, None) => None,
            _ => return Err(FileError::Missing("[bounds] needs both alpha and beta".into())),
        };
        Ok(Resolved { problem, bounds })
    }

    /// Solver settings from the file, before command-line overrides.
    pub fn solve_options(&self) -> SolveOptions {
        let d = SolveOptions::default();
        SolveOptions {
            method: self.method.unwrap_or(d.method),
            tol: self.tol.unwrap_or(d.tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            damping: self.damping.unwrap_or(d.damping),
            ..d
        }
    }
}
