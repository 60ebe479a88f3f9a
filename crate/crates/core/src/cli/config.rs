//! Flat INI-style run configuration.
//!
//! ```text
//! [problem]
//! mass = "1"
//! potential = "0.5*x^2 + 0.5*x^4"
//! hbar = 1
//! kT = 0
//! x_lo = -3
//! x_hi = 3
//! ```
//!
//! Expressions are double-quoted; numbers are bare. Unknown sections and
//! keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::effective::SmearOptions;
use crate::expr::{parse, Expr, ParseError};
use crate::model::{Problem, ProblemSpec, ValidationError, DEFAULT_PROBE_POINTS};
use crate::variational::SolverOptions;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key '{key}' in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("missing required key '{key}' in [{section}]")]
    Missing {
        section: &'static str,
        key: &'static str,
    },
    #[error("bad value for '{key}': {msg}")]
    BadValue { key: String, msg: String },
    #[error("cannot parse {key}: {source}")]
    Expression {
        key: &'static str,
        source: ParseError,
    },
    #[error("cannot read {path}: {msg}")]
    Io { path: PathBuf, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Quoted(String),
    Bare(String),
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "problem",
        &["mass", "potential", "hbar", "kT", "x_lo", "x_hi"],
    ),
    (
        "solver",
        &["tolerance", "damping", "max_iter", "quad_order"],
    ),
    ("grid", &["points"]),
    ("integrator", &["rel_tol", "abs_tol"]),
    ("output", &["path"]),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub solver: SolverOptions,
    pub grid_points: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub output: Option<PathBuf>,
}

type Table = BTreeMap<(String, String), (usize, Value)>;

fn parse_table(text: &str) -> Result<Table, ConfigError> {
    let mut table = Table::new();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    msg: "unterminated section header".into(),
                })?
                .trim();
            if !SECTIONS.iter().any(|(n, _)| *n == name) {
                return Err(ConfigError::UnknownSection(name.to_string()));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            msg: format!("expected 'key = value', got '{s}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let sec = section.clone().ok_or_else(|| ConfigError::Syntax {
            line,
            msg: "key outside of any section".into(),
        })?;
        let allowed = SECTIONS
            .iter()
            .find(|(n, _)| *n == sec)
            .map(|(_, k)| *k)
            .unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(ConfigError::UnknownKey {
                section: sec,
                key: key.to_string(),
            });
        }
        let parsed = if let Some(inner) = value.strip_prefix('"') {
            let inner = inner.strip_suffix('"').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: "unterminated string".into(),
            })?;
            if inner.contains('"') {
                return Err(ConfigError::Syntax {
                    line,
                    msg: "stray quote in string".into(),
                });
            }
            Value::Quoted(inner.to_string())
        } else {
            // allow trailing comments after bare values
            let bare = value.split(['#', ';']).next().unwrap_or("").trim();
            if bare.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    msg: format!("empty value for '{key}'"),
                });
            }
            Value::Bare(bare.to_string())
        };
        if table
            .insert((sec.clone(), key.to_string()), (line, parsed))
            .is_some()
        {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("duplicate key '{key}' in [{sec}]"),
            });
        }
    }
    Ok(table)
}

struct Reader {
    table: Table,
}

impl Reader {
    fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.table
            .get(&(section.to_string(), key.to_string()))
            .map(|(_, v)| v)
    }

    fn expr(&self, section: &'static str, key: &'static str) -> Result<String, ConfigError> {
        match self.get(section, key) {
            Some(Value::Quoted(s)) => Ok(s.clone()),
            Some(Value::Bare(_)) => Err(ConfigError::BadValue {
                key: key.into(),
                msg: "expressions must be double-quoted".into(),
            }),
            None => Err(ConfigError::Missing { section, key }),
        }
    }

    fn bare<T: std::str::FromStr>(
        &self,
        section: &'static str,
        key: &'static str,
    ) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(section, key) {
            Some(Value::Bare(s)) => s.parse::<T>().map(Some).map_err(|e| ConfigError::BadValue {
                key: key.into(),
                msg: format!("'{s}': {e}"),
            }),
            Some(Value::Quoted(_)) => Err(ConfigError::BadValue {
                key: key.into(),
                msg: "numbers must not be quoted".into(),
            }),
            None => Ok(None),
        }
    }

    fn number(&self, section: &'static str, key: &'static str) -> Result<Option<f64>, ConfigError> {
        let v = self.bare::<f64>(section, key)?;
        match v {
            Some(x) if !x.is_finite() => Err(ConfigError::BadValue {
                key: key.into(),
                msg: "must be finite".into(),
            }),
            other => Ok(other),
        }
    }

    fn required(&self, section: &'static str, key: &'static str) -> Result<f64, ConfigError> {
        self.number(section, key)?
            .ok_or(ConfigError::Missing { section, key })
    }
}

impl RunConfig {
    pub const DEFAULT_GRID_POINTS: usize = 2001;

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let r = Reader {
            table: parse_table(text)?,
        };
        let solver_defaults = SolverOptions::default();
        let solver = SolverOptions {
            tolerance: r
                .number("solver", "tolerance")?
                .unwrap_or(solver_defaults.tolerance),
            damping: r
                .number("solver", "damping")?
                .unwrap_or(solver_defaults.damping),
            max_iter: r
                .bare("solver", "max_iter")?
                .unwrap_or(solver_defaults.max_iter),
            smear: SmearOptions {
                order: r
                    .bare("solver", "quad_order")?
                    .unwrap_or(solver_defaults.smear.order),
                ..solver_defaults.smear
            },
        };
        if !(solver.tolerance > 0.0) {
            return Err(ConfigError::BadValue {
                key: "tolerance".into(),
                msg: "must be positive".into(),
            });
        }
        if !(solver.damping > 0.0 && solver.damping <= 1.0) {
            return Err(ConfigError::BadValue {
                key: "damping".into(),
                msg: "must lie in (0, 1]".into(),
            });
        }
        if solver.max_iter == 0 || solver.smear.order == 0 {
            return Err(ConfigError::BadValue {
                key: "solver".into(),
                msg: "max_iter and quad_order must be positive".into(),
            });
        }
        let grid_points = r
            .bare("grid", "points")?
            .unwrap_or(Self::DEFAULT_GRID_POINTS);
        if grid_points == 0 {
            return Err(ConfigError::BadValue {
                key: "points".into(),
                msg: "must be positive".into(),
            });
        }
        let rel_tol = r.number("integrator", "rel_tol")?.unwrap_or(1e-10);
        let abs_tol = r.number("integrator", "abs_tol")?.unwrap_or(1e-12);
        if !(rel_tol > 0.0 && abs_tol >= 0.0) {
            return Err(ConfigError::BadValue {
                key: "integrator".into(),
                msg: "tolerances must be positive".into(),
            });
        }
        let output = match r.get("output", "path") {
            Some(Value::Quoted(s)) | Some(Value::Bare(s)) => Some(PathBuf::from(s)),
            None => None,
        };
        let expr = |key: &'static str| -> Result<Expr, ConfigError> {
            parse(&r.expr("problem", key)?)
                .map_err(|source| ConfigError::Expression { key, source })
        };
        let spec = ProblemSpec {
            mass: expr("mass")?,
            potential: expr("potential")?,
            hbar: r.number("problem", "hbar")?.unwrap_or(1.0),
            kt: r.number("problem", "kT")?.unwrap_or(0.0),
            domain: (
                r.required("problem", "x_lo")?,
                r.required("problem", "x_hi")?,
            ),
        };
        Ok(Self {
            spec,
            solver,
            grid_points,
            rel_tol,
            abs_tol,
            output,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Parse the expressions and validate the problem over its domain.
    pub fn problem(&self) -> Result<Problem, Vec<ValidationError>> {
        self.spec.clone().validate(DEFAULT_PROBE_POINTS)
    }
}
