//! Run configuration read from a flat TOML document.
//!
//! ```toml
//! scheme = "lambda"          # or "v"
//! atoms = 1
//! n_max = 8
//! omega = 10.0
//! E1 = 0.0
//! E2 = 0.0
//! E3 = 11.0
//! g31 = 0.05
//! g32 = 0.05                 # Λ only; V needs g21
//! t_max = 2000.0
//! n_samples = 801
//! initial.atom = "1,0,0"     # or "dark" / "bright"
//! initial.field = "fock:0"   # or "coherent:2.0"
//! ```

use std::path::PathBuf;

use thiserror::Error;
use toml::{Table, Value};

use crate::dispersive::DEFAULT_GUARD;
use crate::dynamics::{required_n_max, AtomicInit, FieldInit, InitialState, TimeGrid};
use crate::hamiltonian::{Couplings, HamiltonianSpec, Scheme};
use crate::hilbert::SpaceSpec;
use crate::linalg::re;

pub const DEFAULT_SWEEP: [f64; 5] = [0.0, 4.0, 8.0, 16.0, 32.0];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Syntax(String),
    #[error("config key `{key}`: {message}")]
    Key { key: String, message: String },
    #[error("config key `{key}`: {message}")]
    Truncation { key: String, message: String },
}

impl ConfigError {
    fn key(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Key {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn key_name(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax(_) => None,
            ConfigError::Key { key, .. } | ConfigError::Truncation { key, .. } => Some(key),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub space: SpaceSpec,
    pub hamiltonian: HamiltonianSpec,
    pub classical_alpha: Option<f64>,
    pub t_max: Option<f64>,
    pub n_samples: Option<usize>,
    pub initial: InitialState,
    pub output_dir: PathBuf,
    pub guard: usize,
    pub sweep_n_bar: Vec<f64>,
}

impl RunConfig {
    pub fn scheme(&self) -> Scheme {
        self.hamiltonian.scheme
    }

    pub fn grid(&self) -> Result<TimeGrid, ConfigError> {
        let t_max = self
            .t_max
            .ok_or_else(|| ConfigError::key("t_max", "required for this command"))?;
        let n = self
            .n_samples
            .ok_or_else(|| ConfigError::key("n_samples", "required for this command"))?;
        TimeGrid::new(t_max, n)
            .map_err(|e| ConfigError::key(if t_max > 0.0 { "n_samples" } else { "t_max" }, e.to_string()))
    }
}

fn lookup<'a>(table: &'a Table, key: &str) -> Option<&'a Value> {
    let mut parts = key.split('.');
    let mut value = table.get(parts.next()?)?;
    for part in parts {
        value = value.as_table()?.get(part)?;
    }
    Some(value)
}

fn float(table: &Table, key: &str) -> Result<Option<f64>, ConfigError> {
    match lookup(table, key) {
        None => Ok(None),
        Some(Value::Float(x)) if x.is_finite() => Ok(Some(*x)),
        Some(Value::Integer(i)) => Ok(Some(*i as f64)),
        Some(other) => Err(ConfigError::key(key, format!("expected a finite number, got {other}"))),
    }
}

fn required_float(table: &Table, key: &str) -> Result<f64, ConfigError> {
    float(table, key)?.ok_or_else(|| ConfigError::key(key, "missing required key"))
}

fn count(table: &Table, key: &str) -> Result<Option<usize>, ConfigError> {
    match lookup(table, key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(other) => Err(ConfigError::key(
            key,
            format!("expected a non-negative integer, got {other}"),
        )),
    }
}

fn string<'a>(table: &'a Table, key: &str) -> Result<Option<&'a str>, ConfigError> {
    match lookup(table, key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => Err(ConfigError::key(key, format!("expected a string, got {other}"))),
    }
}

fn parse_atom(s: &str, atoms: usize) -> Result<AtomicInit, ConfigError> {
    const KEY: &str = "initial.atom";
    match s.trim().to_ascii_lowercase().as_str() {
        "dark" => return Ok(AtomicInit::Dark),
        "bright" => return Ok(AtomicInit::Bright),
        _ => {}
    }
    let parts: Vec<_> = s.split(',').map(|p| p.trim().parse::<usize>()).collect();
    match parts.as_slice() {
        [Ok(a), Ok(b), Ok(c)] if a + b + c == atoms => Ok(AtomicInit::Occupations([*a, *b, *c])),
        [Ok(_), Ok(_), Ok(_)] => Err(ConfigError::key(
            KEY,
            format!("occupations {s:?} must sum to atoms = {atoms}"),
        )),
        _ => Err(ConfigError::key(
            KEY,
            format!("expected \"n1,n2,n3\", \"dark\" or \"bright\", got {s:?}"),
        )),
    }
}

fn parse_field(s: &str) -> Result<FieldInit, ConfigError> {
    const KEY: &str = "initial.field";
    let bad = || ConfigError::key(KEY, format!("expected \"fock:<n>\" or \"coherent:<alpha>\", got {s:?}"));
    let (kind, value) = s.split_once(':').ok_or_else(bad)?;
    match kind.trim() {
        "fock" => value.trim().parse().map(FieldInit::Fock).map_err(|_| bad()),
        "coherent" => {
            let alpha: f64 = value.trim().parse().map_err(|_| bad())?;
            if !alpha.is_finite() {
                return Err(bad());
            }
            Ok(FieldInit::Coherent(re(alpha)))
        }
        _ => Err(bad()),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table: Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;

    let scheme: Scheme = string(&table, "scheme")?
        .ok_or_else(|| ConfigError::key("scheme", "missing required key"))?
        .parse()
        .map_err(|e: String| ConfigError::key("scheme", e))?;
    let atoms = count(&table, "atoms")?.ok_or_else(|| ConfigError::key("atoms", "missing required key"))?;
    if atoms < 1 {
        return Err(ConfigError::key("atoms", "must be >= 1"));
    }
    let n_max = count(&table, "n_max")?.ok_or_else(|| ConfigError::key("n_max", "missing required key"))?;
    if n_max < 1 {
        return Err(ConfigError::key("n_max", "must be >= 1"));
    }
    let space = SpaceSpec::new(atoms, n_max).map_err(|e| ConfigError::key("atoms", e.to_string()))?;

    let omega = required_float(&table, "omega")?;
    let energies = [
        required_float(&table, "E1")?,
        required_float(&table, "E2")?,
        required_float(&table, "E3")?,
    ];
    if energies[1] < energies[0] {
        return Err(ConfigError::key("E2", "levels must be ordered: E1 <= E2 <= E3"));
    }
    if energies[2] < energies[1] {
        return Err(ConfigError::key("E3", "levels must be ordered: E1 <= E2 <= E3"));
    }

    let mut couplings = Couplings::default();
    let needed: [&str; 2] = match scheme {
        Scheme::Lambda => ["g31", "g32"],
        Scheme::Vee => ["g31", "g21"],
    };
    for key in needed {
        let g = float(&table, key)?
            .ok_or_else(|| ConfigError::key(key, format!("missing required key for the {scheme} scheme")))?;
        if g <= 0.0 {
            return Err(ConfigError::key(key, format!("coupling must be > 0, got {g}")));
        }
        match key {
            "g31" => couplings.g31 = g,
            "g32" => couplings.g32 = g,
            _ => couplings.g21 = g,
        }
    }
    let hamiltonian = HamiltonianSpec {
        scheme,
        energies,
        omega,
        couplings,
    };

    let classical_alpha = float(&table, "classical_alpha")?;
    if classical_alpha == Some(0.0) {
        return Err(ConfigError::key("classical_alpha", "must be nonzero"));
    }
    let t_max = float(&table, "t_max")?;
    if let Some(t) = t_max {
        if t <= 0.0 {
            return Err(ConfigError::key("t_max", format!("must be > 0, got {t}")));
        }
    }
    let n_samples = count(&table, "n_samples")?;
    if let Some(n) = n_samples {
        if n < 2 {
            return Err(ConfigError::key("n_samples", format!("must be >= 2, got {n}")));
        }
    }

    let atomic = match string(&table, "initial.atom")? {
        Some(s) => parse_atom(s, atoms)?,
        None => AtomicInit::Occupations([atoms, 0, 0]),
    };
    let field = match string(&table, "initial.field")? {
        Some(s) => parse_field(s)?,
        None => FieldInit::Fock(0),
    };
    match field {
        FieldInit::Fock(n) if n > n_max => {
            return Err(ConfigError::key(
                "initial.field",
                format!("Fock state {n} exceeds n_max = {n_max}"),
            ));
        }
        FieldInit::Coherent(alpha) => {
            let required = required_n_max(alpha.norm_sqr());
            if n_max < required {
                return Err(ConfigError::Truncation {
                    key: "n_max".into(),
                    message: format!("coherent amplitude {} needs n_max >= {required}", alpha.re),
                });
            }
        }
        _ => {}
    }

    let output_dir = PathBuf::from(string(&table, "output_dir")?.unwrap_or("out"));
    let guard = count(&table, "guard")?.unwrap_or(DEFAULT_GUARD);
    if guard > n_max {
        return Err(ConfigError::key("guard", format!("must be <= n_max = {n_max}")));
    }

    let sweep_n_bar = match lookup(&table, "sweep.n_bar") {
        None => DEFAULT_SWEEP.to_vec(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::Float(x) if x.is_finite() && *x >= 0.0 => Ok(*x),
                Value::Integer(i) if *i >= 0 => Ok(*i as f64),
                other => Err(ConfigError::key(
                    "sweep.n_bar",
                    format!("expected non-negative numbers, got {other}"),
                )),
            })
            .collect::<Result<_, _>>()?,
        Some(other) => {
            return Err(ConfigError::key(
                "sweep.n_bar",
                format!("expected an array, got {other}"),
            ))
        }
    };

    Ok(RunConfig {
        space,
        hamiltonian,
        classical_alpha,
        t_max,
        n_samples,
        initial: InitialState { atomic, field },
        output_dir,
        guard,
        sweep_n_bar,
    })
}
