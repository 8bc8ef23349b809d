//! Policy files: one `KEYWORD = VALUE` per line.
//!
//! Keywords and enumerated values are case-insensitive. Blank lines and lines
//! starting with `#` are skipped. Unknown keywords are ignored with a warning.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// File name prefix for per-group policy files (`<prefix>.<group id>`).
pub const POLICY_FILE_PREFIX: &str = "OPENATI_POLICY_INPUT";
pub const DEFAULT_RESIDUAL: f64 = 1e-8;
pub const DEFAULT_MAXTIME: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Policy {
    #[default]
    Time,
    Accuracy,
    Memory,
    Stable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PreconditionerKind {
    None,
    Ilu0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Gmres,
    Bicgstab,
    Lanczos,
    Arnoldi,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Gmres => "gmres",
            SolverKind::Bicgstab => "bicgstab",
            SolverKind::Lanczos => "lanczos",
            SolverKind::Arnoldi => "arnoldi",
        }
    }

    pub fn is_eigen(self) -> bool {
        matches!(self, SolverKind::Lanczos | SolverKind::Arnoldi)
    }
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, [$(($text:literal, $val:expr)),+ $(,)?]) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                let up = s.trim().to_ascii_uppercase();
                $(if up == $text { return Ok($val); })+
                Err(format!(
                    concat!("invalid ", $what, " {:?}; expected one of {}"),
                    s.trim(),
                    [$($text),+].join(", ")
                ))
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $val { return f.write_str($text); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(Policy, "POLICY", [
    ("TIME", Policy::Time),
    ("ACCURACY", Policy::Accuracy),
    ("MEMORY", Policy::Memory),
    ("STABLE", Policy::Stable),
]);
keyword_enum!(PreconditionerKind, "PRECONDITIONER", [
    ("NONE", PreconditionerKind::None),
    ("ILU0", PreconditionerKind::Ilu0),
]);
keyword_enum!(SolverKind, "SOLVER", [
    ("GMRES", SolverKind::Gmres),
    ("BICGSTAB", SolverKind::Bicgstab),
    ("LANCZOS", SolverKind::Lanczos),
    ("ARNOLDI", SolverKind::Arnoldi),
]);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyConfig {
    pub policy: Policy,
    /// Worker count; machine parallelism when absent.
    pub cpu: Option<usize>,
    /// Required relative residual (linear) or absolute eigen-residual.
    pub residual: f64,
    /// Total memory budget in bytes; unbounded when absent.
    pub maxmemory: Option<u64>,
    /// Seconds.
    pub maxtime: f64,
    pub preconditioner: Option<PreconditionerKind>,
    pub solver: Option<SolverKind>,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            policy: Policy::Time,
            cpu: None,
            residual: DEFAULT_RESIDUAL,
            maxmemory: None,
            maxtime: DEFAULT_MAXTIME,
            preconditioner: None,
            solver: None,
        }
    }
}

impl PolicyConfig {
    /// Sets one keyword; `Ok(false)` when the keyword is unknown.
    pub fn set(&mut self, keyword: &str, value: &str) -> std::result::Result<bool, String> {
        let value = value.trim();
        match keyword.trim().to_ascii_uppercase().as_str() {
            "POLICY" => self.policy = value.parse()?,
            "CPU" => {
                let n: usize = value.parse().map_err(|_| format!("invalid CPU {value:?}; expected a positive integer"))?;
                if n == 0 {
                    return Err("CPU must be at least 1".into());
                }
                self.cpu = Some(n);
            }
            "RESIDUAL" => {
                let r: f64 = value.parse().map_err(|_| format!("invalid RESIDUAL {value:?}"))?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err("RESIDUAL must be positive".into());
                }
                self.residual = r;
            }
            "MAXMEMORY" => self.maxmemory = Some(parse_bytes(value)?),
            "MAXTIME" => {
                let t: f64 = value.parse().map_err(|_| format!("invalid MAXTIME {value:?}"))?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err("MAXTIME must be positive".into());
                }
                self.maxtime = t;
            }
            "PRECONDITIONER" => self.preconditioner = Some(value.parse()?),
            "SOLVER" => self.solver = Some(value.parse()?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Applies a `KEYWORD=VALUE[,KEYWORD=VALUE…]` override string.
    pub fn apply_overrides(&mut self, spec: &str) -> Result<()> {
        for part in spec.split([',', ';']).map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(|| Error::Policy {
                line: 0,
                msg: format!("override {part:?} is not KEYWORD=VALUE"),
            })?;
            match self.set(k, v) {
                Ok(true) => {}
                Ok(false) => log::warn!("ignoring unknown policy keyword {:?}", k.trim()),
                Err(msg) => return Err(Error::Policy { line: 0, msg }),
            }
        }
        Ok(())
    }

    /// Canonical file text; parses back to an equal value.
    pub fn to_policy_string(&self) -> String {
        let mut out = format!("POLICY = {}\n", self.policy);
        if let Some(c) = self.cpu {
            out += &format!("CPU = {c}\n");
        }
        out += &format!("RESIDUAL = {:e}\n", self.residual);
        if let Some(m) = self.maxmemory {
            out += &format!("MAXMEMORY = {m}\n");
        }
        out += &format!("MAXTIME = {:e}\n", self.maxtime);
        if let Some(p) = self.preconditioner {
            out += &format!("PRECONDITIONER = {p}\n");
        }
        if let Some(s) = self.solver {
            out += &format!("SOLVER = {s}\n");
        }
        out
    }
}

/// Byte count with an optional `K`, `M` or `G` suffix (powers of 1024).
fn parse_bytes(value: &str) -> std::result::Result<u64, String> {
    let v = value.trim();
    let (digits, mult) = match v.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&v[..v.len() - 1], 1u64 << 10),
        Some('M') => (&v[..v.len() - 1], 1 << 20),
        Some('G') => (&v[..v.len() - 1], 1 << 30),
        _ => (v, 1),
    };
    digits
        .trim()
        .parse::<u64>()
        .ok()
        .and_then(|d| d.checked_mul(mult))
        .filter(|&b| b > 0)
        .ok_or_else(|| format!("invalid MAXMEMORY {value:?}; expected a positive byte count"))
}

pub fn parse_policy_str(text: &str) -> Result<PolicyConfig> {
    let mut cfg = PolicyConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Policy {
            line: idx + 1,
            msg: format!("expected KEYWORD = VALUE, got {line:?}"),
        })?;
        match cfg.set(k, v) {
            Ok(true) => {}
            Ok(false) => log::warn!("line {}: ignoring unknown policy keyword {:?}", idx + 1, k.trim()),
            Err(msg) => return Err(Error::Policy { line: idx + 1, msg }),
        }
    }
    Ok(cfg)
}

/// Reads a policy file; a missing file yields the defaults.
pub fn parse_policy_file(path: impl AsRef<Path>) -> Result<PolicyConfig> {
    let path = path.as_ref();
    match std::fs::read_to_string(path) {
        Ok(text) => parse_policy_str(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(PolicyConfig::default()),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// `<dir>/OPENATI_POLICY_INPUT.<group>`.
pub fn group_policy_path(dir: impl AsRef<Path>, group: usize) -> PathBuf {
    dir.as_ref().join(format!("{POLICY_FILE_PREFIX}.{group}"))
}

/// Looks up the per-group file in `dir`.
pub fn parse_group_policy(dir: impl AsRef<Path>, group: usize) -> Result<PolicyConfig> {
    parse_policy_file(group_policy_path(dir, group))
}
