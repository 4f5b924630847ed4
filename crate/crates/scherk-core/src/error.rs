use core::fmt;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Parameter outside the admissible range.
    Domain(&'static str),
    /// `y <= x` in strict mode.
    Ordering { x: f64, y: f64 },
    /// Evaluation at a pole of `w`, `g` or the residue formula.
    Pole { z: C64 },
    /// Evaluation at a branch point of the torus (`Z' = 0`).
    Singular { z: C64 },
    /// Residue formula as `y -> x`.
    Divergence,
    /// A path came closer to the critical set than allowed.
    Clearance { z: C64, dist: f64 },
    /// Branch selection stayed ambiguous after maximal subdivision.
    StepFailure { z: C64 },
    NonConvergence { what: &'static str, err: f64 },
    Bracket { sign_changes: usize },
    Calibration { identity: char, residual: f64 },
    Consistency { defect: f64 },
    Jacobian,
    Degenerate(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Ordering { x, y } => write!(f, "ordering error: need x < y, got x={x}, y={y}"),
            Error::Pole { z } => write!(f, "pole at z={z}"),
            Error::Singular { z } => write!(f, "branch point of the torus at z={z}"),
            Error::Divergence => write!(f, "end residue diverges as y -> x"),
            Error::Clearance { z, dist } => {
                write!(f, "path point z={z} within {dist:e} of the critical set")
            }
            Error::StepFailure { z } => write!(f, "branch tracking failed near z={z}"),
            Error::NonConvergence { what, err } => {
                write!(f, "{what} did not converge (err {err:e})")
            }
            Error::Bracket { sign_changes } => {
                write!(f, "bracket error: {sign_changes} sign changes on the scan")
            }
            Error::Calibration { identity, residual } => {
                write!(f, "calibration error: identity ({identity}) residual {residual:e}")
            }
            Error::Consistency { defect } => write!(f, "closure defect {defect:e}"),
            Error::Jacobian => write!(f, "singular Jacobian"),
            Error::Degenerate(m) => write!(f, "degenerate region: {m}"),
        }
    }
}
