//! Design solvers: closed forms for `K = 2` and `K = 3`, a numeric solver
//! over the rhombic class for any dimension, and a brute-force grid oracle.
//!
//! Every returned design is re-checked with the equivalence-theorem
//! verifier over the full hypercube; the closed-form case guards select
//! candidates but never certify on their own.

mod closed_form;
mod numeric;
mod oracle;

pub use closed_form::{closed_form_k2, closed_form_k3};
pub use numeric::{numeric_rhombic, NumericOptions};
pub use oracle::{grid_oracle, OracleOptions};

pub(crate) use numeric::numeric_rhombic_detailed;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::design::{DiscreteDesign, RhombicDesign};
use crate::error::{Error, Result};
use crate::equivalence::KWReport;
use crate::model::DispersionSpec;

/// Which solver produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ClosedFormK2,
    ClosedFormK3,
    NumericRhombic,
    Oracle,
}

/// A design in either representation, tagged by `format` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum Design {
    Rhombic(RhombicDesign),
    Discrete(DiscreteDesign),
}

impl Design {
    pub fn k(&self) -> usize {
        match self {
            Design::Rhombic(d) => d.k(),
            Design::Discrete(d) => d.k(),
        }
    }

    /// The discrete form, expanding orbits when necessary.
    pub fn to_discrete(&self) -> Result<DiscreteDesign> {
        match self {
            Design::Rhombic(d) => d.to_discrete(),
            Design::Discrete(d) => Ok(d.clone()),
        }
    }

    pub fn as_rhombic(&self) -> Option<&RhombicDesign> {
        match self {
            Design::Rhombic(d) => Some(d),
            Design::Discrete(_) => None,
        }
    }
}

/// A candidate optimal design together with its certification report.
///
/// A result counts as solved when `kw.verdict` is `optimal`; anything else
/// is best-effort with the failing verdict attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub method: SolveMethod,
    pub region_label: String,
    pub log_det: f64,
    pub design: Design,
    pub kw: KWReport,
    /// A second verified design when two closed-form cases apply at once.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alternate: Option<Box<SolveResult>>,
}

impl SolveResult {
    pub fn is_certified(&self) -> bool {
        self.kw.is_optimal()
    }
}

/// Solves for a D-optimal design, picking the strongest applicable method:
/// closed forms for `K = 2, 3` with nonzero `d2`, the numeric rhombic
/// solver otherwise. In the parameter region where no closed form is known
/// the numeric solver is attempted and the result is labeled `uncovered`.
pub fn solve(
    spec: &DispersionSpec,
    opts: &NumericOptions,
    tols: &Tolerances,
) -> Result<SolveResult> {
    if spec.d2() == 0.0 {
        return numeric::solve_diagonal(spec, opts, tols);
    }
    match spec.k() {
        2 => closed_form_k2(spec, tols),
        3 => match closed_form_k3(spec, tols) {
            Ok(result) => Ok(result),
            Err(Error::Uncovered(_)) => {
                let mut result = numeric_rhombic(spec, opts, tols)?;
                result.region_label = "uncovered".into();
                Ok(result)
            }
            Err(e) => Err(e),
        },
        _ => numeric_rhombic(spec, opts, tols),
    }
}
