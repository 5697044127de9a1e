/// Numeric tolerances used across the crate.
///
/// All comparisons against "equal", "singular" and "optimal" route through
/// this one record so that callers can tighten or relax them consistently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// General floating-point equality tolerance.
    pub equality: f64,
    /// Guard below which a matrix factor counts as singular.
    pub singularity: f64,
    /// Sensitivity-function tolerance for the optimality verdict.
    pub kw: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            equality: 1e-9,
            singularity: 1e-12,
            kw: 1e-7,
        }
    }
}

impl Tolerances {
    /// Default tolerances with the optimality tolerance replaced.
    pub fn with_kw(kw: f64) -> Self {
        Tolerances {
            kw,
            ..Tolerances::default()
        }
    }
}
