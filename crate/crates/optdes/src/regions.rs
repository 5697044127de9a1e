//! Optimality-region classification over the dispersion parameters.
//!
//! The sign of one quadratic polynomial in `(d0, d1, d2)` separates the
//! parameter region where an optimal design can sit entirely on vertices
//! from the region where it must have interior support points. Sweeps over
//! the `(d1/d0, d2/d0)` plane classify each cell by that sign and can
//! confirm the prediction by actually solving each cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::config::Tolerances;
use crate::design::RhombicDesign;
use crate::error::Result;
use crate::model::{cone_contains_slack, DispersionSpec};
use crate::solvers::{
    closed_form_k2, closed_form_k3, numeric_rhombic_detailed, NumericOptions, SolveResult,
};

/// `(d1 - d2)(d1 + (K-1) d2) - d0 (d1 + (K-2) d2)`.
///
/// Non-positive sign is necessary for a multi-orbit vertex design to be
/// optimal; positive sign is necessary for any design with an interior
/// support point. Homogeneous of degree two, so classification only
/// depends on `(d1/d0, d2/d0)`.
pub fn boundary_poly(spec: &DispersionSpec) -> f64 {
    boundary_poly_raw(spec.k(), spec.d0(), spec.d1(), spec.d2())
}

pub fn boundary_poly_raw(k: usize, d0: f64, d1: f64, d2: f64) -> f64 {
    let kf = k as f64;
    (d1 - d2) * (d1 + (kf - 1.0) * d2) - d0 * (d1 + (kf - 2.0) * d2)
}

/// Predicted side of the boundary polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    Vertex,
    NonVertex,
    Boundary,
    Excluded,
}

impl RegionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionClass::Vertex => "vertex",
            RegionClass::NonVertex => "non_vertex",
            RegionClass::Boundary => "boundary",
            RegionClass::Excluded => "excluded",
        }
    }
}

/// Classifies by polynomial sign with a band of half-width `band` (in the
/// same quadratic scale as the polynomial) treated as `Boundary`.
pub fn classify(spec: &DispersionSpec, band: f64) -> RegionClass {
    let value = boundary_poly(spec);
    if value <= -band {
        RegionClass::Vertex
    } else if value >= band {
        RegionClass::NonVertex
    } else {
        RegionClass::Boundary
    }
}

/// Default boundary band, scaled quadratically with `d0` so that the
/// classification is invariant under joint scaling of the parameters.
pub fn default_band(spec: &DispersionSpec) -> f64 {
    1e-10 * spec.d0() * spec.d0()
}

/// Region label used by the solvers' reports.
pub(crate) fn predicted_label(spec: &DispersionSpec) -> String {
    classify(spec, default_band(spec)).as_str().to_string()
}

/// What the confirmation solver found in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmStatus {
    Vertex,
    NonVertex,
    NoneFound,
    Inconclusive,
}

impl ConfirmStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConfirmStatus::Vertex => "vertex",
            ConfirmStatus::NonVertex => "non_vertex",
            ConfirmStatus::NoneFound => "none_found",
            ConfirmStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Confirmation details for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfirmation {
    pub status: ConfirmStatus,
    /// Number of orbits of the certified design (0 when none).
    pub orbit_count: usize,
    /// All certified levels at the boundary.
    pub all_vertex: bool,
    pub log_det: f64,
}

/// One cell of a region map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub d1: f64,
    pub d2: f64,
    pub boundary_value: f64,
    pub predicted: RegionClass,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub confirmation: Option<CellConfirmation>,
}

/// Sweep configuration. `d0` is fixed to 1: the classification only
/// depends on the parameter quotients.
#[derive(Debug, Clone)]
pub struct MapConfig {
    pub k: usize,
    pub d1_min: f64,
    pub d1_max: f64,
    pub d2_min: f64,
    pub d2_max: f64,
    pub resolution: usize,
    pub confirm: bool,
    /// Half-width of the boundary band in normalized units.
    pub band: f64,
    /// Sweep budget for the numeric confirmation solver.
    pub budget_sweeps: usize,
}

impl MapConfig {
    pub fn new(k: usize, resolution: usize, confirm: bool) -> Self {
        MapConfig {
            k,
            d1_min: 0.05,
            d1_max: 3.0,
            d2_min: -3.0 / (k as f64 - 1.0),
            d2_max: 3.0,
            resolution,
            confirm,
            band: 1e-10,
            budget_sweeps: 50,
        }
    }
}

/// Cone membership with a strict interior margin; cells on the very edge
/// of the cone (where the dispersion matrix is singular) are excluded from
/// sweeps.
fn interior_cell(k: usize, d1: f64, d2: f64) -> bool {
    cone_contains_slack(k, 1.0, d1, d2, -1e-9)
}

fn grid_value(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if n == 1 {
        return lo;
    }
    lo + (hi - lo) * i as f64 / (n - 1) as f64
}

/// Classifies (and optionally confirms) a full grid over the
/// `(d1, d2)` plane at `d0 = 1`. Rows are ordered by `d1` first, `d2`
/// second, deterministically.
pub fn region_map(cfg: &MapConfig, tols: &Tolerances) -> Vec<RegionVerdict> {
    let cells: Vec<(usize, usize)> = (0..cfg.resolution)
        .flat_map(|i| (0..cfg.resolution).map(move |j| (i, j)))
        .collect();
    cells
        .into_par_iter()
        .map(|(i, j)| {
            let d1 = grid_value(cfg.d1_min, cfg.d1_max, i, cfg.resolution);
            let d2 = grid_value(cfg.d2_min, cfg.d2_max, j, cfg.resolution);
            let boundary_value = boundary_poly_raw(cfg.k, 1.0, d1, d2);
            if !interior_cell(cfg.k, d1, d2) {
                return RegionVerdict {
                    d1,
                    d2,
                    boundary_value,
                    predicted: RegionClass::Excluded,
                    confirmation: None,
                };
            }
            let spec = DispersionSpec::new(cfg.k, 1.0, d1, d2).expect("interior cell");
            let predicted = classify(&spec, cfg.band);
            let confirmation = if cfg.confirm {
                Some(confirm_cell(&spec, cfg.budget_sweeps, tols))
            } else {
                None
            };
            RegionVerdict {
                d1,
                d2,
                boundary_value,
                predicted,
                confirmation,
            }
        })
        .collect()
}

/// Runs the best available solver on one cell and grades the outcome.
pub fn confirm_cell(spec: &DispersionSpec, budget_sweeps: usize, tols: &Tolerances) -> CellConfirmation {
    let opts = NumericOptions::with_budget(budget_sweeps);
    let closed: Option<Result<SolveResult>> = if spec.d2() != 0.0 {
        match spec.k() {
            2 => Some(closed_form_k2(spec, tols)),
            3 => Some(closed_form_k3(spec, tols)),
            _ => None,
        }
    } else {
        None
    };
    if let Some(Ok(result)) = closed {
        if result.is_certified() {
            return grade(result.design.as_rhombic().expect("closed forms are rhombic"), result.log_det);
        }
    }
    // Closed form unavailable, uncovered or unverified: try numerically.
    match numeric_rhombic_detailed(spec, &opts, tols) {
        Ok((result, converged)) => {
            if result.is_certified() {
                grade(result.design.as_rhombic().expect("numeric designs are rhombic"), result.log_det)
            } else if converged {
                CellConfirmation {
                    status: ConfirmStatus::NoneFound,
                    orbit_count: 0,
                    all_vertex: false,
                    log_det: result.log_det,
                }
            } else {
                CellConfirmation {
                    status: ConfirmStatus::Inconclusive,
                    orbit_count: 0,
                    all_vertex: false,
                    log_det: result.log_det,
                }
            }
        }
        Err(_) => CellConfirmation {
            status: ConfirmStatus::Inconclusive,
            orbit_count: 0,
            all_vertex: false,
            log_det: f64::NEG_INFINITY,
        },
    }
}

const VERTEX_LEVEL_TOL: f64 = 1e-6;

fn grade(rd: &RhombicDesign, log_det: f64) -> CellConfirmation {
    let all_vertex = rd.orbits().iter().all(|o| o.level >= 1.0 - VERTEX_LEVEL_TOL);
    CellConfirmation {
        status: if all_vertex {
            ConfirmStatus::Vertex
        } else {
            ConfirmStatus::NonVertex
        },
        orbit_count: rd.orbits().len(),
        all_vertex,
        log_det,
    }
}

/// Formats with 12 significant digits, trimmed of trailing zeros.
pub(crate) fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("round-trip");
    format!("{rounded}")
}

/// CSV with header `d1,d2,boundary_value,predicted,confirmed`; floats with
/// 12 significant digits; one row per cell in map order.
pub fn write_region_csv<W: Write>(rows: &[RegionVerdict], mut out: W) -> std::io::Result<()> {
    writeln!(out, "d1,d2,boundary_value,predicted,confirmed")?;
    for row in rows {
        let confirmed = row
            .confirmation
            .as_ref()
            .map(|c| c.status.as_str())
            .unwrap_or("");
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(row.d1),
            fmt_sig(row.d2),
            fmt_sig(row.boundary_value),
            row.predicted.as_str(),
            confirmed
        )?;
    }
    Ok(())
}

/// One cell of a conjecture scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub d1: f64,
    pub d2: f64,
    pub certified: bool,
    pub verdict: crate::equivalence::Verdict,
    pub min_psi: f64,
    pub all_vertex: bool,
    pub log_det: f64,
}

/// Outcome of a scan for rhombic optimality over the cone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub k: usize,
    pub resolution: usize,
    pub cells_in_cone: usize,
    pub failures: Vec<(f64, f64)>,
    pub failure_fraction: f64,
    /// Every failing cell lies strictly above the line `d2 = d1 / 2`.
    pub failures_confined_above_half_line: bool,
    #[serde(skip)]
    pub cells: Vec<ScanCell>,
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub k: usize,
    pub resolution: usize,
    pub d1_min: f64,
    pub d1_max: f64,
    pub d2_min: f64,
    pub d2_max: f64,
    pub budget_sweeps: usize,
}

impl ScanConfig {
    pub fn new(k: usize, resolution: usize) -> Self {
        ScanConfig {
            k,
            resolution,
            d1_min: 0.05,
            d1_max: 3.0,
            d2_min: -3.0 / (k as f64 - 1.0),
            d2_max: 3.0,
            budget_sweeps: NumericOptions::default().max_sweeps,
        }
    }
}

/// Runs the numeric solver with full-box verification on every in-cone
/// cell of a `(d1, d2)` grid at `d0 = 1`, recording where no optimal
/// rhombic design was found.
pub fn conjecture_scan(cfg: &ScanConfig, tols: &Tolerances) -> ScanSummary {
    let opts = NumericOptions::with_budget(cfg.budget_sweeps);
    let cells: Vec<(usize, usize)> = (0..cfg.resolution)
        .flat_map(|i| (0..cfg.resolution).map(move |j| (i, j)))
        .collect();
    let cells: Vec<ScanCell> = cells
        .into_par_iter()
        .filter_map(|(i, j)| {
            let d1 = grid_value(cfg.d1_min, cfg.d1_max, i, cfg.resolution);
            let d2 = grid_value(cfg.d2_min, cfg.d2_max, j, cfg.resolution);
            if !interior_cell(cfg.k, d1, d2) {
                return None;
            }
            let spec = DispersionSpec::new(cfg.k, 1.0, d1, d2).expect("interior cell");
            let cell = match numeric_rhombic_detailed(&spec, &opts, tols) {
                Ok((result, _)) => {
                    let rd = result.design.as_rhombic().expect("numeric designs are rhombic");
                    ScanCell {
                        d1,
                        d2,
                        certified: result.is_certified(),
                        verdict: result.kw.verdict,
                        min_psi: result.kw.min_psi,
                        all_vertex: rd
                            .orbits()
                            .iter()
                            .all(|o| o.level >= 1.0 - VERTEX_LEVEL_TOL),
                        log_det: result.log_det,
                    }
                }
                Err(_) => ScanCell {
                    d1,
                    d2,
                    certified: false,
                    verdict: crate::equivalence::Verdict::NotOptimal,
                    min_psi: f64::NEG_INFINITY,
                    all_vertex: false,
                    log_det: f64::NEG_INFINITY,
                },
            };
            Some(cell)
        })
        .collect();

    let failures: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| !c.certified)
        .map(|c| (c.d1, c.d2))
        .collect();
    let confined = failures.iter().all(|&(d1, d2)| d2 > d1 / 2.0);
    ScanSummary {
        k: cfg.k,
        resolution: cfg.resolution,
        cells_in_cone: cells.len(),
        failure_fraction: failures.len() as f64 / cells.len().max(1) as f64,
        failures_confined_above_half_line: confined,
        failures,
        cells,
    }
}

/// CSV with header `d1,d2,found,verdict,min_psi`, one row per in-cone cell.
pub fn write_scan_csv<W: Write>(summary: &ScanSummary, mut out: W) -> std::io::Result<()> {
    writeln!(out, "d1,d2,found,verdict,min_psi")?;
    for c in &summary.cells {
        let verdict = match c.verdict {
            crate::equivalence::Verdict::Optimal => "optimal",
            crate::equivalence::Verdict::NotOptimal => "not_optimal",
            crate::equivalence::Verdict::Borderline => "borderline",
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_sig(c.d1),
            fmt_sig(c.d2),
            c.certified,
            verdict,
            fmt_sig(c.min_psi)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(k: usize, d0: f64, d1: f64, d2: f64) -> DispersionSpec {
        DispersionSpec::new(k, d0, d1, d2).unwrap()
    }

    #[test]
    fn boundary_values_match_hand_evaluation() {
        assert_relative_eq!(boundary_poly(&spec(3, 1.0, 1.0, 0.2)), -0.08, epsilon = 1e-15);
        assert_relative_eq!(boundary_poly(&spec(2, 1.0, 2.0, 0.5)), 1.75, epsilon = 1e-15);
    }

    #[test]
    fn boundary_zero_matches_k2_vertex_threshold() {
        // d0 = (d1^2 - d2^2) / d1 makes the polynomial vanish exactly
        let (d1, d2) = (1.7, -0.4);
        let d0 = (d1 * d1 - d2 * d2) / d1;
        let value = boundary_poly(&spec(2, d0, d1, d2));
        assert!(value.abs() < 1e-12);
    }

    #[test]
    fn classification_is_scale_invariant() {
        for lambda in [0.1, 10.0] {
            let base = spec(3, 1.0, 1.2, 0.3);
            let scaled = base.scaled(lambda).unwrap();
            assert_eq!(
                classify(&base, default_band(&base)),
                classify(&scaled, default_band(&scaled))
            );
        }
    }

    #[test]
    fn k2_reduction_of_the_polynomial() {
        let s = spec(2, 0.9, 1.4, -0.6);
        let expected = s.d1() * s.d1() - s.d2() * s.d2() - s.d0() * s.d1();
        assert_relative_eq!(boundary_poly(&s), expected, epsilon = 1e-15);
    }

    #[test]
    fn map_rows_are_row_major_and_exclude_out_of_cone() {
        let mut cfg = MapConfig::new(2, 5, false);
        cfg.d1_min = 0.5;
        cfg.d1_max = 1.0;
        cfg.d2_min = -1.5;
        cfg.d2_max = 1.5;
        let rows = region_map(&cfg, &Tolerances::default());
        assert_eq!(rows.len(), 25);
        // row-major: d1 constant over runs of 5
        assert!(rows[..5].iter().all(|r| r.d1 == rows[0].d1));
        // d2 = 1.5 > d1 for every d1 in range: excluded
        assert!(rows
            .iter()
            .filter(|r| r.d2 > r.d1)
            .all(|r| r.predicted == RegionClass::Excluded));
    }

    #[test]
    fn scaled_sweeps_classify_identically() {
        // quotient dependence: scanning (d1, d2) at d0 = 1 must match the
        // raw polynomial sign at any scale
        for &(d1, d2) in &[(0.8, 0.3), (2.0, -0.7), (1.1, 1.0)] {
            let normalized = classify(&spec(2, 1.0, d1, d2), 1e-10);
            let lambda = 7.3;
            let scaled = classify(
                &spec(2, lambda, lambda * d1, lambda * d2),
                1e-10 * lambda * lambda,
            );
            assert_eq!(normalized, scaled);
        }
    }

    #[test]
    fn csv_output_shape() {
        let cfg = MapConfig::new(2, 3, false);
        let rows = region_map(&cfg, &Tolerances::default());
        let mut buf = Vec::new();
        write_region_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "d1,d2,boundary_value,predicted,confirmed");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].split(',').count() == 5);
    }

    #[test]
    fn fmt_sig_trims_and_rounds() {
        assert_eq!(fmt_sig(1.75), "1.75");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.08000000000000002), "-0.08");
        assert_eq!(fmt_sig(f64::NEG_INFINITY), "-inf");
    }
}
