//! Closed-form D-optimal rhombic designs for `K = 2` and `K = 3`.
//!
//! The parameter cone splits into regions where the optimal design has
//! both orbit levels in the interior, one level pinned at the boundary,
//! or all points on vertices. The case guards select a candidate; the
//! final arbiter is always the equivalence-theorem verifier, because the
//! regions overlap and (for `K = 3`) do not cover the whole cone.

use crate::config::Tolerances;
use crate::design::{Orbit, RhombicDesign};
use crate::equivalence::kw_verify;
use crate::error::{Error, Result};
use crate::information::{info_blocks_rhombic, log_det, InfoBlocks};
use crate::model::DispersionSpec;

use super::{Design, SolveMethod, SolveResult};

fn assemble(
    spec: &DispersionSpec,
    rd: RhombicDesign,
    method: SolveMethod,
    label: &str,
    tols: &Tolerances,
) -> Result<SolveResult> {
    let ib = info_blocks_rhombic(spec, &rd)?;
    let kw = kw_verify(spec, &rd.to_discrete()?, tols.kw)?;
    Ok(SolveResult {
        method,
        region_label: label.to_string(),
        log_det: log_det(&ib),
        design: Design::Rhombic(rd),
        kw,
        alternate: None,
    })
}

fn two_orbit_design(k: usize, x0: f64, x1: f64, w0: f64) -> Result<RhombicDesign> {
    RhombicDesign::new(
        k,
        vec![
            Orbit { ell: 0, level: x0, weight: w0 },
            Orbit { ell: 1, level: x1, weight: 1.0 - w0 },
        ],
    )
}

/// Closed-form solution on the square (`K = 2`, `d2 != 0`).
///
/// Regions, with boundary ties resolved to the lower-numbered case:
/// (i) `d0 <= d1 - |d2|`: both levels interior, equal weights;
/// (ii) `d0 <= (d1^2 - d2^2)/d1`: the low-variance diagonal pinned at 1;
/// (iii) otherwise: the vertex design, its weight the root in `(0,1)` of
/// `2 (d2 (6w^2 - 6w + 1) + d1 (1 - 2w)) + d0 (1 - 2w) = 0`.
pub fn closed_form_k2(spec: &DispersionSpec, tols: &Tolerances) -> Result<SolveResult> {
    if spec.k() != 2 {
        return Err(Error::Domain(format!(
            "closed_form_k2 requires K = 2, got {}",
            spec.k()
        )));
    }
    let (d0, d1, d2) = (spec.d0(), spec.d1(), spec.d2());
    if d2 == 0.0 {
        return Err(Error::Domain(
            "d2 = 0 is the diagonal case; use the numeric solver".into(),
        ));
    }

    if d0 <= d1 - d2.abs() {
        let x0 = (d0 / (d1 + d2)).sqrt();
        let x1 = (d0 / (d1 - d2)).sqrt();
        let rd = two_orbit_design(2, x0, x1, 0.5)?;
        return assemble(spec, rd, SolveMethod::ClosedFormK2, "case_i", tols);
    }

    if d0 <= (d1 * d1 - d2 * d2) / d1 {
        let rd = if d2 > 0.0 {
            let w = 2.0 / 3.0 - d0 / (6.0 * (d1 - d2));
            let x0 = ((d1 - d2) / (d1 + d2) * d0 / (2.0 * (d1 - d2) - d0)).sqrt();
            two_orbit_design(2, x0.min(1.0), 1.0, w)?
        } else {
            let w = 1.0 / 3.0 + d0 / (6.0 * (d1 + d2));
            let x1 = ((d1 + d2) / (d1 - d2) * d0 / (2.0 * (d1 + d2) - d0)).sqrt();
            two_orbit_design(2, 1.0, x1.min(1.0), w)?
        };
        return assemble(spec, rd, SolveMethod::ClosedFormK2, "case_ii", tols);
    }

    // Vertex region. The quadratic in w always has exactly one root in
    // (0,1) here: it is positive at 0 and negative at 1.
    let (a, b, c) = (
        12.0 * d2,
        -(12.0 * d2 + 4.0 * d1 + 2.0 * d0),
        2.0 * d2 + 2.0 * d1 + d0,
    );
    for w in quadratic_roots(a, b, c) {
        if w > 0.0 && w < 1.0 {
            let rd = two_orbit_design(2, 1.0, 1.0, w)?;
            let result = assemble(spec, rd, SolveMethod::ClosedFormK2, "case_iii", tols)?;
            if result.is_certified() {
                return Ok(result);
            }
        }
    }
    Err(Error::Internal(format!(
        "no verifiable vertex weight in (0,1) for (d0, d1, d2) = ({d0}, {d1}, {d2})"
    )))
}

/// Roots of `a w^2 + b w + c = 0`, numerically stable, smaller first.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return vec![];
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

fn level_feasible(t: f64) -> bool {
    t.is_finite() && t > 0.0 && t <= 1.0 + 1e-12
}

/// Checks `M(xi) = D^{-1} / p` in block form, the defining equation for
/// designs with an interior support point.
pub fn matches_inverse_over_p(spec: &DispersionSpec, ib: &InfoBlocks, tol: f64) -> Result<bool> {
    let p = spec.p() as f64;
    let (i0, inv1) = spec.inverse_blocks()?;
    Ok((ib.m0 - i0 / p).abs() <= tol
        && (ib.m1 - inv1.a1 / p).abs() <= tol
        && (ib.m2 - inv1.a2 / p).abs() <= tol)
}

/// Closed-form solution on the cube (`K = 3`, `d2 != 0`).
///
/// Case guards are evaluated in order (i), (ii)/(iii) jointly, (iv). The
/// (ii)/(iii) guards coincide; when both designs verify, the one whose
/// interior level clears the box bound by the larger margin is primary and
/// the other is attached as `alternate`. Inside
/// `d2 > d1/2 && 3 d0 + 9 d1 <= 22 d2` no closed form is known and an
/// `Uncovered` error is returned.
pub fn closed_form_k3(spec: &DispersionSpec, tols: &Tolerances) -> Result<SolveResult> {
    if spec.k() != 3 {
        return Err(Error::Domain(format!(
            "closed_form_k3 requires K = 3, got {}",
            spec.k()
        )));
    }
    let (d0, d1, d2) = (spec.d0(), spec.d1(), spec.d2());
    if d2 == 0.0 {
        return Err(Error::Domain(
            "d2 = 0 is the diagonal case; use the numeric solver".into(),
        ));
    }

    let quarter_tol = 1e-9;

    // (i): both levels interior, weight 1/4 on the main diagonal.
    let guard_i = (d0 < d1 + d2 && 0.0 < d2 && d2 < d1 / 2.0)
        || (d2 < 0.0 && d0 < (d1 + 2.0 * d2).powi(2) / (d1 - 2.0 * d2));
    if guard_i {
        let x0 = (d0 * (d1 - 2.0 * d2)).sqrt() / (d1 + 2.0 * d2);
        let x1 = (d0 / (d1 - 2.0 * d2)).sqrt();
        if level_feasible(x0) && level_feasible(x1) {
            let rd = two_orbit_design(3, x0.min(1.0), x1.min(1.0), 0.25)?;
            let ib = info_blocks_rhombic(spec, &rd)?;
            if matches_inverse_over_p(spec, &ib, quarter_tol)? {
                let result = assemble(spec, rd, SolveMethod::ClosedFormK3, "case_i", tols)?;
                if result.is_certified() {
                    return Ok(result);
                }
            }
        }
    }

    // (ii)/(iii): one level pinned at the boundary. Same guard, two designs.
    let guard_ii_iii =
        d2 <= d1 / 2.0 && d0 < (d1 - d2) * (d1 + 2.0 * d2) / (d1 + d2);
    if guard_ii_iii {
        let mut verified: Vec<(f64, SolveResult)> = Vec::new();

        // (ii): anti-diagonal orbit at the vertices, main diagonal interior.
        let w_ii = (3.0 * d0 - 7.0 * d1 + 10.0 * d2) / (-16.0 * (d1 - d2));
        let x0_sq =
            d0 * (2.0 * d2 - d1) / ((d1 + 2.0 * d2) * (3.0 * d0 - 4.0 * d1 + 4.0 * d2));
        if (0.0..=1.0).contains(&w_ii) && x0_sq > 0.0 && x0_sq <= 1.0 + 1e-12 {
            let x0 = x0_sq.min(1.0).sqrt();
            let rd = two_orbit_design(3, x0, 1.0, w_ii)?;
            let ib = info_blocks_rhombic(spec, &rd)?;
            if matches_inverse_over_p(spec, &ib, quarter_tol)? {
                let result = assemble(spec, rd, SolveMethod::ClosedFormK3, "case_ii", tols)?;
                if result.is_certified() {
                    verified.push((1.0 - x0, result));
                }
            }
        }

        // (iii): main diagonal at the vertices, anti-diagonal interior.
        let w_iii = (d1 - 2.0 * d2) * (d0 + 3.0 * d1 + 6.0 * d2)
            / (16.0 * (d1 - d2) * (d1 + 2.0 * d2));
        let x1_sq = 3.0 * d0 * (d1 + 2.0 * d2)
            / (2.0 * d0 * d2 - d0 * d1 - 8.0 * d2 * d2 + 4.0 * d2 * d1 + 4.0 * d1 * d1);
        if (0.0..=1.0).contains(&w_iii) && x1_sq > 0.0 && x1_sq <= 1.0 + 1e-12 {
            let x1 = x1_sq.min(1.0).sqrt();
            let rd = two_orbit_design(3, 1.0, x1, w_iii)?;
            let ib = info_blocks_rhombic(spec, &rd)?;
            if matches_inverse_over_p(spec, &ib, quarter_tol)? {
                let result = assemble(spec, rd, SolveMethod::ClosedFormK3, "case_iii", tols)?;
                if result.is_certified() {
                    verified.push((1.0 - x1, result));
                }
            }
        }

        // Larger margin from the box boundary wins the primary slot.
        verified.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut iter = verified.into_iter().map(|(_, r)| r);
        if let Some(mut primary) = iter.next() {
            if let Some(second) = iter.next() {
                primary.alternate = Some(Box::new(second));
            }
            return Ok(primary);
        }
    }

    // (iv): the vertex design with the radical weight.
    let guard_iv = (d0 * (d1 + d2) >= (d1 - d2) * (d1 + 2.0 * d2) && d2 <= d1 / 2.0)
        || (d2 > d1 / 2.0 && 3.0 * d0 + 9.0 * d1 > 22.0 * d2);
    if guard_iv {
        let den = 64.0 * d2 * (d0 - 3.0 * d2 + 3.0 * d1);
        let num = 3.0 * d0 * d0 + 22.0 * d0 * d2 + 18.0 * d0 * d1 - 120.0 * d2 * d2
            + 66.0 * d2 * d1
            + 27.0 * d1 * d1;
        let rad = (d0 - 2.0 * d2 + 3.0 * d1).powi(2)
            * (d0 * d0
                + 8.0 * d0 * d2
                + 6.0 * d0 * d1
                + 48.0 * d2 * d2
                + 24.0 * d2 * d1
                + 9.0 * d1 * d1);
        let w = num / den - 3.0 * rad.sqrt() / den;
        if w > 0.0 && w < 1.0 {
            let rd = two_orbit_design(3, 1.0, 1.0, w)?;
            let result = assemble(spec, rd, SolveMethod::ClosedFormK3, "case_iv", tols)?;
            if result.is_certified() {
                return Ok(result);
            }
        }
    }

    if d2 > d1 / 2.0 && 3.0 * d0 + 9.0 * d1 <= 22.0 * d2 {
        return Err(Error::Uncovered(format!(
            "(d0, d1, d2) = ({d0}, {d1}, {d2}) satisfies d2 > d1/2 and 3 d0 + 9 d1 <= 22 d2"
        )));
    }
    Err(Error::Internal(format!(
        "no closed-form case verified for (d0, d1, d2) = ({d0}, {d1}, {d2})"
    )))
}
