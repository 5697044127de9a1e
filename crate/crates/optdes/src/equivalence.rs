//! Optimality verification via the equivalence theorem.
//!
//! A design is D-optimal iff the transformed sensitivity function
//! `psi(x) = f(x)' (p D - M^{-1}) f(x)` is nonnegative on the whole
//! hypercube, and `psi` vanishes at every support point. For invariant
//! designs `Gamma = p D - M^{-1}` inherits the block completely symmetric
//! structure, which makes the global minimum of `psi` over the box
//! computable exactly by enumerating stationarity patterns. Arbitrary
//! designs fall back to a dense grid scan with coordinate-wise refinement.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::DiscreteDesign;
use crate::error::Result;
use crate::information::{blocks_from_dense, gamma_blocks, info_dense, GammaBlocks};
use crate::model::DispersionSpec;

/// Outcome of the optimality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Optimal,
    NotOptimal,
    Borderline,
}

/// Sensitivity value at one support point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportPsi {
    pub x: Vec<f64>,
    pub psi: f64,
}

/// Full report of the equivalence-theorem check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KWReport {
    pub verdict: Verdict,
    pub min_psi: f64,
    pub argmin: Vec<f64>,
    #[serde(rename = "support")]
    pub support_psi: Vec<SupportPsi>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl KWReport {
    pub fn is_optimal(&self) -> bool {
        self.verdict == Verdict::Optimal
    }
}

/// Sensitivity function for block `Gamma`:
/// `psi(x) = g0 + (g1 - g2) ||x||^2 + g2 (sum x_i)^2`.
pub fn psi(gb: &GammaBlocks, x: &[f64]) -> f64 {
    let q: f64 = x.iter().map(|v| v * v).sum();
    let s: f64 = x.iter().sum();
    gb.g0 + (gb.g1 - gb.g2) * q + gb.g2 * s * s
}

/// Sensitivity value on an orbit: every point with coordinates `±level`
/// and `ell` (or `K - ell`) minus signs gives the same value.
pub fn psi_on_orbit(gb: &GammaBlocks, ell: usize, level: f64) -> f64 {
    let k = gb.k as f64;
    let d = k - 2.0 * ell as f64;
    gb.g0 + level * level * ((gb.g1 - gb.g2) * k + gb.g2 * d * d)
}

/// Sensitivity function for a dense `Gamma` matrix.
pub fn psi_dense(gamma: &DMatrix<f64>, x: &[f64]) -> f64 {
    let p = x.len() + 1;
    debug_assert_eq!(gamma.nrows(), p);
    let mut total = gamma[(0, 0)];
    for i in 0..x.len() {
        total += 2.0 * gamma[(0, i + 1)] * x[i];
        for j in 0..x.len() {
            total += gamma[(i + 1, j + 1)] * x[i] * x[j];
        }
    }
    total
}

/// Exact global minimum of `psi` over `[-1,1]^K` for block `Gamma`.
///
/// Writing `psi = g0 + a ||x||^2 + b s^2` with `a = g1 - g2`, `b = g2` and
/// `s = sum x_i`, any box minimizer has all its non-boundary coordinates at
/// a common value `c` with `a c + b s = 0`. Enumerating the counts
/// `(n_minus, n_plus)` of coordinates pinned at `-1` and `+1` (the rest
/// free at `c`) therefore covers every candidate, including all vertices
/// and the origin. Ties go to the lexicographically smallest point.
pub fn min_psi_box(gb: &GammaBlocks) -> (f64, Vec<f64>) {
    let k = gb.k;
    let a = gb.g1 - gb.g2;
    let b = gb.g2;
    let denom_guard = 1e-14 * (a.abs() + b.abs() * k as f64).max(1e-300);

    let mut best_val = f64::INFINITY;
    let mut best: Vec<f64> = Vec::new();

    let mut consider = |n_minus: usize, n_plus: usize, c: f64| {
        let n_free = k - n_minus - n_plus;
        let q = (n_minus + n_plus) as f64 + n_free as f64 * c * c;
        let s = (n_plus as f64 - n_minus as f64) + n_free as f64 * c;
        let val = gb.g0 + a * q + b * s * s;
        if val < best_val || (val == best_val && lex_candidate(n_minus, n_plus, c, k, &best)) {
            best_val = val;
            best = canonical_point(n_minus, n_plus, c, k);
        }
    };

    for n_minus in 0..=k {
        for n_plus in 0..=(k - n_minus) {
            let n_free = k - n_minus - n_plus;
            if n_free == 0 {
                consider(n_minus, n_plus, 0.0);
                continue;
            }
            let denom = a + b * n_free as f64;
            if denom.abs() <= denom_guard {
                // psi is flat or linear along the free block; boundary
                // patterns cover the infimum.
                continue;
            }
            let c = -b * (n_plus as f64 - n_minus as f64) / denom;
            if c.abs() <= 1.0 + 1e-15 {
                consider(n_minus, n_plus, c.clamp(-1.0, 1.0));
            }
        }
    }
    // The origin, in case every stationary family above was degenerate.
    consider(0, 0, 0.0);

    (best_val, best)
}

fn canonical_point(n_minus: usize, n_plus: usize, c: f64, k: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(k);
    x.extend(std::iter::repeat_n(-1.0, n_minus));
    x.extend(std::iter::repeat_n(c, k - n_minus - n_plus));
    x.extend(std::iter::repeat_n(1.0, n_plus));
    x.sort_by(|u, v| u.partial_cmp(v).unwrap());
    x
}

fn lex_candidate(n_minus: usize, n_plus: usize, c: f64, k: usize, best: &[f64]) -> bool {
    let cand = canonical_point(n_minus, n_plus, c, k);
    for (u, v) in cand.iter().zip(best.iter()) {
        if u < v {
            return true;
        }
        if u > v {
            return false;
        }
    }
    false
}

/// Grid scan over the box followed by coordinate-wise exact refinement,
/// for dense `Gamma`. Best-effort global minimizer for non-invariant
/// designs.
pub fn min_psi_dense_grid(gamma: &DMatrix<f64>, k: usize, per_axis: usize) -> (f64, Vec<f64>) {
    assert!(per_axis >= 2);
    let step = 2.0 / (per_axis - 1) as f64;
    // Keep the best handful of grid points as refinement seeds.
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut idx = vec![0usize; k];
    let mut x = vec![-1.0; k];
    loop {
        let val = psi_dense(gamma, &x);
        if seeds.len() < 8 {
            seeds.push((val, x.clone()));
            seeds.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        } else if val < seeds[7].0 {
            seeds[7] = (val, x.clone());
            seeds.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        }
        // odometer increment
        let mut dim = 0;
        loop {
            if dim == k {
                break;
            }
            idx[dim] += 1;
            if idx[dim] < per_axis {
                x[dim] = -1.0 + idx[dim] as f64 * step;
                break;
            }
            idx[dim] = 0;
            x[dim] = -1.0;
            dim += 1;
        }
        if dim == k {
            break;
        }
    }

    let mut best_val = f64::INFINITY;
    let mut best = vec![0.0; k];
    for (_, seed) in seeds {
        let (val, pt) = refine_coordinatewise(gamma, seed);
        if val < best_val {
            best_val = val;
            best = pt;
        }
    }
    (best_val, best)
}

/// Coordinate descent with the exact per-coordinate quadratic minimizer.
fn refine_coordinatewise(gamma: &DMatrix<f64>, mut x: Vec<f64>) -> (f64, Vec<f64>) {
    let k = x.len();
    for _ in 0..500 {
        let mut max_move = 0.0f64;
        for i in 0..k {
            let a = gamma[(i + 1, i + 1)];
            let mut b = 2.0 * gamma[(0, i + 1)];
            for j in 0..k {
                if j != i {
                    b += 2.0 * gamma[(i + 1, j + 1)] * x[j];
                }
            }
            let new = if a > 0.0 {
                (-b / (2.0 * a)).clamp(-1.0, 1.0)
            } else if a == 0.0 && b == 0.0 {
                x[i]
            } else {
                // concave or linear in this coordinate: an endpoint wins
                let at_minus = a - b;
                let at_plus = a + b;
                if at_minus <= at_plus {
                    -1.0
                } else {
                    1.0
                }
            };
            max_move = max_move.max((new - x[i]).abs());
            x[i] = new;
        }
        if max_move < 1e-13 {
            break;
        }
    }
    (psi_dense(gamma, &x), x)
}

fn grid_per_axis(k: usize) -> usize {
    if k <= 4 {
        33
    } else {
        9
    }
}

/// Checks the equivalence-theorem conditions for a design.
///
/// The verdict is `Optimal` iff the global minimum of `psi` over the box is
/// at least `-tolerance` and `|psi| <= tolerance` at every support point.
/// When the reported minimum is within `10 * tolerance` of zero but the
/// support equalities fail, the verdict is `Borderline`. A singular
/// information matrix yields `NotOptimal` with a note.
pub fn kw_verify(spec: &DispersionSpec, dd: &DiscreteDesign, tolerance: f64) -> Result<KWReport> {
    let m = info_dense(spec, dd)?;
    let chol = m.clone().cholesky();
    let inv = match chol {
        Some(c) => c.inverse(),
        None => {
            return Ok(KWReport {
                verdict: Verdict::NotOptimal,
                min_psi: f64::NEG_INFINITY,
                argmin: vec![0.0; spec.k()],
                support_psi: Vec::new(),
                tolerance,
                note: Some(
                    "information matrix is singular; the design cannot be optimal".into(),
                ),
            });
        }
    };

    let support: Vec<&crate::design::DesignPoint> =
        dd.points().iter().filter(|p| p.w > 0.0).collect();

    if dd.is_invariant() {
        let gb = gamma_blocks(spec, &blocks_from_dense(&m))?;
        let (min_psi, argmin) = min_psi_box(&gb);
        let support_psi = support
            .iter()
            .map(|p| SupportPsi {
                x: p.x.clone(),
                psi: psi(&gb, &p.x),
            })
            .collect();
        Ok(build_report(min_psi, argmin, support_psi, tolerance, None))
    } else {
        let p = spec.p();
        let mut gamma = DMatrix::zeros(p, p);
        gamma[(0, 0)] = p as f64 * spec.d0();
        for i in 1..p {
            for j in 1..p {
                gamma[(i, j)] = p as f64 * spec.slope_block().entry(i - 1, j - 1);
            }
        }
        gamma -= &inv;
        let (min_psi, argmin) = min_psi_dense_grid(&gamma, spec.k(), grid_per_axis(spec.k()));
        let support_psi = support
            .iter()
            .map(|pt| SupportPsi {
                x: pt.x.clone(),
                psi: psi_dense(&gamma, &pt.x),
            })
            .collect();
        Ok(build_report(
            min_psi,
            argmin,
            support_psi,
            tolerance,
            Some("non-invariant design: box minimum from grid search with refinement".into()),
        ))
    }
}

fn build_report(
    min_psi: f64,
    argmin: Vec<f64>,
    support_psi: Vec<SupportPsi>,
    tolerance: f64,
    note: Option<String>,
) -> KWReport {
    let support_ok = support_psi.iter().all(|s| s.psi.abs() <= tolerance);
    let verdict = if min_psi >= -tolerance && support_ok {
        Verdict::Optimal
    } else if min_psi.abs() < 10.0 * tolerance {
        Verdict::Borderline
    } else {
        Verdict::NotOptimal
    };
    KWReport {
        verdict,
        min_psi,
        argmin,
        support_psi,
        tolerance,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{DesignPoint, Orbit, RhombicDesign};
    use crate::information::GammaBlocks;
    use approx::assert_relative_eq;

    fn gb(k: usize, g0: f64, g1: f64, g2: f64) -> GammaBlocks {
        GammaBlocks { k, g0, g1, g2 }
    }

    #[test]
    fn psi_zero_gamma_is_zero() {
        let g = gb(3, 0.0, 0.0, 0.0);
        assert_eq!(psi(&g, &[0.3, -0.8, 1.0]), 0.0);
    }

    #[test]
    fn psi_vertex_pattern_matches_norm_formula() {
        let g0 = 0.7;
        let g = gb(4, g0, -g0 / 4.0, 0.0);
        for x in [[1.0, 1.0, -1.0, 1.0], [0.2, -0.3, 0.0, 0.9]] {
            let q: f64 = x.iter().map(|v| v * v).sum();
            assert_relative_eq!(psi(&g, &x), g0 * (1.0 - q / 4.0), epsilon = 1e-14);
        }
    }

    #[test]
    fn psi_on_vertex_orbit_uses_sign_balance() {
        let g = gb(3, 0.4, -0.2, 0.11);
        // one minus sign among three: coefficient of g2 is (K-2l)^2 - K = -2
        assert_relative_eq!(
            psi(&g, &[-1.0, 1.0, 1.0]),
            g.g0 + 3.0 * g.g1 - 2.0 * g.g2,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            psi_on_orbit(&g, 1, 1.0),
            psi(&g, &[-1.0, 1.0, 1.0]),
            epsilon = 1e-14
        );
    }

    #[test]
    fn box_min_vertex_pattern_is_zero_at_vertices() {
        let g = gb(3, 0.9, -0.3, 0.0);
        let (min, argmin) = min_psi_box(&g);
        assert_relative_eq!(min, 0.0, epsilon = 1e-14);
        assert!(argmin.iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn box_min_convex_case_is_at_origin() {
        let g = gb(2, 1.0, 1.0, 0.0);
        let (min, argmin) = min_psi_box(&g);
        assert_relative_eq!(min, 1.0, epsilon = 1e-14);
        assert_eq!(argmin, vec![0.0, 0.0]);
    }

    /// Independent oracle: dense 101 x 101 scan of psi = 2 x1 x2.
    #[test]
    fn box_min_saddle_matches_grid_oracle() {
        let g = gb(2, 0.0, 0.0, 1.0);
        let (min, argmin) = min_psi_box(&g);

        let mut grid_min = f64::INFINITY;
        for i in 0..101 {
            for j in 0..101 {
                let x = [-1.0 + 0.02 * i as f64, -1.0 + 0.02 * j as f64];
                grid_min = grid_min.min(psi(&g, &x));
            }
        }
        assert_relative_eq!(min, -2.0, epsilon = 1e-14);
        assert_relative_eq!(min, grid_min, epsilon = 1e-12);
        assert_relative_eq!(psi(&g, &argmin), min, epsilon = 1e-14);
    }

    #[test]
    fn box_min_is_a_lower_bound_on_sampled_psi() {
        // fixed pseudo-random gamma triples
        let cases = [
            (2, 0.3, -0.9, 0.4),
            (3, -0.2, 0.5, -0.7),
            (4, 1.1, -0.4, 0.25),
            (5, 0.0, -1.0, -0.3),
        ];
        for (k, g0, g1, g2) in cases {
            let g = gb(k, g0, g1, g2);
            let (min, argmin) = min_psi_box(&g);
            assert_relative_eq!(psi(&g, &argmin), min, epsilon = 1e-12);
            let mut state = 0x9e3779b97f4a7c15u64;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            };
            for _ in 0..2000 {
                let x: Vec<f64> = (0..k).map(|_| next()).collect();
                assert!(psi(&g, &x) >= min - 1e-12);
            }
        }
    }

    #[test]
    fn dense_grid_agrees_with_block_enumeration() {
        let g = gb(3, 0.4, -0.35, 0.2);
        let (exact, _) = min_psi_box(&g);
        let p = 4;
        let mut gamma = DMatrix::zeros(p, p);
        gamma[(0, 0)] = g.g0;
        for i in 1..p {
            for j in 1..p {
                gamma[(i, j)] = if i == j { g.g1 } else { g.g2 };
            }
        }
        let (approx_min, _) = min_psi_dense_grid(&gamma, 3, 33);
        assert_relative_eq!(exact, approx_min, epsilon = 1e-9);
    }

    fn rhombic(k: usize, orbits: &[(usize, f64, f64)]) -> RhombicDesign {
        RhombicDesign::new(
            k,
            orbits
                .iter()
                .map(|&(ell, level, weight)| Orbit { ell, level, weight })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn verify_certifies_known_optimal_design() {
        // d0 <= d1 - |d2| puts both orbit levels in the interior with equal
        // weights; the resulting design satisfies the optimality conditions.
        let spec = DispersionSpec::new(2, 0.5, 2.0, 1.0).unwrap();
        let x0 = (0.5f64 / 3.0).sqrt();
        let x1 = (0.5f64 / 1.0).sqrt();
        let rd = rhombic(2, &[(0, x0, 0.5), (1, x1, 0.5)]);
        let report = kw_verify(&spec, &rd.to_discrete().unwrap(), 1e-7).unwrap();
        assert_eq!(report.verdict, Verdict::Optimal);
        assert!(report.min_psi >= -1e-9);
        for s in &report.support_psi {
            assert!(s.psi.abs() <= 1e-9);
        }
    }

    #[test]
    fn verify_flags_singular_single_orbit_design() {
        let spec = DispersionSpec::new(2, 1.0, 2.0, 0.5).unwrap();
        let rd = rhombic(2, &[(0, 1.0, 1.0)]);
        let report = kw_verify(&spec, &rd.to_discrete().unwrap(), 1e-7).unwrap();
        assert_eq!(report.verdict, Verdict::NotOptimal);
        assert!(report.note.as_deref().unwrap_or("").contains("singular"));
    }

    #[test]
    fn verify_rejects_perturbed_weights() {
        let spec = DispersionSpec::new(2, 0.5, 2.0, 1.0).unwrap();
        let x0 = (0.5f64 / 3.0).sqrt();
        let x1 = (0.5f64 / 1.0).sqrt();
        let rd = rhombic(2, &[(0, x0, 0.55), (1, x1, 0.45)]);
        let report = kw_verify(&spec, &rd.to_discrete().unwrap(), 1e-7).unwrap();
        assert_ne!(report.verdict, Verdict::Optimal);
    }

    #[test]
    fn verify_handles_non_invariant_designs() {
        let spec = DispersionSpec::new(2, 1.0, 2.0, 0.5).unwrap();
        let dd = DiscreteDesign::new(
            2,
            vec![
                DesignPoint { x: vec![1.0, 0.3], w: 0.4 },
                DesignPoint { x: vec![-0.6, 1.0], w: 0.3 },
                DesignPoint { x: vec![0.2, -0.9], w: 0.3 },
            ],
        )
        .unwrap();
        let report = kw_verify(&spec, &dd, 1e-7).unwrap();
        assert!(report.min_psi.is_finite());
        assert_eq!(report.support_psi.len(), 3);
        assert_eq!(report.verdict, Verdict::NotOptimal);
    }

    #[test]
    fn report_serializes_schema_fields() {
        let report = KWReport {
            verdict: Verdict::Optimal,
            min_psi: 0.0,
            argmin: vec![1.0, -1.0],
            support_psi: vec![SupportPsi { x: vec![1.0, 1.0], psi: 0.0 }],
            tolerance: 1e-7,
            note: None,
        };
        let v: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(v["verdict"], "optimal");
        assert!(v["support"][0]["psi"].is_number());
        assert!(v.get("note").is_none());
    }
}
