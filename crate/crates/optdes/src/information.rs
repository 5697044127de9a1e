//! Information matrices, their determinants and the matrix `Gamma` of the
//! optimality condition.
//!
//! For an invariant design the information matrix
//! `M(xi) = sum_j w_j f(x_j) f(x_j)' / sigma^2(x_j)` splits into a scalar
//! intercept block `m0` and a completely symmetric slope block
//! `M1 = (m1 - m2) I + m2 11'`, so the whole criterion pipeline runs on the
//! scalar triple `(m0, m1, m2)`. The dense path exists for arbitrary
//! designs and for cross-checking the block arithmetic.

use nalgebra::DMatrix;

use crate::design::{DiscreteDesign, RhombicDesign};
use crate::error::{Error, Result};
use crate::model::{DispersionSpec, SymPair};

/// Block form `(m0, m1, m2)` of an invariant information matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoBlocks {
    pub k: usize,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

impl InfoBlocks {
    pub fn slope_block(&self) -> SymPair {
        SymPair::new(self.k, self.m1, self.m2)
    }

    /// Embeds the blocks into the dense `(K+1) x (K+1)` matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let p = self.k + 1;
        DMatrix::from_fn(p, p, |i, j| match (i, j) {
            (0, 0) => self.m0,
            (0, _) | (_, 0) => 0.0,
            (i, j) if i == j => self.m1,
            _ => self.m2,
        })
    }
}

/// Block form `(g0, g1, g2)` of `Gamma(xi) = p D - M(xi)^{-1}` for an
/// invariant design: `Gamma = diag(g0, (g1 - g2) I + g2 11')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBlocks {
    pub k: usize,
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
}

impl GammaBlocks {
    /// Largest absolute entry of the represented matrix.
    pub fn max_abs(&self) -> f64 {
        self.g0.abs().max(self.g1.abs()).max(self.g2.abs())
    }
}

/// Mean-square contribution of one orbit to the off-diagonal slope moment,
/// relative to its diagonal moment: averaging `x_i x_j / level^2` over the
/// orbit gives `((K - 2 ell)^2 - K) / (K (K - 1))`.
pub(crate) fn orbit_offdiag_ratio(k: usize, ell: usize) -> f64 {
    let kf = k as f64;
    let d = kf - 2.0 * ell as f64;
    (d * d - kf) / (kf * (kf - 1.0))
}

/// Information blocks of a rhombic design: `m0 = sum w_l / sigma_l^2`,
/// `m1 = sum w_l t_l^2 / sigma_l^2`, and `m2` scaled per orbit by the
/// off-diagonal moment ratio. Zero-weight orbits contribute nothing.
pub fn info_blocks_rhombic(spec: &DispersionSpec, rd: &RhombicDesign) -> Result<InfoBlocks> {
    if rd.k() != spec.k() {
        return Err(Error::Domain(format!(
            "design dimension {} does not match spec dimension {}",
            rd.k(),
            spec.k()
        )));
    }
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for o in rd.orbits() {
        if o.weight == 0.0 {
            continue;
        }
        let var = spec.variance_on_orbit(o.ell, o.level);
        if var <= 1e-12 {
            return Err(Error::Singular(format!(
                "orbit {} at level {} has non-positive variance {var}",
                o.ell, o.level
            )));
        }
        let base = o.weight / var;
        let t2 = o.level * o.level;
        m0 += base;
        m1 += base * t2;
        m2 += base * t2 * orbit_offdiag_ratio(spec.k(), o.ell);
    }
    Ok(InfoBlocks {
        k: spec.k(),
        m0,
        m1,
        m2,
    })
}

/// Dense information matrix of an arbitrary discrete design.
pub fn info_dense(spec: &DispersionSpec, dd: &DiscreteDesign) -> Result<DMatrix<f64>> {
    if dd.k() != spec.k() {
        return Err(Error::Domain(format!(
            "design dimension {} does not match spec dimension {}",
            dd.k(),
            spec.k()
        )));
    }
    let p = spec.p();
    let mut m = DMatrix::zeros(p, p);
    let mut f = vec![0.0; p];
    for pt in dd.points() {
        if pt.w == 0.0 {
            continue;
        }
        let var = spec.variance_at(&pt.x)?;
        if var <= 1e-12 {
            return Err(Error::Singular(format!(
                "support point {:?} has non-positive variance {var}",
                pt.x
            )));
        }
        f[0] = 1.0;
        f[1..].copy_from_slice(&pt.x);
        let scale = pt.w / var;
        for i in 0..p {
            for j in i..p {
                let v = scale * f[i] * f[j];
                m[(i, j)] += v;
                if i != j {
                    m[(j, i)] += v;
                }
            }
        }
    }
    Ok(m)
}

/// Averages a dense matrix into block form. Exact for invariant designs,
/// where the dense matrix has this structure up to rounding.
pub fn blocks_from_dense(m: &DMatrix<f64>) -> InfoBlocks {
    let p = m.nrows();
    let k = p - 1;
    let m0 = m[(0, 0)];
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 1..p {
        diag += m[(i, i)];
        for j in 1..p {
            if i != j {
                off += m[(i, j)];
            }
        }
    }
    let m1 = diag / k as f64;
    let m2 = if k > 1 {
        off / (k * (k - 1)) as f64
    } else {
        0.0
    };
    InfoBlocks { k, m0, m1, m2 }
}

/// Log-determinant from the two-eigenvalue factorization:
/// `det M = m0 (m1 - m2)^{K-1} (m1 + (K-1) m2)`.
///
/// Returns `-inf` when any factor is non-positive, so optimizers can treat
/// singularity as an ordinary (infinitely bad) value.
pub fn log_det(ib: &InfoBlocks) -> f64 {
    let slope = ib.slope_block();
    let (rest, ones) = (slope.eig_rest(), slope.eig_ones());
    if ib.m0 <= 0.0 || rest <= 0.0 || ones <= 0.0 {
        return f64::NEG_INFINITY;
    }
    ib.m0.ln() + (ib.k as f64 - 1.0) * rest.ln() + ones.ln()
}

/// Log-determinant of a dense symmetric positive definite matrix; `-inf`
/// when it is not positive definite.
pub fn log_det_dense(m: &DMatrix<f64>) -> f64 {
    match m.clone().cholesky() {
        Some(chol) => 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
        None => f64::NEG_INFINITY,
    }
}

/// `Gamma` blocks `g0 = p d0 - 1/m0`, `(g1, g2) = p (d1, d2) - (m1, m2)^{-1}`.
pub fn gamma_blocks(spec: &DispersionSpec, ib: &InfoBlocks) -> Result<GammaBlocks> {
    let p = spec.p() as f64;
    if ib.m0 <= 1e-300 {
        return Err(Error::Singular(format!(
            "intercept information m0 = {} is not invertible",
            ib.m0
        )));
    }
    let inv = ib.slope_block().inverse()?;
    Ok(GammaBlocks {
        k: spec.k(),
        g0: p * spec.d0() - 1.0 / ib.m0,
        g1: p * spec.d1() - inv.a1,
        g2: p * spec.d2() - inv.a2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{DesignPoint, Orbit};
    use approx::assert_relative_eq;

    fn spec(k: usize, d0: f64, d1: f64, d2: f64) -> DispersionSpec {
        DispersionSpec::new(k, d0, d1, d2).unwrap()
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

    /// Uniform design on the four vertices of the square, d = (1, 2, 0.5):
    /// variances 6 and 4 on the two diagonals.
    fn square_vertex_case() -> (DispersionSpec, RhombicDesign) {
        (spec(2, 1.0, 2.0, 0.5), rhombic(2, &[(0, 1.0, 0.5), (1, 1.0, 0.5)]))
    }

    #[test]
    fn blocks_match_hand_computed_square_design() {
        let (s, rd) = square_vertex_case();
        let ib = info_blocks_rhombic(&s, &rd).unwrap();
        assert_relative_eq!(ib.m0, 5.0 / 24.0, epsilon = 1e-15);
        assert_relative_eq!(ib.m1, 5.0 / 24.0, epsilon = 1e-15);
        assert_relative_eq!(ib.m2, -1.0 / 24.0, epsilon = 1e-15);
    }

    #[test]
    fn vertex_designs_have_m1_equal_m0() {
        let s = spec(4, 0.8, 1.1, 0.3);
        let rd = rhombic(4, &[(0, 1.0, 0.2), (1, 1.0, 0.5), (2, 1.0, 0.3)]);
        let ib = info_blocks_rhombic(&s, &rd).unwrap();
        assert_relative_eq!(ib.m1, ib.m0, epsilon = 1e-15);
    }

    #[test]
    fn single_main_diagonal_orbit_has_m2_equal_m1() {
        let s = spec(2, 1.0, 2.0, 0.5);
        let t = 0.37;
        let rd = rhombic(2, &[(0, t, 1.0)]);
        let ib = info_blocks_rhombic(&s, &rd).unwrap();
        assert_relative_eq!(ib.m1, t * t * ib.m0, epsilon = 1e-15);
        assert_relative_eq!(ib.m2, ib.m1, epsilon = 1e-15);
    }

    #[test]
    fn dense_matches_hand_computed_square_design() {
        let (s, rd) = square_vertex_case();
        let m = info_dense(&s, &rd.to_discrete().unwrap()).unwrap();
        let expected = [
            [5.0 / 24.0, 0.0, 0.0],
            [0.0, 5.0 / 24.0, -1.0 / 24.0],
            [0.0, -1.0 / 24.0, 5.0 / 24.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[(i, j)], expected[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn dense_agrees_with_blocks_on_expansion() {
        let s = spec(3, 0.9, 1.4, -0.3);
        let rd = rhombic(3, &[(0, 0.55, 0.35), (1, 0.9, 0.65)]);
        let ib = info_blocks_rhombic(&s, &rd).unwrap();
        let dense = info_dense(&s, &rd.to_discrete().unwrap()).unwrap();
        let embedded = ib.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(dense[(i, j)], embedded[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn one_point_design_is_rank_one() {
        let s = spec(2, 1.0, 2.0, 0.5);
        let dd = DiscreteDesign::new(
            2,
            vec![DesignPoint { x: vec![0.0, 0.0], w: 1.0 }],
        )
        .unwrap();
        let m = info_dense(&s, &dd).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0, epsilon = 1e-15);
        assert_eq!(m.rank(1e-12), 1);
    }

    #[test]
    fn single_orbit_slope_block_is_singular() {
        let s = spec(2, 1.0, 2.0, 0.5);
        let rd = rhombic(2, &[(0, 1.0, 1.0)]);
        let ib = info_blocks_rhombic(&s, &rd).unwrap();
        assert_eq!(log_det(&ib), f64::NEG_INFINITY);
        let m = info_dense(&s, &rd.to_discrete().unwrap()).unwrap();
        assert_eq!(log_det_dense(&m), f64::NEG_INFINITY);
    }

    #[test]
    fn log_det_matches_eigen_factorization() {
        let (s, rd) = square_vertex_case();
        let ib = info_blocks_rhombic(&s, &rd).unwrap();
        let expected = (5.0f64 / 24.0 * 0.25 * (1.0 / 6.0)).ln();
        assert_relative_eq!(log_det(&ib), expected, epsilon = 1e-12);
        let dense = info_dense(&s, &rd.to_discrete().unwrap()).unwrap();
        assert_relative_eq!(log_det_dense(&dense), expected, epsilon = 1e-12);
    }

    #[test]
    fn log_det_identity_blocks_is_zero() {
        let ib = InfoBlocks { k: 2, m0: 1.0, m1: 1.0, m2: 0.0 };
        assert_relative_eq!(log_det(&ib), 0.0);
    }

    #[test]
    fn gamma_blocks_direct_substitution() {
        let s = spec(2, 1.0, 2.0, 0.5);
        let ib = InfoBlocks { k: 2, m0: 1.0 / 3.0, m1: 1.0 / 3.0, m2: 0.0 };
        let g = gamma_blocks(&s, &ib).unwrap();
        assert_relative_eq!(g.g0, 0.0, epsilon = 1e-12);
        assert_relative_eq!(g.g1, 3.0, epsilon = 1e-12);
        assert_relative_eq!(g.g2, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn gamma_vanishes_when_information_matches_inverse_dispersion() {
        let s = spec(3, 0.8, 1.2, 0.4);
        let p = s.p() as f64;
        let (i0, i1) = s.inverse_blocks().unwrap();
        let ib = InfoBlocks { k: 3, m0: i0 / p, m1: i1.a1 / p, m2: i1.a2 / p };
        let g = gamma_blocks(&s, &ib).unwrap();
        assert!(g.max_abs() < 1e-12);
    }

    #[test]
    fn gamma_requires_invertible_slope_block() {
        let s = spec(2, 1.0, 2.0, 0.5);
        let ib = InfoBlocks { k: 2, m0: 0.2, m1: 0.1, m2: 0.1 };
        assert!(gamma_blocks(&s, &ib).is_err());
    }

    /// Closed determinant formula for the two-orbit design on the square,
    /// used as an independent oracle for the block factorization.
    #[test]
    fn k2_closed_determinant_oracle() {
        let s = spec(2, 1.3, 1.7, -0.6);
        let (x0, x1, w) = (0.73, 0.91, 0.41);
        let rd = rhombic(2, &[(0, x0, w), (1, x1, 1.0 - w)]);
        let ib = info_blocks_rhombic(&s, &rd).unwrap();

        let s0 = s.variance_at(&[x0, x0]).unwrap();
        let s1 = s.variance_at(&[-x1, x1]).unwrap();
        let oracle = 4.0 * (w * s1 + (1.0 - w) * s0) * w * (1.0 - w) * x0 * x0 * x1 * x1
            / (s0 * s1).powi(2);
        assert_relative_eq!(log_det(&ib), oracle.ln(), epsilon = 1e-12);
    }
}
